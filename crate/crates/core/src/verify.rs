//! Statistical verification registry over recorded traces.
//!
//! Every check maps to one stated bound or structural invariant of the loop.
//! Trace checks audit CSV rows exhaustively; synthetic checks re-derive a
//! bound's premise with seeded Monte-Carlo sampling and compare the empirical
//! tail against the stated envelope. `run_checks` executes a selection and
//! folds the outcomes into a line-oriented key-value report.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::emotion::calibrate_k_max;
use crate::error::Error;
use crate::rng::stream;
use crate::Result;
use crate::safety::{TollVector, DEFAULT_ETA_MAX, TOLL_DIM};
use crate::trace::{fmt_float, TraceRow};

/// Minimum meta-vector norm for the recurrence count.
pub const V_MIN: f64 = 0.3;
/// Required long-run frequency of rows at or above [`V_MIN`].
pub const P_GRAD_FLOOR: f64 = 0.05;
/// Per-trace cap on the summed negative capability increments.
pub const NEG_SUM_BOUND: f64 = 2.0;
/// Fraction of traces that must end at or above their initial capability.
pub const GOOD_FRACTION: f64 = 0.8;
/// Sample count for the synthetic tail checks.
pub const TAIL_SAMPLES: usize = 100_000;
/// Trial count for the toll concentration check.
pub const TOLL_TRIALS: usize = 1_000;
/// Steps per toll concentration trial.
pub const TOLL_STEPS: usize = 10_000;
/// Sample count for the synthetic channel check.
pub const MI_SAMPLES: usize = 50_000;

// RNG stream tags local to the synthetic checks.
const TAG_GRAD_TAIL: u64 = 101;
const TAG_DOUBLE_EXP: u64 = 102;
const TAG_TOLL: u64 = 103;
const TAG_MI: u64 = 104;

/// Every check name, in report order.
pub const REGISTRY: [&str; 14] = [
    "submartingale_drift",
    "recurrence_frequency",
    "md_mce_bounds",
    "clip_bound",
    "trigger_biconditional",
    "toll_envelope",
    "stability_radius",
    "goal_monotone_growth",
    "capability_quasi_monotone",
    "reward_itemization",
    "gradient_tail",
    "double_exp_tail",
    "toll_concentration",
    "mi_lower_bound",
];

/// Knobs the checks need beyond the trace bytes.
#[derive(Debug, Clone)]
pub struct VerifyParams {
    /// Trigger threshold Γ the traces ran with.
    pub gamma: f64,
    /// Alphabet size |Y| behind the information bounds.
    pub classes: usize,
    /// Toll seed ℓ₁ (thresholds × seed fraction).
    pub toll_initial_l1: f64,
    /// Toll dimension for the envelope.
    pub toll_dim: usize,
    /// Per-step toll increment cap.
    pub eta_max: f64,
    /// Seed for the synthetic Monte-Carlo checks.
    pub seed: u64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        let toll = TollVector::standard();
        Self {
            gamma: 0.1,
            classes: crate::env::EnvConfig::default().num_classes,
            toll_initial_l1: toll.initial_l1(),
            toll_dim: TOLL_DIM,
            eta_max: DEFAULT_ETA_MAX,
            seed: 17,
        }
    }
}

/// One executed check: verdict plus the numbers behind it.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<(String, String)>,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        Self { name, passed: true, details: Vec::new() }
    }

    fn num(&mut self, key: &str, value: f64) {
        self.details.push((key.to_string(), fmt_float(value)));
    }

    fn count(&mut self, key: &str, value: usize) {
        self.details.push((key.to_string(), value.to_string()));
    }

    fn fail_if(&mut self, violated: bool) {
        if violated {
            self.passed = false;
        }
    }
}

/// Outcome fold over the selected checks.
#[derive(Debug, Clone, Default)]
pub struct StatReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl StatReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    /// Line-oriented key-value rendering; one `pass` line per check, then
    /// its detail lines, then the two fold lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            out.push_str(&format!("check.{}.pass = {}\n", o.name, o.passed));
            for (k, v) in &o.details {
                out.push_str(&format!("check.{}.{} = {}\n", o.name, k, v));
            }
        }
        out.push_str(&format!("verify.checks_run = {}\n", self.outcomes.len()));
        out.push_str(&format!("verify.all_passed = {}\n", self.all_passed()));
        out
    }
}

/// Run the named checks over the parsed traces.
///
/// An empty selection yields an empty report. Unknown names are rejected.
/// Trace checks need at least one trace; the synthetic checks run without.
pub fn run_checks(
    traces: &[Vec<TraceRow>],
    checks: &[&str],
    params: &VerifyParams,
) -> Result<StatReport> {
    let mut report = StatReport::default();
    for name in checks {
        let outcome = match *name {
            "submartingale_drift" => submartingale_drift(need(traces)?),
            "recurrence_frequency" => recurrence_frequency(need(traces)?),
            "md_mce_bounds" => md_mce_bounds(need(traces)?, params),
            "clip_bound" => clip_bound(need(traces)?),
            "trigger_biconditional" => trigger_biconditional(need(traces)?, params),
            "toll_envelope" => toll_envelope(need(traces)?, params)?,
            "stability_radius" => stability_radius(need(traces)?),
            "goal_monotone_growth" => goal_monotone_growth(need(traces)?),
            "capability_quasi_monotone" => capability_quasi_monotone(need(traces)?),
            "reward_itemization" => reward_itemization(need(traces)?),
            "gradient_tail" => gradient_tail(params)?,
            "double_exp_tail" => double_exp_tail(params),
            "toll_concentration" => toll_concentration(params),
            "mi_lower_bound" => mi_lower_bound(params)?,
            other => return Err(Error::UnknownCheck(other.to_string())),
        };
        report.outcomes.push(outcome);
    }
    Ok(report)
}

fn need(traces: &[Vec<TraceRow>]) -> Result<&[Vec<TraceRow>]> {
    if traces.is_empty() {
        return Err(Error::EmptyInput("trace checks need at least one trace"));
    }
    Ok(traces)
}

fn rows(traces: &[Vec<TraceRow>]) -> impl Iterator<Item = &TraceRow> {
    traces.iter().flatten()
}

/// Sample mean of the per-step reward totals must clear −3·σ̂/√N: the summed
/// objective behaves as a submartingale up to estimation noise.
fn submartingale_drift(traces: &[Vec<TraceRow>]) -> CheckOutcome {
    let mut o = CheckOutcome::new("submartingale_drift");
    let xs: Vec<f64> = rows(traces).map(|r| r.reward_total).collect();
    let n = xs.len();
    o.count("rows", n);
    if n == 0 {
        return o;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let floor = -3.0 * var.sqrt() / (n as f64).sqrt();
    o.num("mean_increment", mean);
    o.num("floor", floor);
    o.fail_if(mean < floor);
    o
}

/// Fraction of rows with ‖v‖ ≥ [`V_MIN`] must reach [`P_GRAD_FLOOR`]: the
/// meta-state keeps revisiting the positive-drive region.
fn recurrence_frequency(traces: &[Vec<TraceRow>]) -> CheckOutcome {
    let mut o = CheckOutcome::new("recurrence_frequency");
    let mut hits = 0usize;
    let mut n = 0usize;
    for r in rows(traces) {
        let norm = (r.c * r.c + r.e * r.e + r.n * r.n + r.s * r.s).sqrt();
        if norm >= V_MIN {
            hits += 1;
        }
        n += 1;
    }
    o.count("rows", n);
    if n == 0 {
        return o;
    }
    let frac = hits as f64 / n as f64;
    o.num("fraction", frac);
    o.num("floor", P_GRAD_FLOOR);
    o.fail_if(frac < P_GRAD_FLOOR);
    o
}

/// 0 ≤ MD < ln|Y| and |MCE| ≤ ln|Y| on every row. The 1e−9 relative slack
/// covers only the 9-significant-digit trace encoding, nothing else.
fn md_mce_bounds(traces: &[Vec<TraceRow>], params: &VerifyParams) -> CheckOutcome {
    let mut o = CheckOutcome::new("md_mce_bounds");
    let cap = (params.classes as f64).ln();
    let slack = cap * 1e-9;
    let mut bad = 0usize;
    let mut n = 0usize;
    for r in rows(traces) {
        let md_ok = r.md >= 0.0 && r.md < cap;
        let mce_ok = r.mce.abs() <= cap + slack;
        if !(md_ok && mce_ok) {
            bad += 1;
        }
        n += 1;
    }
    o.count("rows", n);
    o.count("violations", bad);
    o.num("cap", cap);
    o.fail_if(bad > 0);
    o
}

/// Zero post-clip norms above the threshold in force (exact).
fn clip_bound(traces: &[Vec<TraceRow>]) -> CheckOutcome {
    let mut o = CheckOutcome::new("clip_bound");
    let mut bad = 0usize;
    let mut n = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for r in rows(traces) {
        worst = worst.max(r.grad_norm_post - r.k_max);
        if r.grad_norm_post > r.k_max {
            bad += 1;
        }
        n += 1;
    }
    o.count("rows", n);
    o.count("violations", bad);
    if n > 0 {
        o.num("worst_excess", worst);
    }
    o.fail_if(bad > 0);
    o
}

/// fired ⇔ (ε_t > 0 ∧ I_pred > Γ) on every row, zero violations.
fn trigger_biconditional(traces: &[Vec<TraceRow>], params: &VerifyParams) -> CheckOutcome {
    let mut o = CheckOutcome::new("trigger_biconditional");
    let mut bad = 0usize;
    let mut n = 0usize;
    for r in rows(traces) {
        let should = r.eps_t > 0.0 && r.i_pred > params.gamma;
        if r.fired != should {
            bad += 1;
        }
        n += 1;
    }
    o.count("rows", n);
    o.count("violations", bad);
    o.num("gamma", params.gamma);
    o.fail_if(bad > 0);
    o
}

/// Toll ℓ₁ stays inside seed + deviation envelope at every row; the row at
/// step t has seen t+1 updates.
fn toll_envelope(traces: &[Vec<TraceRow>], params: &VerifyParams) -> Result<CheckOutcome> {
    let mut o = CheckOutcome::new("toll_envelope");
    let toll = TollVector::new(vec![1.0; params.toll_dim], params.eta_max)?;
    let mut bad = 0usize;
    let mut n = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for r in rows(traces) {
        let bound = params.toll_initial_l1 + toll.envelope(r.t + 1);
        worst = worst.max(r.toll_l1 - bound);
        if r.toll_l1 > bound {
            bad += 1;
        }
        n += 1;
    }
    o.count("rows", n);
    o.count("violations", bad);
    if n > 0 {
        o.num("worst_excess", worst);
    }
    o.fail_if(bad > 0);
    Ok(o)
}

/// The audited invariant region holds at every row.
fn stability_radius(traces: &[Vec<TraceRow>]) -> CheckOutcome {
    let mut o = CheckOutcome::new("stability_radius");
    let mut bad = 0usize;
    let mut n = 0usize;
    for r in rows(traces) {
        if !r.in_region {
            bad += 1;
        }
        n += 1;
    }
    o.count("rows", n);
    o.count("violations", bad);
    o.fail_if(bad > 0);
    o
}

/// The active goal count never shrinks (exact).
fn goal_monotone_growth(traces: &[Vec<TraceRow>]) -> CheckOutcome {
    let mut o = CheckOutcome::new("goal_monotone_growth");
    let mut bad = 0usize;
    let mut n = 0usize;
    for trace in traces {
        for w in trace.windows(2) {
            if w[1].goals_active < w[0].goals_active {
                bad += 1;
            }
        }
        n += trace.len();
    }
    o.count("rows", n);
    o.count("violations", bad);
    o.fail_if(bad > 0);
    o
}

/// At least [`GOOD_FRACTION`] of the traces end at or above their initial
/// capability, and each trace's summed negative increments stay within
/// [`NEG_SUM_BOUND`].
fn capability_quasi_monotone(traces: &[Vec<TraceRow>]) -> CheckOutcome {
    let mut o = CheckOutcome::new("capability_quasi_monotone");
    let mut good = 0usize;
    let mut judged = 0usize;
    let mut neg_ok = true;
    for (i, trace) in traces.iter().enumerate() {
        let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
            continue;
        };
        judged += 1;
        let ended_up = last.capability >= first.capability;
        if ended_up {
            good += 1;
        }
        let neg_sum: f64 = trace
            .windows(2)
            .map(|w| (w[0].capability - w[1].capability).max(0.0))
            .sum();
        o.num(&format!("trace{i}.initial"), first.capability);
        o.num(&format!("trace{i}.final"), last.capability);
        o.num(&format!("trace{i}.negative_sum"), neg_sum);
        if neg_sum > NEG_SUM_BOUND {
            neg_ok = false;
        }
    }
    o.count("traces", judged);
    o.count("ended_at_or_above", good);
    if judged > 0 {
        let needed = (GOOD_FRACTION * judged as f64).ceil() as usize;
        o.count("needed", needed);
        o.fail_if(good < needed || !neg_ok);
    }
    o
}

/// The eight serialized channels re-sum to the serialized total; the slack
/// covers only the per-channel 9-significant-digit rounding.
fn reward_itemization(traces: &[Vec<TraceRow>]) -> CheckOutcome {
    let mut o = CheckOutcome::new("reward_itemization");
    let mut bad = 0usize;
    let mut n = 0usize;
    let mut worst = 0.0f64;
    for r in rows(traces) {
        let parts = [
            r.reward_base,
            r.reward_spikes,
            r.reward_penalty,
            r.reward_dg,
            r.reward_baseline,
            r.reward_md,
            r.reward_mce,
            r.reward_ext,
        ];
        let sum: f64 = parts.iter().sum();
        let scale: f64 = parts.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        let err = (sum - r.reward_total).abs();
        worst = worst.max(err / scale);
        if err > 1e-8 * scale {
            bad += 1;
        }
        n += 1;
    }
    o.count("rows", n);
    o.count("violations", bad);
    if n > 0 {
        o.num("worst_relative_error", worst);
    }
    o.fail_if(bad > 0);
    o
}

fn binomial_se(p_hat: f64, n: usize) -> f64 {
    (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

/// Calibrating on synthetic sub-Gaussian norms, the frequency above
/// k_max·(1+δ) stays below exp(−c·δ²·k_max²/σ²) + 3 SE, c = 0.1.
fn gradient_tail(params: &VerifyParams) -> Result<CheckOutcome> {
    let mut o = CheckOutcome::new("gradient_tail");
    let mut rng = stream(params.seed, TAG_GRAD_TAIL);
    let sigma = 1.0f64;
    let norms: Vec<f64> = (0..TAIL_SAMPLES)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (z * sigma).abs()
        })
        .collect();
    let k_max = calibrate_k_max(&norms)?;
    o.num("k_max", k_max);
    for delta in [0.1, 0.5, 1.0] {
        let cut = k_max * (1.0 + delta);
        let p_hat =
            norms.iter().filter(|&&x| x > cut).count() as f64 / TAIL_SAMPLES as f64;
        let bound = (-0.1 * delta * delta * k_max * k_max / (sigma * sigma)).exp()
            + 3.0 * binomial_se(p_hat, TAIL_SAMPLES);
        o.num(&format!("delta{delta}.frequency"), p_hat);
        o.num(&format!("delta{delta}.bound"), bound);
        o.fail_if(p_hat > bound);
    }
    Ok(o)
}

/// Sampling Z = exp(exp(ξ)), ξ ~ N(0,σ²): P(Z > z) stays below
/// exp(−½·(ln ln z)²/σ²) + 3 SE at z ∈ {e, e², e⁴}.
fn double_exp_tail(params: &VerifyParams) -> CheckOutcome {
    let mut o = CheckOutcome::new("double_exp_tail");
    let mut rng = stream(params.seed, TAG_DOUBLE_EXP);
    let sigma = 1.0f64;
    let zs: Vec<f64> = (0..TAIL_SAMPLES)
        .map(|_| {
            let xi: f64 = StandardNormal.sample(&mut rng);
            (xi * sigma).exp().exp()
        })
        .collect();
    for (label, z) in [("e1", 1f64.exp()), ("e2", 2f64.exp()), ("e4", 4f64.exp())] {
        let p_hat = zs.iter().filter(|&&x| x > z).count() as f64 / TAIL_SAMPLES as f64;
        let loglog = z.ln().ln();
        let bound =
            (-0.5 * loglog * loglog / (sigma * sigma)).exp() + 3.0 * binomial_se(p_hat, TAIL_SAMPLES);
        o.num(&format!("z_{label}.frequency"), p_hat);
        o.num(&format!("z_{label}.bound"), bound);
        o.fail_if(p_hat > bound);
    }
    o
}

/// I.i.d. uniform [0, η_max] toll increments over 10 000 steps: the ℓ₁
/// deviation from its mean exceeds ε no more often than 3× the Azuma bound
/// exp(−2ε²/(T·d·η_max²)).
fn toll_concentration(params: &VerifyParams) -> CheckOutcome {
    let mut o = CheckOutcome::new("toll_concentration");
    let mut rng = stream(params.seed, TAG_TOLL);
    let d = params.toll_dim;
    let eta = params.eta_max;
    let mut deviations = Vec::with_capacity(TOLL_TRIALS);
    for _ in 0..TOLL_TRIALS {
        let mut sums = vec![0.0f64; d];
        for _ in 0..TOLL_STEPS {
            for s in sums.iter_mut() {
                *s += rng.random::<f64>() * eta - eta / 2.0;
            }
        }
        deviations.push(sums.iter().map(|s| s.abs()).sum::<f64>());
    }
    let t = TOLL_STEPS as f64;
    for eps in [0.5f64, 1.0] {
        let p_hat =
            deviations.iter().filter(|&&x| x > eps).count() as f64 / TOLL_TRIALS as f64;
        let bound = 3.0 * (-2.0 * eps * eps / (t * d as f64 * eta * eta)).exp();
        o.num(&format!("eps{eps}.frequency"), p_hat);
        o.num(&format!("eps{eps}.bound"), bound);
        o.fail_if(p_hat > bound);
    }
    o
}

/// On a binary symmetric channel (crossover 0.1, uniform input, true value
/// ln 2 − H(0.1) ≈ 0.368 nats) the plug-in estimate with the true conditional
/// lands within 3 SE; a blurred conditional stays below truth + 3 SE.
fn mi_lower_bound(params: &VerifyParams) -> Result<CheckOutcome> {
    let mut o = CheckOutcome::new("mi_lower_bound");
    let mut rng = stream(params.seed, TAG_MI);
    let cross = 0.1f64;
    let truth = 2f64.ln() + (1.0 - cross) * (1.0 - cross).ln() + cross * cross.ln();
    o.num("true_mi", truth);

    let mut labels = Vec::with_capacity(MI_SAMPLES);
    let mut inputs = Vec::with_capacity(MI_SAMPLES);
    for _ in 0..MI_SAMPLES {
        let x = rng.random::<bool>() as usize;
        let flip = rng.random::<f64>() < cross;
        inputs.push(x);
        labels.push(if flip { 1 - x } else { x });
    }
    let mut counts = [0.0f64; 2];
    for &y in &labels {
        counts[y] += 1.0;
    }

    let estimate = |blur: f64, o: &mut CheckOutcome, tag: &str| -> Result<(f64, f64)> {
        let dist = |x: usize| -> Vec<f64> {
            if x == 0 {
                vec![1.0 - blur, blur]
            } else {
                vec![blur, 1.0 - blur]
            }
        };
        let batch: Vec<(Vec<f64>, usize)> =
            inputs.iter().zip(&labels).map(|(&x, &y)| (dist(x), y)).collect();
        let est = crate::meaning::mi_plugin(&batch, &counts)?;
        let mut marg = counts.to_vec();
        crate::metacognition::floor_and_normalize(&mut marg);
        let mean = est.value;
        let var = batch
            .iter()
            .map(|(q, y)| {
                let term = q[*y].ln() - marg[*y].ln();
                (term - mean) * (term - mean)
            })
            .sum::<f64>()
            / (MI_SAMPLES - 1) as f64;
        let se = (var / MI_SAMPLES as f64).sqrt();
        o.num(&format!("{tag}.estimate"), mean);
        o.num(&format!("{tag}.se"), se);
        Ok((mean, se))
    };

    let (est_true, se_true) = estimate(cross, &mut o, "true_conditional")?;
    o.fail_if((est_true - truth).abs() > 3.0 * se_true);
    let (est_blur, se_blur) = estimate(0.3, &mut o, "blurred_conditional")?;
    o.fail_if(est_blur >= truth + 3.0 * se_blur);
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::runner::run;

    fn small_trace(steps: u64, seed: u64) -> Vec<TraceRow> {
        let mut cfg = RunConfig::default();
        cfg.run.steps = steps;
        cfg.run.seed = seed;
        run(&cfg).unwrap().rows
    }

    #[test]
    fn empty_selection_is_empty_report() {
        let report = run_checks(&[], &[], &VerifyParams::default()).unwrap();
        assert!(report.outcomes.is_empty());
        assert!(report.all_passed());
        assert!(report.to_text().contains("verify.checks_run = 0"));
    }

    #[test]
    fn unknown_check_is_rejected() {
        let err = run_checks(&[], &["no_such_check"], &VerifyParams::default());
        assert!(matches!(err, Err(Error::UnknownCheck(_))));
    }

    #[test]
    fn trace_checks_need_a_trace() {
        let err = run_checks(&[], &["clip_bound"], &VerifyParams::default());
        assert!(matches!(err, Err(Error::EmptyInput(_))));
    }

    #[test]
    fn default_trace_passes_every_trace_check() {
        let rows = small_trace(300, 5);
        let names: Vec<&str> = REGISTRY
            .iter()
            .copied()
            .filter(|n| !matches!(*n, "gradient_tail" | "double_exp_tail" | "toll_concentration" | "mi_lower_bound"))
            .collect();
        let report =
            run_checks(&[rows], &names, &VerifyParams::default()).unwrap();
        for o in &report.outcomes {
            assert!(o.passed, "{} failed: {:?}", o.name, o.details);
        }
    }

    #[test]
    fn synthetic_checks_pass_on_their_stated_bounds() {
        let names = ["gradient_tail", "double_exp_tail", "toll_concentration", "mi_lower_bound"];
        let report = run_checks(&[], &names, &VerifyParams::default()).unwrap();
        for o in &report.outcomes {
            assert!(o.passed, "{} failed: {:?}", o.name, o.details);
        }
        assert!(report.all_passed());
    }

    #[test]
    fn injected_clip_violation_flips_only_the_clip_check() {
        let mut rows = small_trace(200, 5);
        rows[50].grad_norm_post = rows[50].k_max + 1.0;
        let names = ["clip_bound", "trigger_biconditional", "stability_radius", "goal_monotone_growth"];
        let report =
            run_checks(&[rows], &names, &VerifyParams::default()).unwrap();
        let verdicts: Vec<(&str, bool)> =
            report.outcomes.iter().map(|o| (o.name, o.passed)).collect();
        assert_eq!(
            verdicts,
            vec![
                ("clip_bound", false),
                ("trigger_biconditional", true),
                ("stability_radius", true),
                ("goal_monotone_growth", true),
            ]
        );
    }

    #[test]
    fn injected_trigger_violation_flips_only_the_biconditional() {
        let mut rows = small_trace(200, 5);
        rows[10].fired = true;
        rows[10].eps_t = -1.0;
        let names = ["clip_bound", "trigger_biconditional"];
        let report =
            run_checks(&[rows], &names, &VerifyParams::default()).unwrap();
        assert!(report.outcomes[0].passed);
        assert!(!report.outcomes[1].passed);
    }

    #[test]
    fn drift_check_direction_is_right() {
        let mut up = TraceRow::default();
        up.reward_total = 1.0;
        let mut down = TraceRow::default();
        down.reward_total = -1.0;
        let rising = vec![up; 100];
        assert!(submartingale_drift(&[rising]).passed);
        let falling = vec![down; 100];
        assert!(!submartingale_drift(&[falling]).passed);
    }

    #[test]
    fn capability_aggregate_needs_four_of_five() {
        let good = |c0: f64, c1: f64| {
            let mut a = TraceRow::default();
            a.capability = c0;
            let mut b = TraceRow::default();
            b.capability = c1;
            vec![a, b]
        };
        let four_good = vec![
            good(0.2, 0.5),
            good(0.2, 0.5),
            good(0.2, 0.5),
            good(0.2, 0.5),
            good(0.5, 0.2),
        ];
        assert!(capability_quasi_monotone(&four_good).passed);
        let three_good = vec![
            good(0.2, 0.5),
            good(0.2, 0.5),
            good(0.2, 0.5),
            good(0.5, 0.2),
            good(0.5, 0.2),
        ];
        assert!(!capability_quasi_monotone(&three_good).passed);
    }

    #[test]
    fn report_text_is_line_oriented_key_value() {
        let report =
            run_checks(&[], &["double_exp_tail"], &VerifyParams::default()).unwrap();
        let text = report.to_text();
        for line in text.lines() {
            assert!(line.contains(" = "), "line {line:?} is not key = value");
        }
        assert!(text.contains("check.double_exp_tail.pass = true"));
        assert!(text.ends_with("verify.all_passed = true\n"));
    }
}
