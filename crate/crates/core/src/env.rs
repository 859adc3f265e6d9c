//! Toy environment: a Gaussian cluster classification stream with scheduled
//! distribution shifts, a small trainable predictor, scripted and rule-based
//! event flags, and a bounded-bias external reward.
//!
//! Observations are drawn from per-class Gaussian clusters whose centers are
//! mutually orthogonal (scaled Gram–Schmidt frames), so the stream is
//! cleanly separable and every downstream metric — predictive information,
//! novelty, capability — is nontrivial but analytically sane. A task
//! schedule switches cluster frames at fixed steps to inject novelty.
//!
//! The external reward compares the latest reported prediction against the
//! windowed accuracy baseline and adds a small bounded sinusoidal bias, so
//! its conditional mean stays within the configured bias bound.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::reward::SpikeFlags;
use crate::rng::{stream, STREAM_ENV, STREAM_EVENTS, STREAM_TASKS};
use crate::{Error, Result};

/// Byte-quantization range for observations fed to the novelty counter.
pub const OBS_BYTE_RANGE: f64 = 4.0;

/// Gain on the (prediction − baseline) term of the external reward.
pub const ACC_GAIN: f64 = 0.9;

/// Period, in steps, of the injected sinusoidal reward bias.
pub const BIAS_PERIOD: f64 = 64.0;

/// Windowed-accuracy rising-edge threshold for the semantic-discovery flag.
pub const SEMANTIC_EDGE: f64 = 0.75;

/// Minimum window fill before the semantic edge can fire.
pub const SEMANTIC_MIN_REPORTS: usize = 16;

fn default_num_classes() -> usize {
    4
}
fn default_d_h() -> usize {
    32
}
fn default_d_o() -> usize {
    16
}
fn default_r_max() -> f64 {
    1.0
}
fn default_delta_bias() -> f64 {
    0.1
}
fn default_cluster_separation() -> f64 {
    2.5
}
fn default_cluster_spread() -> f64 {
    0.35
}
fn default_lr_decay_tau() -> f64 {
    1500.0
}
fn default_learning_rate() -> f64 {
    0.05
}
fn default_transmission_rate() -> f64 {
    0.02
}
fn default_co_creation_rate() -> f64 {
    0.01
}
fn default_misinformation_rate() -> f64 {
    0.005
}
fn default_acc_window() -> usize {
    64
}
fn default_task_schedule() -> Vec<(u32, u64)> {
    vec![(0, 0), (1, 800)]
}

/// Environment and predictor dimensions plus stream parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Label alphabet size |Y|. Default 4.
    pub num_classes: usize,
    /// Predictor hidden width. Default 32.
    pub d_h: usize,
    /// Observation width. Default 16.
    pub d_o: usize,
    /// Hard bound on |r_ext|. Default 1.0.
    pub r_max: f64,
    /// External reward bias bound δ (must be < r_max). Default 0.1.
    pub delta_bias: f64,
    /// Cluster center norm; orthogonal centers sit `separation·√2` apart.
    /// Default 2.5.
    pub cluster_separation: f64,
    /// Within-class Gaussian spread per coordinate. Default 0.35.
    pub cluster_spread: f64,
    /// Predictor learning rate. Default 0.05.
    pub learning_rate: f64,
    /// Learning-rate decay horizon: the effective rate at step t is
    /// `learning_rate / (1 + t/lr_decay_tau)`, so training anneals and the
    /// frozen-probe accuracy stops jittering late in a run. 0 disables
    /// decay. Default 1500.
    pub lr_decay_tau: f64,
    /// Scripted event rate: transmission success. Default 0.02.
    pub transmission_rate: f64,
    /// Scripted event rate: co-creation. Default 0.01.
    pub co_creation_rate: f64,
    /// Scripted event rate: misinformation penalty. Default 0.005.
    pub misinformation_rate: f64,
    /// Accuracy window length for the reward baseline. Default 64.
    pub acc_window: usize,
    /// (family, start_step) pairs; first entry must start at 0, starts
    /// strictly increasing. Default `[(0,0), (1,800)]`.
    pub task_schedule: Vec<(u32, u64)>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            num_classes: default_num_classes(),
            d_h: default_d_h(),
            d_o: default_d_o(),
            r_max: default_r_max(),
            delta_bias: default_delta_bias(),
            cluster_separation: default_cluster_separation(),
            cluster_spread: default_cluster_spread(),
            learning_rate: default_learning_rate(),
            lr_decay_tau: default_lr_decay_tau(),
            transmission_rate: default_transmission_rate(),
            co_creation_rate: default_co_creation_rate(),
            misinformation_rate: default_misinformation_rate(),
            acc_window: default_acc_window(),
            task_schedule: default_task_schedule(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let mut reasons = Vec::new();
        if self.num_classes < 2 {
            reasons.push(format!("num_classes must be >= 2, got {}", self.num_classes));
        }
        if self.num_classes > self.d_o {
            reasons.push(format!(
                "num_classes {} exceeds d_o {} (orthogonal cluster centers need d_o >= |Y|)",
                self.num_classes, self.d_o
            ));
        }
        if self.d_h == 0 || self.d_o == 0 {
            reasons.push("d_h and d_o must be positive".into());
        }
        if !(self.r_max.is_finite() && self.delta_bias.is_finite() && self.delta_bias >= 0.0) {
            reasons.push("r_max and delta_bias must be finite, delta_bias >= 0".into());
        } else if self.r_max <= self.delta_bias {
            reasons.push(format!(
                "r_max {} must exceed delta_bias {}",
                self.r_max, self.delta_bias
            ));
        }
        for (name, v) in [
            ("cluster_separation", self.cluster_separation),
            ("cluster_spread", self.cluster_spread),
        ] {
            if !(v.is_finite() && v > 0.0) {
                reasons.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            reasons.push(format!("learning_rate must be >= 0, got {}", self.learning_rate));
        }
        if !(self.lr_decay_tau.is_finite() && self.lr_decay_tau >= 0.0) {
            reasons.push(format!("lr_decay_tau must be >= 0, got {}", self.lr_decay_tau));
        }
        for (name, v) in [
            ("transmission_rate", self.transmission_rate),
            ("co_creation_rate", self.co_creation_rate),
            ("misinformation_rate", self.misinformation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                reasons.push(format!("{name} must be in [0,1], got {v}"));
            }
        }
        if self.acc_window == 0 {
            reasons.push("acc_window must be >= 1".into());
        }
        if self.task_schedule.is_empty() {
            reasons.push("task_schedule must be non-empty".into());
        } else {
            if self.task_schedule[0].1 != 0 {
                reasons.push("task_schedule must start at step 0".into());
            }
            for pair in self.task_schedule.windows(2) {
                if pair[1].1 <= pair[0].1 {
                    reasons.push("task_schedule start steps must be strictly increasing".into());
                    break;
                }
            }
        }
        if reasons.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig { reasons })
        }
    }
}

/// Quantize an observation to bytes over ±[`OBS_BYTE_RANGE`] for the
/// novelty counter.
pub fn obs_bytes(obs: &[f64]) -> Vec<u8> {
    crate::meaning::quantize(obs, OBS_BYTE_RANGE)
}

/// Render the boot observation for a seed.
pub fn boot_record(seed: u64) -> Vec<u8> {
    format!("SYSTEM_BOOT seed={seed} prompt=SELF_QUERY").into_bytes()
}

/// Agent feedback the environment uses for rule-based flags and the reward
/// baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Report {
    correct: bool,
    p_true: f64,
}

/// One emitted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSample {
    pub obs: Vec<f64>,
    pub label: usize,
    pub family: u32,
    pub flags: SpikeFlags,
    pub r_ext: f64,
}

/// The environment: cluster frames per task family, RNG streams, feedback
/// history.
#[derive(Debug, Clone)]
pub struct ToyEnv {
    cfg: EnvConfig,
    /// Per-family class cluster centers (orthogonal frame × separation).
    means: BTreeMap<u32, Vec<Vec<f64>>>,
    rng_obs: ChaCha12Rng,
    rng_events: ChaCha12Rng,
    boot: Vec<u8>,
    reports: VecDeque<Report>,
    window: VecDeque<bool>,
    window_hits: usize,
    last_window_acc: f64,
}

impl ToyEnv {
    /// Build the environment, derive all cluster frames, and render the boot
    /// observation.
    pub fn reset(cfg: EnvConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng_tasks = stream(seed, STREAM_TASKS);
        let mut means = BTreeMap::new();
        for &(family, _) in &cfg.task_schedule {
            means
                .entry(family)
                .or_insert_with(|| cluster_frame(&mut rng_tasks, cfg.num_classes, cfg.d_o, cfg.cluster_separation));
        }
        Ok(Self {
            boot: boot_record(seed),
            rng_obs: stream(seed, STREAM_ENV),
            rng_events: stream(seed, STREAM_EVENTS),
            means,
            reports: VecDeque::with_capacity(2),
            window: VecDeque::with_capacity(cfg.acc_window),
            window_hits: 0,
            last_window_acc: 0.0,
            cfg,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    /// The rendered boot observation.
    pub fn boot_bytes(&self) -> &[u8] {
        &self.boot
    }

    /// Task family active at step `t`.
    pub fn active_family(&self, t: u64) -> u32 {
        let mut family = self.cfg.task_schedule[0].0;
        for &(f, start) in &self.cfg.task_schedule {
            if start <= t {
                family = f;
            }
        }
        family
    }

    fn windowed_accuracy(&self) -> f64 {
        if self.window.is_empty() {
            0.5
        } else {
            self.window_hits as f64 / self.window.len() as f64
        }
    }

    /// Emit step `t`: observation, label, event flags, external reward.
    ///
    /// Rule-based flags and the reward are computed from feedback reported
    /// through [`Self::report`] up to the previous step; scripted flags are
    /// independent Bernoulli draws on the event stream.
    pub fn step(&mut self, t: u64) -> StepSample {
        let family = self.active_family(t);
        let frame = &self.means[&family];
        let label = self.rng_obs.random_range(0..self.cfg.num_classes);
        let mut obs = frame[label].clone();
        for x in obs.iter_mut() {
            let z: f64 = self.rng_obs.sample(rand_distr::StandardNormal);
            *x += self.cfg.cluster_spread * z;
        }

        // Scripted channels: three draws in fixed order, every step.
        let transmission = self.rng_events.random::<f64>() < self.cfg.transmission_rate;
        let co_creation = self.rng_events.random::<f64>() < self.cfg.co_creation_rate;
        let misinformation = self.rng_events.random::<f64>() < self.cfg.misinformation_rate;

        // Rule-based channels need two reports (the t−2 → t−1 transition).
        let (repair, self_error) = if self.reports.len() >= 2 {
            let older = self.reports[self.reports.len() - 2];
            let newer = self.reports[self.reports.len() - 1];
            (
                !older.correct && newer.correct,
                !older.correct && newer.p_true > older.p_true,
            )
        } else {
            (false, false)
        };
        let acc = self.windowed_accuracy();
        let semantic = self.window.len() >= SEMANTIC_MIN_REPORTS
            && self.last_window_acc < SEMANTIC_EDGE
            && acc >= SEMANTIC_EDGE;
        self.last_window_acc = acc;

        let bias = 0.5 * self.cfg.delta_bias * (2.0 * std::f64::consts::PI * t as f64 / BIAS_PERIOD).sin();
        let r_ext = match self.reports.back() {
            Some(r) => {
                let corr = if r.correct { 1.0 } else { -1.0 };
                let baseline = 2.0 * acc - 1.0;
                (ACC_GAIN * (corr - baseline) + bias).clamp(-self.cfg.r_max, self.cfg.r_max)
            }
            None => bias.clamp(-self.cfg.r_max, self.cfg.r_max),
        };

        StepSample {
            obs,
            label,
            family,
            flags: SpikeFlags {
                transmission,
                repair,
                self_error,
                semantic,
                co_creation,
                misinformation,
            },
            r_ext,
        }
    }

    /// Record the agent's outcome for the step just consumed: whether the
    /// argmax prediction was correct and the probability it assigned to the
    /// true label.
    pub fn report(&mut self, correct: bool, p_true: f64) {
        if self.reports.len() == 2 {
            self.reports.pop_front();
        }
        self.reports.push_back(Report { correct, p_true: p_true.clamp(0.0, 1.0) });
        if self.window.len() == self.cfg.acc_window {
            if self.window.pop_front().unwrap() {
                self.window_hits -= 1;
            }
        }
        self.window.push_back(correct);
        if correct {
            self.window_hits += 1;
        }
    }

    /// Draw a fixed evaluation batch mixing all scheduled families equally.
    /// Uses the caller's RNG stream, so frozen probes are reproducible and
    /// independent of the run stream.
    pub fn probe_batch(&self, n: usize, rng: &mut ChaCha12Rng) -> Vec<(Vec<f64>, usize)> {
        let families: Vec<u32> = self.means.keys().copied().collect();
        (0..n)
            .map(|i| {
                let frame = &self.means[&families[i % families.len()]];
                let label = rng.random_range(0..self.cfg.num_classes);
                let mut obs = frame[label].clone();
                for x in obs.iter_mut() {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    *x += self.cfg.cluster_spread * z;
                }
                (obs, label)
            })
            .collect()
    }

    /// Draw a labeled batch for one goal: a fresh task variant composed
    /// from the scheduled cluster frames rather than a re-test of the
    /// training distribution. The goal family anchors an ordered frame
    /// pair; the probe stream draws an interpolation point, a non-identity
    /// class pairing between the frames, and a difficulty-scaled shift of
    /// every class center; difficulty also widens the within-class spread.
    /// Crossing class identities puts every center at a confusion point
    /// between two trained basins, so a converged predictor always has
    /// headroom on the variant and a usable improvement slope toward it.
    pub fn goal_probe(
        &self,
        family: u32,
        difficulty: u8,
        n: usize,
        rng: &mut ChaCha12Rng,
    ) -> Vec<(Vec<f64>, usize)> {
        let frames: Vec<&Vec<Vec<f64>>> = self.means.values().collect();
        let a = frames[family as usize % frames.len()];
        let b = frames[(family as usize + 1) % frames.len()];
        let lam: f64 = 0.35 + 0.3 * rng.random::<f64>();
        let k = self.cfg.num_classes;
        let mut pairing: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            pairing.swap(i, rng.random_range(0..=i));
        }
        if pairing.iter().enumerate().all(|(i, p)| i == *p) {
            pairing.rotate_right(1);
        }
        let spread = self.cfg.cluster_spread * (1.0 + 0.1 * f64::from(difficulty));
        let shift = self.cfg.cluster_separation * (0.1 + 0.03 * f64::from(difficulty));
        let centers: Vec<Vec<f64>> = a
            .iter()
            .enumerate()
            .map(|(i, ca)| {
                let cb = &b[pairing[i]];
                let dir: Vec<f64> =
                    (0..ca.len()).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
                let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                ca.iter()
                    .zip(cb)
                    .zip(&dir)
                    .map(|((x, y), d)| (1.0 - lam) * x + lam * y + shift * d / norm)
                    .collect()
            })
            .collect();
        (0..n)
            .map(|_| {
                let label = rng.random_range(0..self.cfg.num_classes);
                let mut obs = centers[label].clone();
                for x in obs.iter_mut() {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    *x += spread * z;
                }
                (obs, label)
            })
            .collect()
    }
}

/// Orthonormal class frame scaled to the separation radius: `k` mutually
/// orthogonal centers of norm `separation` in `d` dimensions.
fn cluster_frame(rng: &mut ChaCha12Rng, k: usize, d: usize, separation: f64) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(k);
    while frame.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        // Two Gram–Schmidt passes for numerical hygiene.
        for _ in 0..2 {
            for u in &frame {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
                    / (separation * separation);
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= dot * y;
                }
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue; // essentially impossible; redraw
        }
        for x in v.iter_mut() {
            *x *= separation / norm;
        }
        frame.push(v);
    }
    frame
}

/// Which parameter-update rule the trainer applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateRule {
    PlainGradient,
    Momentum,
    AdaptiveDiagonal,
}

impl UpdateRule {
    /// The registry order the phase-shift cycling walks through.
    pub const REGISTRY: [UpdateRule; 3] =
        [UpdateRule::PlainGradient, UpdateRule::Momentum, UpdateRule::AdaptiveDiagonal];

    pub fn next(self) -> Self {
        let idx = Self::REGISTRY.iter().position(|r| *r == self).expect("rule in registry");
        Self::REGISTRY[(idx + 1) % Self::REGISTRY.len()]
    }

    pub fn name(self) -> &'static str {
        match self {
            UpdateRule::PlainGradient => "plain_gradient",
            UpdateRule::Momentum => "momentum",
            UpdateRule::AdaptiveDiagonal => "adaptive_diagonal",
        }
    }
}

const MOMENTUM_BETA: f64 = 0.9;
const ADAPTIVE_EPS: f64 = 1e-8;

/// Outcome of one training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOutcome {
    /// Mean cross-entropy over the batch, in nats.
    pub loss: f64,
    /// False when a non-finite loss/gradient caused the update to be skipped.
    pub applied: bool,
}

/// Two-layer tanh classifier with flat parameter storage and per-rule
/// optimizer slots that survive rule swaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub d_o: usize,
    pub d_h: usize,
    pub k: usize,
    theta: Vec<f64>,
    vel: Vec<f64>,
    sq: Vec<f64>,
}

impl Predictor {
    /// Layout: W1 (d_h×d_o), b1 (d_h), W2 (k×d_h), b2 (k).
    pub fn new(d_o: usize, d_h: usize, k: usize, rng: &mut ChaCha12Rng) -> Self {
        let n = d_h * d_o + d_h + k * d_h + k;
        let mut theta = vec![0.0; n];
        let s1 = 1.0 / (d_o as f64).sqrt();
        for w in theta[..d_h * d_o].iter_mut() {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            *w = s1 * z;
        }
        let w2_start = d_h * d_o + d_h;
        let s2 = 1.0 / (d_h as f64).sqrt();
        for w in theta[w2_start..w2_start + k * d_h].iter_mut() {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            *w = s2 * z;
        }
        Self { d_o, d_h, k, vel: vec![0.0; n], sq: vec![0.0; n], theta }
    }

    /// All-zero parameters (uniform predictor); test and probe helper.
    pub fn zeroed(d_o: usize, d_h: usize, k: usize) -> Self {
        let n = d_h * d_o + d_h + k * d_h + k;
        Self { d_o, d_h, k, theta: vec![0.0; n], vel: vec![0.0; n], sq: vec![0.0; n] }
    }

    pub fn param_count(&self) -> usize {
        self.theta.len()
    }

    /// Forward pass with the persistent modification vector added to the
    /// hidden pre-activation: `h = tanh(W1·obs + b1 + h_mod)`, distribution
    /// from floored softmax logits.
    pub fn forward(&self, obs: &[f64], h_mod: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if obs.len() != self.d_o {
            return Err(Error::DimensionMismatch { expected: self.d_o, got: obs.len() });
        }
        if h_mod.len() != self.d_h {
            return Err(Error::DimensionMismatch { expected: self.d_h, got: h_mod.len() });
        }
        let (w1, b1, w2, b2) = self.views();
        let mut h = vec![0.0; self.d_h];
        for i in 0..self.d_h {
            let mut z = b1[i] + h_mod[i];
            let row = &w1[i * self.d_o..(i + 1) * self.d_o];
            for (w, x) in row.iter().zip(obs) {
                z += w * x;
            }
            h[i] = z.tanh();
        }
        let mut logits = vec![0.0; self.k];
        for c in 0..self.k {
            let mut z = b2[c];
            let row = &w2[c * self.d_h..(c + 1) * self.d_h];
            for (w, x) in row.iter().zip(&h) {
                z += w * x;
            }
            logits[c] = z;
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut dist: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        crate::metacognition::floor_and_normalize(&mut dist);
        Ok((h, dist))
    }

    fn views(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let w1_end = self.d_h * self.d_o;
        let b1_end = w1_end + self.d_h;
        let w2_end = b1_end + self.k * self.d_h;
        (
            &self.theta[..w1_end],
            &self.theta[w1_end..b1_end],
            &self.theta[b1_end..w2_end],
            &self.theta[w2_end..],
        )
    }

    /// One cross-entropy step over `batch` under `rule`. Optimizer slots are
    /// shared across rules and survive swaps; a non-finite loss skips the
    /// update.
    pub fn train_step(
        &mut self,
        batch: &[(Vec<f64>, usize)],
        h_mod: &[f64],
        rule: UpdateRule,
        lr: f64,
    ) -> Result<TrainOutcome> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("train_step batch"));
        }
        let n = self.theta.len();
        let mut grad = vec![0.0; n];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        let w1_end = self.d_h * self.d_o;
        let b1_end = w1_end + self.d_h;
        let w2_start = b1_end;
        let b2_start = w2_start + self.k * self.d_h;

        for (obs, label) in batch {
            let (h, dist) = self.forward(obs, h_mod)?;
            if *label >= self.k {
                return Err(Error::InvalidDistribution(format!(
                    "label {label} out of range for {} classes",
                    self.k
                )));
            }
            loss += -dist[*label].ln() * scale;
            // d logits = dist − one-hot
            let w2 = &self.theta[w2_start..b2_start];
            let mut dh = vec![0.0; self.d_h];
            for c in 0..self.k {
                let dz = (dist[c] - if c == *label { 1.0 } else { 0.0 }) * scale;
                grad[b2_start + c] += dz;
                let row = c * self.d_h;
                for i in 0..self.d_h {
                    grad[w2_start + row + i] += dz * h[i];
                    dh[i] += dz * w2[row + i];
                }
            }
            for i in 0..self.d_h {
                let dz1 = dh[i] * (1.0 - h[i] * h[i]);
                grad[w1_end + i] += dz1;
                let row = i * self.d_o;
                for (j, x) in obs.iter().enumerate() {
                    grad[row + j] += dz1 * x;
                }
            }
        }

        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Ok(TrainOutcome { loss, applied: false });
        }
        match rule {
            UpdateRule::PlainGradient => {
                for (t, g) in self.theta.iter_mut().zip(&grad) {
                    *t -= lr * g;
                }
            }
            UpdateRule::Momentum => {
                for ((t, v), g) in self.theta.iter_mut().zip(self.vel.iter_mut()).zip(&grad) {
                    *v = MOMENTUM_BETA * *v + g;
                    *t -= lr * *v;
                }
            }
            UpdateRule::AdaptiveDiagonal => {
                for ((t, s), g) in self.theta.iter_mut().zip(self.sq.iter_mut()).zip(&grad) {
                    *s += g * g;
                    *t -= lr * g / (s.sqrt() + ADAPTIVE_EPS);
                }
            }
        }
        Ok(TrainOutcome { loss, applied: true })
    }

    /// Fraction of the batch classified correctly (argmax).
    pub fn accuracy(&self, batch: &[(Vec<f64>, usize)], h_mod: &[f64]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("accuracy batch"));
        }
        let mut hits = 0usize;
        for (obs, label) in batch {
            let (_, dist) = self.forward(obs, h_mod)?;
            if argmax(&dist) == *label {
                hits += 1;
            }
        }
        Ok(hits as f64 / batch.len() as f64)
    }

    /// Mean probability assigned to the true class — the smooth capability
    /// surrogate used for slope probing.
    pub fn soft_accuracy(&self, batch: &[(Vec<f64>, usize)], h_mod: &[f64]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("soft_accuracy batch"));
        }
        let mut total = 0.0;
        for (obs, label) in batch {
            let (_, dist) = self.forward(obs, h_mod)?;
            total += dist[*label];
        }
        Ok(total / batch.len() as f64)
    }
}

/// Index of the largest element (first on ties).
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}
