//! The step loop: one deterministic run wiring the environment, predictor,
//! metacognition, emotion drive, meaning metrics, reward composition,
//! self-modification, goal ledger, and safety monitor together.
//!
//! Per step, in order: environment step → prediction → metacognitive map →
//! success update → potential/gradient/clip → scalar drive → windowed
//! information estimates → reward composition → trigger evaluation → (on
//! fire) modification + noise replay → goal generation/scoring/filtering →
//! one training step → toll update → periodic safety audit → trace row.
//!
//! Warm-up: the first T₀ steps collect pre-clip gradient norms under a
//! provisional clip threshold; the adaptive threshold takes over once
//! calibrated, at which point the safety state is re-validated against it.
//!
//! Every random draw comes from a tagged substream of the run seed, and all
//! collections iterate in a fixed order, so a (config, seed) pair yields a
//! byte-identical trace.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::config::{GoalsSection, RunConfig, SelfmodSection};
use crate::emotion::{
    clip, gradient, norm4, potential, scalar_drive, ClipCalibrator, MetaVector,
    PROVISIONAL_K_MAX,
};
use crate::env::{argmax, obs_bytes, Predictor, ToyEnv, UpdateRule};
use crate::goals::{default_utility_table, score_preview, BatchStats, Goal, GoalLedger};
use crate::meaning::{
    conversion_efficiency, mdl_complexity, meaning_density, mi_plugin, MiEstimate, MiMode,
    NoveltyCounter,
};
use crate::metacognition::{lambda_map, success_update, ConfidenceMode, PredictionRecord};
use crate::reward::{baseline_bonus, compose, event_spikes, md_mce_bonus, EligibilityTrace};
use crate::rng::{
    stream, substream_seed, STREAM_BASELINE, STREAM_DIRECTIONS, STREAM_GOALS, STREAM_INIT,
    STREAM_PROBE, STREAM_SCORE, STREAM_SLOPE, STREAM_TASKS,
};
use crate::safety::{
    audit, ClipSample, InvariantReport, SafetyState, TollVector, EVENT_INCREMENT,
};
use crate::selfmod::{
    ability_gain_check, boot_h_mod, estimate_beta, estimate_gamma, rsi_trigger, CapabilityProbe,
    ModState,
};
use crate::trace::{fmt_float, TraceRow, TraceWriter};
use crate::{Error, Result};

/// Recent samples kept for each training step. A short window smooths the
/// single-sample gradient so decision boundaries migrate instead of
/// jittering around the frozen capability probe.
const TRAIN_WINDOW: usize = 8;

/// End-of-run accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub seed: u64,
    /// Sum of the trace's reward totals, accumulated over the recorded
    /// (nine-significant-digit) values so it equals the column sum exactly.
    pub cumulative_reward: f64,
    pub fired_steps: u64,
    pub modifications_applied: u64,
    pub rule_swaps: u64,
    /// First step whose information estimate strictly exceeded Γ.
    pub crossing_step: Option<u64>,
    pub initial_capability: f64,
    pub final_capability: f64,
    /// Sum of the negative per-step capability increments (magnitude).
    pub negative_capability_sum: f64,
    pub goals_active: usize,
    pub goals_noise: usize,
    pub goals_discarded: usize,
    pub batch_stats: BatchStats,
    /// Clip threshold in force at run end.
    pub k_max: f64,
    pub beta_hat: f64,
    pub gamma_hat: f64,
    pub alpha_star: f64,
    /// Audits that reported the run inside the safety region / total audits.
    pub audits_in_region: usize,
    pub audits_total: usize,
    /// Clamp notices from safety initialization.
    pub warnings: Vec<String>,
}

/// A completed run: every trace row, the summary, and the audit trail.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<TraceRow>,
    pub summary: RunSummary,
    pub audits: Vec<(u64, InvariantReport)>,
}

fn abort(step: u64) -> impl Fn(Error) -> Error {
    move |e| Error::RunAborted { step, source: Box::new(e) }
}

/// An information estimate that contributes nothing: the pre-run value for
/// the efficiency delta.
fn zero_estimate(num_classes: usize) -> MiEstimate {
    MiEstimate {
        value: 0.0,
        n_samples: 0,
        mode: MiMode::DiscretePlugin,
        degenerate: false,
        num_classes: Some(num_classes),
    }
}

/// Frozen per-goal probe: derived from the run seed and the goal key only,
/// so it is independent of when the goal is first scored.
fn goal_probe_for<'a>(
    cache: &'a mut BTreeMap<Goal, Vec<(Vec<f64>, usize)>>,
    env: &ToyEnv,
    seed: u64,
    n: usize,
    goal: &Goal,
) -> &'a Vec<(Vec<f64>, usize)> {
    cache.entry(*goal).or_insert_with(|| {
        let mut rng = stream(substream_seed(seed, goal.key()), STREAM_TASKS);
        env.goal_probe(goal.family, goal.difficulty, n, &mut rng)
    })
}

/// Monte-Carlo preview score of one goal at the current hidden offset: a
/// fresh simultaneous-perturbation preview of the modification operator
/// against the goal's own frozen probe, at the operator's own step scale.
#[allow(clippy::too_many_arguments)]
fn score_goal(
    goal: &Goal,
    h: &[f64],
    epsilon_t: f64,
    k_max: f64,
    cache: &mut BTreeMap<Goal, Vec<(Vec<f64>, usize)>>,
    env: &ToyEnv,
    predictor: &Predictor,
    seed: u64,
    goals_cfg: &GoalsSection,
    mod_cfg: &SelfmodSection,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    let probe = goal_probe_for(cache, env, seed, goals_cfg.goal_probe, goal);
    let mut cap = |x: &[f64]| predictor.soft_accuracy(probe, x);
    let est = score_preview(
        &mut cap,
        h,
        epsilon_t,
        mod_cfg.eta_m,
        mod_cfg.l_m,
        k_max,
        goals_cfg.preview_pairs,
        goals_cfg.k_rollouts,
        rng,
    )?;
    Ok(est.g)
}

/// Execute one run. Any module error aborts with the offending step index.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let seed = cfg.run.seed;
    let weights = cfg.emotion.weights()?;
    let k = cfg.env.num_classes;
    let d_h = cfg.env.d_h;

    // Environment, predictor, and the boot-derived hidden offset.
    let mut env = ToyEnv::reset(cfg.env.clone(), seed)?;
    let mut predictor =
        Predictor::new(cfg.env.d_o, d_h, k, &mut stream(seed, STREAM_INIT));
    let mut h_mod = boot_h_mod(env.boot_bytes(), d_h);
    let mut novelty = NoveltyCounter::new();
    novelty.observe(env.boot_bytes());

    // Frozen capability probe and the run-start sensitivity estimates.
    let mut probe = CapabilityProbe::new(
        env.probe_batch(cfg.selfmod.probe_size, &mut stream(seed, STREAM_PROBE)),
        0.0,
    )?;
    let beta_hat = estimate_beta(
        &predictor,
        &probe,
        &h_mod,
        cfg.selfmod.beta_perturbations,
        &mut stream(seed, STREAM_SLOPE),
    )?;
    probe.beta_cap = beta_hat;
    let gamma_hat = estimate_gamma(beta_hat, cfg.selfmod.l_m)?;

    // Certify the mixing radius against the boot-state drive bound — the
    // only gradient magnitude that exists before the loop runs. The
    // certification is refreshed at clip calibration against the operative
    // threshold (or the largest drive actually observed, if larger).
    let k_boot = norm4(&gradient(&MetaVector::boot(), &weights)?);
    let (safety, warnings) = SafetyState::initialize(
        k_boot,
        cfg.reward.alpha,
        gamma_hat,
        cfg.reward.xi_dg,
        cfg.reward.xi_bl,
    )?;
    let mut w_eff = cfg.reward.clone();
    w_eff.xi_dg = safety.xi_effective.0;
    w_eff.xi_bl = safety.xi_effective.1;

    let mut toll = TollVector::new(cfg.safety.toll_thresholds.clone(), cfg.safety.eta_max)?;
    let mut ledger = GoalLedger::new(
        default_utility_table(cfg.goals.families, Some(cfg.goals.forbidden_family)),
        cfg.goals.gamma_goal,
        cfg.goals.p_gen,
    )?;
    let mut mod_state =
        ModState::new(cfg.selfmod.eta_m, cfg.selfmod.l_m, UpdateRule::PlainGradient, d_h)?;
    let mut calibrator = ClipCalibrator::new(cfg.run.warmup_t0);
    let mut elig = EligibilityTrace { z: 0.0, z_prev: 0.0 };

    // Tagged substreams: every stochastic site owns one.
    let mut rng_baseline = stream(seed, STREAM_BASELINE);
    let mut rng_goals = stream(seed, STREAM_GOALS);
    let mut rng_score = stream(seed, STREAM_SCORE);
    let mut rng_directions = stream(seed, STREAM_DIRECTIONS);

    let mut goal_probes: BTreeMap<Goal, Vec<(Vec<f64>, usize)>> = BTreeMap::new();
    let v_boot = MetaVector::boot();
    let mut v_prev = v_boot;
    let mut label_counts = vec![1.0f64; k];
    let mut mi_window: VecDeque<(Vec<f64>, usize)> = VecDeque::new();
    let mut train_window: VecDeque<(Vec<f64>, usize)> = VecDeque::new();
    let mut est_prev = zero_estimate(k);
    let mut clip_window: Vec<ClipSample> = Vec::new();
    let mut max_norm_post = 0.0f64;
    let mut in_region = true;
    let mut audits: Vec<(u64, InvariantReport)> = Vec::new();

    let initial_capability = probe.capability(&predictor, &h_mod)?;
    let mut cap_prev = initial_capability;

    let mut rows: Vec<TraceRow> = Vec::with_capacity(cfg.run.steps as usize);
    let mut cumulative_reward = 0.0;
    let mut fired_steps = 0u64;
    let mut modifications_applied = 0u64;
    let mut rule_swaps = 0u64;
    let mut crossing_step: Option<u64> = None;
    let mut negative_capability_sum = 0.0;

    for t in 0..cfg.run.steps {
        let fail = abort(t);

        // Environment emission and prediction.
        let sample = env.step(t);
        let (_hidden, dist) = predictor.forward(&sample.obs, &h_mod).map_err(&fail)?;
        let predicted = argmax(&dist);
        let correct = predicted == sample.label;
        let p_true = dist[sample.label];
        env.report(correct, p_true);

        // Metacognitive map with the running label prior, then the decayed
        // success memory fed by the external reward.
        let total_count: f64 = label_counts.iter().sum();
        let prior: Vec<f64> = label_counts.iter().map(|c| c / total_count).collect();
        let rec = PredictionRecord::new(dist.clone(), sample.label, prior).map_err(&fail)?;
        let mut v = lambda_map(&rec, &v_prev, ConfidenceMode::Entropy);
        v = MetaVector::new(
            v.c,
            v.e,
            v.n,
            success_update(v_prev.s, sample.r_ext, cfg.emotion.success_decay),
        );
        label_counts[sample.label] += 1.0;

        // Drive: potential, gradient, adaptive clip, directional derivative.
        let f_base = potential(&v, &weights).map_err(&fail)?;
        let grad = gradient(&v, &weights).map_err(&fail)?;
        let grad_norm_pre = norm4(&grad);
        let k_max = if calibrator.is_calibrated() {
            calibrator.k_max()
        } else {
            PROVISIONAL_K_MAX
        };
        let clipped = clip(&grad, k_max);
        let grad_norm_post = norm4(&clipped);
        max_norm_post = max_norm_post.max(grad_norm_post);
        if !calibrator.is_calibrated() {
            // Warm-up collects raw norms; once the window fills, the
            // adaptive threshold replaces the provisional one for the rest
            // of the run. The mixing-radius certificate is not recomputed:
            // it is a run-start check against run-start quantities, and the
            // adaptive threshold only governs clipping from here on.
            calibrator.observe(grad_norm_pre).map_err(&fail)?;
        }
        // Drive: directional derivative along the unit displacement from the
        // boot state. The sign is a property of where the meta-state sits
        // (above or below its boot level), so activation persists once the
        // agent has improved instead of flipping with per-sample noise; the
        // unit direction keeps |eps| within the clipped-gradient norm bound.
        let mut delta_v = v.delta(&v_boot);
        let disp = norm4(&delta_v);
        if disp > 1e-12 {
            for d in delta_v.iter_mut() {
                *d /= disp;
            }
        }
        let eps_t = scalar_drive(&clipped, &delta_v);
        clip_window.push(ClipSample { norm_post: grad_norm_post, k_max });

        // Windowed information estimates and the meaning ratios.
        let delta_s = novelty.observe(&obs_bytes(&sample.obs));
        mi_window.push_back((dist.clone(), sample.label));
        if mi_window.len() > cfg.run.mi_window {
            mi_window.pop_front();
        }
        let mut window_counts = vec![0.0f64; k];
        for (_, y) in &mi_window {
            window_counts[*y] += 1.0;
        }
        let batch: Vec<(Vec<f64>, usize)> = mi_window.iter().cloned().collect();
        let est = mi_plugin(&batch, &window_counts).map_err(&fail)?;
        let i_pred = est.bounded();
        let k_est = mdl_complexity(&h_mod).map_err(&fail)?;
        let md = meaning_density(&est, &k_est);
        let mce = conversion_efficiency(&est, &est_prev, delta_s);
        est_prev = est;
        if crossing_step.is_none() && i_pred > cfg.run.gamma {
            crossing_step = Some(t);
        }

        // Reward composition (all pre-modification quantities).
        let (spikes, penalty) = event_spikes(sample.flags, &w_eff);
        let dg_bonus = elig.update(f_base, &w_eff);
        let bl_bonus = baseline_bonus(rng_baseline.random::<f64>(), &w_eff);
        let (md_bonus, mce_bonus) = md_mce_bonus(md, mce, &w_eff);
        let breakdown = compose(
            f_base,
            spikes,
            penalty,
            dg_bonus,
            bl_bonus,
            md_bonus,
            mce_bonus,
            sample.r_ext,
            cfg.env.r_max,
            &w_eff,
        )
        .map_err(&fail)?;

        // Trigger, modification, and the post-modification noise replay.
        let decision =
            rsi_trigger(eps_t, i_pred, cfg.run.gamma, mod_state.cooldown).map_err(&fail)?;
        let cap_pre = probe.capability(&predictor, &h_mod).map_err(&fail)?;
        let mut cap_now = cap_pre;
        let mut rule_swapped = false;
        let mut gain_failed = false;
        if decision.fired {
            fired_steps += 1;
            let outcome = mod_state
                .apply(
                    &h_mod,
                    eps_t,
                    k_max,
                    decision.phase_shift,
                    &predictor,
                    &probe.samples,
                    &mut rng_directions,
                )
                .map_err(&fail)?;
            rule_swapped = outcome.rule_swapped;
            if outcome.applied {
                modifications_applied += 1;
                h_mod = outcome.h_new;
                cap_now = probe.capability(&predictor, &h_mod).map_err(&fail)?;
                gain_failed = !ability_gain_check(cap_pre, cap_now, eps_t, 0.0);
                ledger
                    .replay_noise(
                        |g| {
                            score_goal(
                                g,
                                &h_mod,
                                eps_t,
                                k_max,
                                &mut goal_probes,
                                &env,
                                &predictor,
                                seed,
                                &cfg.goals,
                                &cfg.selfmod,
                                &mut rng_score,
                            )
                        },
                        t,
                    )
                    .map_err(&fail)?;
            }
            if rule_swapped {
                rule_swaps += 1;
            }
        }

        // Goal generation, scoring, and filtering.
        let gate_draw = rng_goals.random::<f64>();
        let cands = ledger.generate(gate_draw, &mut rng_goals, cap_now, t);
        let mut vetoed = false;
        if !cands.is_empty() {
            let mut scored = Vec::with_capacity(cands.len());
            for g in &cands {
                let s = score_goal(
                    g,
                    &h_mod,
                    eps_t,
                    k_max,
                    &mut goal_probes,
                    &env,
                    &predictor,
                    seed,
                    &cfg.goals,
                    &cfg.selfmod,
                    &mut rng_score,
                )
                .map_err(&fail)?;
                scored.push((*g, s));
            }
            let outcome = ledger.filter_accept(&scored, t).map_err(&fail)?;
            vetoed = !outcome.discarded.is_empty();
        }

        // One training step over a short window of recent samples. The
        // window smooths single-sample gradient noise so the decision
        // boundaries migrate instead of jittering, and the rate anneals on
        // the configured horizon so late-run training settles instead of
        // rattling the frozen-probe capability around its plateau.
        train_window.push_back((sample.obs.clone(), sample.label));
        if train_window.len() > TRAIN_WINDOW {
            train_window.pop_front();
        }
        let lr_t = if cfg.env.lr_decay_tau > 0.0 {
            cfg.env.learning_rate / (1.0 + t as f64 / cfg.env.lr_decay_tau)
        } else {
            cfg.env.learning_rate
        };
        let batch: Vec<(Vec<f64>, usize)> = train_window.iter().cloned().collect();
        predictor.train_step(&batch, &h_mod, mod_state.rule, lr_t).map_err(&fail)?;

        // Toll: one capped increment per flagged event, events mapped onto
        // components cyclically.
        let events = [
            grad_norm_pre > k_max,
            rule_swapped,
            vetoed,
            gain_failed,
        ];
        let dim = toll.m.len();
        let mut eta = vec![0.0; dim];
        for (i, happened) in events.iter().enumerate() {
            if *happened {
                eta[i % dim] += EVENT_INCREMENT;
            }
        }
        toll.update(&eta).map_err(&fail)?;

        // Periodic invariant audit.
        if t % cfg.run.audit_every == 0 {
            let report = audit(&clip_window, &safety, &toll);
            in_region = report.in_region;
            audits.push((t, report));
            clip_window.clear();
        }

        let h_norm = h_mod.iter().map(|x| x * x).sum::<f64>().sqrt();
        let row = TraceRow {
            t,
            c: v.c,
            e: v.e,
            n: v.n,
            s: v.s,
            f_base,
            eps_t,
            grad_norm_pre,
            grad_norm_post,
            i_pred,
            md,
            mce,
            delta_s,
            fired: decision.fired,
            phase_shift: rule_swapped,
            reward_base: breakdown.base_f,
            reward_spikes: breakdown.spikes,
            reward_penalty: breakdown.penalty,
            reward_dg: breakdown.dg_bonus,
            reward_baseline: breakdown.baseline_bonus,
            reward_md: breakdown.md_bonus,
            reward_mce: breakdown.mce_bonus,
            reward_ext: breakdown.external_mixed,
            reward_total: breakdown.total,
            capability: cap_now,
            goals_active: ledger.active.len() as u64,
            goals_noise: ledger.noise.len() as u64,
            toll_l1: toll.l1(),
            k_max,
            h_norm,
            in_region,
        };
        // Accumulate over the recorded encoding so the summary equals the
        // trace column sum exactly.
        cumulative_reward += fmt_float(row.reward_total).parse::<f64>().expect("own encoding");
        if cap_now < cap_prev {
            negative_capability_sum += cap_prev - cap_now;
        }
        cap_prev = cap_now;
        rows.push(row);
        v_prev = v;
        mod_state.tick();
    }

    let final_capability = if let Some(last) = rows.last() {
        last.capability
    } else {
        initial_capability
    };
    let summary = RunSummary {
        steps: cfg.run.steps,
        seed,
        cumulative_reward,
        fired_steps,
        modifications_applied,
        rule_swaps,
        crossing_step,
        initial_capability,
        final_capability,
        negative_capability_sum,
        goals_active: ledger.active.len(),
        goals_noise: ledger.noise.len(),
        goals_discarded: ledger.discarded.len(),
        batch_stats: ledger.batch_stats(),
        k_max: if calibrator.is_calibrated() {
            calibrator.k_max()
        } else {
            PROVISIONAL_K_MAX
        },
        beta_hat,
        gamma_hat,
        alpha_star: safety.alpha_star,
        audits_in_region: audits.iter().filter(|(_, r)| r.in_region).count(),
        audits_total: audits.len(),
        warnings,
    };
    Ok(RunOutput { rows, summary, audits })
}

/// Run and stream the trace to a CSV file.
pub fn run_to_file(cfg: &RunConfig, path: &Path) -> Result<RunOutput> {
    let out = run(cfg)?;
    let mut w = TraceWriter::create(path)?;
    for row in &out.rows {
        w.append(row)?;
    }
    w.finish()?;
    Ok(out)
}

/// Crossing statistics for the figure-shaped replication: the first row
/// whose information estimate strictly exceeds `gamma`, and the fraction of
/// strictly later rows with the trigger fired (1.0 when no rows follow).
pub fn crossing_stats(rows: &[TraceRow], gamma: f64) -> (Option<u64>, f64) {
    let crossing = rows.iter().position(|r| r.i_pred > gamma);
    match crossing {
        None => (None, 0.0),
        Some(idx) => {
            let after = &rows[idx + 1..];
            if after.is_empty() {
                (Some(rows[idx].t), 1.0)
            } else {
                let fired = after.iter().filter(|r| r.fired).count();
                (Some(rows[idx].t), fired as f64 / after.len() as f64)
            }
        }
    }
}

/// Multi-seed acceptance sweep: seeds `base..base+n`, one summary each.
pub fn sweep(cfg: &RunConfig, seeds: u64) -> Result<Vec<RunSummary>> {
    let mut out = Vec::with_capacity(seeds as usize);
    for i in 0..seeds {
        let mut c = cfg.clone();
        c.run.seed = cfg.run.seed + i;
        out.push(run(&c)?.summary);
    }
    Ok(out)
}
