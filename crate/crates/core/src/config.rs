//! Run configuration: a TOML file with dotted sections, every field
//! defaulted, unknown keys rejected, and structural validation at load.
//!
//! Load-time validation covers everything checkable without running:
//! positivity, ranges, schedule shape, weight contracts. The safety-region
//! checks that depend on the run-time contraction estimate γ̂ (the strict
//! mixing radius and the buffer caps) are enforced at run initialization,
//! where γ̂ = β̂ / L_M first exists.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::emotion::EmotionWeights;
use crate::env::EnvConfig;
use crate::reward::ChannelWeights;
use crate::{Error, Result};

fn default_steps() -> u64 {
    10_000
}
fn default_seed() -> u64 {
    7
}
fn default_warmup_t0() -> usize {
    32
}
fn default_gamma() -> f64 {
    0.1
}
fn default_mi_window() -> usize {
    64
}
fn default_audit_every() -> u64 {
    100
}

/// Loop-level knobs: horizon, seed, warm-up length, trigger threshold,
/// estimation window, audit cadence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Steps to simulate. Default 10 000.
    pub steps: u64,
    /// Master seed; every stream in the run derives from it. Default 7.
    pub seed: u64,
    /// Warm-up steps T₀ collecting gradient norms before the clip threshold
    /// is calibrated. Default 32.
    pub warmup_t0: usize,
    /// Information-gain threshold Γ for the modification trigger.
    /// Default 0.1.
    pub gamma: f64,
    /// Sliding-window length for the per-step information estimates.
    /// Default 64.
    pub mi_window: usize,
    /// Safety-audit cadence in steps. Default 100.
    pub audit_every: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            seed: default_seed(),
            warmup_t0: default_warmup_t0(),
            gamma: default_gamma(),
            mi_window: default_mi_window(),
            audit_every: default_audit_every(),
        }
    }
}

fn default_w_confidence() -> f64 {
    EmotionWeights::default().c
}
fn default_w_error() -> f64 {
    EmotionWeights::default().e
}
fn default_w_novelty() -> f64 {
    EmotionWeights::default().n
}
fn default_w_success() -> f64 {
    EmotionWeights::default().s
}
fn default_success_decay() -> f64 {
    0.9
}

/// Emotion-potential weights and the success-memory decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmotionSection {
    /// Weight on confidence. Default 1.2.
    pub w_confidence: f64,
    /// Weight on predicted error. Default −0.8.
    pub w_error: f64,
    /// Weight on novelty expectation. Default 0.6.
    pub w_novelty: f64,
    /// Weight on success memory. Default 0.4.
    pub w_success: f64,
    /// Success-memory decay per step. Default 0.9.
    pub success_decay: f64,
}

impl Default for EmotionSection {
    fn default() -> Self {
        Self {
            w_confidence: default_w_confidence(),
            w_error: default_w_error(),
            w_novelty: default_w_novelty(),
            w_success: default_w_success(),
            success_decay: default_success_decay(),
        }
    }
}

impl EmotionSection {
    /// Assemble the validated weight vector.
    pub fn weights(&self) -> Result<EmotionWeights> {
        EmotionWeights::new(self.w_confidence, self.w_error, self.w_novelty, self.w_success)
    }
}

fn default_eta_m() -> f64 {
    crate::selfmod::DEFAULT_ETA_M
}
fn default_l_m() -> f64 {
    crate::selfmod::DEFAULT_L_M
}
fn default_probe_size() -> usize {
    256
}
fn default_beta_perturbations() -> usize {
    8
}

/// Self-modification operator knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfmodSection {
    /// Modification step scale η_M. Default 0.1.
    pub eta_m: f64,
    /// Lipschitz cap L_M on one modification step. Default 0.05.
    pub l_m: f64,
    /// Capability probe size frozen at run start. Default 256.
    pub probe_size: usize,
    /// Perturbation count for the run-start sensitivity estimate β̂.
    /// Default 8.
    pub beta_perturbations: usize,
}

impl Default for SelfmodSection {
    fn default() -> Self {
        Self {
            eta_m: default_eta_m(),
            l_m: default_l_m(),
            probe_size: default_probe_size(),
            beta_perturbations: default_beta_perturbations(),
        }
    }
}

fn default_gamma_goal() -> f64 {
    crate::goals::DEFAULT_GAMMA_GOAL
}
fn default_p_gen() -> f64 {
    crate::goals::DEFAULT_P_GEN
}
fn default_k_rollouts() -> usize {
    crate::goals::DEFAULT_K_ROLLOUTS
}
fn default_preview_pairs() -> usize {
    crate::goals::DEFAULT_PREVIEW_PAIRS
}
fn default_families() -> u32 {
    crate::goals::DEFAULT_GOAL_FAMILIES
}
fn default_forbidden_family() -> u32 {
    crate::goals::DEFAULT_FORBIDDEN_FAMILY
}
fn default_goal_probe() -> usize {
    crate::goals::DEFAULT_GOAL_PROBE
}

/// Goal generation, scoring, and filtering knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoalsSection {
    /// Acceptance threshold γ_goal. Default 0.01.
    pub gamma_goal: f64,
    /// Per-step generation probability p_gen. Default 0.1.
    pub p_gen: f64,
    /// Monte-Carlo preview rollouts per score. Default 4.
    pub k_rollouts: usize,
    /// Perturbation pairs averaged into each preview direction. Default 8.
    pub preview_pairs: usize,
    /// Goal-registry family count. Default 6.
    pub families: u32,
    /// Family vetoed by the utility table (set ≥ `families` to disable).
    /// Default 5.
    pub forbidden_family: u32,
    /// Per-goal frozen probe size. Default 64.
    pub goal_probe: usize,
}

impl Default for GoalsSection {
    fn default() -> Self {
        Self {
            gamma_goal: default_gamma_goal(),
            p_gen: default_p_gen(),
            k_rollouts: default_k_rollouts(),
            preview_pairs: default_preview_pairs(),
            families: default_families(),
            forbidden_family: default_forbidden_family(),
            goal_probe: default_goal_probe(),
        }
    }
}

fn default_eta_max() -> f64 {
    crate::safety::DEFAULT_ETA_MAX
}
fn default_toll_thresholds() -> Vec<f64> {
    vec![1.0; crate::safety::TOLL_DIM]
}

/// Regulatory-toll knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetySection {
    /// Per-step, per-component toll increment cap η_max. Default 0.001.
    pub eta_max: f64,
    /// Critical toll thresholds (one per component). Default `[1, 1, 1, 1]`.
    pub toll_thresholds: Vec<f64>,
}

impl Default for SafetySection {
    fn default() -> Self {
        Self { eta_max: default_eta_max(), toll_thresholds: default_toll_thresholds() }
    }
}

/// The full run configuration. Every field has a documented default, so an
/// empty file is a valid config; unknown keys in any section are errors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub emotion: EmotionSection,
    pub reward: ChannelWeights,
    pub selfmod: SelfmodSection,
    pub goals: GoalsSection,
    pub safety: SafetySection,
    pub env: EnvConfig,
}

impl RunConfig {
    /// Parse and validate a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig { reasons: vec![e.to_string()] })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read, parse, and validate a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidConfig {
            reasons: vec![format!("cannot read config {}: {e}", path.display())],
        })?;
        Self::from_toml_str(&text)
    }

    /// Serialize back to TOML (used by `sweep` to snapshot the effective
    /// config next to its traces).
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Structural validation: every reason collected, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut reasons = Vec::new();

        if self.run.warmup_t0 == 0 {
            reasons.push("run.warmup_t0 must be >= 1".to_string());
        }
        if !(self.run.gamma.is_finite() && self.run.gamma >= 0.0) {
            reasons.push(format!("run.gamma must be finite and >= 0, got {}", self.run.gamma));
        }
        if self.run.mi_window < 2 {
            reasons.push(format!("run.mi_window must be >= 2, got {}", self.run.mi_window));
        }
        if self.run.audit_every == 0 {
            reasons.push("run.audit_every must be >= 1".to_string());
        }

        if let Err(Error::InvalidConfig { reasons: r }) = self.emotion.weights().map(|_| ()) {
            reasons.extend(r);
        }
        if !(self.emotion.success_decay > 0.0 && self.emotion.success_decay < 1.0) {
            reasons.push(format!(
                "emotion.success_decay must be in (0,1), got {}",
                self.emotion.success_decay
            ));
        }

        if let Err(Error::InvalidConfig { reasons: r }) = self.reward.validate() {
            reasons.extend(r);
        }
        if let Err(Error::InvalidConfig { reasons: r }) = self.env.validate() {
            reasons.extend(r);
        }

        if !(self.selfmod.eta_m.is_finite() && self.selfmod.eta_m > 0.0) {
            reasons.push(format!("selfmod.eta_m must be > 0, got {}", self.selfmod.eta_m));
        }
        if !(self.selfmod.l_m.is_finite() && self.selfmod.l_m > 0.0) {
            reasons.push(format!("selfmod.l_m must be > 0, got {}", self.selfmod.l_m));
        }
        if self.selfmod.probe_size < 16 {
            reasons.push(format!(
                "selfmod.probe_size must be >= 16, got {}",
                self.selfmod.probe_size
            ));
        }
        if self.selfmod.beta_perturbations == 0 {
            reasons.push("selfmod.beta_perturbations must be >= 1".to_string());
        }

        if !(self.goals.gamma_goal.is_finite() && self.goals.gamma_goal > 0.0) {
            reasons.push(format!("goals.gamma_goal must be > 0, got {}", self.goals.gamma_goal));
        }
        if !(self.goals.p_gen > 0.0 && self.goals.p_gen <= 1.0) {
            reasons.push(format!("goals.p_gen must be in (0,1], got {}", self.goals.p_gen));
        }
        if self.goals.k_rollouts == 0 {
            reasons.push("goals.k_rollouts must be >= 1".to_string());
        }
        if self.goals.preview_pairs == 0 {
            reasons.push("goals.preview_pairs must be >= 1".to_string());
        }
        if self.goals.families == 0 {
            reasons.push("goals.families must be >= 1".to_string());
        }
        if self.goals.goal_probe < 4 {
            reasons.push(format!("goals.goal_probe must be >= 4, got {}", self.goals.goal_probe));
        }

        if !(self.safety.eta_max.is_finite() && self.safety.eta_max > 0.0) {
            reasons.push(format!("safety.eta_max must be > 0, got {}", self.safety.eta_max));
        }
        if self.safety.toll_thresholds.is_empty()
            || self.safety.toll_thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0))
        {
            reasons.push("safety.toll_thresholds must be non-empty and positive".to_string());
        }

        if reasons.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig { reasons })
        }
    }
}
