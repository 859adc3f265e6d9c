//! Per-step reward composition.
//!
//! The scalar reward is an itemized sum: base potential, event-channel
//! spikes, a misinformation penalty, a delayed-gratification bonus driven by
//! an eligibility trace, a Bernoulli baseline bonus, tanh-squashed density
//! and efficiency bonuses, and an externally mixed reward. Every item is
//! recorded separately and the total is their exact fixed-order sum, so the
//! itemization can be audited bit-for-bit from the trace.
//!
//! All shaping terms are additive on the per-step reward sample; the base
//! potential function itself is never mutated, which keeps its gradient
//! analytic and the clipping guarantees meaningful.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of positive event-spike channels.
pub const SPIKE_CHANNELS: usize = 5;

/// Weights for every reward channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelWeights {
    /// Per-channel spike weights ξ_k (transmission success, misunderstanding
    /// repair, self-error recognition, semantic-structure discovery,
    /// co-creation). Default 0.2 each.
    pub xi_spike: [f64; SPIKE_CHANNELS],
    /// Misinformation penalty magnitude ξ₋ > 0. Default 0.5.
    pub xi_penalty: f64,
    /// Delayed-gratification bonus weight ξ_DG. Default 0.1.
    pub xi_dg: f64,
    /// Baseline bonus magnitude ξ_BL. Default 0.3.
    pub xi_bl: f64,
    /// Density bonus weight ξ_MD. Default 0.7.
    pub xi_md: f64,
    /// Efficiency bonus weight ξ_MCE. Default 1.0.
    pub xi_mce: f64,
    /// External reward mixing weight α. Default 0.1.
    pub alpha: f64,
    /// Baseline bonus probability p_b. Default 0.05.
    pub p_b: f64,
    /// Eligibility-trace decay λ_DG ∈ [0,1). Default 0.8.
    pub lambda_dg: f64,
}

impl Default for ChannelWeights {
    fn default() -> Self {
        Self {
            xi_spike: [0.2; SPIKE_CHANNELS],
            xi_penalty: 0.5,
            xi_dg: 0.1,
            xi_bl: 0.3,
            xi_md: 0.7,
            xi_mce: 1.0,
            alpha: 0.1,
            p_b: 0.05,
            lambda_dg: 0.8,
        }
    }
}

impl ChannelWeights {
    /// Structural validation (finiteness, signs, probability ranges). The
    /// run-level caps that depend on the estimated payoff slope are enforced
    /// separately at run initialization.
    pub fn validate(&self) -> Result<()> {
        let mut reasons = Vec::new();
        for (i, xi) in self.xi_spike.iter().enumerate() {
            if !(xi.is_finite() && *xi >= 0.0) {
                reasons.push(format!("xi_spike[{i}] must be finite and >= 0, got {xi}"));
            }
        }
        if !(self.xi_penalty.is_finite() && self.xi_penalty > 0.0) {
            reasons.push(format!("xi_penalty must be > 0, got {}", self.xi_penalty));
        }
        for (name, v) in [
            ("xi_dg", self.xi_dg),
            ("xi_bl", self.xi_bl),
            ("xi_md", self.xi_md),
            ("xi_mce", self.xi_mce),
            ("alpha", self.alpha),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                reasons.push(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.p_b) {
            reasons.push(format!("p_b must be in [0,1], got {}", self.p_b));
        }
        if !(0.0..1.0).contains(&self.lambda_dg) {
            reasons.push(format!("lambda_dg must be in [0,1), got {}", self.lambda_dg));
        }
        if reasons.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig { reasons })
        }
    }
}

/// Event flags for one step: five positive spike channels plus the
/// misinformation/hoarding penalty flag.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpikeFlags {
    pub transmission: bool,
    pub repair: bool,
    pub self_error: bool,
    pub semantic: bool,
    pub co_creation: bool,
    pub misinformation: bool,
}

impl SpikeFlags {
    pub fn channels(&self) -> [bool; SPIKE_CHANNELS] {
        [
            self.transmission,
            self.repair,
            self.self_error,
            self.semantic,
            self.co_creation,
        ]
    }

    pub fn any(&self) -> bool {
        self.channels().iter().any(|&f| f) || self.misinformation
    }
}

/// Weighted spike sum and penalty for one step's event flags.
pub fn event_spikes(flags: SpikeFlags, w: &ChannelWeights) -> (f64, f64) {
    let spikes = flags
        .channels()
        .iter()
        .zip(&w.xi_spike)
        .map(|(&flag, xi)| if flag { *xi } else { 0.0 })
        .sum();
    let penalty = if flags.misinformation { -w.xi_penalty } else { 0.0 };
    (spikes, penalty)
}

/// Decayed eligibility trace for delayed gratification.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EligibilityTrace {
    pub z: f64,
    pub z_prev: f64,
}

impl EligibilityTrace {
    /// Advance the trace with the step's base potential and return the
    /// bonus: `z' = λ_DG·z + f`, bonus `= ξ_DG·(z' − z)`.
    pub fn update(&mut self, f_now: f64, w: &ChannelWeights) -> f64 {
        self.z_prev = self.z;
        self.z = w.lambda_dg * self.z + f_now;
        w.xi_dg * (self.z - self.z_prev)
    }
}

/// Baseline bonus: ξ_BL when the uniform draw lands under p_b, else 0.
pub fn baseline_bonus(rng_draw: f64, w: &ChannelWeights) -> f64 {
    if rng_draw < w.p_b {
        w.xi_bl
    } else {
        0.0
    }
}

/// tanh-squashed density and efficiency bonuses. Saturation bounds the
/// contributions at ±ξ_MD and ±ξ_MCE regardless of the raw metric values.
pub fn md_mce_bonus(md: f64, mce: f64, w: &ChannelWeights) -> (f64, f64) {
    (w.xi_md * md.tanh(), w.xi_mce * mce.tanh())
}

/// One step's itemized reward. `total` is the exact fixed-order sum of the
/// other eight fields.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RewardBreakdown {
    pub base_f: f64,
    pub spikes: f64,
    pub penalty: f64,
    pub dg_bonus: f64,
    pub baseline_bonus: f64,
    pub md_bonus: f64,
    pub mce_bonus: f64,
    pub external_mixed: f64,
    pub total: f64,
}

impl RewardBreakdown {
    /// Re-sum the parts in the canonical order. Equals `total` bit-exactly
    /// for any breakdown produced by [`compose`].
    pub fn resum(&self) -> f64 {
        self.base_f
            + self.spikes
            + self.penalty
            + self.dg_bonus
            + self.baseline_bonus
            + self.md_bonus
            + self.mce_bonus
            + self.external_mixed
    }
}

/// Compose the step reward from pre-computed parts, mixing the external
/// reward at weight α. Rejects `|r_ext| > r_max`.
#[allow(clippy::too_many_arguments)]
pub fn compose(
    base_f: f64,
    spikes: f64,
    penalty: f64,
    dg_bonus: f64,
    baseline_bonus: f64,
    md_bonus: f64,
    mce_bonus: f64,
    r_ext: f64,
    r_max: f64,
    w: &ChannelWeights,
) -> Result<RewardBreakdown> {
    if !(r_ext.is_finite() && r_ext.abs() <= r_max) {
        return Err(Error::RewardOutOfRange { value: r_ext, bound: r_max });
    }
    let external_mixed = w.alpha * r_ext;
    let mut out = RewardBreakdown {
        base_f,
        spikes,
        penalty,
        dg_bonus,
        baseline_bonus,
        md_bonus,
        mce_bonus,
        external_mixed,
        total: 0.0,
    };
    out.total = out.resum();
    Ok(out)
}
