//! Mapping from a prediction outcome to the metacognitive state vector.
//!
//! Confidence comes from the normalized entropy of the predictive
//! distribution, error from the probability mass missed on the true label,
//! novelty from the KL divergence between the prediction and the agent's
//! prior belief, and success memory from a decayed accumulation of external
//! reward. All distributions are floored at [`crate::DIST_FLOOR`] and
//! renormalized before any logarithm is taken.

use crate::emotion::{MetaVector, S_CAP};
use crate::{Error, Result, DIST_FLOOR};

/// How the confidence component is derived from the predictive distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConfidenceMode {
    /// `c = 1 − H(pred)/ln|Y|` (default).
    #[default]
    Entropy,
    /// `c = top1 − top2` probability margin.
    Margin,
}

/// A single prediction outcome: predictive distribution, realized label,
/// and the prior belief the prediction is compared against.
///
/// Construction validates both distributions (nonnegative, summing to 1
/// within 1e−9) and then floors + renormalizes them, so every stored entry
/// is at least [`DIST_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    predictive: Vec<f64>,
    true_label: usize,
    prior: Vec<f64>,
}

impl PredictionRecord {
    pub fn new(predictive: Vec<f64>, true_label: usize, prior: Vec<f64>) -> Result<Self> {
        if predictive.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 classes, got {}",
                predictive.len()
            )));
        }
        if prior.len() != predictive.len() {
            return Err(Error::DimensionMismatch {
                expected: predictive.len(),
                got: prior.len(),
            });
        }
        if true_label >= predictive.len() {
            return Err(Error::InvalidDistribution(format!(
                "label {} out of range for {} classes",
                true_label,
                predictive.len()
            )));
        }
        let mut rec = Self { predictive, true_label, prior };
        validate_distribution(&rec.predictive)?;
        validate_distribution(&rec.prior)?;
        floor_and_normalize(&mut rec.predictive);
        floor_and_normalize(&mut rec.prior);
        Ok(rec)
    }

    pub fn predictive(&self) -> &[f64] {
        &self.predictive
    }

    pub fn true_label(&self) -> usize {
        self.true_label
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }
}

fn validate_distribution(p: &[f64]) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidDistribution(
            "entries must be finite and nonnegative".into(),
        ));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "sums to {sum}, expected 1 within 1e-9"
        )));
    }
    Ok(())
}

/// Floor every entry at [`DIST_FLOOR`] and renormalize to sum 1.
pub fn floor_and_normalize(p: &mut [f64]) {
    for x in p.iter_mut() {
        if *x < DIST_FLOOR {
            *x = DIST_FLOOR;
        }
    }
    let sum: f64 = p.iter().sum();
    for x in p.iter_mut() {
        *x /= sum;
    }
}

/// Shannon entropy in nats. Inputs are assumed floored (no zero entries).
pub fn entropy_nats(p: &[f64]) -> f64 {
    -p.iter().map(|&x| x * x.ln()).sum::<f64>()
}

/// KL divergence `KL(p ‖ q)` in nats. Inputs are assumed floored.
pub fn kl_nats(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Map a prediction outcome to the next metacognitive state.
///
/// * confidence `c` per [`ConfidenceMode`],
/// * error `e = 1 − pred[true_label]`,
/// * novelty `n = 1 − exp(−KL(pred ‖ prior))`,
/// * success memory carried over from `prev` (updated separately by
///   [`success_update`]).
///
/// The result is clamped into the invariant box by the [`MetaVector`]
/// constructor.
pub fn lambda_map(rec: &PredictionRecord, prev: &MetaVector, mode: ConfidenceMode) -> MetaVector {
    let p = rec.predictive();
    let k = p.len() as f64;
    let c = match mode {
        ConfidenceMode::Entropy => 1.0 - entropy_nats(p) / k.ln(),
        ConfidenceMode::Margin => {
            let (top1, top2) = top_two(p);
            top1 - top2
        }
    };
    let e = 1.0 - p[rec.true_label()];
    let n = 1.0 - (-kl_nats(p, rec.prior())).exp();
    MetaVector::new(c, e, n, prev.s)
}

fn top_two(p: &[f64]) -> (f64, f64) {
    let mut top1 = f64::NEG_INFINITY;
    let mut top2 = f64::NEG_INFINITY;
    for &x in p {
        if x > top1 {
            top2 = top1;
            top1 = x;
        } else if x > top2 {
            top2 = x;
        }
    }
    (top1, top2)
}

/// Decayed success-memory update: `clamp(decay·s + r_ext, 0, S_CAP)`.
pub fn success_update(s: f64, r_ext: f64, decay: f64) -> f64 {
    (decay * s + r_ext).clamp(0.0, S_CAP)
}

/// Error component for scalar regression targets: `|ŷ − y|` clamped to [0, 1].
pub fn continuous_error(y_hat: f64, y: f64) -> f64 {
    (y_hat - y).abs().clamp(0.0, 1.0)
}
