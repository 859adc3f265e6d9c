//! Safety state: the regulatory toll vector, the safe external-mixing
//! radius, buffer-weight caps, and the periodic invariant-region audit.
//!
//! The toll vector is a set of abstract nonnegative counters seeded at 5% of
//! their critical thresholds; every per-step increment is capped at
//! `eta_max` per component. Because increments are bounded, the toll's ℓ₁
//! growth admits an Azuma-style `O(√log T)` envelope, and the audit checks
//! the realized value against it.
//!
//! The audit is a conjunction of four checks — post-clip gradient norms,
//! toll envelope, mixing weight under the safe radius, and buffer-weight
//! caps — and its result is the `in_region` flag recorded in the trace.

use crate::{Error, Result};

/// Toll dimension.
pub const TOLL_DIM: usize = 4;

/// Default per-step, per-component toll increment cap.
///
/// Kept small (1e−2) so the concentration envelope over long runs is tight
/// enough to be meaningful; event-driven increments in the loop are far
/// below it.
pub const DEFAULT_ETA_MAX: f64 = 0.01;

/// Fraction of the critical thresholds used to seed the toll.
pub const TOLL_SEED_FRACTION: f64 = 0.05;

/// Explicit constant on the ℓ₁ deviation envelope.
pub const ENVELOPE_FACTOR: f64 = 3.0;

/// Initial external-oversight violation rate. Stored and reported; drives no
/// dynamics here.
pub const DEFAULT_L0_EXT: f64 = 0.02;

/// Toll increment applied per flagged safety-relevant event in the run loop.
pub const EVENT_INCREMENT: f64 = 5e-7;

/// Nonnegative regulatory counters with capped increments.
#[derive(Debug, Clone, PartialEq)]
pub struct TollVector {
    /// Current counter values.
    pub m: Vec<f64>,
    /// Per-step, per-component increment cap.
    pub eta_max: f64,
    /// Critical thresholds (define the seeding level).
    pub thresholds: Vec<f64>,
    /// Number of updates applied (the T in the envelope).
    pub updates: u64,
    m0_l1: f64,
}

impl TollVector {
    /// Seed the toll at [`TOLL_SEED_FRACTION`] of the thresholds.
    pub fn new(thresholds: Vec<f64>, eta_max: f64) -> Result<Self> {
        let mut reasons = Vec::new();
        if thresholds.is_empty() {
            reasons.push("toll thresholds must be non-empty".to_string());
        }
        if thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            reasons.push("toll thresholds must be finite and positive".to_string());
        }
        if !(eta_max.is_finite() && eta_max > 0.0) {
            reasons.push(format!("eta_max must be positive, got {eta_max}"));
        }
        if !reasons.is_empty() {
            return Err(Error::InvalidConfig { reasons });
        }
        let m: Vec<f64> = thresholds.iter().map(|t| TOLL_SEED_FRACTION * t).collect();
        let m0_l1 = m.iter().sum();
        Ok(Self { m, eta_max, thresholds, updates: 0, m0_l1 })
    }

    /// Default 4-dimensional toll with unit thresholds.
    pub fn standard() -> Self {
        Self::new(vec![1.0; TOLL_DIM], DEFAULT_ETA_MAX).expect("standard toll is valid")
    }

    /// Apply one increment vector. Every component must lie in
    /// `[0, eta_max]`; a zero vector is a valid (and typical) update.
    pub fn update(&mut self, eta: &[f64]) -> Result<()> {
        if eta.len() != self.m.len() {
            return Err(Error::DimensionMismatch { expected: self.m.len(), got: eta.len() });
        }
        for &e in eta {
            if !(e.is_finite() && (0.0..=self.eta_max).contains(&e)) {
                return Err(Error::TollOutOfRange { value: e, eta_max: self.eta_max });
            }
        }
        for (m, e) in self.m.iter_mut().zip(eta) {
            *m += e;
        }
        self.updates += 1;
        Ok(())
    }

    pub fn l1(&self) -> f64 {
        self.m.iter().sum()
    }

    /// ℓ₁ of the seeded toll.
    pub fn initial_l1(&self) -> f64 {
        self.m0_l1
    }

    /// Deviation envelope after `t` updates:
    /// `ENVELOPE_FACTOR · √(d · eta_max² · ln(max(t,2)) / 2)`.
    pub fn envelope(&self, t: u64) -> f64 {
        let d = self.m.len() as f64;
        let log_t = (t.max(2) as f64).ln();
        ENVELOPE_FACTOR * (d * self.eta_max * self.eta_max * log_t / 2.0).sqrt()
    }

    /// Whether the current ℓ₁ sits inside the envelope around its seed.
    pub fn within_envelope(&self) -> bool {
        self.l1() <= self.m0_l1 + self.envelope(self.updates)
    }
}

/// Safe external-mixing radius `α⋆ = γ/(2·k_max)`.
pub fn safe_alpha(gamma_est: f64, k_max: f64) -> Result<f64> {
    if !(gamma_est.is_finite() && gamma_est > 0.0) {
        return Err(Error::NonFinite("safe_alpha needs gamma_est > 0"));
    }
    if !(k_max.is_finite() && k_max > 0.0) {
        return Err(Error::NonFinite("safe_alpha needs k_max > 0"));
    }
    Ok(gamma_est / (2.0 * k_max))
}

/// Buffer-weight caps: both the delayed-gratification and baseline weights
/// are capped at `γ·k_max/4`.
pub fn buffer_caps(gamma_est: f64, k_max: f64) -> (f64, f64) {
    let cap = (gamma_est * k_max / 4.0).max(0.0);
    (cap, cap)
}

/// Frozen per-run safety parameters plus the latest audit verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyState {
    pub k_max: f64,
    pub alpha: f64,
    pub alpha_star: f64,
    pub l0_ext: f64,
    /// Caps on (ξ_DG, ξ_BL).
    pub xi_caps: (f64, f64),
    /// Effective (possibly clamped) ξ_DG and ξ_BL in force.
    pub xi_effective: (f64, f64),
    pub in_region: bool,
}

impl SafetyState {
    /// Validate the mixing weight against the safe radius and clamp buffer
    /// weights to their caps. Returns the state plus human-readable warnings
    /// for any clamps applied. `alpha ≥ alpha_star` is a hard error — the
    /// inequality is strict.
    pub fn initialize(
        k_max: f64,
        alpha: f64,
        gamma_est: f64,
        xi_dg: f64,
        xi_bl: f64,
    ) -> Result<(Self, Vec<String>)> {
        let alpha_star = safe_alpha(gamma_est, k_max)?;
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidConfig {
                reasons: vec![format!("alpha must be finite and >= 0, got {alpha}")],
            });
        }
        if alpha >= alpha_star {
            return Err(Error::InvalidConfig {
                reasons: vec![format!(
                    "alpha {alpha} is not strictly below the safe radius alpha_star \
                     {alpha_star} (= gamma {gamma_est} / (2 * k_max {k_max}))"
                )],
            });
        }
        let caps = buffer_caps(gamma_est, k_max);
        let mut warnings = Vec::new();
        let eff_dg = if xi_dg > caps.0 {
            warnings.push(format!("xi_dg {xi_dg} clamped to buffer cap {}", caps.0));
            caps.0
        } else {
            xi_dg
        };
        let eff_bl = if xi_bl > caps.1 {
            warnings.push(format!("xi_bl {xi_bl} clamped to buffer cap {}", caps.1));
            caps.1
        } else {
            xi_bl
        };
        Ok((
            Self {
                k_max,
                alpha,
                alpha_star,
                l0_ext: DEFAULT_L0_EXT,
                xi_caps: caps,
                xi_effective: (eff_dg, eff_bl),
                in_region: true,
            },
            warnings,
        ))
    }
}

/// One clip observation for the audit: the post-clip gradient norm and the
/// threshold that was in force at that step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipSample {
    pub norm_post: f64,
    pub k_max: f64,
}

/// Result of one invariant-region audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantReport {
    /// (a) every post-clip norm in the window was ≤ its threshold.
    pub clip_ok: bool,
    /// (b) the toll ℓ₁ sits within its envelope.
    pub toll_ok: bool,
    /// (c) α is strictly below α⋆.
    pub alpha_ok: bool,
    /// (d) effective buffer weights are within their caps.
    pub caps_ok: bool,
    /// Conjunction of the four checks.
    pub in_region: bool,
    /// Largest (norm − k_max) seen; ≤ 0 when clip_ok.
    pub worst_clip_excess: f64,
    pub toll_l1: f64,
    pub toll_bound: f64,
}

impl InvariantReport {
    /// Key-value lines for the run report.
    pub fn summary_lines(&self) -> Vec<String> {
        vec![
            format!("audit.clip_ok = {}", self.clip_ok),
            format!("audit.toll_ok = {}", self.toll_ok),
            format!("audit.alpha_ok = {}", self.alpha_ok),
            format!("audit.caps_ok = {}", self.caps_ok),
            format!("audit.in_region = {}", self.in_region),
            format!("audit.worst_clip_excess = {:.3e}", self.worst_clip_excess),
            format!("audit.toll_l1 = {:.8e}", self.toll_l1),
            format!("audit.toll_bound = {:.8e}", self.toll_bound),
        ]
    }
}

/// Audit the invariant region over a window of clip observations plus the
/// current toll and safety state. An empty window leaves check (a) passing.
pub fn audit(window: &[ClipSample], state: &SafetyState, toll: &TollVector) -> InvariantReport {
    let mut worst = f64::NEG_INFINITY;
    for s in window {
        worst = worst.max(s.norm_post - s.k_max);
    }
    if window.is_empty() {
        worst = 0.0;
    }
    let clip_ok = worst <= 0.0;
    let toll_bound = toll.initial_l1() + toll.envelope(toll.updates);
    let toll_l1 = toll.l1();
    let toll_ok = toll_l1 <= toll_bound;
    let alpha_ok = state.alpha < state.alpha_star;
    let caps_ok =
        state.xi_effective.0 <= state.xi_caps.0 + 1e-12 && state.xi_effective.1 <= state.xi_caps.1 + 1e-12;
    InvariantReport {
        clip_ok,
        toll_ok,
        alpha_ok,
        caps_ok,
        in_region: clip_ok && toll_ok && alpha_ok && caps_ok,
        worst_clip_excess: worst,
        toll_l1,
        toll_bound,
    }
}

/// Fraction of samples strictly above a threshold.
pub fn exceedance_rate(samples: &[f64], threshold: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&x| x > threshold).count() as f64 / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn toll_seeds_at_five_percent() {
        let toll = TollVector::standard();
        assert_eq!(toll.m, vec![0.05; 4]);
        assert_relative_eq!(toll.initial_l1(), 0.2, epsilon = 1e-12);
        assert_eq!(toll.updates, 0);
    }

    #[test]
    fn toll_update_vector_add() {
        let mut toll = TollVector::new(vec![1.0, 1.0], 0.1).unwrap();
        toll.m = vec![0.1, 0.2];
        toll.update(&[0.05, 0.0]).unwrap();
        assert_relative_eq!(toll.m[0], 0.15, epsilon = 1e-12);
        assert_relative_eq!(toll.m[1], 0.2, epsilon = 1e-12);
        let before = toll.m.clone();
        toll.update(&[0.0, 0.0]).unwrap();
        assert_eq!(toll.m, before);
        assert_eq!(toll.updates, 2);
    }

    #[test]
    fn toll_update_rejects_out_of_range() {
        let mut toll = TollVector::new(vec![1.0, 1.0], 0.1).unwrap();
        assert!(matches!(
            toll.update(&[0.11, 0.0]),
            Err(Error::TollOutOfRange { .. })
        ));
        assert!(toll.update(&[-0.01, 0.0]).is_err());
        assert!(toll.update(&[0.05]).is_err()); // dimension mismatch
        assert_eq!(toll.updates, 0);
    }

    #[test]
    fn toll_envelope_grows_like_sqrt_log() {
        let toll = TollVector::standard();
        let e100 = toll.envelope(100);
        let e10000 = toll.envelope(10_000);
        assert!(e10000 > e100);
        assert_relative_eq!(
            e10000 / e100,
            (10_000f64.ln() / 100f64.ln()).sqrt(),
            epsilon = 1e-12
        );
        // t below 2 is floored so the envelope is always positive.
        assert!(toll.envelope(0) > 0.0);
    }

    #[test]
    fn toll_event_rate_stays_within_envelope() {
        // Sparse event increments (the loop's regime): far inside the bound.
        let mut toll = TollVector::standard();
        let mut rng = crate::rng::stream(31, 96);
        for _ in 0..10_000 {
            let eta: Vec<f64> = (0..4)
                .map(|_| if rng.random::<f64>() < 0.02 { EVENT_INCREMENT } else { 0.0 })
                .collect();
            toll.update(&eta).unwrap();
        }
        assert!(toll.within_envelope());
        // Saturated increments blow straight through it.
        let mut toll = TollVector::standard();
        for _ in 0..10_000 {
            toll.update(&[DEFAULT_ETA_MAX; 4]).unwrap();
        }
        assert!(!toll.within_envelope());
    }

    #[test]
    fn toll_component_hoeffding_envelope() {
        // One component, i.i.d. uniform [0, η] increments over T steps:
        // P(|m_T − E m_T| > u) ≤ 2·exp(−2u²/(T·η²)). Checked at u = 3σ,
        // where the right side is still a non-vacuous 0.45.
        let eta = DEFAULT_ETA_MAX;
        let t = 5000;
        let trials = 1000;
        let sigma = eta * (t as f64 / 12.0).sqrt();
        let u = 3.0 * sigma;
        let bound = 2.0 * (-2.0 * u * u / (t as f64 * eta * eta)).exp();
        assert!(bound < 0.5, "test would be vacuous: bound {bound}");

        let mut rng = crate::rng::stream(32, 97);
        let expected = t as f64 * eta / 2.0;
        let mut hits = 0;
        for _ in 0..trials {
            let sum: f64 = (0..t).map(|_| rng.random_range(0.0..eta)).sum();
            if (sum - expected).abs() > u {
                hits += 1;
            }
        }
        let empirical = hits as f64 / trials as f64;
        assert!(
            empirical <= bound,
            "empirical {empirical} above Hoeffding bound {bound}"
        );
    }

    #[test]
    fn safe_alpha_arithmetic() {
        assert_relative_eq!(safe_alpha(0.4, 2.0).unwrap(), 0.1, epsilon = 1e-12);
        assert_relative_eq!(safe_alpha(1.0, 0.5).unwrap(), 1.0, epsilon = 1e-12);
        assert!(safe_alpha(0.0, 2.0).is_err());
        assert!(safe_alpha(0.4, 0.0).is_err());
    }

    #[test]
    fn buffer_caps_arithmetic() {
        let (dg, bl) = buffer_caps(0.4, 2.0);
        assert_relative_eq!(dg, 0.2, epsilon = 1e-12);
        assert_relative_eq!(bl, 0.2, epsilon = 1e-12);
        let (dg, bl) = buffer_caps(0.0, 2.0);
        assert_eq!((dg, bl), (0.0, 0.0));
    }

    #[test]
    fn initialize_enforces_strict_radius() {
        // α exactly at α⋆ fails; just below passes.
        let err = SafetyState::initialize(2.0, 0.1, 0.4, 0.0, 0.0);
        assert!(err.is_err());
        let (state, warnings) = SafetyState::initialize(2.0, 0.0999, 0.4, 0.1, 0.1).unwrap();
        assert!(warnings.is_empty());
        assert_relative_eq!(state.alpha_star, 0.1, epsilon = 1e-12);
        assert_eq!(state.l0_ext, DEFAULT_L0_EXT);
        assert!(state.in_region);
    }

    #[test]
    fn initialize_clamps_buffer_weights() {
        // Caps = 0.4·2/4 = 0.2; ξ_BL = 0.3 is clamped with a warning.
        let (state, warnings) = SafetyState::initialize(2.0, 0.05, 0.4, 0.1, 0.3).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("xi_bl"));
        assert_relative_eq!(state.xi_effective.1, 0.2, epsilon = 1e-12);
        assert_relative_eq!(state.xi_effective.0, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn audit_fresh_state_is_in_region() {
        let (state, _) = SafetyState::initialize(2.0, 0.05, 0.4, 0.1, 0.1).unwrap();
        let toll = TollVector::standard();
        let report = audit(&[], &state, &toll);
        assert!(report.in_region);
        assert!(report.clip_ok && report.toll_ok && report.alpha_ok && report.caps_ok);
        assert_eq!(report.worst_clip_excess, 0.0);
    }

    #[test]
    fn audit_flags_clip_violation() {
        let (state, _) = SafetyState::initialize(2.0, 0.05, 0.4, 0.1, 0.1).unwrap();
        let toll = TollVector::standard();
        let window = [
            ClipSample { norm_post: 1.9, k_max: 2.0 },
            ClipSample { norm_post: 2.5, k_max: 2.0 },
        ];
        let report = audit(&window, &state, &toll);
        assert!(!report.clip_ok);
        assert!(!report.in_region);
        assert_relative_eq!(report.worst_clip_excess, 0.5, epsilon = 1e-12);
        // Other checks unaffected.
        assert!(report.toll_ok && report.alpha_ok && report.caps_ok);
    }

    #[test]
    fn audit_accepts_enveloped_toll_growth() {
        let (state, _) = SafetyState::initialize(2.0, 0.05, 0.4, 0.1, 0.1).unwrap();
        let mut toll = TollVector::standard();
        for _ in 0..20 {
            toll.update(&[EVENT_INCREMENT, 0.0, 0.0, 0.0]).unwrap();
        }
        let report = audit(&[], &state, &toll);
        assert!(report.toll_ok);
        assert!(report.in_region);
        assert_relative_eq!(report.toll_l1, 0.2 + 20.0 * EVENT_INCREMENT, epsilon = 1e-12);
    }

    #[test]
    fn exceedance_rate_counts_strictly_above() {
        assert_eq!(exceedance_rate(&[1.0, 2.0, 3.0], 2.0), 1.0 / 3.0);
        assert_eq!(exceedance_rate(&[], 0.0), 0.0);
    }

    #[test]
    fn summary_lines_cover_all_checks() {
        let (state, _) = SafetyState::initialize(2.0, 0.05, 0.4, 0.1, 0.1).unwrap();
        let toll = TollVector::standard();
        let lines = audit(&[], &state, &toll).summary_lines();
        assert_eq!(lines.len(), 8);
        assert!(lines.iter().any(|l| l.contains("in_region = true")));
    }
}
