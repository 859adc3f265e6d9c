//! Meaning metrics: mutual-information estimators, two-part description
//! length, novelty accounting, and the density/efficiency ratios built from
//! them.
//!
//! Two estimation modes exist. The discrete plug-in mode scores a batch of
//! (predictive distribution, outcome) pairs as a variational lower bound:
//! `Î = mean[ln Q(y|h) − ln p(y)]` in nats. The continuous mode fits a
//! Gaussian canonical correlation between a scalar target and a feature
//! vector and reports `−½·ln(1 − ρ²)`.
//!
//! Description length is a two-part code over 8-bit uniformly quantized
//! coordinates: an explicit order-0 frequency-table cost plus the idealized
//! Shannon data cost `Σ −log₂ p̂(symbol)`, which keeps the Kraft sum at
//! exactly 1 and makes bits/symbol converge to the source entropy.

use std::collections::HashSet;

use crate::{Error, Result, DIST_FLOOR};

/// Additive stabilizer in the density/efficiency denominators. Keeping it at
/// 1.0 makes both denominators ≥ 1, which turns the metric bounds
/// (`0 ≤ density < ln|Y|`, `|efficiency| ≤ ln|Y|`) into structural facts.
pub const EPS_DEN: f64 = 1.0;

/// Cap on the continuous-mode estimate, in nats.
pub const I_CAP: f64 = 10.0;

/// Ridge added to the feature covariance diagonal in continuous mode.
pub const RIDGE: f64 = 1e-6;

/// Byte n-gram length used by the novelty counter.
pub const NGRAM: usize = 4;

/// Bits credited per previously unseen n-gram.
pub const BITS_PER_NOVEL_NGRAM: f64 = 8.0;

/// Quantizer resolution for the description-length estimator.
pub const QUANTIZER_LEVELS: u32 = 256;

/// Default quantizer range: coordinates are clipped to ±1 (the feature
/// vectors scored in the loop are tanh activations).
pub const DEFAULT_CLIP_RANGE: f64 = 1.0;

/// Which estimator produced an [`MiEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiMode {
    DiscretePlugin,
    ContinuousGaussian,
}

/// A mutual-information estimate in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    /// Raw estimate. In discrete mode this is a lower bound and may be
    /// negative for a miscalibrated model; its magnitude is clamped at
    /// `ln(1/DIST_FLOOR)`.
    pub value: f64,
    pub n_samples: usize,
    pub mode: MiMode,
    /// Continuous mode only: the input covariance was singular and the
    /// estimate was pinned to zero.
    pub degenerate: bool,
    /// Discrete mode only: the alphabet size, for the [`Self::bounded`] clamp.
    pub num_classes: Option<usize>,
}

impl MiEstimate {
    /// The estimate clamped into `[0, ln|Y|]` — the range true discrete
    /// mutual information lives in. This is the value the density and
    /// efficiency ratios consume.
    pub fn bounded(&self) -> f64 {
        match self.num_classes {
            Some(k) => self.value.clamp(0.0, (k as f64).ln()),
            None => self.value.max(0.0),
        }
    }
}

/// Discrete plug-in lower bound `mean[ln Q(y_i|h_i) − ln p(y_i)]`.
///
/// `batch` pairs each predictive distribution with the realized outcome;
/// `marginal` is the outcome marginal the bound is taken against. Both are
/// floored at [`DIST_FLOOR`] and renormalized. The result is clamped at
/// `±ln(1/DIST_FLOOR)`.
pub fn mi_plugin(batch: &[(Vec<f64>, usize)], marginal: &[f64]) -> Result<MiEstimate> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("mi_plugin batch"));
    }
    let k = marginal.len();
    if k < 2 {
        return Err(Error::InvalidDistribution(
            "marginal needs at least 2 classes".into(),
        ));
    }
    let mut marg = marginal.to_vec();
    crate::metacognition::floor_and_normalize(&mut marg);
    let mut total = 0.0;
    for (dist, label) in batch {
        if dist.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: dist.len() });
        }
        if *label >= k {
            return Err(Error::InvalidDistribution(format!(
                "label {label} out of range for {k} classes"
            )));
        }
        let mut q = dist.clone();
        crate::metacognition::floor_and_normalize(&mut q);
        total += q[*label].ln() - marg[*label].ln();
    }
    let clamp = (1.0 / DIST_FLOOR).ln();
    let value = (total / batch.len() as f64).clamp(-clamp, clamp);
    Ok(MiEstimate {
        value,
        n_samples: batch.len(),
        mode: MiMode::DiscretePlugin,
        degenerate: false,
        num_classes: Some(k),
    })
}

/// Continuous Gaussian canonical-correlation estimate between a feature
/// vector and a scalar target: `−½·ln(1 − ρ²_max)`, capped at [`I_CAP`].
///
/// Needs at least 8 pairs. A singular input (constant target or constant
/// features) yields value 0 with the `degenerate` flag set.
pub fn mi_differential(pairs: &[(Vec<f64>, f64)]) -> Result<MiEstimate> {
    const MIN_PAIRS: usize = 8;
    if pairs.len() < MIN_PAIRS {
        return Err(Error::NotEnoughSamples { got: pairs.len(), need: MIN_PAIRS });
    }
    let d = pairs[0].0.len();
    if d == 0 {
        return Err(Error::EmptyInput("mi_differential features"));
    }
    for (h, _) in pairs {
        if h.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: h.len() });
        }
    }
    let n = pairs.len() as f64;
    let mut mean_h = vec![0.0; d];
    let mut mean_y = 0.0;
    for (h, y) in pairs {
        for (m, x) in mean_h.iter_mut().zip(h) {
            *m += x;
        }
        mean_y += y;
    }
    mean_h.iter_mut().for_each(|m| *m /= n);
    mean_y /= n;

    // Sample covariances (biased normalization; only ratios matter).
    let mut cov_hh = vec![0.0; d * d];
    let mut cov_hy = vec![0.0; d];
    let mut var_y = 0.0;
    for (h, y) in pairs {
        let dy = y - mean_y;
        var_y += dy * dy;
        for i in 0..d {
            let di = h[i] - mean_h[i];
            cov_hy[i] += di * dy;
            for j in i..d {
                cov_hh[i * d + j] += di * (h[j] - mean_h[j]);
            }
        }
    }
    var_y /= n;
    cov_hy.iter_mut().for_each(|x| *x /= n);
    for i in 0..d {
        for j in i..d {
            cov_hh[i * d + j] /= n;
            cov_hh[j * d + i] = cov_hh[i * d + j];
        }
    }

    let trace: f64 = (0..d).map(|i| cov_hh[i * d + i]).sum();
    if var_y < 1e-12 || trace < 1e-12 {
        return Ok(MiEstimate {
            value: 0.0,
            n_samples: pairs.len(),
            mode: MiMode::ContinuousGaussian,
            degenerate: true,
            num_classes: None,
        });
    }
    for i in 0..d {
        cov_hh[i * d + i] += RIDGE;
    }

    // ρ²_max = σ_hyᵀ Σ_hh⁻¹ σ_hy / σ_yy (scalar target ⇒ the canonical
    // correlation is the multiple correlation coefficient).
    let a = solve_spd(&mut cov_hh, &cov_hy, d)?;
    let rho2 = (cov_hy.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>() / var_y)
        .clamp(0.0, 1.0 - 1e-12);
    let value = (-0.5 * (1.0 - rho2).ln()).min(I_CAP);
    Ok(MiEstimate {
        value,
        n_samples: pairs.len(),
        mode: MiMode::ContinuousGaussian,
        degenerate: false,
        num_classes: None,
    })
}

/// Solve `M x = b` for symmetric positive-definite `M` (in place, Gaussian
/// elimination with partial pivoting; dimensions here are ≤ 64).
fn solve_spd(m: &mut [f64], b: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut x = b.to_vec();
    for col in 0..d {
        let mut pivot = col;
        for row in (col + 1)..d {
            if m[row * d + col].abs() > m[pivot * d + col].abs() {
                pivot = row;
            }
        }
        if m[pivot * d + col].abs() < 1e-300 {
            return Err(Error::NonFinite("singular covariance in mi_differential"));
        }
        if pivot != col {
            for j in 0..d {
                m.swap(col * d + j, pivot * d + j);
            }
            x.swap(col, pivot);
        }
        let diag = m[col * d + col];
        for row in (col + 1)..d {
            let factor = m[row * d + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..d {
                m[row * d + j] -= factor * m[col * d + j];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..d).rev() {
        let mut acc = x[col];
        for j in (col + 1)..d {
            acc -= m[col * d + j] * x[j];
        }
        x[col] = acc / m[col * d + col];
    }
    Ok(x)
}

/// Two-part description length of a quantized coordinate vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityEstimate {
    /// Total code length in bits: `model_cost_bits + data_cost_bits`.
    pub bits: f64,
    pub quantizer_levels: u32,
    /// Cost of describing the order-0 frequency table: 8 bits for the
    /// distinct-symbol count plus, per distinct symbol, 8 bits of identity
    /// and `⌈log₂(N+1)⌉` bits of count.
    pub model_cost_bits: f64,
    /// Idealized Shannon cost of the sequence under the table:
    /// `Σ_s count(s) · (−log₂(count(s)/N))`.
    pub data_cost_bits: f64,
}

/// Quantize coordinates to [`QUANTIZER_LEVELS`] uniform levels over
/// `[−clip_range, +clip_range]` (values outside are clipped).
pub fn quantize(h: &[f64], clip_range: f64) -> Vec<u8> {
    let levels = f64::from(QUANTIZER_LEVELS - 1);
    h.iter()
        .map(|&x| {
            let clipped = x.clamp(-clip_range, clip_range);
            (((clipped + clip_range) / (2.0 * clip_range)) * levels).round() as u8
        })
        .collect()
}

/// Two-part description length with the default ±1 quantizer range.
pub fn mdl_complexity(h: &[f64]) -> Result<ComplexityEstimate> {
    mdl_complexity_with_range(h, DEFAULT_CLIP_RANGE)
}

/// Two-part description length over `[−clip_range, clip_range]`.
pub fn mdl_complexity_with_range(h: &[f64], clip_range: f64) -> Result<ComplexityEstimate> {
    if h.is_empty() {
        return Err(Error::EmptyInput("mdl_complexity input"));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("mdl_complexity input"));
    }
    if !(clip_range > 0.0 && clip_range.is_finite()) {
        return Err(Error::NonFinite("mdl_complexity clip range"));
    }
    Ok(mdl_of_bytes(&quantize(h, clip_range)))
}

/// Two-part code length of an explicit byte string.
pub fn mdl_of_bytes(bytes: &[u8]) -> ComplexityEstimate {
    let n = bytes.len();
    let mut counts = [0usize; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    let distinct = counts.iter().filter(|&&c| c > 0).count();
    let count_width = ((n + 1) as f64).log2().ceil();
    let model_cost_bits = 8.0 + distinct as f64 * (8.0 + count_width);
    let data_cost_bits: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -(c as f64) * p.log2()
        })
        .sum();
    ComplexityEstimate {
        bits: model_cost_bits + data_cost_bits,
        quantizer_levels: QUANTIZER_LEVELS,
        model_cost_bits,
        data_cost_bits,
    }
}

/// Kraft sum `Σ_s 2^(−ℓ_s)` of the code implied by a byte string's order-0
/// frequency table. With idealized lengths `ℓ_s = −log₂ p̂(s)` this is
/// exactly 1; the inequality `≤ 1` is what a valid prefix code requires.
pub fn kraft_sum(bytes: &[u8]) -> f64 {
    let n = bytes.len();
    if n == 0 {
        return 0.0;
    }
    let mut counts = [0usize; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let len_bits = -(c as f64 / n as f64).log2();
            2f64.powf(-len_bits)
        })
        .sum()
}

/// Streaming novelty counter over byte n-grams.
///
/// Each observation is credited [`BITS_PER_NOVEL_NGRAM`] bits per n-gram not
/// seen before in the run; the dictionary then absorbs all of the
/// observation's n-grams. Novelty is monotone by construction: a repeated
/// observation scores zero.
#[derive(Debug, Clone, Default)]
pub struct NoveltyCounter {
    seen: HashSet<[u8; NGRAM]>,
    /// Largest single-step novelty observed so far, in bits.
    pub max_step_bits: f64,
    /// Total novelty accumulated over the run, in bits.
    pub total_bits: f64,
}

impl NoveltyCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Score `obs` and absorb its n-grams. Returns the step novelty in bits
    /// (zero for observations shorter than [`NGRAM`]).
    pub fn observe(&mut self, obs: &[u8]) -> f64 {
        if obs.len() < NGRAM {
            return 0.0;
        }
        let mut fresh = 0usize;
        for window in obs.windows(NGRAM) {
            let gram: [u8; NGRAM] = window.try_into().expect("window length fixed");
            if self.seen.insert(gram) {
                fresh += 1;
            }
        }
        let bits = BITS_PER_NOVEL_NGRAM * fresh as f64;
        self.max_step_bits = self.max_step_bits.max(bits);
        self.total_bits += bits;
        bits
    }

    pub fn dictionary_len(&self) -> usize {
        self.seen.len()
    }
}

/// Meaning density: bounded information per bit of description length,
/// `max(Î, 0) / (K_bits·ln2 + EPS_DEN)` (the numerator additionally clamped
/// at `ln|Y|` in discrete mode).
///
/// With `EPS_DEN = 1` the denominator is ≥ 1, so `0 ≤ density < ln|Y|`
/// structurally.
pub fn meaning_density(i_est: &MiEstimate, k_est: &ComplexityEstimate) -> f64 {
    i_est.bounded() / (k_est.bits * std::f64::consts::LN_2 + EPS_DEN)
}

/// Meaning-conversion efficiency: information gained per bit of novelty,
/// `(Î_next − Î_prev) / (Δs_bits·ln2 + EPS_DEN)` with both estimates taken
/// through their bounded form. `|efficiency| ≤ ln|Y|` structurally.
pub fn conversion_efficiency(
    i_next: &MiEstimate,
    i_prev: &MiEstimate,
    delta_s_bits: f64,
) -> f64 {
    (i_next.bounded() - i_prev.bounded())
        / (delta_s_bits.max(0.0) * std::f64::consts::LN_2 + EPS_DEN)
}

/// Exhaustive plug-in check of the information decomposition
/// `I(X;Y) = I(X;H) − I(X;H|Y)` on discrete triples; returns the absolute
/// residual. Refuses joint alphabets above 16³ cells.
pub fn ib_residual(samples: &[(usize, usize, usize)]) -> Result<f64> {
    const MAX_CELLS: usize = 16 * 16 * 16;
    if samples.is_empty() {
        return Err(Error::EmptyInput("ib_residual samples"));
    }
    let nx = samples.iter().map(|s| s.0).max().unwrap() + 1;
    let nh = samples.iter().map(|s| s.1).max().unwrap() + 1;
    let ny = samples.iter().map(|s| s.2).max().unwrap() + 1;
    let cells = nx * nh * ny;
    if cells > MAX_CELLS {
        return Err(Error::AlphabetTooLarge { cells, max: MAX_CELLS });
    }
    let n = samples.len() as f64;
    let mut joint = vec![0.0; cells];
    for &(x, h, y) in samples {
        joint[(x * nh + h) * ny + y] += 1.0 / n;
    }
    let p = |x: usize, h: usize, y: usize| joint[(x * nh + h) * ny + y];

    let mut px = vec![0.0; nx];
    let mut ph = vec![0.0; nh];
    let mut py = vec![0.0; ny];
    let mut pxy = vec![0.0; nx * ny];
    let mut pxh = vec![0.0; nx * nh];
    let mut phy = vec![0.0; nh * ny];
    for x in 0..nx {
        for h in 0..nh {
            for y in 0..ny {
                let v = p(x, h, y);
                px[x] += v;
                ph[h] += v;
                py[y] += v;
                pxy[x * ny + y] += v;
                pxh[x * nh + h] += v;
                phy[h * ny + y] += v;
            }
        }
    }

    let mut i_xy = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let v = pxy[x * ny + y];
            if v > 0.0 {
                i_xy += v * (v / (px[x] * py[y])).ln();
            }
        }
    }
    let mut i_xh = 0.0;
    for x in 0..nx {
        for h in 0..nh {
            let v = pxh[x * nh + h];
            if v > 0.0 {
                i_xh += v * (v / (px[x] * ph[h])).ln();
            }
        }
    }
    // I(X;H|Y) = Σ_y p(y) · I(X;H | Y=y).
    let mut i_xh_given_y = 0.0;
    for y in 0..ny {
        if py[y] == 0.0 {
            continue;
        }
        for x in 0..nx {
            for h in 0..nh {
                let v = p(x, h, y);
                if v > 0.0 {
                    // p(x|y), p(h|y), p(x,h|y)
                    let pxy_c = pxy[x * ny + y] / py[y];
                    let phy_c = phy[h * ny + y] / py[y];
                    let v_c = v / py[y];
                    i_xh_given_y += v * (v_c / (pxy_c * phy_c)).ln();
                }
            }
        }
    }
    Ok((i_xy - i_xh + i_xh_given_y).abs())
}
