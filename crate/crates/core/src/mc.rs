//! Monte Carlo over `PD(θ)` by GEM stick-breaking, and self-normalized
//! importance sampling for the tilted law `π ∝ exp(σ φ₂) PD(θ)`.
//!
//! Every draw `i` uses its own ChaCha8 stream `(root seed, stream i)`, so
//! results are bit-identical for a given seed no matter how many worker
//! threads run. Reductions happen over the ordered per-sample vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_domain, PdovError, Result};
use crate::ldp::{metric_d, uniform_config, Configuration};
use crate::tilted::SelectionSpec;

/// Default residual-mass target: truncation bias of `H₂` is at most `ε²`.
pub const DEFAULT_EPSILON: f64 = 1e-8;
/// Stick count at which a draw is abandoned as pathological.
pub const MAX_STICKS: usize = 10_000_000;
/// Minimum sample count for estimators.
pub const MIN_SAMPLES: usize = 1000;
/// Minimum sample count for histograms.
pub const MIN_HISTOGRAM_SAMPLES: usize = 10_000;
/// Effective sample size below which an estimate is flagged degenerate.
pub const ESS_WARNING: f64 = 50.0;

/// RNG for stream `index` under `root`.
pub fn stream_rng(root: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(index);
    rng
}

/// One truncated GEM draw.
#[derive(Debug, Clone, PartialEq)]
pub struct GemSample {
    pub theta: f64,
    /// Beta(1, θ) stick fractions `U_i`.
    pub sticks: Vec<f64>,
    /// `V_i = (1-U_1)⋯(1-U_{i-1}) U_i`.
    pub weights: Vec<f64>,
    /// `Π (1-U_i)` over the drawn sticks.
    pub residual: f64,
    /// `(root seed, stream index)` the draw came from.
    pub lineage: (u64, u64),
}

/// `H₂` of a truncated draw: the true value lies in `[value, value + error_bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homozygosity {
    pub value: f64,
    pub error_bound: f64,
}

/// Draws sticks until the residual mass falls below `epsilon`. `U` is
/// sampled by the exact inverse CDF `1 - (1-V)^{1/θ}`.
pub fn sample_gem<R: Rng + ?Sized>(theta: f64, epsilon: f64, rng: &mut R) -> Result<GemSample> {
    ensure_domain!(theta > 0.0 && theta <= 1.0, "theta must lie in (0, 1], got {theta}");
    ensure_domain!(
        epsilon > 0.0 && epsilon < 1.0,
        "epsilon must lie in (0, 1), got {epsilon}"
    );
    let inv_theta = 1.0 / theta;
    let mut sticks = Vec::new();
    let mut weights = Vec::new();
    let mut residual = 1.0f64;
    while residual >= epsilon {
        if sticks.len() >= MAX_STICKS {
            return Err(PdovError::Pathological(format!(
                "residual {residual} still above {epsilon} after {MAX_STICKS} sticks"
            )));
        }
        let v: f64 = rng.random();
        // 1 - U = (1-V)^{1/θ}
        let keep = (inv_theta * (-v).ln_1p()).exp();
        let u = 1.0 - keep;
        sticks.push(u);
        weights.push(residual * u);
        residual *= keep;
    }
    Ok(GemSample { theta, sticks, weights, residual, lineage: (0, 0) })
}

/// [`sample_gem`] on stream `index` of `root`.
pub fn sample_gem_stream(theta: f64, epsilon: f64, root: u64, index: u64) -> Result<GemSample> {
    let mut rng = stream_rng(root, index);
    let mut s = sample_gem(theta, epsilon, &mut rng)?;
    s.lineage = (root, index);
    Ok(s)
}

impl GemSample {
    pub fn homozygosity(&self) -> Homozygosity {
        homozygosity(self)
    }

    /// Weights sorted descending; the residual mass is left out.
    pub fn to_configuration(&self) -> Configuration {
        let mut w = self.weights.clone();
        w.sort_by(|a, b| b.total_cmp(a));
        Configuration::new(w).expect("GEM weights form a sub-probability vector")
    }
}

/// `Σ V_i²` over the drawn sticks with error bound `residual²`.
pub fn homozygosity(sample: &GemSample) -> Homozygosity {
    let value = sample.weights.iter().map(|v| v * v).sum();
    Homozygosity { value, error_bound: sample.residual * sample.residual }
}

/// Monte Carlo estimate with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltedEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub effective_sample_size: f64,
    /// Set when the effective sample size drops below [`ESS_WARNING`].
    pub degenerate: bool,
}

/// Pairwise summation; fixed association order for a given length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Runs `f` on `n` independent draws, in stream order.
pub(crate) fn draw_map<T, F>(theta: f64, n: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&GemSample) -> T + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_gem_stream(theta, DEFAULT_EPSILON, seed, i).map(|s| f(&s)))
        .collect()
}

/// Self-normalized estimate of `Σ w f / Σ w` from per-sample `(w, f)`.
///
/// The mean is formed around the first statistic value, so a constant
/// statistic comes back exactly with zero standard error.
pub fn self_normalized(weights: &[f64], values: &[f64]) -> TiltedEstimate {
    assert_eq!(weights.len(), values.len());
    let n = weights.len();
    assert!(n > 0, "self_normalized needs at least one sample");
    let w_sum = pairwise_sum(weights);
    let w2: Vec<f64> = weights.iter().map(|w| w * w).collect();
    let w2_sum = pairwise_sum(&w2);
    let pivot = values[0];
    let shifted: Vec<f64> = weights.iter().zip(values).map(|(w, f)| w * (f - pivot)).collect();
    let value = pivot + pairwise_sum(&shifted) / w_sum;
    let resid: Vec<f64> = w2
        .iter()
        .zip(values)
        .map(|(w2, f)| {
            let d = f - value;
            w2 * d * d
        })
        .collect();
    let std_error = pairwise_sum(&resid).sqrt() / w_sum;
    let ess = w_sum * w_sum / w2_sum;
    TiltedEstimate {
        value,
        std_error,
        n_samples: n,
        effective_sample_size: ess.min(n as f64),
        degenerate: ess < ESS_WARNING,
    }
}

/// Importance weight `exp(σ H₂) = θ^{λ H₂}`.
#[inline]
fn tilt_weight(spec: &SelectionSpec, h: f64) -> f64 {
    (spec.sigma() * h).exp()
}

/// Self-normalized importance sampling of `E_π[statistic]` with proposal
/// `PD(θ)`. Statistics see the descending configuration of each draw.
pub fn tilted_estimate<F>(spec: &SelectionSpec, statistic: F, n: usize, seed: u64) -> Result<TiltedEstimate>
where
    F: Fn(&Configuration) -> f64 + Sync,
{
    ensure_domain!(n >= MIN_SAMPLES, "need at least {MIN_SAMPLES} samples, got {n}");
    let pairs = draw_map(spec.theta(), n, seed, |s| {
        let h = s.homozygosity().value;
        (tilt_weight(spec, h), statistic(&s.to_configuration()))
    })?;
    let (w, f): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(self_normalized(&w, &f))
}

/// Plain `PD(θ)` estimates of `E(1-H₂)^k` for `k = 1..=kmax` from one set
/// of `n` draws.
pub fn mc_moments(theta: f64, kmax: usize, n: usize, seed: u64) -> Result<Vec<TiltedEstimate>> {
    ensure_domain!(n >= MIN_SAMPLES, "need at least {MIN_SAMPLES} samples, got {n}");
    ensure_domain!(kmax >= 1, "kmax must be at least 1");
    let hets = draw_map(theta, n, seed, |s| 1.0 - s.homozygosity().value)?;
    let ones = vec![1.0; n];
    Ok((1..=kmax)
        .map(|k| {
            let vals: Vec<f64> = hets.iter().map(|h| h.powi(k as i32)).collect();
            self_normalized(&ones, &vals)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// Importance-weighted histogram of `H₂` on `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedHistogram {
    pub bins: Vec<HistogramBin>,
    pub n_samples: usize,
    pub effective_sample_size: f64,
    pub degenerate: bool,
}

impl WeightedHistogram {
    /// Index of the bin `(i/B, (i+1)/B]` containing `h`.
    pub fn bin_index(&self, h: f64) -> usize {
        bin_of(h, self.bins.len())
    }
}

fn bin_of(h: f64, bins: usize) -> usize {
    let i = (h * bins as f64).ceil() as usize;
    i.clamp(1, bins) - 1
}

pub fn homozygosity_histogram(
    spec: &SelectionSpec,
    n: usize,
    bins: usize,
    seed: u64,
) -> Result<WeightedHistogram> {
    ensure_domain!(
        n >= MIN_HISTOGRAM_SAMPLES,
        "histogram needs at least {MIN_HISTOGRAM_SAMPLES} samples, got {n}"
    );
    ensure_domain!(bins >= 1, "histogram needs at least one bin");
    let pairs = draw_map(spec.theta(), n, seed, |s| {
        let h = s.homozygosity().value;
        (h, tilt_weight(spec, h))
    })?;
    let mut mass = vec![Vec::new(); bins];
    for &(h, w) in &pairs {
        mass[bin_of(h, bins)].push(w);
    }
    let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let total = pairwise_sum(&weights);
    let w2: Vec<f64> = weights.iter().map(|w| w * w).collect();
    let ess = (total * total / pairwise_sum(&w2)).min(n as f64);
    let bins_out = mass
        .iter()
        .enumerate()
        .map(|(i, ws)| HistogramBin {
            lo: i as f64 / bins as f64,
            hi: (i + 1) as f64 / bins as f64,
            mass: pairwise_sum(ws) / total,
        })
        .collect();
    Ok(WeightedHistogram {
        bins: bins_out,
        n_samples: n,
        effective_sample_size: ess,
        degenerate: ess < ESS_WARNING,
    })
}

/// `π{x : d(x, c_k) < δ}` by importance sampling; draws are sorted
/// descending before the distance is taken.
pub fn ball_probability(
    spec: &SelectionSpec,
    k: usize,
    delta: f64,
    n: usize,
    seed: u64,
) -> Result<TiltedEstimate> {
    ensure_domain!(delta > 0.0, "ball radius must be positive, got {delta}");
    let center = uniform_config(k)?;
    tilted_estimate(
        spec,
        |x| if metric_d(x, &center) < delta { 1.0 } else { 0.0 },
        n,
        seed,
    )
}
