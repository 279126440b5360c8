//! Configurations on the ordered simplex and the large-deviation rate
//! functions evaluated on them.
//!
//! `J` is the rate function of `PD(θ)` at speed `log(1/θ)`; `S_λ` is the
//! rate function of the tilted law with `σ = λ log θ`. Both are
//! discontinuous in the total mass, so membership in `L_n` is decided with
//! the fixed tolerance [`MASS_TOL`]. Callers that mean "mass one" should
//! normalize explicitly.

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{ensure_domain, Result};

/// Tolerance on `|Σx - 1|` for membership in `L = ∪ L_n`.
pub const MASS_TOL: f64 = 1e-12;

/// A finite, descending, nonnegative vector with total mass at most one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Configuration {
    entries: Vec<f64>,
    total_mass: f64,
}

fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl Configuration {
    /// Validates an already descending vector.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        ensure_domain!(
            entries.iter().all(|x| x.is_finite() && *x >= 0.0),
            "configuration entries must be finite and nonnegative"
        );
        ensure_domain!(
            entries.windows(2).all(|w| w[0] >= w[1]),
            "configuration entries must be in descending order"
        );
        let total_mass = neumaier_sum(entries.iter().copied());
        ensure_domain!(
            total_mass <= 1.0 + MASS_TOL,
            "configuration mass {total_mass} exceeds 1"
        );
        Ok(Configuration { entries, total_mass })
    }

    /// Sorts descending, then validates.
    pub fn from_unsorted(mut entries: Vec<f64>) -> Result<Self> {
        entries.sort_by(|a, b| b.total_cmp(a));
        Self::new(entries)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Number of strictly positive entries.
    pub fn support_size(&self) -> usize {
        self.entries.iter().take_while(|&&x| x > 0.0).count()
    }

    /// `Some(n)` when the configuration lies in `L_n`.
    pub fn level(&self) -> Option<usize> {
        let n = self.support_size();
        if n >= 1 && (self.total_mass - 1.0).abs() <= MASS_TOL {
            Some(n)
        } else {
            None
        }
    }
}

/// `c_k = (1/k, …, 1/k)` with `k` entries.
pub fn uniform_config(k: usize) -> Result<Configuration> {
    ensure_domain!(k >= 1, "uniform_config needs k ≥ 1, got {k}");
    Configuration::new(vec![1.0 / k as f64; k])
}

/// Homozygosity `φ₂(x) = Σ x_i²`.
pub fn phi2(x: &Configuration) -> f64 {
    neumaier_sum(x.entries.iter().map(|v| v * v))
}

/// `0` on `L_1`, `n-1` on `L_n`, `+inf` off `L`.
pub fn j_rate(x: &Configuration) -> f64 {
    match x.level() {
        Some(n) => (n - 1) as f64,
        None => f64::INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfTerm {
    pub value: f64,
    pub argmin: Vec<usize>,
}

fn inf_window(lambda: f64) -> usize {
    lambda.sqrt().ceil() as usize + 2
}

/// `inf { λ/n + n - 1 : n ≥ 1 }` with every minimizer. The objective is
/// convex in `n` with minimum near `√λ`, so `n ≤ ⌈√λ⌉ + 2` suffices.
pub fn inf_term(lambda: f64) -> Result<InfTerm> {
    ensure_domain!(lambda > 0.0 && lambda.is_finite(), "lambda must be positive, got {lambda}");
    let values: Vec<(usize, f64)> = (1..=inf_window(lambda))
        .map(|n| (n, lambda / n as f64 + n as f64 - 1.0))
        .collect();
    let value = values.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let tie = 1e-12 * value.abs().max(1.0);
    let argmin = values
        .iter()
        .filter(|&&(_, v)| v - value <= tie)
        .map(|&(n, _)| n)
        .collect();
    Ok(InfTerm { value, argmin })
}

/// `S_λ(x) = J(x) + λ φ₂(x) - inf_n {λ/n + n - 1}`.
pub fn s_rate(x: &Configuration, lambda: f64) -> Result<f64> {
    let inf = inf_term(lambda)?;
    let j = j_rate(x);
    if j.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(j + lambda * phi2(x) - inf.value)
}

/// Exact `inf_n {λ/n + n - 1}` for rational `λ > 0`.
pub fn inf_term_exact(lambda: Ratio<i64>) -> Result<(Ratio<i64>, Vec<usize>)> {
    ensure_domain!(lambda > Ratio::zero(), "lambda must be positive, got {lambda}");
    let approx = *lambda.numer() as f64 / *lambda.denom() as f64;
    let values: Vec<(usize, Ratio<i64>)> = (1..=inf_window(approx))
        .map(|n| {
            let nr = Ratio::from_integer(n as i64);
            (n, lambda / nr + nr - Ratio::one())
        })
        .collect();
    let min = values.iter().map(|(_, v)| *v).min().expect("window is non-empty");
    let argmin = values.iter().filter(|(_, v)| *v == min).map(|(n, _)| *n).collect();
    Ok((min, argmin))
}

/// `S_λ(c_k)` in exact rational arithmetic: `(k-1) + λ/k - inf`.
pub fn s_rate_uniform_exact(k: usize, lambda: Ratio<i64>) -> Result<Ratio<i64>> {
    ensure_domain!(k >= 1, "uniform configuration needs k ≥ 1, got {k}");
    let (inf, _) = inf_term_exact(lambda)?;
    let kr = Ratio::from_integer(k as i64);
    Ok(kr - Ratio::one() + lambda / kr - inf)
}

/// `d(x, y) = Σ_i |x_i - y_i| / 2^i`, shorter vectors padded with zeros.
pub fn metric_d(x: &Configuration, y: &Configuration) -> f64 {
    let len = x.entries.len().max(y.entries.len());
    let mut scale = 0.5;
    let mut acc = 0.0;
    for i in 0..len {
        let a = x.entries.get(i).copied().unwrap_or(0.0);
        let b = y.entries.get(i).copied().unwrap_or(0.0);
        acc += (a - b).abs() * scale;
        scale *= 0.5;
    }
    acc
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Rate function of the mean of i.i.d. geometric variables
/// `P(Y = u) = (1-α)^u α`.
pub fn rate_i1(x: f64, alpha: f64) -> Result<f64> {
    ensure_domain!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1), got {alpha}");
    ensure_domain!(x >= 0.0 && x.is_finite(), "rate_i1 needs finite x ≥ 0, got {x}");
    Ok(xlogx(x) - (x + 1.0) * x.ln_1p() - (x * (-alpha).ln_1p() + alpha.ln()))
}

/// Rate function of the mean of i.i.d. Bernoulli(α) variables.
pub fn rate_i2(x: f64, alpha: f64) -> Result<f64> {
    ensure_domain!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1), got {alpha}");
    ensure_domain!((0.0..=1.0).contains(&x), "rate_i2 needs x in [0, 1], got {x}");
    let a = if x == 0.0 { 0.0 } else { x * (x / alpha).ln() };
    let b = if x == 1.0 { 0.0 } else { (1.0 - x) * ((1.0 - x) / (1.0 - alpha)).ln() };
    Ok(a + b)
}
