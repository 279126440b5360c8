//! Series quantities of the tilted law `π_{λ,θ} ∝ θ^{λ φ₂} PD(θ)`.
//!
//! With `x = λ log(1/θ)`, ratios such as
//!
//! ```text
//! K_n = Σ_{l ≤ [λ]} θ^l Σ_{k ≥ l} x^k/k! A_{k+n,l}(θ)
//!     / Σ_{l ≤ [λ]} θ^l Σ_{k ≥ l} x^k/k! A_{k,l}(θ)
//! ```
//!
//! and the moment generating function of `H₂` are all built from positive
//! exponential series, evaluated in log space by [`crate::series`].
//! Convergence as `θ → 0` is logarithmic in `θ`, so callers should only
//! expect trends on desk-scale grids, never the limits themselves.

use serde::Serialize;

use crate::coefficients::{build_coeff_table, build_limit_table, kmax_rule, CoeffTable};
use crate::error::{ensure_domain, PdovError, Result};
use crate::ldp::{uniform_config, Configuration};
use crate::lognum::{LogNum, LogSumExp};
use crate::moments::ln_moments_with_zero;
use crate::series::{exp_series, exp_series_partial, SeriesOptions};
use crate::special::ln_factorial;

/// Selection scale `λ > 0` and mutation rate `θ ∈ (0, 1]`, with
/// `σ = λ log θ ≤ 0` and `x = -σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionSpec {
    lambda: f64,
    theta: f64,
}

impl SelectionSpec {
    pub fn new(lambda: f64, theta: f64) -> Result<Self> {
        ensure_domain!(
            lambda > 0.0 && lambda.is_finite(),
            "lambda must be positive and finite, got {lambda}"
        );
        ensure_domain!(theta > 0.0 && theta <= 1.0, "theta must lie in (0, 1], got {theta}");
        Ok(SelectionSpec { lambda, theta })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `σ = λ log θ`.
    pub fn sigma(&self) -> f64 {
        self.lambda * self.theta.ln()
    }

    /// `x = λ log(1/θ)`.
    pub fn x(&self) -> f64 {
        -self.sigma()
    }

    /// `[λ]`, the number of leading levels kept in `K_n`; at least 1.
    pub fn lead_levels(&self) -> usize {
        (self.lambda.floor() as usize).max(1)
    }

    /// Table size from [`kmax_rule`] applied to `x`.
    pub fn kmax(&self) -> usize {
        kmax_rule(self.x())
    }
}

/// Cap on `A_{k,l}(θ)` valid for every `k ≥ l`: `2^{2-l}`.
fn ln_coeff_cap(l: usize) -> f64 {
    (2.0 - l as f64) * std::f64::consts::LN_2
}

/// `θ^l Σ_{k ≥ l} x^k/k! A_{k+shift,l}`.
fn level_series(table: &CoeffTable, spec: &SelectionSpec, l: usize, shift: usize) -> Result<LogNum> {
    let coeffs = table.column(l, l, shift);
    let opts = SeriesOptions::with_cap(ln_coeff_cap(l));
    let inner = exp_series(spec.x(), &coeffs, l, opts).map_err(|e| match e {
        PdovError::Precision(msg) => PdovError::Precision(format!(
            "table kmax={} too small for level l={l}, shift={shift}: {msg}",
            table.kmax()
        )),
        other => other,
    })?;
    Ok(LogNum::from_ln(l as f64 * spec.theta.ln()) * inner)
}

/// `Σ_{l=1}^{[λ]} θ^l Σ_k x^k/k! A_{k+shift,l}`.
fn leading_sum(table: &CoeffTable, spec: &SelectionSpec, shift: usize) -> Result<LogNum> {
    let mut acc = LogSumExp::new();
    for l in 1..=spec.lead_levels() {
        acc.push(level_series(table, spec, l, shift)?);
    }
    Ok(acc.total())
}

fn check_table(table: &CoeffTable, spec: &SelectionSpec) -> Result<()> {
    ensure_domain!(
        table.is_limit() || table.theta() == spec.theta,
        "table built at θ={} cannot serve θ={}",
        table.theta(),
        spec.theta
    );
    Ok(())
}

/// `K_n` (or `~K_n` when `table` is the limit table) over a caller-supplied
/// table. A table too short for the series is a precision error.
pub fn k_ratio_with(table: &CoeffTable, spec: &SelectionSpec, n: usize) -> Result<f64> {
    check_table(table, spec)?;
    if n == 0 {
        return Ok(1.0);
    }
    let num = leading_sum(table, spec, n)?;
    let den = leading_sum(table, spec, 0)?;
    Ok(num.ratio(den))
}

/// `K_n^λ(θ)`, or `~K_n^λ(θ)` with `use_limit_coeffs`, on a table sized by
/// the `kmax` rule.
pub fn k_ratio(spec: &SelectionSpec, n: usize, use_limit_coeffs: bool) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let kmax = spec.kmax() + n;
    let table = if use_limit_coeffs {
        build_limit_table(kmax)?
    } else {
        build_coeff_table(spec.theta, kmax)?
    };
    k_ratio_with(&table, spec, n)
}

/// Terms of the decomposition `K_n = (~K_n + F_n) / (1 + G)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProofDiagnostics {
    pub k: f64,
    pub k_tilde: f64,
    pub f: f64,
    pub g: f64,
}

impl ProofDiagnostics {
    /// `(~K_n + F_n) / (1 + G)`.
    pub fn reconstructed_k(&self) -> f64 {
        (self.k_tilde + self.f) / (1.0 + self.g)
    }
}

/// `F_n = (N_n - ~N_n)/~N_0` and `G = (N_0 - ~N_0)/~N_0`, where `N`, `~N`
/// are the leading sums with `A_{k,l}(θ)` and `A_{k,l}`.
pub fn proof_diagnostics(spec: &SelectionSpec, n: usize) -> Result<ProofDiagnostics> {
    let kmax = spec.kmax() + n;
    let exact = build_coeff_table(spec.theta, kmax)?;
    let limit = build_limit_table(kmax)?;
    let num = leading_sum(&exact, spec, n)?;
    let den = leading_sum(&exact, spec, 0)?;
    let num_t = leading_sum(&limit, spec, n)?;
    let den_t = leading_sum(&limit, spec, 0)?;
    Ok(ProofDiagnostics {
        k: num.ratio(den),
        k_tilde: num_t.ratio(den_t),
        f: num.ratio(den_t) - num_t.ratio(den_t),
        g: den.ratio(den_t) - 1.0,
    })
}

/// Computed tail beyond the leading levels against its closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailReport {
    /// `Σ_{l > [λ]} θ^l Σ_k x^k/k! A_{k,l}(θ)`.
    pub computed_tail: f64,
    /// `4 θ^{[λ]-λ+1} / 2^{[λ]+1} · 2/(2-θ)`.
    pub analytic_bound: f64,
    /// Upper bound on what truncating the double sum left out.
    pub truncation_bound: f64,
}

impl TailReport {
    pub fn holds(&self) -> bool {
        self.computed_tail <= self.analytic_bound
    }
}

pub fn tail_bound(spec: &SelectionSpec) -> Result<TailReport> {
    let floor = spec.lambda.floor();
    let first = floor as usize + 1;
    let theta = spec.theta;
    let analytic_bound =
        4.0 * theta.powf(floor - spec.lambda + 1.0) / 2f64.powf(floor + 1.0) * 2.0 / (2.0 - theta);

    let kmax = spec.kmax().max(first);
    let table = build_coeff_table(theta, kmax)?;
    let x = spec.x();
    let ln_theta = theta.ln();
    let mut tail = LogSumExp::new();
    let mut missing = LogSumExp::new();
    for l in first..=kmax {
        let coeffs = table.column(l, l, 0);
        let p = exp_series_partial(x, &coeffs, l, SeriesOptions::with_cap(ln_coeff_cap(l)));
        tail.push_ln(l as f64 * ln_theta + p.sum.ln());
        if p.ln_remainder.is_finite() {
            missing.push_ln(l as f64 * ln_theta + p.ln_remainder);
        } else if p.ln_remainder == f64::INFINITY {
            missing.push_ln(f64::MAX.ln());
        }
    }
    // Levels l > kmax: θ^l 2^{2-l} Σ_{k ≥ l} x^k/k! ≤ 4 (θ/2)^l e^x.
    if x > 0.0 {
        let ratio = theta / 2.0;
        missing.push_ln(
            4f64.ln() + (kmax + 1) as f64 * ratio.ln() - (-ratio).ln_1p() + x,
        );
    }
    Ok(TailReport {
        computed_tail: tail.total().value(),
        analytic_bound,
        truncation_bound: missing.total().value(),
    })
}

/// Largest `|t|` accepted by [`mgf`].
pub const MAX_ABS_T: f64 = 50.0;
/// Relative accuracy demanded of the outer alternating series in [`mgf`].
pub const MGF_TOL: f64 = 1e-10;

/// Number of outer terms so that `|t|^n/n!` is negligible.
fn outer_terms(t: f64) -> usize {
    let a = t.abs();
    let mut n = 0usize;
    loop {
        n += 1;
        let ln_term = n as f64 * a.ln() - ln_factorial(n);
        if n as f64 > a && ln_term < -40.0 {
            return n;
        }
    }
}

/// `R_n = Σ_m x^m/m! m_{n+m} / Σ_m x^m/m! m_m` for `n = 0..=n_max`, from
/// moments `m_0..` of length at least `kmax + n_max + 1`.
fn tilted_moment_ratios(spec: &SelectionSpec, ln_m: &[LogNum], n_max: usize) -> Result<Vec<f64>> {
    let x = spec.x();
    let opts = SeriesOptions::with_cap(0.0);
    let sums = (0..=n_max)
        .map(|n| exp_series(x, &ln_m[n..], 0, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(sums.iter().map(|s| s.ratio(sums[0])).collect())
}

/// Moment generating function `φ_H(t) = E_π[e^{t H₂}]` via
/// `e^t (1 + Σ_n (-t)^n/n! R_n)` with `R_n = E_π(1-H₂)^n`.
///
/// `kmax` is the number of moments fed to each inner series. The outer
/// sum alternates for `t > 0`; it is compensated, and a precision error is
/// raised when cancellation would cost more than [`MGF_TOL`].
pub fn mgf(spec: &SelectionSpec, t: f64, kmax: usize) -> Result<f64> {
    ensure_domain!(
        t.is_finite() && t.abs() <= MAX_ABS_T,
        "|t| must be at most {MAX_ABS_T}, got {t}"
    );
    if t == 0.0 {
        return Ok(1.0);
    }
    let n_max = outer_terms(t);
    let ln_m = ln_moments_with_zero(spec.theta, kmax + n_max)?;
    let ratios = tilted_moment_ratios(spec, &ln_m, n_max)?;

    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut largest = 0.0f64;
    let mut ln_coef = 0.0f64; // ln(|t|^n / n!)
    for (n, r) in ratios.iter().enumerate() {
        if n > 0 {
            ln_coef += t.abs().ln() - (n as f64).ln();
        }
        let sign = if t > 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        let term = sign * ln_coef.exp() * r;
        largest = largest.max(term.abs());
        let y = term - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    let lost = largest * f64::EPSILON * n_max as f64;
    if !(sum > 0.0) || lost > MGF_TOL * sum {
        return Err(PdovError::Precision(format!(
            "outer series for t={t} cancels: largest term {largest:e}, sum {sum:e}"
        )));
    }
    Ok(t.exp() * sum)
}

/// `E_π[1 - H₂] = Σ_m x^m/m! m_{m+1} / Σ_m x^m/m! m_m`.
pub fn tilted_mean_heterozygosity(spec: &SelectionSpec) -> Result<f64> {
    let kmax = spec.kmax();
    let ln_m = ln_moments_with_zero(spec.theta, kmax + 1)?;
    Ok(tilted_moment_ratios(spec, &ln_m, 1)?[1])
}

/// Limiting state of `π_{λ,θ}` as `θ → 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseResult {
    pub lambda: f64,
    /// Unique `u ≥ 1` with `u(u-1) < λ ≤ u(u+1)`.
    pub u: usize,
    /// `1/u`.
    pub limit_homozygosity: f64,
    /// `(1/u, …, 1/u)`.
    pub limit_configuration: Configuration,
}

/// Phase index `u` with `u(u-1) < λ ≤ u(u+1)`; critical values
/// `λ = u(u+1)` belong to phase `u`.
pub fn classify_phase(lambda: f64) -> Result<PhaseResult> {
    let u = phase_index(lambda)?;
    Ok(PhaseResult {
        lambda,
        u,
        limit_homozygosity: 1.0 / u as f64,
        limit_configuration: uniform_config(u)?,
    })
}

fn phase_index(lambda: f64) -> Result<usize> {
    ensure_domain!(lambda > 0.0 && lambda.is_finite(), "lambda must be positive, got {lambda}");
    let mut u = (((1.0 + 4.0 * lambda).sqrt() - 1.0) / 2.0).ceil().max(1.0) as usize;
    // products of small integers are exact in f64, so these comparisons
    // settle the boundary cases
    while ((u * (u + 1)) as f64) < lambda {
        u += 1;
    }
    while u > 1 && ((u * (u - 1)) as f64) >= lambda {
        u -= 1;
    }
    Ok(u)
}

/// `ψ_H(t) = e^{t/u}` with `u` the phase of `λ`.
pub fn limit_mgf(lambda: f64, t: f64) -> Result<f64> {
    let u = phase_index(lambda)?;
    Ok((t / u as f64).exp())
}

/// Phase map on `λ = lo + i·step` for `lo ≤ λ ≤ hi` (grid points snapped to
/// 12 decimals so that critical values land exactly).
pub fn phase_sweep(lo: f64, hi: f64, step: f64) -> Result<Vec<PhaseResult>> {
    ensure_domain!(lo > 0.0 && hi >= lo, "need 0 < lambda_min ≤ lambda_max");
    ensure_domain!(step > 0.0, "step must be positive");
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count)
        .map(|i| {
            let lambda = ((lo + i as f64 * step) * 1e12).round() / 1e12;
            classify_phase(lambda)
        })
        .collect()
}
