//! Log-space evaluation of exponential generating series
//! `Σ_{k ≥ start} a_k x^k / k!` with positive coefficients.
//!
//! Truncation: once `k + 2 > x`, the remainder after index `k` is at most
//! `cap_k · x^{k+1}/(k+1)! / (1 - x/(k+2))`, where `cap_k` bounds every
//! later `a_j`. Within the supplied slice `cap_k` is the exact suffix
//! maximum. Past the slice it is the last coefficient when the slice is
//! non-increasing from its maximum onward (all coefficient columns and
//! moment sequences used here are unimodal), else the caller's global cap.
//! `cap_k` never exceeds the global cap.

use crate::error::{ensure_domain, PdovError, Result};
use crate::lognum::{LogNum, LogSumExp};
use crate::special::ln_factorial;

/// Default relative truncation tolerance.
pub const DEFAULT_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy)]
pub struct SeriesOptions {
    /// Stop once the remainder bound is below `rel_tol × partial sum`.
    pub rel_tol: f64,
    /// `ln sup_k a_k` over all indices, including those past the slice.
    pub ln_cap: f64,
}

impl SeriesOptions {
    pub fn with_cap(ln_cap: f64) -> Self {
        SeriesOptions { rel_tol: DEFAULT_REL_TOL, ln_cap }
    }
}

/// A truncated sum together with a bound on what was left out.
#[derive(Debug, Clone, Copy)]
pub struct PartialSum {
    pub sum: LogNum,
    /// `ln` of an upper bound on the omitted tail (`+inf` when no bound
    /// applies yet, i.e. the last index did not pass the Poisson mode).
    pub ln_remainder: f64,
    /// Number of terms actually added.
    pub terms: usize,
}

impl PartialSum {
    fn tail_ok(&self, rel_tol: f64) -> bool {
        self.ln_remainder == f64::NEG_INFINITY
            || (!self.sum.is_zero() && self.ln_remainder <= self.sum.ln() + rel_tol.ln())
    }
}

#[inline]
fn ln_remainder_after(k: usize, ln_x: f64, x: f64, ln_cap: f64) -> f64 {
    let next = (k + 1) as f64;
    if next + 1.0 <= x {
        return f64::INFINITY;
    }
    ln_cap + next * ln_x - ln_factorial(k + 1) - (-x / (next + 1.0)).ln_1p()
}

/// `caps[j]` bounds `ln a` for every index after slice position `j`.
fn remainder_caps(coeffs: &[LogNum], ln_cap: f64) -> Vec<f64> {
    let n = coeffs.len();
    let ln: Vec<f64> = coeffs.iter().map(|a| a.ln()).collect();
    let argmax = (0..n).fold(0, |m, j| if ln[j] > ln[m] { j } else { m });
    let settled = argmax + 1 < n && ln[argmax..].windows(2).all(|w| w[1] <= w[0]);
    let beyond = if settled { ln[n - 1].min(ln_cap) } else { ln_cap };
    let mut caps = vec![beyond; n];
    let mut run = beyond;
    for j in (0..n.saturating_sub(1)).rev() {
        run = run.max(ln[j + 1]);
        caps[j] = run.min(ln_cap);
    }
    caps
}

fn term_ln(ln_a: f64, k: usize, ln_x: f64) -> f64 {
    if k == 0 {
        ln_a
    } else {
        ln_a + k as f64 * ln_x - ln_factorial(k)
    }
}

/// Sums `coeffs[j] · x^{start+j} / (start+j)!`, stopping early once the
/// certified remainder is below `rel_tol`. Never fails; the caller
/// inspects the remainder.
pub fn exp_series_partial(x: f64, coeffs: &[LogNum], start: usize, opts: SeriesOptions) -> PartialSum {
    assert!(x >= 0.0 && x.is_finite());
    if x == 0.0 {
        let sum = if start == 0 { coeffs.first().copied().unwrap_or(LogNum::ZERO) } else { LogNum::ZERO };
        return PartialSum { sum, ln_remainder: f64::NEG_INFINITY, terms: coeffs.len().min(1) };
    }
    let ln_x = x.ln();
    let caps = remainder_caps(coeffs, opts.ln_cap);
    let mut acc = LogSumExp::new();
    let mut out = PartialSum { sum: LogNum::ZERO, ln_remainder: f64::INFINITY, terms: 0 };
    for (j, a) in coeffs.iter().enumerate() {
        let k = start + j;
        acc.push_ln(term_ln(a.ln(), k, ln_x));
        out.sum = acc.total();
        out.terms = j + 1;
        out.ln_remainder = ln_remainder_after(k, ln_x, x, caps[j]);
        if out.tail_ok(opts.rel_tol) {
            break;
        }
    }
    if coeffs.is_empty() {
        out.ln_remainder = ln_remainder_after(start.saturating_sub(1), ln_x, x, opts.ln_cap);
        if start == 0 {
            out.ln_remainder = f64::INFINITY;
        }
    }
    out
}

/// `Σ_{k ≥ start} a_k x^k / k!` with `a_k = coeffs[k - start]`.
///
/// Returns a precision error when the supplied coefficients run out
/// before the remainder bound drops below `rel_tol` of the sum.
pub fn exp_series(x: f64, coeffs: &[LogNum], start: usize, opts: SeriesOptions) -> Result<LogNum> {
    ensure_domain!(x >= 0.0 && x.is_finite(), "series argument must be finite and ≥ 0, got {x}");
    let p = exp_series_partial(x, coeffs, start, opts);
    if p.tail_ok(opts.rel_tol) {
        Ok(p.sum)
    } else {
        Err(PdovError::Precision(format!(
            "series at x={x} not converged after {} coefficients (ln remainder {:.3}, ln sum {:.3})",
            coeffs.len(),
            p.ln_remainder,
            p.sum.ln()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_identity_without_overflow() {
        let ones = vec![LogNum::ONE; 1000];
        for &x in &[0.5, 10.0, 300.0] {
            let s = exp_series(x, &ones, 0, SeriesOptions::with_cap(0.0)).unwrap();
            assert!((s.ln() - x).abs() < 1e-12 * x.max(1.0), "x={x}: {}", s.ln());
        }
        let ones = vec![LogNum::ONE; 12_000];
        let s = exp_series(1e4, &ones, 0, SeriesOptions::with_cap(0.0)).unwrap();
        assert!((s.ln() - 1e4).abs() < 1e-9);
    }

    #[test]
    fn zero_argument() {
        let c = vec![LogNum::from_value(3.0), LogNum::ONE];
        assert_eq!(exp_series(0.0, &c, 0, SeriesOptions::with_cap(2.0)).unwrap(), c[0]);
        assert!(exp_series(0.0, &c, 1, SeriesOptions::with_cap(2.0)).unwrap().is_zero());
    }

    #[test]
    fn insufficient_coefficients_is_a_precision_error() {
        let ones = vec![LogNum::ONE; 50];
        let err = exp_series(100.0, &ones, 0, SeriesOptions::with_cap(0.0)).unwrap_err();
        assert!(matches!(err, PdovError::Precision(_)));
        assert!(exp_series(-1.0, &ones, 0, SeriesOptions::with_cap(0.0)).is_err());
    }

    #[test]
    fn start_index_and_scaling() {
        // Σ_{k≥2} x^k/k! = e^x - 1 - x
        let ones = vec![LogNum::ONE; 200];
        let x = 3.0f64;
        let s = exp_series(x, &ones, 2, SeriesOptions::with_cap(0.0)).unwrap();
        assert!((s.value() - (x.exp() - 1.0 - x)).abs() < 1e-12);
        let c = LogNum::from_value(7.25);
        let scaled: Vec<LogNum> = ones.iter().map(|&a| a * c).collect();
        let t = exp_series(x, &scaled, 2, SeriesOptions::with_cap(c.ln())).unwrap();
        assert!((t.ratio(s) - 7.25).abs() < 1e-13);
    }

    #[test]
    fn caps_follow_the_data() {
        let dec: Vec<LogNum> = (0..5).map(|k| LogNum::from_ln(-(k as f64))).collect();
        assert_eq!(remainder_caps(&dec, 0.0), vec![-1.0, -2.0, -3.0, -4.0, -4.0]);
        let inc: Vec<LogNum> = (0..3).map(|k| LogNum::from_ln(k as f64 - 5.0)).collect();
        assert_eq!(remainder_caps(&inc, 0.0), vec![0.0; 3]);
    }

    #[test]
    fn geometric_coefficients_need_fewer_terms() {
        // Σ 2^-k x^k/k! = e^{x/2}; the cap 1 alone would need far more terms
        let x = 138.0f64;
        let c: Vec<LogNum> = (0..331).map(|k| LogNum::from_ln(-(k as f64) * 2f64.ln())).collect();
        let s = exp_series(x, &c, 0, SeriesOptions::with_cap(0.0)).unwrap();
        assert!((s.ln() - x / 2.0).abs() < 1e-12 * x);
        let p = exp_series_partial(x, &c[..250], 0, SeriesOptions::with_cap(0.0));
        let omitted = (x / 2.0).exp() - p.sum.value();
        assert!(omitted <= p.ln_remainder.exp() * (1.0 + 1e-9));
    }
}
