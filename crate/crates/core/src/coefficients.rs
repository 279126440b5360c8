//! Triangular coefficient tables `A_{k,l}(θ)` of the heterozygosity
//! moment expansion `m_k = Σ_l A_{k,l}(θ) θ^l`, their `θ = 0` limits, and
//! the auxiliary quantities used to bound and approximate them.
//!
//! Every entry is stored as a [`LogNum`]. The recursion
//!
//! ```text
//! A_{k,1}(θ) = (2k+θ)/(2k) · 2^k k! Γ(k+θ) / Γ(2k+1+θ)
//! A_{k,p}(θ) = Σ_{l=p-1}^{k-1} (2k+θ)/(2k) · 2^k k!/(2^l l!) · Γ(k+l+θ)/Γ(2k+1+θ) · A_{l,p-1}(θ)
//! ```
//!
//! has only positive summands, so a running log-sum-exp is exact up to
//! rounding. Agreement thresholds for the large-`k` approximations
//! ([`asymptotic_a`], [`asymptotic_c`]) are desk-scale proxies for a
//! `k → ∞` statement, checked only for `k ≥ 100`.

use std::f64::consts::{LN_2, PI};
use std::io::{self, Write};

use serde::Serialize;

use crate::error::{ensure_domain, Result};
use crate::lognum::{LogNum, LogSumExp};
use crate::special::{ln_binomial, ln_factorial, ln_gamma_table};

/// Triangular table of `A_{k,l}(θ)` for `1 ≤ l ≤ k ≤ kmax`.
///
/// `theta == 0.0` marks the limit table `A_{k,l} = A_{k,l}(0)`.
#[derive(Debug, Clone)]
pub struct CoeffTable {
    theta: f64,
    kmax: usize,
    ln_entries: Vec<f64>,
}

#[inline]
fn tri_index(k: usize, l: usize) -> usize {
    k * (k - 1) / 2 + (l - 1)
}

/// Series length that puts the truncated tail of `Σ x^k/k! a_k` (bounded
/// `a_k`) below `1e-12` of the total: `ceil(x + 12√x + 50)`.
pub fn kmax_rule(x: f64) -> usize {
    let x = x.max(0.0);
    (x + 12.0 * x.sqrt() + 50.0).ceil() as usize
}

/// Builds `A_{k,l}(θ)` for `θ ∈ [0, 1]`.
pub fn build_coeff_table(theta: f64, kmax: usize) -> Result<CoeffTable> {
    ensure_domain!(kmax >= 1, "kmax must be at least 1, got {kmax}");
    ensure_domain!(
        (0.0..=1.0).contains(&theta),
        "theta must lie in [0, 1], got {theta}"
    );

    let ln_fact = ln_gamma_table(2 * kmax + 2, 1.0);
    // ln Γ(j + θ) for j = 0..=2kmax+1; j + θ > 0 whenever it is used.
    let ln_gamma_shift = ln_gamma_table(2 * kmax + 2, theta);

    let mut ln_entries = vec![f64::NEG_INFINITY; kmax * (kmax + 1) / 2];
    let mut weights = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let kf = k as f64;
        let common = ((2.0 * kf + theta) / (2.0 * kf)).ln() + kf * LN_2 + ln_fact[k]
            - ln_gamma_shift[2 * k + 1];
        ln_entries[tri_index(k, 1)] = common + ln_gamma_shift[k];

        // weights[l] = ln of the l-dependent factor 2^{-l}/l! · Γ(k+l+θ)
        weights.clear();
        weights.extend((0..k).map(|l| -(l as f64) * LN_2 - ln_fact[l] + ln_gamma_shift[k + l]));

        for p in 2..=k {
            let mut acc = LogSumExp::new();
            for l in (p - 1)..k {
                acc.push_ln(weights[l] + ln_entries[tri_index(l, p - 1)]);
            }
            ln_entries[tri_index(k, p)] = common + acc.ln_total();
        }
    }

    Ok(CoeffTable { theta, kmax, ln_entries })
}

/// Builds the limit table `A_{k,l} = A_{k,l}(0)`.
pub fn build_limit_table(kmax: usize) -> Result<CoeffTable> {
    build_coeff_table(0.0, kmax)
}

impl CoeffTable {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn is_limit(&self) -> bool {
        self.theta == 0.0
    }

    /// `A_{k,l}`; panics unless `1 ≤ l ≤ k ≤ kmax`.
    pub fn get(&self, k: usize, l: usize) -> LogNum {
        self.try_get(k, l).unwrap_or_else(|| {
            panic!("coefficient index (k={k}, l={l}) outside table with kmax={}", self.kmax)
        })
    }

    pub fn try_get(&self, k: usize, l: usize) -> Option<LogNum> {
        if l >= 1 && l <= k && k <= self.kmax {
            Some(LogNum::from_ln(self.ln_entries[tri_index(k, l)]))
        } else {
            None
        }
    }

    /// Column `l` read as `A_{k+shift,l}` for `k = start..`, stopping at the
    /// end of the table.
    pub fn column(&self, l: usize, start: usize, shift: usize) -> Vec<LogNum> {
        (start.max(1)..)
            .map(|k| k + shift)
            .take_while(|&k| k <= self.kmax)
            .map(|k| self.try_get(k, l).unwrap_or(LogNum::ZERO))
            .collect()
    }

    /// Iterates `(k, l, A_{k,l})` row by row.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, LogNum)> + '_ {
        (1..=self.kmax).flat_map(move |k| (1..=k).map(move |l| (k, l, self.get(k, l))))
    }

    /// CSV with header `k,l,A`; linear values when representable,
    /// otherwise scientific notation derived from the logarithm.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,l,A")?;
        for (k, l, a) in self.iter() {
            writeln!(w, "{k},{l},{a}")?;
        }
        Ok(())
    }

    pub fn to_export(&self) -> TableExport {
        let rows = (1..=self.kmax)
            .map(|k| (1..=k).map(|l| self.get(k, l).value()).collect())
            .collect();
        let ln_rows = (1..=self.kmax)
            .map(|k| (1..=k).map(|l| self.get(k, l).ln()).collect())
            .collect();
        TableExport { theta: self.theta, kmax: self.kmax, rows, ln_rows }
    }
}

/// JSON shape of a table: row `k-1` holds `A_{k,1..=k}`. `rows` may
/// underflow to 0; `ln_rows` is exact.
#[derive(Debug, Clone, Serialize)]
pub struct TableExport {
    pub theta: f64,
    pub kmax: usize,
    pub rows: Vec<Vec<f64>>,
    pub ln_rows: Vec<Vec<f64>>,
}

/// `B_{k,l} = 2^k k! Γ(k+l) / (2^l l! Γ(2k+1))` for `1 ≤ l ≤ k-1`.
pub fn b_term(k: usize, l: usize) -> Result<LogNum> {
    ensure_domain!(
        l >= 1 && k >= 2 && l < k,
        "b_term needs 1 ≤ l ≤ k-1, got (k={k}, l={l})"
    );
    let (kf, lf) = (k as f64, l as f64);
    let ln = (kf - lf) * LN_2 + ln_factorial(k) + ln_factorial(k + l - 1)
        - ln_factorial(l)
        - ln_factorial(2 * k);
    Ok(LogNum::from_ln(ln))
}

/// `C_1 = √π`, `C_{p+1} = C_p √π ((p+2)/p)^{p/2}`.
pub fn c_constant(p: usize) -> Result<f64> {
    ensure_domain!(p >= 1, "c_constant needs p ≥ 1, got {p}");
    Ok(ln_c_constant(p).exp())
}

fn ln_c_constant(p: usize) -> f64 {
    let half_ln_pi = 0.5 * PI.ln();
    let mut ln_c = half_ln_pi;
    for q in 1..p {
        let qf = q as f64;
        ln_c += half_ln_pi + 0.5 * qf * ((qf + 2.0) / qf).ln();
    }
    ln_c
}

/// Large-`k` form `C_p k^{-p/2} (p/(p+1))^k` of `A_{k,p}`.
pub fn asymptotic_a(k: usize, p: usize) -> Result<LogNum> {
    ensure_domain!(p >= 1 && p <= k, "asymptotic_a needs 1 ≤ p ≤ k, got (k={k}, p={p})");
    let (kf, pf) = (k as f64, p as f64);
    Ok(LogNum::from_ln(
        ln_c_constant(p) - 0.5 * pf * kf.ln() + kf * (pf / (pf + 1.0)).ln(),
    ))
}

/// `C_{k,l} = Σ_{s=0}^{k-l} C(k,s) ((λ-l)/λ)^s A_{k-s,l}` using a limit
/// table that covers row `k`.
pub fn c_combined_with(limit: &CoeffTable, k: usize, l: usize, lambda: f64) -> Result<LogNum> {
    ensure_domain!(limit.is_limit(), "c_combined needs the θ = 0 limit table");
    ensure_domain!(l >= 1 && l <= k, "c_combined needs 1 ≤ l ≤ k, got (k={k}, l={l})");
    ensure_domain!(k <= limit.kmax(), "row k={k} beyond table kmax={}", limit.kmax());
    ensure_domain!(
        lambda > l as f64,
        "c_combined needs lambda > l, got lambda={lambda}, l={l}"
    );
    let ln_base = ((lambda - l as f64) / lambda).ln();
    let mut acc = LogSumExp::new();
    for s in 0..=(k - l) {
        acc.push_ln(ln_binomial(k, s) + s as f64 * ln_base + limit.get(k - s, l).ln());
    }
    Ok(acc.total())
}

pub fn c_combined(k: usize, l: usize, lambda: f64) -> Result<LogNum> {
    ensure_domain!(l >= 1 && l <= k, "c_combined needs 1 ≤ l ≤ k, got (k={k}, l={l})");
    ensure_domain!(
        lambda > l as f64,
        "c_combined needs lambda > l, got lambda={lambda}, l={l}"
    );
    let table = build_limit_table(k)?;
    c_combined_with(&table, k, l, lambda)
}

/// Growth base `(λ-l)/λ + l/(l+1)` of `C_{k,l}`.
pub fn combined_growth_base(l: usize, lambda: f64) -> f64 {
    let lf = l as f64;
    (lambda - lf) / lambda + lf / (lf + 1.0)
}

/// `C_l (1 + (λ-l)(l+1)/(λ l))^{l/2} k^{-l/2} ((λ-l)/λ + l/(l+1))^k`.
pub fn asymptotic_c(k: usize, l: usize, lambda: f64) -> Result<LogNum> {
    ensure_domain!(l >= 1 && l <= k, "asymptotic_c needs 1 ≤ l ≤ k, got (k={k}, l={l})");
    ensure_domain!(
        lambda > l as f64,
        "asymptotic_c needs lambda > l, got lambda={lambda}, l={l}"
    );
    let (kf, lf) = (k as f64, l as f64);
    let prefactor = 1.0 + (lambda - lf) * (lf + 1.0) / (lambda * lf);
    Ok(LogNum::from_ln(
        ln_c_constant(l) + 0.5 * lf * prefactor.ln() - 0.5 * lf * kf.ln()
            + kf * combined_growth_base(l, lambda).ln(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    /// `A_{k,1}(θ) = 2^{k-1}(k-1)! / ((2k-1+θ)⋯(k+θ))` evaluated as a plain
    /// product, independent of the log-gamma path.
    fn a_k1_product(k: usize, theta: f64) -> f64 {
        let mut v = 1.0;
        for j in 1..k {
            v *= 2.0 * j as f64;
        }
        for j in k..2 * k {
            v /= j as f64 + theta;
        }
        v
    }

    /// Linear-space recursion with raw factorials, valid for small `k`.
    fn limit_table_linear(kmax: usize) -> Vec<Vec<f64>> {
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        let mut a = vec![vec![0.0; kmax + 1]; kmax + 1];
        for k in 1..=kmax {
            a[k][1] = 2f64.powi(k as i32) * fact(k) * fact(k - 1) / fact(2 * k);
            for p in 2..=k {
                a[k][p] = ((p - 1)..k)
                    .map(|l| {
                        2f64.powi((k - l) as i32) * fact(k) * fact(k + l - 1)
                            / (fact(l) * fact(2 * k))
                            * a[l][p - 1]
                    })
                    .sum();
            }
        }
        a
    }

    #[test]
    fn first_entries() {
        let t = build_coeff_table(1.0, 1).unwrap();
        assert!(close(t.get(1, 1).value(), 0.5, 1e-14));

        let t = build_coeff_table(0.5, 2).unwrap();
        assert!(close(t.get(2, 1).value(), 2.0 / (3.5 * 2.5), 1e-14));

        let lim = build_limit_table(2).unwrap();
        assert!(close(lim.get(1, 1).value(), 1.0, 1e-14));
        assert!(close(lim.get(2, 1).value(), 1.0 / 3.0, 1e-14));
        assert!(close(lim.get(2, 2).value(), 1.0 / 3.0, 1e-14));
        assert!(lim.is_limit());
    }

    #[test]
    fn theta_zero_matches_limit_table() {
        let a = build_coeff_table(0.0, 30).unwrap();
        let b = build_limit_table(30).unwrap();
        for (k, l, v) in a.iter() {
            assert_eq!(v, b.get(k, l));
        }
    }

    #[test]
    fn first_column_matches_product_form() {
        for &theta in &[0.0, 0.1, 0.5, 1.0] {
            let t = build_coeff_table(theta, 60).unwrap();
            for k in 1..=60 {
                assert!(close(t.get(k, 1).value(), a_k1_product(k, theta), 1e-12));
            }
        }
    }

    #[test]
    fn limit_table_matches_linear_recursion() {
        let lin = limit_table_linear(25);
        let t = build_limit_table(25).unwrap();
        for k in 1..=25 {
            for p in 1..=k {
                assert!(close(t.get(k, p).value(), lin[k][p], 1e-12), "({k},{p})");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(build_coeff_table(0.5, 0).is_err());
        assert!(build_coeff_table(1.5, 3).is_err());
        assert!(build_coeff_table(-0.1, 3).is_err());
        assert!(b_term(3, 3).is_err());
        assert!(b_term(3, 0).is_err());
        assert!(c_constant(0).is_err());
        assert!(asymptotic_a(2, 3).is_err());
        assert!(c_combined(3, 2, 2.0).is_err());
        assert!(asymptotic_c(3, 2, 1.5).is_err());
    }

    #[test]
    fn b_terms() {
        assert!(close(b_term(5, 3).unwrap().value(), 1.0 / 9.0, 1e-13));
        assert!(close(b_term(5, 4).unwrap().value(), 1.0 / 9.0, 1e-13));
        assert!(close(b_term(3, 1).unwrap().value(), 0.2, 1e-13));
        for k in 3..60 {
            for l in 1..k - 1 {
                let r = b_term(k, l + 1).unwrap().ratio(b_term(k, l).unwrap());
                let expect = (k + l) as f64 / (2.0 * (l + 1) as f64);
                assert!(close(r, expect, 1e-12));
            }
        }
    }

    #[test]
    fn b_partial_sums_below_half() {
        for k in 3..120 {
            for p in 2..k {
                let s: f64 = (p..k).map(|l| b_term(k, l).unwrap().value()).sum();
                assert!(s < 0.5, "k={k} p={p} sum={s}");
            }
        }
    }

    #[test]
    fn c_constants() {
        let sqrt_pi = PI.sqrt();
        assert!(close(c_constant(1).unwrap(), sqrt_pi, 1e-15));
        assert!(close(c_constant(2).unwrap(), PI * 3f64.sqrt(), 1e-14));
        assert!(close(c_constant(3).unwrap(), 2.0 * PI.powf(1.5) * 3f64.sqrt(), 1e-14));
    }

    #[test]
    fn asymptotic_a_values() {
        let v = asymptotic_a(100, 1).unwrap();
        let expect = PI.sqrt().ln() - 0.5 * 100f64.ln() - 100.0 * LN_2;
        assert!((v.ln() - expect).abs() < 1e-12);
        assert!(close(asymptotic_a(1, 1).unwrap().value(), PI.sqrt() / 2.0, 1e-14));
    }

    #[test]
    fn combined_coefficients() {
        assert!(close(c_combined(2, 1, 6.0).unwrap().value(), 2.0, 1e-13));
        let lim = build_limit_table(8).unwrap();
        for l in 1..=4 {
            let v = c_combined_with(&lim, l, l, 7.5).unwrap();
            assert!(close(v.value(), lim.get(l, l).value(), 1e-13));
        }
        // asymptotic form at (l=1, λ=6): √π (1+10/6)^{1/2} k^{-1/2} (4/3)^k
        let k = 50;
        let expect = PI.sqrt().ln() + 0.5 * (1.0 + 10.0 / 6.0f64).ln() - 0.5 * (k as f64).ln()
            + k as f64 * (4.0f64 / 3.0).ln();
        assert!((asymptotic_c(k, 1, 6.0).unwrap().ln() - expect).abs() < 1e-12);
        // critical tie at λ = 6 between l = 1 and l = 2
        assert!(close(combined_growth_base(1, 6.0), 4.0 / 3.0, 1e-15));
        assert!(close(combined_growth_base(2, 6.0), 4.0 / 3.0, 1e-15));
        assert!(asymptotic_c(1, 1, 6.0).is_ok());
    }

    #[test]
    fn column_and_csv() {
        let t = build_limit_table(4).unwrap();
        let col = t.column(1, 2, 1);
        assert_eq!(col.len(), 2);
        assert_eq!(col[0], t.get(3, 1));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("k,l,A"));
        assert_eq!(lines.next(), Some("1,1,1.0000000000000000e0"));
        assert_eq!(s.lines().count(), 1 + 10);
        let ex = t.to_export();
        assert_eq!(ex.rows[3].len(), 4);
    }

    #[test]
    fn columns_are_unimodal() {
        // the series truncation relies on this past each column's peak
        for theta in [0.0, 1e-7, 0.3, 1.0] {
            let t = if theta == 0.0 { build_limit_table(300).unwrap() } else { build_coeff_table(theta, 300).unwrap() };
            for l in 1..=40 {
                let ln: Vec<f64> = (l..=300).map(|k| t.get(k, l).ln()).collect();
                let peak = (0..ln.len()).fold(0, |m, j| if ln[j] > ln[m] { j } else { m });
                assert!(ln[..=peak].windows(2).all(|w| w[1] >= w[0]), "theta={theta} l={l}");
                assert!(ln[peak..].windows(2).all(|w| w[1] <= w[0]), "theta={theta} l={l}");
            }
        }
    }
}
