//! Heterozygosity moments `m_k = E(1-H₂)^k` under `PD(θ)`, computed from
//! the coefficient table, from the direct moment recursion, or by Monte
//! Carlo.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;

use crate::coefficients::{build_coeff_table, CoeffTable};
use crate::error::{ensure_domain, Result};
use crate::lognum::{LogNum, LogSumExp};
use crate::mc::{mc_moments, TiltedEstimate};
use crate::special::{ln_binomial, ln_gamma};

/// `m_1..=m_kmax` for one `θ`.
#[derive(Debug, Clone, Serialize)]
pub struct MomentVector {
    pub theta: f64,
    values: Vec<LogNum>,
}

impl MomentVector {
    pub fn kmax(&self) -> usize {
        self.values.len()
    }

    /// `m_k` for `1 ≤ k ≤ kmax`.
    pub fn get(&self, k: usize) -> f64 {
        self.ln(k).value()
    }

    pub fn ln(&self, k: usize) -> LogNum {
        assert!(k >= 1 && k <= self.values.len(), "moment index {k} out of range");
        self.values[k - 1]
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.value()).collect()
    }
}

/// `m_k = Σ_{l=1}^k A_{k,l}(θ) θ^l` for `k = 1..=kmax`.
pub fn moments_from_table(table: &CoeffTable, kmax: usize) -> Result<MomentVector> {
    ensure_domain!(
        table.theta() > 0.0,
        "moments need a table built at θ > 0, not the limit table"
    );
    ensure_domain!(
        kmax >= 1 && kmax <= table.kmax(),
        "kmax {kmax} outside table range 1..={}",
        table.kmax()
    );
    let ln_theta = table.theta().ln();
    let values = (1..=kmax)
        .map(|k| {
            let mut acc = LogSumExp::new();
            for l in 1..=k {
                acc.push_ln(table.get(k, l).ln() + l as f64 * ln_theta);
            }
            acc.total()
        })
        .collect();
    Ok(MomentVector { theta: table.theta(), values })
}

/// `m_0 = 1, m_1, …, m_count` in log space, via a fresh table.
pub(crate) fn ln_moments_with_zero(theta: f64, count: usize) -> Result<Vec<LogNum>> {
    let table = build_coeff_table(theta, count.max(1))?;
    let m = moments_from_table(&table, count.max(1))?;
    let mut out = Vec::with_capacity(count + 1);
    out.push(LogNum::ONE);
    out.extend((1..=count).map(|k| m.ln(k)));
    Ok(out)
}

/// `2^{k-l} Γ(k-l+1) Γ(k+l+θ) θ / Γ(2k+1+θ)`, i.e.
/// `E[(2U(1-U))^{k-l} (1-U)^{2l}]` for `U ~ Beta(1, θ)`.
pub fn beta_factor(k: usize, l: usize, theta: f64) -> Result<f64> {
    ensure_domain!(theta > 0.0, "theta must be positive, got {theta}");
    ensure_domain!(l <= k, "beta_factor needs l ≤ k, got (k={k}, l={l})");
    Ok(ln_beta_factor(k, l, theta).exp())
}

fn ln_beta_factor(k: usize, l: usize, theta: f64) -> f64 {
    let (kf, lf) = (k as f64, l as f64);
    (kf - lf) * std::f64::consts::LN_2 + ln_gamma(kf - lf + 1.0) + ln_gamma(kf + lf + theta)
        + theta.ln()
        - ln_gamma(2.0 * kf + 1.0 + theta)
}

fn recursion_cache() -> &'static Mutex<HashMap<u64, Vec<f64>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Vec<f64>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `m_k` from the first-stick decomposition
/// `m_k = Σ_{l=0}^{k} C(k,l) β(k,l) m_l` with the `l = k` term moved to
/// the left. Memoized per `θ` (compared bitwise); `O(k²)` overall.
pub fn moment_via_recursion(theta: f64, k: usize) -> Result<f64> {
    ensure_domain!(theta > 0.0 && theta <= 1.0, "theta must lie in (0, 1], got {theta}");
    ensure_domain!(k >= 1, "k must be at least 1");
    let mut cache = recursion_cache().lock().expect("moment cache poisoned");
    // ln m_0 = 0
    let ln_m = cache.entry(theta.to_bits()).or_insert_with(|| vec![0.0]);
    while ln_m.len() <= k {
        let j = ln_m.len();
        let jf = j as f64;
        let mut acc = LogSumExp::new();
        for (l, &lm) in ln_m.iter().enumerate() {
            acc.push_ln(ln_binomial(j, l) + ln_beta_factor(j, l, theta) + lm);
        }
        ln_m.push(((2.0 * jf + theta) / (2.0 * jf)).ln() + acc.ln_total());
    }
    Ok(ln_m[k].exp())
}

/// Monte Carlo `E(1-H₂)^k` over `n` GEM draws.
pub fn mc_moment_oracle(theta: f64, k: usize, n: usize, seed: u64) -> Result<TiltedEstimate> {
    ensure_domain!(k >= 1, "k must be at least 1");
    let mut all = mc_moments(theta, k, n, seed)?;
    Ok(all.pop().expect("k ≥ 1 estimates"))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Gauss–Kronrod (7/15) on [a, b].
    fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        const XK: [f64; 8] = [
            0.991455371120812639206854697526329,
            0.949107912342758524526189684047851,
            0.864864423359769072789712788640926,
            0.741531185599394439863864773280788,
            0.586087235467691130294144845693013,
            0.405845151377397166906606412076961,
            0.207784955007898467600689403773245,
            0.000000000000000000000000000000000,
        ];
        const WK: [f64; 8] = [
            0.022935322010529224963732008058970,
            0.063092092629978553290700663189204,
            0.104790010322250183839876322541518,
            0.140653259715525918745189590510238,
            0.169004726639267902826583426598550,
            0.190350578064785409913256402421014,
            0.204432940075298892414161999234649,
            0.209482141084727828012999174891714,
        ];
        const WG: [f64; 4] = [
            0.129484966168869693270611432679082,
            0.279705391489276667901467771423780,
            0.381830050505118944950369775488975,
            0.417959183673469387755102040816327,
        ];
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut k = WK[7] * fc;
        let mut g = WG[3] * fc;
        for i in 0..7 {
            let y1 = f(c - h * XK[i]);
            let y2 = f(c + h * XK[i]);
            k += WK[i] * (y1 + y2);
            if i % 2 == 1 {
                g += WG[i / 2] * (y1 + y2);
            }
        }
        let (k, g) = (k * h, g * h);
        if (k - g).abs() <= tol || depth == 0 {
            k
        } else {
            gk15(f, a, c, tol / 2.0, depth - 1) + gk15(f, c, b, tol / 2.0, depth - 1)
        }
    }

    /// `∫₀¹ (2u(1-u))^{k-l} (1-u)^{2l} θ(1-u)^{θ-1} du` after `v = (1-u)^θ`,
    /// which absorbs the Beta(1, θ) density into `dv`.
    fn beta_factor_quadrature(k: usize, l: usize, theta: f64) -> f64 {
        let f = |v: f64| {
            let one_minus_u = v.powf(1.0 / theta);
            let u = 1.0 - one_minus_u;
            (2.0 * u * one_minus_u).powi((k - l) as i32) * one_minus_u.powi(2 * l as i32)
        };
        gk15(&f, 0.0, 1.0, 1e-12, 40)
    }

    #[test]
    fn beta_factor_examples() {
        assert!((beta_factor(1, 0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        for k in 1..8 {
            let t = 0.37;
            assert!((beta_factor(k, k, t).unwrap() - t / (2.0 * k as f64 + t)).abs() < 1e-14);
        }
        assert!(beta_factor(2, 1, 0.0).is_err());
        assert!(beta_factor(2, 3, 0.5).is_err());
    }

    #[test]
    fn beta_factor_matches_quadrature() {
        for &theta in &[0.1, 0.5, 1.0] {
            for k in 1..=6 {
                for l in 0..=k {
                    let q = beta_factor_quadrature(k, l, theta);
                    let b = beta_factor(k, l, theta).unwrap();
                    assert!((q - b).abs() < 1e-8, "k={k} l={l} θ={theta}: {q} vs {b}");
                }
            }
        }
        let q = beta_factor_quadrature(3, 1, 0.5);
        assert!((q - beta_factor(3, 1, 0.5).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn first_moment_exact() {
        for &theta in &[0.1, 0.2, 0.5, 1.0] {
            let t = build_coeff_table(theta, 3).unwrap();
            let m = moments_from_table(&t, 3).unwrap();
            assert!((m.get(1) - theta / (1.0 + theta)).abs() < 1e-12);
            assert!((moment_via_recursion(theta, 1).unwrap() - theta / (1.0 + theta)).abs() < 1e-12);
        }
        let t = build_coeff_table(0.5, 1).unwrap();
        assert!((moments_from_table(&t, 1).unwrap().get(1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn table_and_recursion_agree() {
        for &theta in &[0.05, 0.2, 0.5, 1.0] {
            let t = build_coeff_table(theta, 40).unwrap();
            let m = moments_from_table(&t, 40).unwrap();
            for k in 1..=40 {
                let r = moment_via_recursion(theta, k).unwrap();
                assert!((m.get(k) / r - 1.0).abs() < 1e-10, "θ={theta} k={k}");
            }
        }
    }

    #[test]
    fn moments_decrease_and_vanish_with_theta() {
        let t = build_coeff_table(0.3, 60).unwrap();
        let m = moments_from_table(&t, 60).unwrap().values();
        assert!(m.windows(2).all(|w| w[1] < w[0]));
        assert!(m.iter().all(|&v| v > 0.0 && v < 1.0));
        let t = build_coeff_table(1e-12, 5).unwrap();
        let m = moments_from_table(&t, 5).unwrap();
        assert!(m.get(1) < 1e-11 && m.get(5) < 1e-11);
    }

    #[test]
    fn table_errors() {
        let lim = crate::coefficients::build_limit_table(4).unwrap();
        assert!(moments_from_table(&lim, 2).is_err());
        let t = build_coeff_table(0.5, 4).unwrap();
        assert!(moments_from_table(&t, 5).is_err());
        assert!(moment_via_recursion(0.0, 2).is_err());
        assert!(moment_via_recursion(0.5, 0).is_err());
    }

    #[test]
    fn mc_oracle_first_moment() {
        let e = mc_moment_oracle(0.5, 1, 200_000, 42).unwrap();
        assert!((e.value - 1.0 / 3.0).abs() < 4.0 * e.std_error);
        let again = mc_moment_oracle(0.5, 1, 200_000, 42).unwrap();
        assert_eq!(e, again);
        let small = mc_moment_oracle(1e-3, 1, 20_000, 1).unwrap();
        assert!(small.value < 0.01);
        assert!(mc_moment_oracle(0.5, 1, 100, 1).is_err());
    }
}
