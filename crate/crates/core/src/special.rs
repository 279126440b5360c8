//! Log-gamma helpers. Ratios of gamma functions are always formed as
//! differences of `ln Γ`; `Γ(2k+1)` alone overflows near `k = 85`.

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[inline]
pub fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `ln Γ(j + shift)` for `j = 0..len`, with `-inf`-free entries only where
/// the argument is positive; `Γ(0)` is reported as `+inf`.
pub(crate) fn ln_gamma_table(len: usize, shift: f64) -> Vec<f64> {
    (0..len)
        .map(|j| {
            let arg = j as f64 + shift;
            if arg <= 0.0 {
                f64::INFINITY
            } else {
                ln_gamma(arg)
            }
        })
        .collect()
}
