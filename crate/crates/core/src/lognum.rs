//! Nonnegative reals carried by their natural logarithm.
//!
//! All series work in this crate goes through [`LogNum`]: terms such as
//! `(λ log(1/θ))^k / k!` overflow `f64` long before the sums they feed
//! become uninteresting, while their logarithms stay small.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, Div, Mul};

use serde::{Deserialize, Serialize};

/// `log(e^a + e^b)` without overflow. `-inf` is the additive identity.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// A value `v ≥ 0` stored as `ln v`; `ln 0 = -inf` is the exact zero.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogNum(f64);

impl LogNum {
    pub const ZERO: LogNum = LogNum(f64::NEG_INFINITY);
    pub const ONE: LogNum = LogNum(0.0);

    /// Wraps a logarithm. NaN and `+inf` are rejected.
    pub fn from_ln(ln: f64) -> Self {
        assert!(
            !ln.is_nan() && ln != f64::INFINITY,
            "LogNum requires ln value in [-inf, +inf), got {ln}"
        );
        LogNum(ln)
    }

    /// Converts a linear value; panics on negative or non-finite input.
    pub fn from_value(v: f64) -> Self {
        assert!(v >= 0.0 && v.is_finite(), "LogNum requires finite v ≥ 0, got {v}");
        LogNum(v.ln())
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    /// Linear value; underflows to 0 or overflows to `+inf` when the
    /// logarithm is out of `f64` range.
    #[inline]
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `true` when [`value`](Self::value) is a normal, finite double.
    pub fn is_representable(self) -> bool {
        self.is_zero() || (self.0 > -708.0 && self.0 < 709.0)
    }

    pub fn powf(self, p: f64) -> Self {
        if self.is_zero() {
            return if p == 0.0 { LogNum::ONE } else { LogNum::ZERO };
        }
        LogNum(self.0 * p)
    }

    pub fn powi(self, p: i32) -> Self {
        self.powf(p as f64)
    }

    /// `self / other` as a plain ratio; both must not be zero at once.
    pub fn ratio(self, other: LogNum) -> f64 {
        (self.0 - other.0).exp()
    }

    /// Scientific notation with 17 significant digits, computed from the
    /// logarithm so that it works outside the `f64` exponent range.
    pub fn to_scientific(self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let log10 = self.0 / std::f64::consts::LN_10;
        let mut exponent = log10.floor();
        let mut mantissa = 10f64.powf(log10 - exponent);
        if mantissa >= 10.0 {
            mantissa /= 10.0;
            exponent += 1.0;
        }
        format!("{mantissa:.16}e{}", exponent as i64)
    }
}

impl Default for LogNum {
    fn default() -> Self {
        LogNum::ZERO
    }
}

impl fmt::Debug for LogNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogNum(ln={})", self.0)
    }
}

impl fmt::Display for LogNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_representable() {
            write!(f, "{:.16e}", self.value())
        } else {
            f.write_str(&self.to_scientific())
        }
    }
}

impl PartialOrd for LogNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl Add for LogNum {
    type Output = LogNum;
    fn add(self, rhs: LogNum) -> LogNum {
        LogNum(log_add_exp(self.0, rhs.0))
    }
}

impl Mul for LogNum {
    type Output = LogNum;
    fn mul(self, rhs: LogNum) -> LogNum {
        if self.is_zero() || rhs.is_zero() {
            return LogNum::ZERO;
        }
        LogNum(self.0 + rhs.0)
    }
}

impl Div for LogNum {
    type Output = LogNum;
    fn div(self, rhs: LogNum) -> LogNum {
        assert!(!rhs.is_zero(), "LogNum division by zero");
        if self.is_zero() {
            return LogNum::ZERO;
        }
        LogNum(self.0 - rhs.0)
    }
}

impl Sum for LogNum {
    fn sum<I: Iterator<Item = LogNum>>(iter: I) -> LogNum {
        let mut acc = LogSumExp::new();
        for x in iter {
            acc.push(x);
        }
        acc.total()
    }
}

impl Product for LogNum {
    fn product<I: Iterator<Item = LogNum>>(iter: I) -> LogNum {
        iter.fold(LogNum::ONE, |a, b| a * b)
    }
}

/// Streaming log-sum-exp with a running maximum.
///
/// Keeps `Σ exp(ln_i - max)` in linear space and rescales whenever a new
/// maximum arrives, so each push costs one `exp`.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, scaled: 0.0 }
    }

    #[inline]
    pub fn push_ln(&mut self, ln: f64) {
        if ln == f64::NEG_INFINITY {
            return;
        }
        if ln <= self.max {
            self.scaled += (ln - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - ln).exp() + 1.0;
            self.max = ln;
        }
    }

    #[inline]
    pub fn push(&mut self, x: LogNum) {
        self.push_ln(x.0);
    }

    pub fn ln_total(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }

    pub fn total(&self) -> LogNum {
        LogNum(self.ln_total())
    }
}
