//! Numerics for the homozygosity of the infinitely-many-alleles model
//! with symmetric overdominant selection.
//!
//! The stationary law is `π_{λ,θ}(dx) ∝ θ^{λ φ₂(x)} PD(θ)(dx)`. This crate
//! provides
//!
//! - [`coefficients`]: the triangular tables `A_{k,l}(θ)` behind the
//!   heterozygosity moments, their bounds and large-`k` forms;
//! - [`moments`]: `E(1-H₂)^k` by table, by direct recursion and by Monte
//!   Carlo;
//! - [`tilted`]: log-space series for `K_n`, the MGF of `H₂` under `π`,
//!   tail bounds and the phase map `λ ↦ u`;
//! - [`mc`]: GEM stick-breaking and self-normalized importance sampling;
//! - [`ldp`]: configurations, the metric `d` and the rate functions;
//! - [`verify`]: property suites shared by the CLI and the test targets.

pub mod coefficients;
pub mod error;
pub mod ldp;
pub mod lognum;
pub mod mc;
pub mod moments;
pub mod series;
pub mod special;
pub mod tilted;
pub mod verify;

pub use coefficients::{
    asymptotic_a, asymptotic_c, b_term, build_coeff_table, build_limit_table, c_combined,
    c_combined_with, c_constant, kmax_rule, CoeffTable,
};
pub use error::{PdovError, Result};
pub use ldp::{
    inf_term, j_rate, metric_d, phi2, rate_i1, rate_i2, s_rate, s_rate_uniform_exact,
    uniform_config, Configuration, InfTerm,
};
pub use lognum::{LogNum, LogSumExp};
pub use mc::{
    ball_probability, homozygosity, homozygosity_histogram, sample_gem, sample_gem_stream,
    tilted_estimate, GemSample, Homozygosity, TiltedEstimate, WeightedHistogram,
};
pub use moments::{beta_factor, mc_moment_oracle, moment_via_recursion, moments_from_table, MomentVector};
pub use series::{exp_series, SeriesOptions};
pub use tilted::{
    classify_phase, k_ratio, limit_mgf, mgf, proof_diagnostics, tail_bound,
    tilted_mean_heterozygosity, PhaseResult, SelectionSpec, TailReport,
};
