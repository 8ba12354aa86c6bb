//! Global p-values ("g-values") for multi-design studies.
//!
//! Several analysis strategies applied to the same research question each
//! produce a one-sided p-value. Reporting the smallest inflates the type I
//! error; reporting the largest is conservative. The g-value takes the
//! largest p-value and rescales it by `α / α*`, where `α*` is chosen from the
//! joint null law of the strategies' statistics so that rejecting when the
//! g-value is at most `α` has asymptotic size exactly `α`.
//!
//! - [`joint_null`]: `Pr(max P ≤ γ)` and the maximum asymptotic size.
//! - [`correction`]: the `α*` solver.
//! - [`gvalue`]: g-value reports (max and quantile aggregation).
//! - [`resample`]: bootstrap + permutation estimate of `α*`.
//! - [`simulate`]: Monte Carlo comparison of the combination procedures.

pub mod correction;
pub mod data;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod gvalue;
pub mod hypothesis;
pub mod joint_null;
mod quadrature;
pub mod resample;
pub mod simulate;

pub use correction::{solve_alpha_star, AlphaStarSolver, CorrectionResult};
pub use data::{Column, Dataset, Sample};
pub use dist::RngSeed;
pub use error::{Error, Result};
pub use gvalue::{g_value, g_value_quantile, Aggregation, GValueReport};
pub use hypothesis::{
    evaluate_all, t_test_one_sided, wilcoxon_signed_rank, AnalysisOutcome, AnalysisSet,
    AnalysisStrategy, WilcoxonMode,
};
pub use joint_null::{
    max_asymptotic_size, prob_max_p_leq, rho_t_wilcoxon, JointNullModel, Quadrature,
};
pub use resample::{
    empirical_alpha_star, empirical_alpha_star_for, resample_null, EmpiricalNull, ResampleConfig,
    ResampleTarget,
};
pub use simulate::{relative_power, run_simulation, Procedure, SimulationConfig, SimulationReport};
