//! Estimation and inference for high-dimensional semiparametric generalized
//! linear models through a pairwise rank composite likelihood.

pub mod data;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod linalg;
pub mod math;
pub mod modelfit;
pub mod penalty;
pub mod prob;
pub mod projector;
pub mod ranklik;
pub mod simlab;
mod simplex;

pub use data::{Beta, Dataset};
pub use error::{Error, Result};
pub use estimator::{
    cross_validate, cross_validate_with, default_lambda_grid, fit_penalized, lambda_max,
    CvResult, FitResult, SolverOptions,
};
pub use inference::{
    directional_loglik, dlrt_statistic, dlrt_test, infer_targets, max_directional,
    plugin_variance, wald_interval, InferenceReport,
};
pub use penalty::{penalty_lla_weight, penalty_value, PenaltyConfig, PenaltyFamily};
pub use projector::{default_lambda_s, estimate_w, DirectionFit, SolverStatus};
pub use ranklik::{
    hajek_sigma, kernel_diagnostics, pairwise_gradient, pairwise_hessian, pairwise_loglik,
    rank_probability_oracle, third_order_loglik, PairKernelDiagnostics,
};
pub use simlab::{
    apply_missingness, generate, run_estimation_error, run_power, run_type1, ExperimentResult,
    FirstStage, MissingScenario, PipelineConfig, ReplicateRecord, SimDesign, SimModel, TestMethod,
};
