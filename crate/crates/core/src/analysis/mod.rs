//! Correlations, regressions and checkpoint trajectories.

mod matrix;
mod ols;
mod phases;
mod stats;
mod trajectory;

use thiserror::Error;

pub use matrix::{correlation_matrix, cross_model_correlation, predictor_correlations, CorrelationMatrix};
pub use ols::{
    fit_raw, fit_standardized, ols_fit, r_squared, unnormalized_fit, ColumnKind, DesignMatrix, Normalization, OlsFit,
    RegressionResult,
};
pub use phases::{detect_phases, PhaseReport, DEFAULT_STABILITY_EPS};
pub use stats::{
    average_ranks, mean, pearson, sample_sd, seed_aggregate, spearman, zscore_apply, zscore_fit, Z_95,
};
pub use trajectory::{
    correlation_trajectory, regression_trajectory, CheckpointKey, CorrelationMethod, CorrelationTrajectories, Issue,
    ModelRegression, RegressionMode, RegressionSpec, RegressionTrajectory, ScoreGroups, TrajectorySeries,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("input has zero variance")]
    DegenerateVariance,
    #[error("column {0} has zero variance")]
    ConstantColumn(String),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("design matrix is rank deficient; dependent column(s): {}", .0.join(", "))]
    Singular(Vec<String>),
    #[error("heuristic column {0} not found")]
    MissingColumn(String),
    #[error("steps must be strictly increasing")]
    UnorderedSteps,
    #[error("stability threshold must be positive, got {0}")]
    InvalidThreshold(f64),
}
