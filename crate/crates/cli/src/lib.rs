//! Experiment harness: configuration, the validation experiments and the
//! acceptance criteria.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod validation;

pub use config::{ExperimentConfig, Overrides};
pub use experiments::{
    run_cdf_export, run_heavy_traffic_check, run_table1, run_tail_validation, RatioErrorRow, Statistic,
};
pub use validation::{CriterionResult, ValidationOptions, Validator};
