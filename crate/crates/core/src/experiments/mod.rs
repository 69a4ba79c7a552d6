//! Experiment harness: case scenarios, spread calibration, seeded
//! multi-run campaigns, statistics and report files.

pub mod calibrate;
pub mod campaign;
pub mod cases;
pub mod report;
pub mod stats;

use thiserror::Error;

pub use calibrate::{
    burned_fraction, calibrate_spread, write_calibration_table, CalibrationError, CalibrationResult, CalibrationSettings,
};
pub use campaign::{
    aggregate, run_campaign, AggregateReport, CampaignResult, Comparison, ExperimentConfig, Metric, PolicyKind, PolicySummary,
    RunSeries,
};
pub use cases::{build_case, default_case4_dir, makaha_standin, CaseDefinition, CASE2_SHIFT_MIN};
pub use report::{emit_report, read_manifest, read_runs, write_campaign, write_runs, Manifest, ReportFormat, MANIFEST_FILE};
pub use stats::{mean_ci, welch_test, MeanCi, WelchResult};

use crate::coordinator::CoordinatorError;
use crate::gridstate::ScenarioError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown case {0} (expected 1 to 4)")]
    Case(u8),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed report input: {0}")]
    Report(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Episode(#[from] CoordinatorError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

impl ExperimentError {
    pub(crate) fn io(path: impl Into<std::path::PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    /// True for failures caused by the filesystem rather than the inputs.
    pub fn is_io(&self) -> bool {
        match self {
            Self::Io { .. } => true,
            Self::Calibration(CalibrationError::Io(_)) => true,
            Self::Scenario(ScenarioError::Io { .. }) => true,
            _ => false,
        }
    }
}
