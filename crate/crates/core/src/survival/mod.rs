//! Kaplan-Meier estimation, median survival and log-rank comparison.

mod km;
mod logrank;
mod table;

pub use km::{km_estimate, median_survival, KmCurve, MedianEstimate, Z_95};
pub use logrank::{logrank_test, LogRankResult};
pub use table::{
    survival_table, LevelCurve, ParameterCurves, SurvivalCurves, SurvivalRow, SurvivalTable,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One subject: follow-up time in months, death indicator and group label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalObservation {
    pub time: f64,
    pub event: bool,
    pub group: String,
}

impl SurvivalObservation {
    pub fn new(time: f64, event: bool, group: impl Into<String>) -> Self {
        Self {
            time,
            event,
            group: group.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SurvivalError {
    #[error("no observations")]
    EmptyInput,
    #[error("observation time {0} is not positive")]
    NonPositiveTime(f64),
    #[error("log-rank test needs at least two non-empty groups")]
    SingleGroup,
    #[error("log-rank test needs at least one event")]
    NoEvents,
    #[error("observation carries unknown group `{0}`")]
    UnknownGroup(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}
