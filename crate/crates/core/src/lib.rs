//! Prognosis analysis over clinical + gene-expression cohorts.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`ingest`] parses clinical and expression tables and assembles a labeled [`ingest::Cohort`].
//! - [`survival`] computes Kaplan-Meier curves, median survival with confidence limits and
//!   log-rank tests, and tabulates them per clinical parameter.
//! - [`diffexpr`] runs per-gene fold change / Student t tests with Benjamini-Hochberg correction.
//! - [`enrichment`] loads GMT libraries and runs hypergeometric over-representation.
//! - [`models`] holds the four classifiers, stratified cross-validation and the scenario grid.
//! - [`pipeline`] wires the stages together and reads/writes report bundles.

pub mod canonical;
pub mod diffexpr;
pub mod enrichment;
pub mod format;
pub mod ingest;
pub mod models;
pub mod pipeline;
pub mod seed;
pub mod special;
pub mod survival;
pub mod synthetic;

use serde::{Deserialize, Serialize};
use std::fmt;

/// Binary prognosis class. `HighRisk` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    HighRisk,
    LowRisk,
}

impl Label {
    pub fn from_event(event: bool) -> Self {
        if event {
            Label::HighRisk
        } else {
            Label::LowRisk
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::HighRisk
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::HighRisk => Label::LowRisk,
            Label::LowRisk => Label::HighRisk,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::HighRisk => "high_risk",
            Label::LowRisk => "low_risk",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
