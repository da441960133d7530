//! Clinical + expression table ingestion and cohort assembly.

mod clinical;
mod cohort;
mod expression;
mod rules;

pub use clinical::{
    parse_clinical_str, parse_clinical_table, ClinicalColumns, ClinicalField, ClinicalRecord,
    RawValue, Stage,
};
pub use cohort::{build_cohort, Cohort, ImputationPolicy, Provenance, SampleFeatures};
pub use expression::{
    parse_expression_matrix, parse_expression_str, ExpressionMatrix, PRIMARY_TUMOR,
};
pub use rules::{default_rules, DichotomizationRule, RuleKind};

use std::path::PathBuf;
use thiserror::Error;

/// Tokens (case-insensitive, after trimming) that parse as a missing cell.
const MISSING_TOKENS: [&str; 4] = ["", "na", "null", "--"];

pub(crate) fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    MISSING_TOKENS.iter().any(|m| t.eq_ignore_ascii_case(m))
}

pub(crate) fn parse_number(cell: &str) -> Option<f64> {
    if is_missing(cell) {
        return None;
    }
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("required column `{0}` is missing from the header")]
    MissingColumn(String),
    #[error("table has no data rows")]
    EmptyFile,
    #[error("gene `{0}` appears more than once")]
    DuplicateGene(String),
    #[error("sample `{0}` appears more than once")]
    DuplicateSample(String),
    #[error("line {0} has the wrong number of cells")]
    RaggedRow(usize),
    #[error("non-numeric or negative value at line {line}, column {column}: `{value}`")]
    NonNumericCell {
        line: usize,
        column: usize,
        value: String,
    },
    #[error("clinical and expression tables share no samples")]
    NoOverlap,
    #[error("no retained sample has survival information")]
    UnlabeledSample,
    #[error("rule for `{parameter}` is invalid: {reason}")]
    InvalidRule { parameter: String, reason: String },
    #[error("unknown clinical parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter `{0}` has no observed values to impute from")]
    NothingToImpute(String),
}
