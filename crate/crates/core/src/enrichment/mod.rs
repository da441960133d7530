//! Gene-set libraries and hypergeometric over-representation.

mod gmt;
mod ora;

pub use gmt::{load_gmt, parse_gmt, GeneSet, GeneSetLibrary};
pub use ora::{enrich, enrichment_tsv, hypergeometric_sf, EnrichmentResult};

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnrichmentError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {0}: expected term, description and at least one gene")]
    MalformedLine(usize),
    #[error("term `{0}` is defined twice")]
    DuplicateTerm(String),
    #[error("no query genes inside the universe")]
    EmptyQuery,
    #[error("universe is empty")]
    EmptyUniverse,
}
