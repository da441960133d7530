use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{is_missing, IngestError};

/// Sample type assigned when the matrix carries no `sample_type` row.
pub const PRIMARY_TUMOR: &str = "Primary Tumor";

/// Name of the optional row (directly under the header) holding per-sample types.
const SAMPLE_TYPE_ROW: &str = "sample_type";

/// Genes x samples matrix of normalized, non-negative expression values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionMatrix {
    pub genes: Vec<String>,
    pub samples: Vec<String>,
    /// Row-major, `values[g][s]`.
    pub values: Vec<Vec<f64>>,
    pub sample_type: Vec<String>,
}

impl ExpressionMatrix {
    pub fn gene_index(&self, gene: &str) -> Option<usize> {
        self.genes.iter().position(|g| g == gene)
    }

    pub fn sample_index(&self, sample: &str) -> Option<usize> {
        self.samples.iter().position(|s| s == sample)
    }

    pub fn is_primary_tumor(&self, sample: usize) -> bool {
        let t = self.sample_type[sample].trim().to_ascii_lowercase();
        matches!(
            t.as_str(),
            "primary tumor" | "primary solid tumor" | "01" | "tp"
        )
    }

    /// Keep only the listed sample columns, in the order given.
    pub fn select_samples(&self, keep: &[usize]) -> ExpressionMatrix {
        ExpressionMatrix {
            genes: self.genes.clone(),
            samples: keep.iter().map(|&i| self.samples[i].clone()).collect(),
            values: self
                .values
                .iter()
                .map(|row| keep.iter().map(|&i| row[i]).collect())
                .collect(),
            sample_type: keep.iter().map(|&i| self.sample_type[i].clone()).collect(),
        }
    }
}

pub fn parse_expression_matrix(path: &Path) -> Result<ExpressionMatrix, IngestError> {
    let contents = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_expression_str(&contents)
}

pub fn parse_expression_str(contents: &str) -> Result<ExpressionMatrix, IngestError> {
    let mut lines = contents
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(IngestError::EmptyFile)?;
    let header: Vec<&str> = header.trim_start_matches('\u{feff}').split('\t').collect();
    if header.first().map(|h| h.trim()) != Some("gene") {
        return Err(IngestError::MissingColumn("gene".into()));
    }
    let samples: Vec<String> = header[1..].iter().map(|s| s.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for s in &samples {
        if !seen.insert(s.as_str()) {
            return Err(IngestError::DuplicateSample(s.clone()));
        }
    }

    let mut genes = Vec::new();
    let mut values = Vec::new();
    let mut sample_type: Option<Vec<String>> = None;
    let mut seen_genes = HashSet::new();
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != samples.len() + 1 {
            return Err(IngestError::RaggedRow(line_no));
        }
        let symbol = cells[0].trim();
        if symbol == SAMPLE_TYPE_ROW && sample_type.is_none() && genes.is_empty() {
            sample_type = Some(cells[1..].iter().map(|c| c.trim().to_string()).collect());
            continue;
        }
        if !seen_genes.insert(symbol.to_string()) {
            return Err(IngestError::DuplicateGene(symbol.to_string()));
        }
        let row = cells[1..]
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let bad = || IngestError::NonNumericCell {
                    line: line_no,
                    column: j + 2,
                    value: c.to_string(),
                };
                if is_missing(c) {
                    return Err(bad());
                }
                match c.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
                    _ => Err(bad()),
                }
            })
            .collect::<Result<Vec<f64>, _>>()?;
        genes.push(symbol.to_string());
        values.push(row);
    }
    if genes.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let sample_type = sample_type.unwrap_or_else(|| vec![PRIMARY_TUMOR.to_string(); samples.len()]);
    Ok(ExpressionMatrix {
        genes,
        samples,
        values,
        sample_type,
    })
}
