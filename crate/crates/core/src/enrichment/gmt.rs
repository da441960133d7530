use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EnrichmentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneSet {
    pub term: String,
    pub description: String,
    /// Unique symbols in file order.
    pub genes: Vec<String>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneSetLibrary {
    pub name: String,
    pub terms: Vec<GeneSet>,
}

impl GeneSetLibrary {
    pub fn term(&self, name: &str) -> Option<&GeneSet> {
        self.terms.iter().find(|t| t.term == name)
    }
}

pub fn load_gmt(path: &Path, name: &str) -> Result<GeneSetLibrary, EnrichmentError> {
    let contents = std::fs::read_to_string(path).map_err(|source| EnrichmentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_gmt(&contents, name)
}

/// One term per line: `term<TAB>description<TAB>gene<TAB>gene...`.
pub fn parse_gmt(contents: &str, name: &str) -> Result<GeneSetLibrary, EnrichmentError> {
    let mut terms: Vec<GeneSet> = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in contents.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(EnrichmentError::MalformedLine(line_no));
        }
        let term = fields[0].trim();
        let mut unique = HashSet::new();
        let genes: Vec<String> = fields[2..]
            .iter()
            .map(|g| g.trim())
            .filter(|g| !g.is_empty() && unique.insert(*g))
            .map(str::to_string)
            .collect();
        if term.is_empty() || genes.is_empty() {
            return Err(EnrichmentError::MalformedLine(line_no));
        }
        if !seen.insert(term.to_string()) {
            return Err(EnrichmentError::DuplicateTerm(term.to_string()));
        }
        terms.push(GeneSet {
            term: term.to_string(),
            description: fields[1].trim().to_string(),
            genes,
            line: line_no,
        });
    }
    Ok(GeneSetLibrary {
        name: name.to_string(),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_term() {
        let lib = parse_gmt(
            "NICOTINE_ADDICTION\tdesc\tCACNA1A\tGABRA2\tGRIA1\tGRIA2\n",
            "kegg",
        )
        .unwrap();
        assert_eq!(lib.terms.len(), 1);
        assert_eq!(lib.terms[0].genes.len(), 4);
    }

    #[test]
    fn collapses_duplicate_genes() {
        let lib = parse_gmt("T\td\tA\tB\tA\t\n", "x").unwrap();
        assert_eq!(lib.terms[0].genes, vec!["A", "B"]);
    }

    #[test]
    fn malformed_line() {
        let err = parse_gmt("OK\td\tA\nBAD\tdesc only\n", "x").unwrap_err();
        assert!(matches!(err, EnrichmentError::MalformedLine(2)));
    }

    #[test]
    fn duplicate_term() {
        let err = parse_gmt("T\td\tA\nT\td\tB\n", "x").unwrap_err();
        assert!(matches!(err, EnrichmentError::DuplicateTerm(t) if t == "T"));
    }
}
