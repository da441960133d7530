use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EnrichmentError, GeneSetLibrary};
use crate::diffexpr::{bh_adjust, DegList};
use crate::special::ln_choose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentResult {
    pub term: String,
    pub overlap_up: Vec<String>,
    pub overlap_down: Vec<String>,
    /// Query genes in the term.
    pub overlap: usize,
    /// Term genes inside the universe.
    pub term_size: usize,
    /// Query genes inside the universe.
    pub query_size: usize,
    pub universe_size: usize,
    pub p_value: f64,
    pub q_value: f64,
}

impl EnrichmentResult {
    pub fn genes(&self) -> impl Iterator<Item = &String> {
        self.overlap_up.iter().chain(&self.overlap_down)
    }
}

/// `P(X >= k)` for `X ~ Hypergeometric(population, successes, draws)`.
/// Terms are evaluated through log binomial coefficients so genome-scale
/// populations do not overflow.
pub fn hypergeometric_sf(k: u64, population: u64, successes: u64, draws: u64) -> f64 {
    let lo = (successes + draws).saturating_sub(population);
    let hi = successes.min(draws);
    if k <= lo {
        return 1.0;
    }
    if k > hi {
        return 0.0;
    }
    let ln_total = ln_choose(population, draws);
    let sum: f64 = (k..=hi)
        .map(|i| {
            (ln_choose(successes, i) + ln_choose(population - successes, draws - i) - ln_total)
                .exp()
        })
        .sum();
    sum.clamp(0.0, 1.0)
}

/// Over-representation of `up ∪ down` in each term. Term genes outside
/// `universe` are dropped first; terms left empty are not tested.
/// Results are sorted by q, then term name.
pub fn enrich(
    degs: &DegList,
    library: &GeneSetLibrary,
    universe: &BTreeSet<String>,
) -> Result<Vec<EnrichmentResult>, EnrichmentError> {
    if universe.is_empty() {
        return Err(EnrichmentError::EmptyUniverse);
    }
    let up: BTreeSet<&str> = degs
        .up
        .iter()
        .map(String::as_str)
        .filter(|g| universe.contains(*g))
        .collect();
    let down: BTreeSet<&str> = degs
        .down
        .iter()
        .map(String::as_str)
        .filter(|g| universe.contains(*g))
        .collect();
    let query_size = up.union(&down).count();
    if query_size == 0 {
        return Err(EnrichmentError::EmptyQuery);
    }
    let universe_size = universe.len();

    let mut results: Vec<EnrichmentResult> = library
        .terms
        .par_iter()
        .filter_map(|set| {
            let members: Vec<&String> =
                set.genes.iter().filter(|g| universe.contains(*g)).collect();
            if members.is_empty() {
                return None;
            }
            let overlap_up: Vec<String> = members
                .iter()
                .filter(|g| up.contains(g.as_str()))
                .map(|g| (*g).clone())
                .collect();
            let overlap_down: Vec<String> = members
                .iter()
                .filter(|g| down.contains(g.as_str()) && !up.contains(g.as_str()))
                .map(|g| (*g).clone())
                .collect();
            let overlap = overlap_up.len() + overlap_down.len();
            Some(EnrichmentResult {
                term: set.term.clone(),
                overlap_up,
                overlap_down,
                overlap,
                term_size: members.len(),
                query_size,
                universe_size,
                p_value: hypergeometric_sf(
                    overlap as u64,
                    universe_size as u64,
                    members.len() as u64,
                    query_size as u64,
                ),
                q_value: f64::NAN,
            })
        })
        .collect();

    let p: Vec<f64> = results.iter().map(|r| r.p_value).collect();
    let q = bh_adjust(&p).expect("hypergeometric tails lie in [0, 1]");
    for (r, q) in results.iter_mut().zip(q) {
        r.q_value = q;
    }
    results.sort_by(|a, b| {
        a.q_value
            .total_cmp(&b.q_value)
            .then_with(|| a.term.cmp(&b.term))
    });
    Ok(results)
}

pub fn enrichment_tsv(results: &[EnrichmentResult]) -> String {
    let mut out = String::from("term\tk\tK\tn\tN\tp\tq\tup\tdown\n");
    for r in results {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.4e}\t{:.4e}\t{}\t{}\n",
            r.term,
            r.overlap,
            r.term_size,
            r.query_size,
            r.universe_size,
            r.p_value,
            r.q_value,
            r.overlap_up.join(","),
            r.overlap_down.join(",")
        ));
    }
    out
}
