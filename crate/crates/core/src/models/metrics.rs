use serde::{Deserialize, Serialize};

use super::{label_for, AlgorithmKind, ScenarioName};
use crate::format::{self, Locale};
use crate::Label;

/// Positive class is `high_risk`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Confusion {
    pub fn from_scores(labels: &[Label], scores: &[f64]) -> Confusion {
        let mut c = Confusion::default();
        for (label, score) in labels.iter().zip(scores) {
            match (label.is_positive(), label_for(*score).is_positive()) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn sensitivity(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Mann-Whitney AUC: fraction of (positive, negative) pairs with the positive
/// scored higher, ties counting one half. 0.5 when either class is absent.
///
/// Counts are kept as integers (twice the win count) so the single final
/// division is exact to the last bit.
pub fn auc(labels: &[Label], scores: &[f64]) -> f64 {
    let mut pairs: Vec<(f64, bool)> = scores
        .iter()
        .copied()
        .zip(labels.iter().map(|l| l.is_positive()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let positives = pairs.iter().filter(|p| p.1).count() as u64;
    let negatives = pairs.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return 0.5;
    }
    let mut twice_wins: u64 = 0;
    let mut negatives_below: u64 = 0;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            j += 1;
        }
        let group = &pairs[i..j];
        let pos = group.iter().filter(|p| p.1).count() as u64;
        let neg = group.len() as u64 - pos;
        twice_wins += pos * (2 * negatives_below + neg);
        negatives_below += neg;
        i = j;
    }
    twice_wins as f64 / (2 * positives * negatives) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: String,
    pub algorithm: AlgorithmKind,
    pub confusion: Confusion,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub auc: f64,
    pub fold_count: usize,
    pub seed: u64,
}

impl EvalReport {
    pub fn from_pooled(
        scenario: &str,
        algorithm: AlgorithmKind,
        labels: &[Label],
        scores: &[f64],
        fold_count: usize,
        seed: u64,
    ) -> Self {
        let confusion = Confusion::from_scores(labels, scores);
        EvalReport {
            scenario: scenario.to_string(),
            algorithm,
            confusion,
            sensitivity: confusion.sensitivity(),
            specificity: confusion.specificity(),
            accuracy: confusion.accuracy(),
            auc: auc(labels, scores),
            fold_count,
            seed,
        }
    }
}

/// Metrics table: one row per cell, scenario title on the first row of each block.
pub fn grid_tsv(reports: &[EvalReport], locale: Locale) -> String {
    let mut out = String::from("Parameters\tAlgorithms\tSensitivity\tSpecificity\tAUC\tAccuracy\n");
    let mut last: Option<&str> = None;
    for r in reports {
        let title = if last == Some(r.scenario.as_str()) {
            ""
        } else {
            r.scenario
                .parse::<ScenarioName>()
                .map(|s| s.title())
                .unwrap_or(r.scenario.as_str())
        };
        last = Some(r.scenario.as_str());
        out.push_str(&format!(
            "{title}\t{}\t{}\t{}\t{}\t{}\n",
            r.algorithm.title(),
            format::percent(r.sensitivity, locale),
            format::percent(r.specificity, locale),
            format::percent(r.auc, locale),
            format::percent(r.accuracy, locale),
        ));
    }
    out
}
