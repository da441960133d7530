//! Two-group differential expression: fold change, pooled Student t test,
//! Benjamini-Hochberg adjustment and up/down gene selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{self, Locale};
use crate::ingest::ExpressionMatrix;
use crate::special::student_t_two_sided;

#[derive(Debug, Error, PartialEq)]
pub enum DiffExprError {
    #[error("group {group} has {size} samples; at least 2 are required")]
    GroupTooSmall { group: &'static str, size: usize },
    #[error("{labels} labels given for {samples} samples")]
    LabelMismatch { labels: usize, samples: usize },
    #[error("p-value {0} is outside [0, 1]")]
    OutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffExprConfig {
    /// Added to both group means before taking the fold change. Not used by the t test.
    pub pseudocount: f64,
}

impl Default for DiffExprConfig {
    fn default() -> Self {
        Self { pseudocount: 1.0 }
    }
}

/// Group `a` is the labeled-`true` group (high risk), `b` the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneStats {
    pub gene: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub log2_fc: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub q_value: f64,
    /// Both groups had zero variance.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegList {
    pub up: Vec<String>,
    pub down: Vec<String>,
    pub threshold: f64,
    pub alpha: f64,
}

impl DegList {
    pub fn len(&self) -> usize {
        self.up.len() + self.down.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, gene: &str) -> bool {
        self.up.iter().chain(&self.down).any(|g| g == gene)
    }
}

fn mean_and_ss(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.iter().all(|v| *v == values[0]) {
        return (values[0], 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, ss)
}

/// Pooled-variance two-sample t test. Returns (t, two-sided p, degenerate).
/// With zero pooled variance: equal means give t = 0, p = 1; different means give p = 0.
pub fn pooled_t_test(a: &[f64], b: &[f64]) -> (f64, f64, bool) {
    let (mean_a, ss_a) = mean_and_ss(a);
    let (mean_b, ss_b) = mean_and_ss(b);
    let df = (a.len() + b.len() - 2) as f64;
    let pooled = (ss_a + ss_b) / df;
    if pooled == 0.0 {
        return if mean_a == mean_b {
            (0.0, 1.0, true)
        } else {
            let t = if mean_a > mean_b {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            (t, 0.0, true)
        };
    }
    let se = (pooled * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
    let t = (mean_a - mean_b) / se;
    (t, student_t_two_sided(t, df), false)
}

fn log2_ratio(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a / b).log2()
    }
}

pub fn differential_expression(
    expr: &ExpressionMatrix,
    labels: &[bool],
    config: &DiffExprConfig,
) -> Result<Vec<GeneStats>, DiffExprError> {
    if labels.len() != expr.samples.len() {
        return Err(DiffExprError::LabelMismatch {
            labels: labels.len(),
            samples: expr.samples.len(),
        });
    }
    let n_a = labels.iter().filter(|l| **l).count();
    let n_b = labels.len() - n_a;
    if n_a < 2 {
        return Err(DiffExprError::GroupTooSmall {
            group: "a",
            size: n_a,
        });
    }
    if n_b < 2 {
        return Err(DiffExprError::GroupTooSmall {
            group: "b",
            size: n_b,
        });
    }
    let eps = config.pseudocount;
    let mut stats: Vec<GeneStats> = expr
        .genes
        .par_iter()
        .zip(expr.values.par_iter())
        .map(|(gene, row)| {
            let a: Vec<f64> = row
                .iter()
                .zip(labels)
                .filter(|(_, l)| **l)
                .map(|(v, _)| *v)
                .collect();
            let b: Vec<f64> = row
                .iter()
                .zip(labels)
                .filter(|(_, l)| !**l)
                .map(|(v, _)| *v)
                .collect();
            let mean_a = a.iter().sum::<f64>() / a.len() as f64;
            let mean_b = b.iter().sum::<f64>() / b.len() as f64;
            let (t, p, degenerate) = pooled_t_test(&a, &b);
            GeneStats {
                gene: gene.clone(),
                mean_a,
                mean_b,
                log2_fc: log2_ratio(mean_a + eps, mean_b + eps),
                t_statistic: t,
                p_value: p,
                q_value: f64::NAN,
                degenerate,
            }
        })
        .collect();
    let p: Vec<f64> = stats.iter().map(|s| s.p_value).collect();
    let q = bh_adjust(&p)?;
    for (s, q) in stats.iter_mut().zip(q) {
        s.q_value = q;
    }
    Ok(stats)
}

/// Benjamini-Hochberg step-up: sorted ascending, `q_(i) = min_{j >= i} p_(j) m / j`,
/// capped at 1, returned in input order.
pub fn bh_adjust(p_values: &[f64]) -> Result<Vec<f64>, DiffExprError> {
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(DiffExprError::OutOfRange(bad));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut q = vec![0.0; m];
    let mut running = f64::INFINITY;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let candidate = p_values[idx] * m as f64 / (rank + 1) as f64;
        running = running.min(candidate);
        q[idx] = running.min(1.0);
    }
    Ok(q)
}

pub fn select_degs(stats: &[GeneStats], log2_threshold: f64, alpha: f64) -> DegList {
    let mut up = Vec::new();
    let mut down = Vec::new();
    for s in stats {
        if s.q_value.is_nan() || s.q_value >= alpha {
            continue;
        }
        if s.log2_fc >= log2_threshold {
            up.push(s.gene.clone());
        } else if s.log2_fc <= -log2_threshold {
            down.push(s.gene.clone());
        }
    }
    DegList {
        up,
        down,
        threshold: log2_threshold,
        alpha,
    }
}

/// Sorted by q ascending, gene symbol breaking ties.
pub fn gene_stats_tsv(stats: &[GeneStats], locale: Locale) -> String {
    let mut sorted: Vec<&GeneStats> = stats.iter().collect();
    sorted.sort_by(|a, b| {
        a.q_value
            .total_cmp(&b.q_value)
            .then_with(|| a.gene.cmp(&b.gene))
    });
    let mut out = String::from("gene\tlog2_fc\tt\tp\tq\n");
    for s in sorted {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            s.gene,
            format::decimal(s.log2_fc, 4, locale),
            format::decimal(s.t_statistic, 4, locale),
            sci(s.p_value),
            sci(s.q_value)
        ));
    }
    out
}

fn sci(v: f64) -> String {
    format!("{v:.4e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_expression_str;

    #[test]
    fn worked_t_example() {
        let (t, p, degenerate) = pooled_t_test(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]);
        assert!((t - -2.0 / (5.0f64 / 6.0).sqrt()).abs() < 1e-12);
        assert!((t - -2.1909).abs() < 1e-4);
        assert!((p - 0.071).abs() < 1e-2);
        assert!(!degenerate);
    }

    #[test]
    fn identical_groups_give_zero() {
        let (t, p, _) = pooled_t_test(&[1.0, 5.0, 2.0], &[5.0, 2.0, 1.0]);
        assert_eq!(t, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_different_means() {
        let (t, p, degenerate) = pooled_t_test(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(p, 0.0);
        assert!(t.is_infinite() && t < 0.0);
        assert!(degenerate);
    }

    #[test]
    fn fold_change_without_pseudocount() {
        let m = parse_expression_str("gene\ta1\ta2\tb1\tb2\nG\t8\t8\t2\t2\n").unwrap();
        let s = differential_expression(
            &m,
            &[true, true, false, false],
            &DiffExprConfig { pseudocount: 0.0 },
        )
        .unwrap();
        assert_eq!(s[0].log2_fc, 2.0);
        let s =
            differential_expression(&m, &[true, true, false, false], &DiffExprConfig::default())
                .unwrap();
        assert!((s[0].log2_fc - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn small_group_rejected() {
        let m = parse_expression_str("gene\ta1\tb1\tb2\nG\t8\t2\t2\n").unwrap();
        let err = differential_expression(&m, &[true, false, false], &DiffExprConfig::default())
            .unwrap_err();
        assert_eq!(
            err,
            DiffExprError::GroupTooSmall {
                group: "a",
                size: 1
            }
        );
    }

    #[test]
    fn bh_worked_examples() {
        let q = bh_adjust(&[0.01, 0.02, 0.04]).unwrap();
        for (got, want) in q.iter().zip([0.03, 0.03, 0.04]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(bh_adjust(&[0.2]).unwrap(), vec![0.2]);
        assert_eq!(bh_adjust(&[0.05; 4]).unwrap(), vec![0.05; 4]);
        assert_eq!(
            bh_adjust(&[1.5]).unwrap_err(),
            DiffExprError::OutOfRange(1.5)
        );
    }

    #[test]
    fn select_partition() {
        let mk = |g: &str, fc: f64, q: f64| GeneStats {
            gene: g.into(),
            mean_a: 0.0,
            mean_b: 0.0,
            log2_fc: fc,
            t_statistic: 0.0,
            p_value: q,
            q_value: q,
            degenerate: false,
        };
        let degs = select_degs(
            &[
                mk("UP", 1.5, 0.01),
                mk("DOWN", -1.5, 0.01),
                mk("NS", 2.0, 0.06),
                mk("SMALL", 0.5, 0.001),
            ],
            1.0,
            0.05,
        );
        assert_eq!(degs.up, vec!["UP"]);
        assert_eq!(degs.down, vec!["DOWN"]);
    }

    #[test]
    fn tsv_sorted_by_q_then_gene() {
        let mk = |g: &str, q: f64| GeneStats {
            gene: g.into(),
            mean_a: 1.0,
            mean_b: 1.0,
            log2_fc: 0.0,
            t_statistic: 0.0,
            p_value: q,
            q_value: q,
            degenerate: false,
        };
        let tsv = gene_stats_tsv(&[mk("B", 0.5), mk("A", 0.5), mk("C", 0.1)], Locale::Dot);
        let genes: Vec<&str> = tsv
            .lines()
            .skip(1)
            .map(|l| l.split('\t').next().unwrap())
            .collect();
        assert_eq!(genes, vec!["C", "A", "B"]);
    }
}
