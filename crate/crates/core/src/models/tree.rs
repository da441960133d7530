//! CART classification tree with Gini impurity.
//!
//! Numeric features split on midpoints between consecutive distinct values
//! (`x <= threshold` goes left); categorical features split one level against
//! the rest (`x == level` goes left). A node splits only when the best
//! candidate strictly lowers the weighted impurity.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, FeatureKind};

const GAIN_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_samples_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    Threshold(f64),
    Level(usize),
}

impl SplitRule {
    pub fn goes_left(&self, value: f64) -> bool {
        match *self {
            SplitRule::Threshold(t) => value <= t,
            SplitRule::Level(l) => value as usize == l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        high_risk: f64,
        low_risk: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        rule: SplitRule,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Root is `nodes[0]`.
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub rule: SplitRule,
    pub weighted_gini: f64,
}

pub fn gini(positives: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = positives as f64 / total as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

fn weighted(left_pos: usize, left_n: usize, right_pos: usize, right_n: usize) -> f64 {
    let n = (left_n + right_n) as f64;
    (left_n as f64 * gini(left_pos, left_n) + right_n as f64 * gini(right_pos, right_n)) / n
}

/// Lowest weighted-Gini split of `indices` over `features`, honouring the leaf-size floor.
/// Ties keep the earliest candidate (feature order, then ascending threshold / level).
pub fn best_split(
    data: &Dataset,
    indices: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitCandidate> {
    let n = indices.len();
    let total_pos = indices
        .iter()
        .filter(|&&i| data.labels[i].is_positive())
        .count();
    let min_leaf = min_samples_leaf.max(1);
    let mut best: Option<SplitCandidate> = None;
    let mut consider = |cand: SplitCandidate| {
        if best.is_none_or(|b| cand.weighted_gini < b.weighted_gini) {
            best = Some(cand);
        }
    };

    for &f in features {
        match &data.features[f].kind {
            FeatureKind::Numeric => {
                let mut order: Vec<usize> = indices.to_vec();
                order.sort_by(|&a, &b| data.rows[a][f].total_cmp(&data.rows[b][f]));
                let mut left_pos = 0;
                for pos in 0..n - 1 {
                    if data.labels[order[pos]].is_positive() {
                        left_pos += 1;
                    }
                    let here = data.rows[order[pos]][f];
                    let next = data.rows[order[pos + 1]][f];
                    if here == next {
                        continue;
                    }
                    let left_n = pos + 1;
                    if left_n < min_leaf || n - left_n < min_leaf {
                        continue;
                    }
                    let mut threshold = here + (next - here) / 2.0;
                    if threshold >= next {
                        threshold = here;
                    }
                    consider(SplitCandidate {
                        feature: f,
                        rule: SplitRule::Threshold(threshold),
                        weighted_gini: weighted(left_pos, left_n, total_pos - left_pos, n - left_n),
                    });
                }
            }
            FeatureKind::Categorical { levels } => {
                let mut count = vec![0usize; levels.len()];
                let mut pos = vec![0usize; levels.len()];
                for &i in indices {
                    let l = data.rows[i][f] as usize;
                    count[l] += 1;
                    if data.labels[i].is_positive() {
                        pos[l] += 1;
                    }
                }
                for l in 0..levels.len() {
                    let left_n = count[l];
                    if left_n < min_leaf || n - left_n < min_leaf {
                        continue;
                    }
                    consider(SplitCandidate {
                        feature: f,
                        rule: SplitRule::Level(l),
                        weighted_gini: weighted(pos[l], left_n, total_pos - pos[l], n - left_n),
                    });
                }
            }
        }
    }
    best
}

pub(crate) struct TreeBuilder<'a, R: Rng> {
    data: &'a Dataset,
    params: TreeParams,
    /// Per-split feature subsampling (random forest); `None` searches every feature.
    subsample: Option<(&'a mut R, usize)>,
    nodes: Vec<Node>,
}

impl<'a, R: Rng> TreeBuilder<'a, R> {
    pub(crate) fn new(
        data: &'a Dataset,
        params: TreeParams,
        subsample: Option<(&'a mut R, usize)>,
    ) -> Self {
        Self {
            data,
            params,
            subsample,
            nodes: Vec::new(),
        }
    }

    pub(crate) fn build(mut self, indices: Vec<usize>) -> DecisionTree {
        self.grow(indices, 0);
        DecisionTree { nodes: self.nodes }
    }

    fn leaf(&mut self, indices: &[usize]) -> usize {
        let n = indices.len();
        let pos = indices
            .iter()
            .filter(|&&i| self.data.labels[i].is_positive())
            .count();
        let high = if n == 0 { 0.5 } else { pos as f64 / n as f64 };
        self.nodes.push(Node::Leaf {
            high_risk: high,
            low_risk: 1.0 - high,
            samples: n,
        });
        self.nodes.len() - 1
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let n = indices.len();
        let pos = indices
            .iter()
            .filter(|&&i| self.data.labels[i].is_positive())
            .count();
        let parent = gini(pos, n);
        if depth >= self.params.max_depth
            || pos == 0
            || pos == n
            || n < 2 * self.params.min_samples_leaf.max(1)
        {
            return self.leaf(&indices);
        }
        let p = self.data.features.len();
        let features: Vec<usize> = match &mut self.subsample {
            Some((rng, m)) => {
                let mut f = sample(&mut **rng, p, (*m).min(p)).into_vec();
                f.sort_unstable();
                f
            }
            None => (0..p).collect(),
        };
        let Some(split) = best_split(self.data, &indices, &features, self.params.min_samples_leaf)
        else {
            return self.leaf(&indices);
        };
        if split.weighted_gini >= parent - GAIN_EPSILON {
            return self.leaf(&indices);
        }
        let (left, right): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| split.rule.goes_left(self.data.rows[i][split.feature]));
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            high_risk: 0.0,
            low_risk: 0.0,
            samples: 0,
        });
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            rule: split.rule,
            left: l,
            right: r,
        };
        id
    }
}

impl DecisionTree {
    pub fn fit(data: &Dataset, params: TreeParams) -> DecisionTree {
        TreeBuilder::<rand_chacha::ChaCha8Rng>::new(data, params, None)
            .build((0..data.len()).collect())
    }

    /// Probability of `high_risk`.
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { high_risk, .. } => return *high_risk,
                Node::Split {
                    feature,
                    rule,
                    left,
                    right,
                } => {
                    i = if rule.goes_left(row[*feature]) {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn root_split(&self) -> Option<(usize, SplitRule)> {
        match self.nodes.first()? {
            Node::Split { feature, rule, .. } => Some((*feature, *rule)),
            Node::Leaf { .. } => None,
        }
    }

    /// Sorted, unique features used by any split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                _ => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}
