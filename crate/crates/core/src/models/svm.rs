//! Soft-margin linear SVM trained with the Pegasos subgradient schedule.
//!
//! Inputs are one-hot encoded (categorical) and z-scored (numeric); the bias is
//! an extra constant-1 coordinate and is regularized with the weights. After
//! every epoch the full primal objective is evaluated and the best iterate so
//! far is kept, starting from the zero vector.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, FeatureKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    /// Multiplies the signed margin before the logistic link.
    pub margin_scale: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 50,
            margin_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoding {
    OneHot { levels: usize },
    ZScore { mean: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub encoding: Vec<Encoding>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub margin_scale: f64,
    pub lambda: f64,
    /// Primal objective of the kept iterate on the training data.
    pub objective: f64,
}

fn encoding_for(data: &Dataset) -> Vec<Encoding> {
    let n = data.len() as f64;
    data.features
        .iter()
        .enumerate()
        .map(|(j, f)| match &f.kind {
            FeatureKind::Categorical { levels } => Encoding::OneHot {
                levels: levels.len(),
            },
            FeatureKind::Numeric => {
                let mean = data.rows.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = data.rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                Encoding::ZScore {
                    mean,
                    scale: if sd > 0.0 { sd } else { 1.0 },
                }
            }
        })
        .collect()
}

pub fn encoded_len(encoding: &[Encoding]) -> usize {
    encoding
        .iter()
        .map(|e| match e {
            Encoding::OneHot { levels } => *levels,
            Encoding::ZScore { .. } => 1,
        })
        .sum()
}

/// Encoded features followed by the constant bias coordinate.
pub fn encode_row(encoding: &[Encoding], row: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(encoded_len(encoding) + 1);
    for (e, x) in encoding.iter().zip(row) {
        match e {
            Encoding::OneHot { levels } => {
                let at = *x as usize;
                out.extend((0..*levels).map(|l| if l == at { 1.0 } else { 0.0 }));
            }
            Encoding::ZScore { mean, scale } => out.push((x - mean) / scale),
        }
    }
    out.push(1.0);
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign(data: &Dataset, i: usize) -> f64 {
    if data.labels[i].is_positive() {
        1.0
    } else {
        -1.0
    }
}

/// `lambda/2 |w|^2 + mean(max(0, 1 - y w.x))` over augmented rows.
pub fn primal_objective(w: &[f64], encoded: &[Vec<f64>], y: &[f64], lambda: f64) -> f64 {
    let hinge = encoded
        .iter()
        .zip(y)
        .map(|(x, yi)| (1.0 - yi * dot(w, x)).max(0.0))
        .sum::<f64>()
        / encoded.len() as f64;
    0.5 * lambda * dot(w, w) + hinge
}

impl LinearSvm {
    pub fn fit(data: &Dataset, params: SvmParams, seed: u64) -> LinearSvm {
        let encoding = encoding_for(data);
        let encoded: Vec<Vec<f64>> = data.rows.iter().map(|r| encode_row(&encoding, r)).collect();
        let y: Vec<f64> = (0..data.len()).map(|i| sign(data, i)).collect();
        let dim = encoded_len(&encoding) + 1;
        let lambda = params.lambda;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![0.0; dim];
        let mut best_w = w.clone();
        let mut best_obj = primal_objective(&w, &encoded, &y, lambda);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let radius = 1.0 / lambda.sqrt();
        let mut t = 0usize;
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let margin = y[i] * dot(&w, &encoded[i]);
                let shrink = 1.0 - eta * lambda;
                for wj in w.iter_mut() {
                    *wj *= shrink;
                }
                if margin < 1.0 {
                    for (wj, xj) in w.iter_mut().zip(&encoded[i]) {
                        *wj += eta * y[i] * xj;
                    }
                }
                let norm = dot(&w, &w).sqrt();
                if norm > radius {
                    let s = radius / norm;
                    for wj in w.iter_mut() {
                        *wj *= s;
                    }
                }
            }
            let obj = primal_objective(&w, &encoded, &y, lambda);
            if obj < best_obj {
                best_obj = obj;
                best_w = w.clone();
            }
        }
        let bias = best_w.pop().expect("bias coordinate");
        LinearSvm {
            encoding,
            weights: best_w,
            bias,
            margin_scale: params.margin_scale,
            lambda,
            objective: best_obj,
        }
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        let x = encode_row(&self.encoding, row);
        dot(&self.weights, &x[..self.weights.len()]) + self.bias
    }

    /// Logistic link of the scaled margin; exactly 0.5 on the hyperplane.
    pub fn score(&self, row: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.margin_scale * self.margin(row)).exp())
    }

    /// Augmented weight vector (weights then bias).
    pub fn augmented(&self) -> Vec<f64> {
        let mut w = self.weights.clone();
        w.push(self.bias);
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::dataset::FeatureSpec;
    use crate::Label;

    #[test]
    fn separates_two_points_per_side() {
        let data = Dataset::new(
            "t",
            vec![
                FeatureSpec::numeric("x"),
                FeatureSpec::categorical("c", &["a", "b"]),
            ],
            vec![
                vec![-2.0, 0.0],
                vec![-1.0, 1.0],
                vec![1.0, 0.0],
                vec![2.0, 1.0],
            ],
            vec![
                Label::LowRisk,
                Label::LowRisk,
                Label::HighRisk,
                Label::HighRisk,
            ],
        )
        .unwrap();
        let svm = LinearSvm::fit(&data, SvmParams::default(), 3);
        assert_eq!(svm.weights.len(), 3);
        for (row, label) in data.rows.iter().zip(&data.labels) {
            assert_eq!(svm.score(row) >= 0.5, label.is_positive());
        }
        assert!(svm.objective <= 1.0);
    }

    #[test]
    fn hyperplane_scores_half() {
        let svm = LinearSvm {
            encoding: vec![Encoding::ZScore {
                mean: 0.0,
                scale: 1.0,
            }],
            weights: vec![2.0],
            bias: -1.0,
            margin_scale: 1.0,
            lambda: 1e-3,
            objective: 0.0,
        };
        assert_eq!(svm.score(&[0.5]), 0.5);
    }
}
