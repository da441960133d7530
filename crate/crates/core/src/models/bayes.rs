use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, FeatureKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesParams {
    /// Additive (Laplace) smoothing for categorical likelihoods.
    pub smoothing: f64,
    pub variance_floor: f64,
}

impl Default for BayesParams {
    fn default() -> Self {
        Self {
            smoothing: 1.0,
            variance_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Likelihood {
    Gaussian { mean: f64, variance: f64 },
    Categorical { probabilities: Vec<f64> },
}

impl Likelihood {
    fn ln(&self, x: f64) -> f64 {
        match self {
            Likelihood::Gaussian { mean, variance } => {
                let d = x - mean;
                -0.5 * (2.0 * std::f64::consts::PI * variance).ln() - d * d / (2.0 * variance)
            }
            Likelihood::Categorical { probabilities } => probabilities[x as usize].ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub prior: f64,
    pub likelihoods: Vec<Likelihood>,
}

impl ClassModel {
    fn fit(data: &Dataset, members: &[usize], params: &BayesParams) -> ClassModel {
        let n = members.len() as f64;
        let likelihoods = data
            .features
            .iter()
            .enumerate()
            .map(|(j, f)| match &f.kind {
                FeatureKind::Numeric => {
                    let mean = members.iter().map(|&i| data.rows[i][j]).sum::<f64>() / n;
                    let var = members
                        .iter()
                        .map(|&i| (data.rows[i][j] - mean).powi(2))
                        .sum::<f64>()
                        / n;
                    Likelihood::Gaussian {
                        mean,
                        variance: var.max(params.variance_floor),
                    }
                }
                FeatureKind::Categorical { levels } => {
                    let mut counts = vec![0.0; levels.len()];
                    for &i in members {
                        counts[data.rows[i][j] as usize] += 1.0;
                    }
                    let denom = n + params.smoothing * levels.len() as f64;
                    Likelihood::Categorical {
                        probabilities: counts
                            .iter()
                            .map(|c| (c + params.smoothing) / denom)
                            .collect(),
                    }
                }
            })
            .collect();
        ClassModel {
            prior: n / data.len() as f64,
            likelihoods,
        }
    }

    fn log_joint(&self, row: &[f64]) -> f64 {
        self.prior.ln()
            + self
                .likelihoods
                .iter()
                .zip(row)
                .map(|(l, x)| l.ln(*x))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub high_risk: ClassModel,
    pub low_risk: ClassModel,
}

impl NaiveBayes {
    /// Both classes must be present.
    pub fn fit(data: &Dataset, params: BayesParams) -> NaiveBayes {
        let (pos, neg): (Vec<usize>, Vec<usize>) =
            (0..data.len()).partition(|&i| data.labels[i].is_positive());
        NaiveBayes {
            high_risk: ClassModel::fit(data, &pos, &params),
            low_risk: ClassModel::fit(data, &neg, &params),
        }
    }

    /// Posterior probability of `high_risk`, evaluated in log space.
    pub fn score(&self, row: &[f64]) -> f64 {
        let lh = self.high_risk.log_joint(row);
        let ll = self.low_risk.log_joint(row);
        1.0 / (1.0 + (ll - lh).exp())
    }
}
