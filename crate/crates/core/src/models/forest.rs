use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::tree::{DecisionTree, TreeBuilder, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means ceil(sqrt(#features)).
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 10,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestTree {
    pub tree: DecisionTree,
    /// Features the tree actually splits on.
    pub features: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<ForestTree>,
    pub seed: u64,
    pub max_features: usize,
}

impl RandomForest {
    /// Tree `i` draws its bootstrap and split subsets from ChaCha8 stream `i` of `seed`,
    /// so the forest is identical regardless of thread scheduling.
    pub fn fit(data: &Dataset, params: ForestParams, seed: u64) -> RandomForest {
        let p = data.features.len();
        let max_features = params
            .max_features
            .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
            .clamp(1, p);
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
        };
        let n = data.len();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let tree = TreeBuilder::new(data, tree_params, Some((&mut rng, max_features)))
                    .build(bootstrap);
                let features = tree.split_features();
                ForestTree { tree, features }
            })
            .collect();
        RandomForest {
            trees,
            seed,
            max_features,
        }
    }

    /// Mean of the trees' leaf probabilities.
    pub fn score(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.tree.score(row)).sum::<f64>() / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::dataset::FeatureSpec;
    use crate::Label;

    fn data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64, ((i * 13) % 7) as f64])
            .collect();
        let labels = (0..40).map(|i| Label::from_event(i >= 20)).collect();
        Dataset::new(
            "t",
            vec![FeatureSpec::numeric("a"), FeatureSpec::numeric("b")],
            rows,
            labels,
        )
        .unwrap()
    }

    #[test]
    fn same_seed_same_forest() {
        let p = ForestParams {
            n_trees: 12,
            ..Default::default()
        };
        let a = RandomForest::fit(&data(), p, 7);
        let b = RandomForest::fit(&data(), p, 7);
        assert_eq!(a, b);
        assert_eq!(a.trees.len(), 12);
        assert_eq!(a.max_features, 2);
        let c = RandomForest::fit(&data(), p, 8);
        assert_ne!(a, c);
    }
}
