//! Classifiers, cross-validation and the scenario × algorithm evaluation grid.
//!
//! All four learners share a [`Dataset`] representation in which categorical
//! cells hold level indices. A [`TrainedModel`] wraps the learned parameters with
//! the [`FeatureSchema`] needed to turn a named feature map back into a row.

pub mod bayes;
pub mod cv;
pub mod dataset;
pub mod forest;
pub mod metrics;
pub mod svm;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bayes::{BayesParams, NaiveBayes};
pub use cv::{cross_validate, scenario_grid, stratified_kfold};
pub use dataset::{
    build_scenario_dataset, default_scenarios, Dataset, FeatureKind, FeatureSchema, FeatureSpec,
    FeatureValue, FieldIssue, ScenarioName, ScenarioSpec, SchemaFeature, SchemaKind, KRAS_TERM,
    NICOTINE_TERM,
};
pub use forest::{ForestParams, RandomForest};
pub use metrics::{auc, grid_tsv, Confusion, EvalReport};
pub use svm::{LinearSvm, SvmParams};
pub use tree::{DecisionTree, TreeParams};

use crate::Label;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("scenario `{0}` has no features")]
    EmptyFeatureSet(String),
    #[error("dataset has a single class ({0})")]
    DegenerateDataset(Label),
    #[error("feature `{feature}`: {reason}")]
    SchemaMismatch { feature: String, reason: String },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("k must be at least 2, got {0}")]
    InvalidFolds(usize),
    #[error("class {class} has {size} samples, fewer than k = {k}")]
    ClassTooSmall { class: Label, size: usize, k: usize },
    #[error("model schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    DecisionTree,
    RandomForest,
    NaiveBayes,
    LinearSvm,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::DecisionTree,
        AlgorithmKind::RandomForest,
        AlgorithmKind::NaiveBayes,
        AlgorithmKind::LinearSvm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::DecisionTree => "decision_tree",
            AlgorithmKind::RandomForest => "random_forest",
            AlgorithmKind::NaiveBayes => "naive_bayes",
            AlgorithmKind::LinearSvm => "linear_svm",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            AlgorithmKind::DecisionTree => "Decision Tree",
            AlgorithmKind::RandomForest => "Random Forest",
            AlgorithmKind::NaiveBayes => "Naive Bayes",
            AlgorithmKind::LinearSvm => "SVM",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AlgorithmKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub bayes: BayesParams,
    pub svm: SvmParams,
}

impl Hyperparameters {
    /// The block relevant to `kind`, as JSON.
    pub fn for_kind(&self, kind: AlgorithmKind) -> serde_json::Value {
        let v = match kind {
            AlgorithmKind::DecisionTree => serde_json::to_value(self.tree),
            AlgorithmKind::RandomForest => serde_json::to_value(self.forest),
            AlgorithmKind::NaiveBayes => serde_json::to_value(self.bayes),
            AlgorithmKind::LinearSvm => serde_json::to_value(self.svm),
        };
        v.expect("hyperparameters serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum ModelParameters {
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    NaiveBayes(NaiveBayes),
    LinearSvm(LinearSvm),
}

impl ModelParameters {
    pub fn kind(&self) -> AlgorithmKind {
        match self {
            ModelParameters::DecisionTree(_) => AlgorithmKind::DecisionTree,
            ModelParameters::RandomForest(_) => AlgorithmKind::RandomForest,
            ModelParameters::NaiveBayes(_) => AlgorithmKind::NaiveBayes,
            ModelParameters::LinearSvm(_) => AlgorithmKind::LinearSvm,
        }
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        match self {
            ModelParameters::DecisionTree(m) => m.score(row),
            ModelParameters::RandomForest(m) => m.score(row),
            ModelParameters::NaiveBayes(m) => m.score(row),
            ModelParameters::LinearSvm(m) => m.score(row),
        }
    }
}

/// Self-describing persisted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub kind: AlgorithmKind,
    pub scenario: String,
    pub seed: u64,
    pub hyperparameters: serde_json::Value,
    pub schema: FeatureSchema,
    pub parameters: ModelParameters,
}

impl TrainedModel {
    pub fn score_row(&self, row: &[f64]) -> f64 {
        self.parameters.score(row)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let text = crate::canonical::to_string_pretty(self).map_err(|source| ModelError::Json {
            path: path.display().to_string(),
            source,
        })?;
        std::fs::write(path, text).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<TrainedModel, ModelError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: p.clone(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            ModelError::Json { source, .. } => ModelError::Json { path: p, source },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<TrainedModel, ModelError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|source| ModelError::Json {
                path: String::new(),
                source,
            })?;
        let found = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .unwrap_or(0) as u32;
        if found != MODEL_SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion {
                found,
                expected: MODEL_SCHEMA_VERSION,
            });
        }
        let model: TrainedModel =
            serde_json::from_value(value).map_err(|source| ModelError::Json {
                path: String::new(),
                source,
            })?;
        if model.kind != model.parameters.kind() {
            return Err(ModelError::InvalidDataset(format!(
                "model declares `{}` but stores `{}` parameters",
                model.kind,
                model.parameters.kind()
            )));
        }
        Ok(model)
    }
}

pub fn train(
    kind: AlgorithmKind,
    data: &Dataset,
    hp: &Hyperparameters,
    seed: u64,
) -> Result<TrainedModel, ModelError> {
    data.validate()?;
    match data.class_counts() {
        (0, _) => return Err(ModelError::DegenerateDataset(Label::LowRisk)),
        (_, 0) => return Err(ModelError::DegenerateDataset(Label::HighRisk)),
        _ => {}
    }
    let parameters = match kind {
        AlgorithmKind::DecisionTree => {
            ModelParameters::DecisionTree(DecisionTree::fit(data, hp.tree))
        }
        AlgorithmKind::RandomForest => {
            ModelParameters::RandomForest(RandomForest::fit(data, hp.forest, seed))
        }
        AlgorithmKind::NaiveBayes => ModelParameters::NaiveBayes(NaiveBayes::fit(data, hp.bayes)),
        AlgorithmKind::LinearSvm => ModelParameters::LinearSvm(LinearSvm::fit(data, hp.svm, seed)),
    };
    Ok(TrainedModel {
        schema_version: MODEL_SCHEMA_VERSION,
        kind,
        scenario: data.scenario.clone(),
        seed,
        hyperparameters: hp.for_kind(kind),
        schema: FeatureSchema::from_dataset(data),
        parameters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
    pub warnings: Vec<String>,
}

/// Scores at or above 0.5 are `high_risk`.
pub fn label_for(score: f64) -> Label {
    Label::from_event(score >= 0.5)
}

pub fn predict(
    model: &TrainedModel,
    features: &BTreeMap<String, FeatureValue>,
) -> Result<Prediction, ModelError> {
    let (row, warnings) = model.schema.encode(features)?;
    let score = model.score_row(&row);
    Ok(Prediction {
        label: label_for(score),
        score,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::Node;

    fn sign_data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64 - 9.5, (i % 2) as f64])
            .collect();
        let labels = rows.iter().map(|r| Label::from_event(r[0] > 0.0)).collect();
        Dataset::new(
            "t",
            vec![
                FeatureSpec::numeric("x"),
                FeatureSpec::categorical("c", &["a", "b"]),
            ],
            rows,
            labels,
        )
        .unwrap()
    }

    #[test]
    fn single_class_is_degenerate() {
        let d = sign_data().with_labels(vec![Label::LowRisk; 20]);
        for kind in AlgorithmKind::ALL {
            assert!(matches!(
                train(kind, &d, &Hyperparameters::default(), 1),
                Err(ModelError::DegenerateDataset(_))
            ));
        }
    }

    #[test]
    fn constant_leaf_predicts_high_risk() {
        let d = sign_data();
        let mut model = train(
            AlgorithmKind::DecisionTree,
            &d,
            &Hyperparameters::default(),
            1,
        )
        .unwrap();
        model.parameters = ModelParameters::DecisionTree(DecisionTree {
            nodes: vec![Node::Leaf {
                high_risk: 1.0,
                low_risk: 0.0,
                samples: 20,
            }],
        });
        let features = model.schema.decode(&d.rows[0]);
        let p = predict(&model, &features).unwrap();
        assert_eq!((p.label, p.score), (Label::HighRisk, 1.0));
    }

    #[test]
    fn missing_feature_is_schema_mismatch() {
        let d = sign_data();
        let model = train(
            AlgorithmKind::NaiveBayes,
            &d,
            &Hyperparameters::default(),
            1,
        )
        .unwrap();
        let mut features = model.schema.decode(&d.rows[0]);
        features.remove("c");
        assert!(
            matches!(predict(&model, &features), Err(ModelError::SchemaMismatch { feature, .. }) if feature == "c")
        );
    }

    #[test]
    fn tie_goes_to_high_risk() {
        assert_eq!(label_for(0.5), Label::HighRisk);
        assert_eq!(label_for(0.4999999), Label::LowRisk);
    }

    #[test]
    fn save_load_round_trip_and_version_check() {
        let dir = tempfile::tempdir().unwrap();
        let d = sign_data();
        for kind in AlgorithmKind::ALL {
            let model = train(kind, &d, &Hyperparameters::default(), 5).unwrap();
            let path = dir.path().join(format!("{kind}.json"));
            model.save(&path).unwrap();
            let back = TrainedModel::load(&path).unwrap();
            assert_eq!(back, model);
            assert_eq!(back.kind, kind);
        }
        let path = dir.path().join("linear_svm.json");
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"schema_version\": 1", "\"schema_version\": 2");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            TrainedModel::load(&path),
            Err(ModelError::SchemaVersion { found: 2, .. })
        ));
    }

    #[test]
    fn svm_weight_length_matches_encoding() {
        let model = train(
            AlgorithmKind::LinearSvm,
            &sign_data(),
            &Hyperparameters::default(),
            2,
        )
        .unwrap();
        match &model.parameters {
            ModelParameters::LinearSvm(s) => assert_eq!(s.weights.len(), 3),
            _ => unreachable!(),
        }
    }

    #[test]
    fn algorithm_names() {
        assert_eq!(
            "random_forest".parse::<AlgorithmKind>().unwrap(),
            AlgorithmKind::RandomForest
        );
        assert!(matches!(
            "xgboost".parse::<AlgorithmKind>(),
            Err(ModelError::UnknownAlgorithm(_))
        ));
    }
}
