use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::ingest::{ClinicalField, Cohort};
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical { levels: Vec<String> },
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>, levels: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical {
                levels: levels.iter().map(|l| l.to_string()).collect(),
            },
        }
    }
}

/// Complete design matrix. Categorical cells hold the level index as `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub scenario: String,
    pub features: Vec<FeatureSpec>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub sample_ids: Vec<String>,
}

impl Dataset {
    pub fn new(
        scenario: impl Into<String>,
        features: Vec<FeatureSpec>,
        rows: Vec<Vec<f64>>,
        labels: Vec<Label>,
    ) -> Result<Self, ModelError> {
        let sample_ids = (0..rows.len()).map(|i| format!("s{i}")).collect();
        let d = Dataset {
            scenario: scenario.into(),
            features,
            rows,
            labels,
            sample_ids,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidDataset(msg));
        if self.features.is_empty() {
            return Err(ModelError::EmptyFeatureSet(self.scenario.clone()));
        }
        if self.rows.len() != self.labels.len() || self.rows.len() != self.sample_ids.len() {
            return bad("rows, labels and sample ids differ in length".into());
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.features.len() {
                return bad(format!(
                    "row {i} has {} cells for {} features",
                    row.len(),
                    self.features.len()
                ));
            }
            for (v, f) in row.iter().zip(&self.features) {
                match &f.kind {
                    FeatureKind::Numeric if !v.is_finite() => {
                        return bad(format!("row {i}: `{}` is not finite", f.name))
                    }
                    FeatureKind::Categorical { levels }
                        if !(v.fract() == 0.0 && *v >= 0.0 && (*v as usize) < levels.len()) =>
                    {
                        return bad(format!("row {i}: `{}` is not a declared level", f.name))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// (high_risk, low_risk) counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|l| l.is_positive()).count();
        (pos, self.labels.len() - pos)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            scenario: self.scenario.clone(),
            features: self.features.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            sample_ids: indices
                .iter()
                .map(|&i| self.sample_ids[i].clone())
                .collect(),
        }
    }

    pub fn with_labels(&self, labels: Vec<Label>) -> Dataset {
        Dataset {
            labels,
            ..self.clone()
        }
    }
}

/// A prediction-time feature value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Numeric(f64),
    Categorical(String),
}

impl From<f64> for FeatureValue {
    fn from(v: f64) -> Self {
        FeatureValue::Numeric(v)
    }
}

impl From<&str> for FeatureValue {
    fn from(v: &str) -> Self {
        FeatureValue::Categorical(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemaKind {
    /// `mode` is the most frequent training level; unseen levels fall back to it.
    Categorical {
        levels: Vec<String>,
        mode: String,
    },
    Numeric {
        min: f64,
        max: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaFeature {
    pub name: String,
    #[serde(flatten)]
    pub kind: SchemaKind,
}

/// Field-level problem with a prediction request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldIssue {
    pub field: String,
    pub reason: String,
}

/// Feature layout a model was trained on, with observed training ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<SchemaFeature>,
}

impl FeatureSchema {
    pub fn from_dataset(data: &Dataset) -> Self {
        let features = data
            .features
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let kind = match &f.kind {
                    FeatureKind::Numeric => {
                        let (min, max) = data
                            .rows
                            .iter()
                            .map(|r| r[j])
                            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                                (lo.min(v), hi.max(v))
                            });
                        SchemaKind::Numeric { min, max }
                    }
                    FeatureKind::Categorical { levels } => {
                        let mut counts = vec![0usize; levels.len()];
                        for r in &data.rows {
                            counts[r[j] as usize] += 1;
                        }
                        let mut best = 0;
                        for (i, c) in counts.iter().enumerate() {
                            if *c > counts[best] {
                                best = i;
                            }
                        }
                        SchemaKind::Categorical {
                            levels: levels.clone(),
                            mode: levels[best].clone(),
                        }
                    }
                };
                SchemaFeature {
                    name: f.name.clone(),
                    kind,
                }
            })
            .collect();
        FeatureSchema { features }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// Every structural problem with `values`: missing, unexpected or mistyped fields.
    /// Unseen categorical levels are not issues; they are substituted in [`encode`](Self::encode).
    pub fn validate(&self, values: &BTreeMap<String, FeatureValue>) -> Vec<FieldIssue> {
        let mut issues = Vec::new();
        for f in &self.features {
            match (values.get(&f.name), &f.kind) {
                (None, _) => issues.push(FieldIssue {
                    field: f.name.clone(),
                    reason: "missing".into(),
                }),
                (Some(FeatureValue::Numeric(v)), SchemaKind::Numeric { .. }) if !v.is_finite() => {
                    issues.push(FieldIssue {
                        field: f.name.clone(),
                        reason: "not a finite number".into(),
                    })
                }
                (Some(FeatureValue::Categorical(_)), SchemaKind::Numeric { .. }) => {
                    issues.push(FieldIssue {
                        field: f.name.clone(),
                        reason: "expected a number".into(),
                    })
                }
                (Some(FeatureValue::Numeric(_)), SchemaKind::Categorical { .. }) => {
                    issues.push(FieldIssue {
                        field: f.name.clone(),
                        reason: "expected one of the categorical levels".into(),
                    })
                }
                _ => {}
            }
        }
        for name in values.keys() {
            if !self.features.iter().any(|f| &f.name == name) {
                issues.push(FieldIssue {
                    field: name.clone(),
                    reason: "unknown feature".into(),
                });
            }
        }
        issues
    }

    /// Encode to a model row. Returns the row and substitution warnings.
    pub fn encode(
        &self,
        values: &BTreeMap<String, FeatureValue>,
    ) -> Result<(Vec<f64>, Vec<String>), ModelError> {
        if let Some(issue) = self.validate(values).into_iter().next() {
            return Err(ModelError::SchemaMismatch {
                feature: issue.field,
                reason: issue.reason,
            });
        }
        let mut warnings = Vec::new();
        let row = self
            .features
            .iter()
            .map(|f| match (&values[&f.name], &f.kind) {
                (FeatureValue::Numeric(v), SchemaKind::Numeric { .. }) => *v,
                (FeatureValue::Categorical(level), SchemaKind::Categorical { levels, mode }) => {
                    match levels.iter().position(|l| l == level) {
                        Some(i) => i as f64,
                        None => {
                            warnings.push(format!(
                                "`{}`: unseen level `{level}` replaced by training mode `{mode}`",
                                f.name
                            ));
                            levels.iter().position(|l| l == mode).unwrap_or(0) as f64
                        }
                    }
                }
                _ => unreachable!("validated above"),
            })
            .collect();
        Ok((row, warnings))
    }

    /// Decode a dataset row back into named values (used to replay training rows).
    pub fn decode(&self, row: &[f64]) -> BTreeMap<String, FeatureValue> {
        self.features
            .iter()
            .zip(row)
            .map(|(f, v)| {
                let value = match &f.kind {
                    SchemaKind::Numeric { .. } => FeatureValue::Numeric(*v),
                    SchemaKind::Categorical { levels, .. } => {
                        FeatureValue::Categorical(levels[*v as usize].clone())
                    }
                };
                (f.name.clone(), value)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    ClinicalOnly,
    ClinicalNicotine,
    ClinicalKras,
    AllParameters,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 4] = [
        ScenarioName::ClinicalOnly,
        ScenarioName::ClinicalNicotine,
        ScenarioName::ClinicalKras,
        ScenarioName::AllParameters,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::ClinicalOnly => "clinical_only",
            ScenarioName::ClinicalNicotine => "clinical_nicotine",
            ScenarioName::ClinicalKras => "clinical_kras",
            ScenarioName::AllParameters => "all_parameters",
        }
    }

    /// Row label in the metrics table.
    pub fn title(self) -> &'static str {
        match self {
            ScenarioName::ClinicalOnly => "Clinical Parameters",
            ScenarioName::ClinicalNicotine => "Clinical & Nicotine addiction genes",
            ScenarioName::ClinicalKras => "Clinical & KRAS signaling genes",
            ScenarioName::AllParameters => "All parameters",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioName::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| ModelError::UnknownScenario(s.to_string()))
    }
}

pub const NICOTINE_TERM: &str = "Nicotine addiction";
pub const KRAS_TERM: &str = "KRAS signaling";

/// Feature set for one classification scenario. Genes come from the explicit
/// list plus the (DEG) members of each named gene-set term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub clinical_features: Vec<String>,
    #[serde(default)]
    pub gene_features: Vec<String>,
    #[serde(default)]
    pub gene_terms: Vec<String>,
}

pub fn default_scenarios() -> Vec<ScenarioSpec> {
    let clinical: Vec<String> = ClinicalField::ALL
        .iter()
        .map(|f| f.name().to_string())
        .collect();
    let spec = |name, terms: &[&str]| ScenarioSpec {
        name,
        clinical_features: clinical.clone(),
        gene_features: vec![],
        gene_terms: terms.iter().map(|t| t.to_string()).collect(),
    };
    vec![
        spec(ScenarioName::ClinicalOnly, &[]),
        spec(ScenarioName::ClinicalNicotine, &[NICOTINE_TERM]),
        spec(ScenarioName::ClinicalKras, &[KRAS_TERM]),
        spec(ScenarioName::AllParameters, &[NICOTINE_TERM, KRAS_TERM]),
    ]
}

/// Design matrix for one scenario plus warnings for terms/genes that could not be resolved.
pub fn build_scenario_dataset(
    cohort: &Cohort,
    genes_by_term: &BTreeMap<String, Vec<String>>,
    spec: &ScenarioSpec,
) -> Result<(Dataset, Vec<String>), ModelError> {
    let mut warnings = Vec::new();
    let mut features = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();

    for name in &spec.clinical_features {
        let field: ClinicalField = name
            .parse()
            .map_err(|_| ModelError::UnknownFeature(name.clone()))?;
        let levels = cohort
            .levels
            .get(&field)
            .ok_or_else(|| ModelError::UnknownFeature(name.clone()))?;
        let col = cohort
            .features
            .iter()
            .map(|f| {
                levels
                    .iter()
                    .position(|l| l == &f[&field])
                    .expect("cohort levels cover features") as f64
            })
            .collect();
        features.push(FeatureSpec {
            name: name.clone(),
            kind: FeatureKind::Categorical {
                levels: levels.clone(),
            },
        });
        columns.push(col);
    }

    let mut genes: Vec<String> = spec.gene_features.clone();
    for term in &spec.gene_terms {
        match genes_by_term.get(term) {
            Some(members) => genes.extend(members.iter().cloned()),
            None => warnings.push(format!("term `{term}` has no resolved genes")),
        }
    }
    let mut seen = std::collections::HashSet::new();
    genes.retain(|g| seen.insert(g.clone()));
    for gene in genes {
        match cohort.expression.gene_index(&gene) {
            Some(g) => {
                features.push(FeatureSpec::numeric(gene));
                columns.push(cohort.expression.values[g].clone());
            }
            None => warnings.push(format!("gene `{gene}` not in expression matrix; dropped")),
        }
    }
    if features.is_empty() {
        return Err(ModelError::EmptyFeatureSet(spec.name.to_string()));
    }
    let rows = (0..cohort.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    let dataset = Dataset {
        scenario: spec.name.to_string(),
        features,
        rows,
        labels: cohort.labels.clone(),
        sample_ids: cohort.expression.samples.clone(),
    };
    dataset.validate()?;
    Ok((dataset, warnings))
}
