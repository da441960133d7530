use serde::{Deserialize, Serialize};

use super::clinical::{ClinicalField, RawValue};
use super::IngestError;

/// How one clinical parameter is collapsed into discrete levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomizationRule {
    pub parameter: ClinicalField,
    #[serde(flatten)]
    pub kind: RuleKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleKind {
    /// `value < cutoff` -> `left_label`, otherwise `right_label`.
    Threshold {
        cutoff: f64,
        left_label: String,
        right_label: String,
    },
    /// `value == category` -> `label` (or the category itself), anything else -> `label_other`.
    CategoryVsRest {
        category: String,
        #[serde(default)]
        label: Option<String>,
        label_other: String,
    },
    /// Levels are the observed values.
    Direct,
}

impl DichotomizationRule {
    pub fn threshold(parameter: ClinicalField, cutoff: f64, left: &str, right: &str) -> Self {
        Self {
            parameter,
            kind: RuleKind::Threshold {
                cutoff,
                left_label: left.into(),
                right_label: right.into(),
            },
        }
    }

    pub fn category(
        parameter: ClinicalField,
        category: &str,
        label: Option<&str>,
        other: &str,
    ) -> Self {
        Self {
            parameter,
            kind: RuleKind::CategoryVsRest {
                category: category.into(),
                label: label.map(str::to_string),
                label_other: other.into(),
            },
        }
    }

    pub fn direct(parameter: ClinicalField) -> Self {
        Self {
            parameter,
            kind: RuleKind::Direct,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let invalid = |reason: &str| IngestError::InvalidRule {
            parameter: self.parameter.name().to_string(),
            reason: reason.to_string(),
        };
        match &self.kind {
            RuleKind::Threshold {
                cutoff,
                left_label,
                right_label,
            } => {
                if !self.parameter.is_numeric() {
                    return Err(invalid("threshold rules need a numeric parameter"));
                }
                if !cutoff.is_finite() {
                    return Err(invalid("cutoff must be finite"));
                }
                if left_label == right_label {
                    return Err(invalid("labels must differ"));
                }
            }
            RuleKind::CategoryVsRest {
                category,
                label,
                label_other,
            } => {
                if self.parameter.is_numeric() {
                    return Err(invalid("category rules need a categorical parameter"));
                }
                if label.as_deref().unwrap_or(category) == label_other {
                    return Err(invalid("labels must differ"));
                }
            }
            RuleKind::Direct => {
                if self.parameter.is_numeric() {
                    return Err(invalid("numeric parameters need a threshold"));
                }
            }
        }
        Ok(())
    }

    /// Declared levels in display order; `None` for direct rules (levels come from the data).
    pub fn declared_levels(&self) -> Option<Vec<String>> {
        match &self.kind {
            RuleKind::Threshold {
                left_label,
                right_label,
                ..
            } => Some(vec![left_label.clone(), right_label.clone()]),
            RuleKind::CategoryVsRest {
                category,
                label,
                label_other,
            } => Some(vec![
                label.clone().unwrap_or_else(|| category.clone()),
                label_other.clone(),
            ]),
            RuleKind::Direct => None,
        }
    }

    pub fn apply(&self, value: &RawValue) -> String {
        match (&self.kind, value) {
            (
                RuleKind::Threshold {
                    cutoff,
                    left_label,
                    right_label,
                },
                RawValue::Num(v),
            ) => {
                if v < cutoff {
                    left_label.clone()
                } else {
                    right_label.clone()
                }
            }
            (
                RuleKind::CategoryVsRest {
                    category,
                    label,
                    label_other,
                },
                RawValue::Cat(c),
            ) => {
                if c == category {
                    label.clone().unwrap_or_else(|| category.clone())
                } else {
                    label_other.clone()
                }
            }
            (_, RawValue::Cat(c)) => c.clone(),
            (_, RawValue::Num(v)) => format!("{v}"),
        }
    }
}

/// Built-in dichotomization matching the reference clinical table layout.
pub fn default_rules() -> Vec<DichotomizationRule> {
    use ClinicalField::*;
    vec![
        DichotomizationRule::direct(Stage),
        DichotomizationRule::category(TCategory, "T1", None, "Other"),
        DichotomizationRule::category(NCategory, "N0", None, "Other"),
        DichotomizationRule::category(MCategory, "M0", None, "M1"),
        DichotomizationRule::threshold(Dimension, 0.7, "<0.7", ">=0.7"),
        DichotomizationRule::category(Morphology, "8140/3", None, "Others"),
        DichotomizationRule::direct(Malignancy),
        DichotomizationRule::category(
            PrimaryDiagnosis,
            "Adenocarcinoma, NOS",
            Some("Adeno"),
            "Other",
        ),
        DichotomizationRule::threshold(CigarettesPerDay, 2.2, "<2.2", ">=2.2"),
        DichotomizationRule::threshold(YearsSmoked, 32.0, "<32", ">=32"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_boundary() {
        let rule = DichotomizationRule::threshold(ClinicalField::Dimension, 0.7, "<0.7", ">=0.7");
        assert_eq!(rule.apply(&RawValue::Num(0.69)), "<0.7");
        assert_eq!(rule.apply(&RawValue::Num(0.70)), ">=0.7");
    }

    #[test]
    fn category_vs_rest() {
        let rule =
            DichotomizationRule::category(ClinicalField::Morphology, "8140/3", None, "Others");
        assert_eq!(rule.apply(&RawValue::Cat("8140/3".into())), "8140/3");
        assert_eq!(rule.apply(&RawValue::Cat("8480/3".into())), "Others");
    }

    #[test]
    fn all_defaults_validate() {
        for r in default_rules() {
            r.validate().unwrap();
        }
    }

    #[test]
    fn rejects_bad_rules() {
        assert!(
            DichotomizationRule::threshold(ClinicalField::Stage, 1.0, "a", "b")
                .validate()
                .is_err()
        );
        assert!(
            DichotomizationRule::threshold(ClinicalField::Dimension, f64::NAN, "a", "b")
                .validate()
                .is_err()
        );
        assert!(
            DichotomizationRule::threshold(ClinicalField::Dimension, 1.0, "a", "a")
                .validate()
                .is_err()
        );
        assert!(DichotomizationRule::direct(ClinicalField::YearsSmoked)
            .validate()
            .is_err());
    }

    #[test]
    fn toml_round_trip() {
        let rule: DichotomizationRule =
            toml::from_str("parameter = \"years_smoked\"\nkind = \"threshold\"\ncutoff = 32.0\nleft_label = \"<32\"\nright_label = \">=32\"\n")
                .unwrap();
        assert_eq!(
            rule,
            DichotomizationRule::threshold(ClinicalField::YearsSmoked, 32.0, "<32", ">=32")
        );
    }
}
