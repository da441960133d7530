use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::clinical::{ClinicalField, ClinicalRecord, RawValue};
use super::expression::ExpressionMatrix;
use super::rules::DichotomizationRule;
use super::IngestError;
use crate::Label;

/// Dichotomized clinical levels of one sample, keyed by parameter.
pub type SampleFeatures = BTreeMap<ClinicalField, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputationPolicy {
    /// Mode of the dichotomized levels for categorical parameters, median of the
    /// raw values (before thresholding) for numeric ones.
    #[default]
    ModeMedian,
    /// As `ModeMedian` but numeric gaps take the mean.
    ModeMean,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_samples: usize,
    pub retained: usize,
    pub non_primary_dropped: usize,
    pub no_clinical_dropped: usize,
    pub unlabeled_dropped: usize,
    pub deduplicated: usize,
    pub duplicate_clinical_rows: usize,
    pub imputed: usize,
    pub imputed_by_parameter: BTreeMap<String, usize>,
}

/// Samples joined across clinical and expression tables, one clinical record per
/// expression column, in expression column order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cohort {
    pub records: Vec<ClinicalRecord>,
    pub expression: ExpressionMatrix,
    pub rules: Vec<DichotomizationRule>,
    /// Level order per parameter (declared order, or sorted observed values for direct rules).
    pub levels: BTreeMap<ClinicalField, Vec<String>>,
    /// Dichotomized values before imputation; `None` where the record had no value.
    pub observed_features: Vec<BTreeMap<ClinicalField, Option<String>>>,
    /// Complete features after imputation.
    pub features: Vec<SampleFeatures>,
    pub labels: Vec<Label>,
    pub provenance: Provenance,
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rule(&self, field: ClinicalField) -> Option<&DichotomizationRule> {
        self.rules.iter().find(|r| r.parameter == field)
    }

    pub fn label_flags(&self) -> Vec<bool> {
        self.labels.iter().map(|l| *l == Label::HighRisk).collect()
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

pub fn build_cohort(
    clinical: &[ClinicalRecord],
    expr: &ExpressionMatrix,
    rules: &[DichotomizationRule],
    imputation: ImputationPolicy,
) -> Result<Cohort, IngestError> {
    for (i, rule) in rules.iter().enumerate() {
        rule.validate()?;
        if rules[..i].iter().any(|r| r.parameter == rule.parameter) {
            return Err(IngestError::InvalidRule {
                parameter: rule.parameter.name().to_string(),
                reason: "more than one rule for this parameter".into(),
            });
        }
    }

    let mut provenance = Provenance {
        input_samples: expr.samples.len(),
        ..Default::default()
    };

    let mut by_sample: HashMap<&str, &ClinicalRecord> = HashMap::new();
    for rec in clinical {
        // first row wins
        if by_sample.contains_key(rec.sample_id.as_str()) {
            provenance.duplicate_clinical_rows += 1;
        } else {
            by_sample.insert(rec.sample_id.as_str(), rec);
        }
    }

    let mut matched = 0usize;
    let mut labeled: Vec<(usize, &ClinicalRecord)> = Vec::new();
    for (idx, sample) in expr.samples.iter().enumerate() {
        if !expr.is_primary_tumor(idx) {
            provenance.non_primary_dropped += 1;
            continue;
        }
        let Some(rec) = by_sample.get(sample.as_str()) else {
            provenance.no_clinical_dropped += 1;
            continue;
        };
        matched += 1;
        if rec.survival_time.is_none() || rec.event.is_none() {
            provenance.unlabeled_dropped += 1;
            continue;
        }
        labeled.push((idx, rec));
    }
    if matched == 0 {
        return Err(IngestError::NoOverlap);
    }
    if labeled.is_empty() {
        return Err(IngestError::UnlabeledSample);
    }

    // one sample per patient: lexicographically smallest sample id
    let mut keeper: HashMap<&str, &str> = HashMap::new();
    for (_, rec) in &labeled {
        keeper
            .entry(rec.patient_id.as_str())
            .and_modify(|s| {
                if rec.sample_id.as_str() < *s {
                    *s = rec.sample_id.as_str();
                }
            })
            .or_insert(rec.sample_id.as_str());
    }
    let retained: Vec<(usize, &ClinicalRecord)> = labeled
        .into_iter()
        .filter(|(_, rec)| {
            let keep = keeper[rec.patient_id.as_str()] == rec.sample_id;
            if !keep {
                provenance.deduplicated += 1;
            }
            keep
        })
        .collect();
    provenance.retained = retained.len();

    let records: Vec<ClinicalRecord> = retained.iter().map(|(_, r)| (*r).clone()).collect();
    let columns: Vec<usize> = retained.iter().map(|(i, _)| *i).collect();
    let expression = expr.select_samples(&columns);
    let labels: Vec<Label> = records
        .iter()
        .map(|r| Label::from_event(r.event.unwrap_or(false)))
        .collect();

    let mut levels = BTreeMap::new();
    let mut observed_features = vec![BTreeMap::new(); records.len()];
    let mut features = vec![BTreeMap::new(); records.len()];
    for rule in rules {
        let field = rule.parameter;
        let raw: Vec<Option<RawValue>> = records.iter().map(|r| r.value(field)).collect();
        let observed: Vec<Option<String>> = raw
            .iter()
            .map(|v| v.as_ref().map(|v| rule.apply(v)))
            .collect();

        let level_order = match rule.declared_levels() {
            Some(l) => l,
            None => {
                let mut l: Vec<String> = observed.iter().flatten().cloned().collect();
                l.sort();
                l.dedup();
                l
            }
        };

        let missing = observed.iter().filter(|v| v.is_none()).count();
        let fill: Option<String> = if missing == 0 {
            None
        } else if field.is_numeric() {
            let mut nums: Vec<f64> = raw
                .iter()
                .filter_map(|v| match v {
                    Some(RawValue::Num(x)) => Some(*x),
                    _ => None,
                })
                .collect();
            if nums.is_empty() {
                return Err(IngestError::NothingToImpute(field.name().to_string()));
            }
            let centre = match imputation {
                ImputationPolicy::ModeMedian => median(&mut nums),
                ImputationPolicy::ModeMean => nums.iter().sum::<f64>() / nums.len() as f64,
            };
            Some(rule.apply(&RawValue::Num(centre)))
        } else {
            let mut best: Option<(&String, usize)> = None;
            for level in &level_order {
                let count = observed
                    .iter()
                    .filter(|v| v.as_ref() == Some(level))
                    .count();
                if count > 0 && best.is_none_or(|(_, c)| count > c) {
                    best = Some((level, count));
                }
            }
            match best {
                Some((level, _)) => Some(level.clone()),
                None => return Err(IngestError::NothingToImpute(field.name().to_string())),
            }
        };

        if missing > 0 {
            provenance.imputed += missing;
            provenance
                .imputed_by_parameter
                .insert(field.name().to_string(), missing);
        }
        for (i, value) in observed.into_iter().enumerate() {
            let complete = value
                .clone()
                .or_else(|| fill.clone())
                .expect("fill computed when missing");
            features[i].insert(field, complete);
            observed_features[i].insert(field, value);
        }
        let mut level_order = level_order;
        if let Some(f) = &fill {
            if !level_order.contains(f) {
                level_order.push(f.clone());
            }
        }
        levels.insert(field, level_order);
    }

    Ok(Cohort {
        records,
        expression,
        rules: rules.to_vec(),
        levels,
        observed_features,
        features,
        labels,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{default_rules, parse_expression_str, Stage};

    fn record(
        patient: &str,
        sample: &str,
        time: Option<f64>,
        event: Option<bool>,
    ) -> ClinicalRecord {
        ClinicalRecord {
            patient_id: patient.into(),
            sample_id: sample.into(),
            survival_time: time,
            event,
            stage: Some(Stage::I),
            t_category: Some("T1".into()),
            n_category: Some("N0".into()),
            m_category: Some("M0".into()),
            dimension: Some(0.5),
            morphology: Some("8140/3".into()),
            malignancy: Some(false),
            primary_diagnosis: Some("Adenocarcinoma, NOS".into()),
            cigarettes_per_day: Some(1.0),
            years_smoked: Some(10.0),
        }
    }

    fn matrix(samples: &[&str], types: &[&str]) -> ExpressionMatrix {
        let mut s = format!(
            "gene\t{}\nsample_type\t{}\n",
            samples.join("\t"),
            types.join("\t")
        );
        s.push_str(&format!("G1\t{}\n", vec!["1"; samples.len()].join("\t")));
        parse_expression_str(&s).unwrap()
    }

    #[test]
    fn keeps_smallest_sample_per_patient() {
        let clinical = vec![
            record("P1", "S-01B", Some(5.0), Some(true)),
            record("P1", "S-01A", Some(5.0), Some(true)),
            record("P2", "T-01A", Some(7.0), Some(false)),
        ];
        let expr = matrix(&["S-01B", "S-01A", "T-01A"], &["Primary Tumor"; 3]);
        let cohort = build_cohort(
            &clinical,
            &expr,
            &default_rules(),
            ImputationPolicy::default(),
        )
        .unwrap();
        assert_eq!(cohort.expression.samples, vec!["S-01A", "T-01A"]);
        assert_eq!(cohort.provenance.deduplicated, 1);
        assert_eq!(cohort.labels, vec![Label::HighRisk, Label::LowRisk]);
    }

    #[test]
    fn dimension_boundary_labels() {
        let mut a = record("P1", "S1", Some(5.0), Some(true));
        a.dimension = Some(0.69);
        let mut b = record("P2", "S2", Some(5.0), Some(false));
        b.dimension = Some(0.70);
        let expr = matrix(&["S1", "S2"], &["Primary Tumor"; 2]);
        let cohort = build_cohort(
            &[a, b],
            &expr,
            &default_rules(),
            ImputationPolicy::default(),
        )
        .unwrap();
        assert_eq!(cohort.features[0][&ClinicalField::Dimension], "<0.7");
        assert_eq!(cohort.features[1][&ClinicalField::Dimension], ">=0.7");
    }

    #[test]
    fn mode_imputation_for_malignancy() {
        let mut recs: Vec<ClinicalRecord> = (0..4)
            .map(|i| {
                record(
                    &format!("P{i}"),
                    &format!("S{i}"),
                    Some(3.0),
                    Some(i % 2 == 0),
                )
            })
            .collect();
        recs[0].malignancy = Some(false);
        recs[1].malignancy = Some(false);
        recs[2].malignancy = Some(true);
        recs[3].malignancy = None;
        let expr = matrix(&["S0", "S1", "S2", "S3"], &["Primary Tumor"; 4]);
        let cohort =
            build_cohort(&recs, &expr, &default_rules(), ImputationPolicy::default()).unwrap();
        assert_eq!(cohort.features[3][&ClinicalField::Malignancy], "No");
        assert_eq!(
            cohort.observed_features[3][&ClinicalField::Malignancy],
            None
        );
        assert_eq!(cohort.provenance.imputed, 1);
    }

    #[test]
    fn median_imputation_before_threshold() {
        let mut recs: Vec<ClinicalRecord> = (0..4)
            .map(|i| {
                record(
                    &format!("P{i}"),
                    &format!("S{i}"),
                    Some(3.0),
                    Some(i % 2 == 0),
                )
            })
            .collect();
        for (r, v) in recs
            .iter_mut()
            .zip([Some(10.0), Some(40.0), Some(50.0), None])
        {
            r.years_smoked = v;
        }
        let expr = matrix(&["S0", "S1", "S2", "S3"], &["Primary Tumor"; 4]);
        let cohort =
            build_cohort(&recs, &expr, &default_rules(), ImputationPolicy::default()).unwrap();
        // median of 10, 40, 50 is 40
        assert_eq!(cohort.features[3][&ClinicalField::YearsSmoked], ">=32");
    }

    #[test]
    fn partition_of_inputs() {
        let clinical = vec![
            record("P1", "A", Some(5.0), Some(true)),
            record("P1", "B", Some(5.0), Some(true)),
            record("P2", "C", None, None),
            record("P3", "D", Some(2.0), Some(false)),
            record("P4", "E", Some(2.0), Some(false)),
        ];
        let expr = matrix(
            &["A", "B", "C", "D", "E", "F"],
            &[
                "Primary Tumor",
                "Primary Tumor",
                "Primary Tumor",
                "Solid Tissue Normal",
                "Primary Tumor",
                "Primary Tumor",
            ],
        );
        let c = build_cohort(
            &clinical,
            &expr,
            &default_rules(),
            ImputationPolicy::default(),
        )
        .unwrap();
        let p = &c.provenance;
        assert_eq!(
            (
                p.retained,
                p.non_primary_dropped,
                p.deduplicated,
                p.unlabeled_dropped,
                p.no_clinical_dropped
            ),
            (2, 1, 1, 1, 1)
        );
        assert_eq!(
            p.retained
                + p.non_primary_dropped
                + p.deduplicated
                + p.unlabeled_dropped
                + p.no_clinical_dropped,
            p.input_samples
        );
    }

    #[test]
    fn no_overlap_and_unlabeled() {
        let expr = matrix(&["X"], &["Primary Tumor"]);
        let err = build_cohort(
            &[record("P", "Y", Some(1.0), Some(true))],
            &expr,
            &default_rules(),
            ImputationPolicy::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::NoOverlap));
        let err = build_cohort(
            &[record("P", "X", None, None)],
            &expr,
            &default_rules(),
            ImputationPolicy::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::UnlabeledSample));
    }

    #[test]
    fn rebuild_is_idempotent() {
        let clinical = vec![
            record("P1", "S-01B", Some(5.0), Some(true)),
            record("P1", "S-01A", Some(5.0), Some(true)),
            record("P2", "T-01A", Some(7.0), Some(false)),
        ];
        let expr = matrix(&["S-01B", "S-01A", "T-01A"], &["Primary Tumor"; 3]);
        let first = build_cohort(
            &clinical,
            &expr,
            &default_rules(),
            ImputationPolicy::default(),
        )
        .unwrap();
        let second = build_cohort(
            &first.records,
            &first.expression,
            &default_rules(),
            ImputationPolicy::default(),
        )
        .unwrap();
        assert_eq!(second.provenance.deduplicated, 0);
        assert_eq!(second.provenance.retained, first.provenance.retained);
        assert_eq!(second.features, first.features);
    }
}
