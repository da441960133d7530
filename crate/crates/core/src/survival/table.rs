use serde::{Deserialize, Serialize};

use super::km::{km_estimate, median_survival, KmCurve};
use super::logrank::logrank_test;
use super::{SurvivalError, SurvivalObservation};
use crate::format::{self, Locale};
use crate::ingest::{ClinicalField, Cohort};

/// One (parameter, level) row. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub parameter: String,
    pub level: String,
    pub n: usize,
    pub events: usize,
    pub median: Option<f64>,
    pub se: Option<f64>,
    pub lcl: Option<f64>,
    pub ucl: Option<f64>,
    /// Log-rank p across the parameter's levels; absent for single-level parameters.
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub level: String,
    pub n: usize,
    pub events: usize,
    pub curve: KmCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterCurves {
    pub parameter: String,
    pub levels: Vec<LevelCurve>,
    pub chi_square: Option<f64>,
    pub degrees_of_freedom: Option<usize>,
    pub p_value: Option<f64>,
}

pub type SurvivalCurves = Vec<ParameterCurves>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalTable {
    pub rows: Vec<SurvivalRow>,
    #[serde(skip)]
    pub curves: SurvivalCurves,
}

impl SurvivalTable {
    pub fn to_tsv(&self, locale: Locale) -> String {
        let mut out = String::from("parameter\tlevel\tn\tevents\tmedian\tse\tlcl\tucl\tp\n");
        let mut previous: Option<&str> = None;
        for row in &self.rows {
            let first = previous != Some(row.parameter.as_str());
            previous = Some(row.parameter.as_str());
            let p = match (first, row.p) {
                (true, Some(p)) => format::p_value(p, locale),
                (true, None) => "NA".to_string(),
                (false, _) => String::new(),
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                if first { row.parameter.as_str() } else { "" },
                row.level,
                row.n,
                row.events,
                format::optional_decimal(row.median, 2, locale),
                format::optional_decimal(row.se, 3, locale),
                format::optional_decimal(row.lcl, 3, locale),
                format::optional_decimal(row.ucl, 3, locale),
                p
            ));
        }
        out
    }

    pub fn parameter(&self, name: &str) -> Option<&ParameterCurves> {
        self.curves.iter().find(|c| c.parameter == name)
    }
}

/// Per-parameter KM table. Records missing the parameter, the survival time,
/// or with a non-positive time are left out of that parameter only.
pub fn survival_table(
    cohort: &Cohort,
    parameters: &[String],
) -> Result<SurvivalTable, SurvivalError> {
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for name in parameters {
        let field: ClinicalField = name
            .parse()
            .map_err(|_| SurvivalError::UnknownParameter(name.clone()))?;
        let levels = cohort
            .levels
            .get(&field)
            .ok_or_else(|| SurvivalError::UnknownParameter(name.clone()))?;

        let observations: Vec<SurvivalObservation> = cohort
            .records
            .iter()
            .zip(&cohort.observed_features)
            .filter_map(|(rec, feats)| {
                let level = feats.get(&field)?.as_ref()?;
                let time = rec.survival_time.filter(|t| *t > 0.0)?;
                Some(SurvivalObservation::new(time, rec.event?, level.clone()))
            })
            .collect();

        let present: Vec<String> = levels
            .iter()
            .filter(|l| observations.iter().any(|o| &o.group == *l))
            .cloned()
            .collect();

        let test = if present.len() >= 2 {
            match logrank_test(&observations, &present) {
                Ok(r) => Some(r),
                Err(SurvivalError::NoEvents) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };

        let mut level_curves = Vec::new();
        for level in &present {
            let subset: Vec<SurvivalObservation> = observations
                .iter()
                .filter(|o| &o.group == level)
                .cloned()
                .collect();
            let curve = km_estimate(&subset)?;
            let m = median_survival(&curve);
            rows.push(SurvivalRow {
                parameter: name.clone(),
                level: level.clone(),
                n: curve.n_total,
                events: curve.n_events,
                median: m.median,
                se: m.std_error,
                lcl: m.lcl_95,
                ucl: m.ucl_95,
                p: test.as_ref().map(|t| t.p_value),
            });
            level_curves.push(LevelCurve {
                level: level.clone(),
                n: curve.n_total,
                events: curve.n_events,
                curve,
            });
        }
        curves.push(ParameterCurves {
            parameter: name.clone(),
            levels: level_curves,
            chi_square: test.as_ref().map(|t| t.chi_square),
            degrees_of_freedom: test.as_ref().map(|t| t.degrees_of_freedom),
            p_value: test.as_ref().map(|t| t.p_value),
        });
    }
    Ok(SurvivalTable { rows, curves })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_renders_in_column_order() {
        let table = SurvivalTable {
            rows: vec![SurvivalRow {
                parameter: "stage".into(),
                level: "Stage i".into(),
                n: 270,
                events: 65,
                median: Some(87.33),
                se: Some(25.101),
                lcl: Some(38.133),
                ucl: Some(136.527),
                p: Some(0.0001),
            }],
            curves: vec![],
        };
        assert_eq!(
            table.to_tsv(Locale::Comma).lines().nth(1).unwrap(),
            "stage\tStage i\t270\t65\t87,33\t25,101\t38,133\t136,527\t<0,001"
        );
        let json = serde_json::to_string(&table.rows[0]).unwrap();
        assert_eq!(
            json,
            r#"{"parameter":"stage","level":"Stage i","n":270,"events":65,"median":87.33,"se":25.101,"lcl":38.133,"ucl":136.527,"p":0.0001}"#
        );
    }
}
