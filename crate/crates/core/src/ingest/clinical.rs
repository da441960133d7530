use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{is_missing, parse_number, IngestError};

/// Days per month used to convert follow-up days into months.
pub const DAYS_PER_MONTH: f64 = 30.44;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    I,
    Ii,
    Iii,
    Iv,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::I => "i",
            Stage::Ii => "ii",
            Stage::Iii => "iii",
            Stage::Iv => "iv",
        }
    }

    /// Accepts "Stage IIB", "stage ii", "IV", "iii"... Sub-stage letters are dropped.
    pub fn parse(cell: &str) -> Option<Stage> {
        if is_missing(cell) {
            return None;
        }
        let lower = cell.trim().to_ascii_lowercase();
        let roman = lower.strip_prefix("stage").unwrap_or(&lower).trim();
        let roman: String = roman
            .chars()
            .take_while(|c| *c == 'i' || *c == 'v')
            .collect();
        match roman.as_str() {
            "i" => Some(Stage::I),
            "ii" => Some(Stage::Ii),
            "iii" => Some(Stage::Iii),
            "iv" => Some(Stage::Iv),
            _ => None,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One clinical row. Survival time is in months.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicalRecord {
    pub patient_id: String,
    pub sample_id: String,
    pub survival_time: Option<f64>,
    /// `Some(true)` = death observed; only set when `survival_time` is.
    pub event: Option<bool>,
    pub stage: Option<Stage>,
    pub t_category: Option<String>,
    pub n_category: Option<String>,
    pub m_category: Option<String>,
    pub dimension: Option<f64>,
    pub morphology: Option<String>,
    pub malignancy: Option<bool>,
    pub primary_diagnosis: Option<String>,
    pub cigarettes_per_day: Option<f64>,
    pub years_smoked: Option<f64>,
}

/// Clinical parameters that can be dichotomized and analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClinicalField {
    Stage,
    #[serde(rename = "ajcc_pathologic_t")]
    TCategory,
    #[serde(rename = "ajcc_pathologic_n")]
    NCategory,
    #[serde(rename = "ajcc_pathologic_m")]
    MCategory,
    Dimension,
    Morphology,
    Malignancy,
    PrimaryDiagnosis,
    CigarettesPerDay,
    YearsSmoked,
}

impl ClinicalField {
    pub const ALL: [ClinicalField; 10] = [
        ClinicalField::Stage,
        ClinicalField::TCategory,
        ClinicalField::NCategory,
        ClinicalField::MCategory,
        ClinicalField::Dimension,
        ClinicalField::Morphology,
        ClinicalField::Malignancy,
        ClinicalField::PrimaryDiagnosis,
        ClinicalField::CigarettesPerDay,
        ClinicalField::YearsSmoked,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClinicalField::Stage => "stage",
            ClinicalField::TCategory => "ajcc_pathologic_t",
            ClinicalField::NCategory => "ajcc_pathologic_n",
            ClinicalField::MCategory => "ajcc_pathologic_m",
            ClinicalField::Dimension => "dimension",
            ClinicalField::Morphology => "morphology",
            ClinicalField::Malignancy => "malignancy",
            ClinicalField::PrimaryDiagnosis => "primary_diagnosis",
            ClinicalField::CigarettesPerDay => "cigarettes_per_day",
            ClinicalField::YearsSmoked => "years_smoked",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            ClinicalField::Dimension | ClinicalField::CigarettesPerDay | ClinicalField::YearsSmoked
        )
    }
}

impl fmt::Display for ClinicalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClinicalField {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClinicalField::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| IngestError::UnknownParameter(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Num(f64),
    Cat(String),
}

impl ClinicalRecord {
    pub fn value(&self, field: ClinicalField) -> Option<RawValue> {
        use ClinicalField::*;
        match field {
            Stage => self.stage.map(|s| RawValue::Cat(s.as_str().to_string())),
            TCategory => self.t_category.clone().map(RawValue::Cat),
            NCategory => self.n_category.clone().map(RawValue::Cat),
            MCategory => self.m_category.clone().map(RawValue::Cat),
            Dimension => self.dimension.map(RawValue::Num),
            Morphology => self.morphology.clone().map(RawValue::Cat),
            Malignancy => self
                .malignancy
                .map(|m| RawValue::Cat(if m { "Yes" } else { "No" }.to_string())),
            PrimaryDiagnosis => self.primary_diagnosis.clone().map(RawValue::Cat),
            CigarettesPerDay => self.cigarettes_per_day.map(RawValue::Num),
            YearsSmoked => self.years_smoked.map(RawValue::Num),
        }
    }
}

/// Column-name map for the clinical table. Defaults follow the GDC clinical export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClinicalColumns {
    pub patient_id: String,
    pub sample_id: String,
    pub vital_status: String,
    pub days_to_death: String,
    pub days_to_last_follow_up: String,
    pub stage: String,
    pub t_category: String,
    pub n_category: String,
    pub m_category: String,
    pub dimension: String,
    pub morphology: String,
    pub malignancy: String,
    pub primary_diagnosis: String,
    pub cigarettes_per_day: String,
    pub years_smoked: String,
}

impl Default for ClinicalColumns {
    fn default() -> Self {
        Self {
            patient_id: "patient_id".into(),
            sample_id: "sample_id".into(),
            vital_status: "vital_status".into(),
            days_to_death: "days_to_death".into(),
            days_to_last_follow_up: "days_to_last_follow_up".into(),
            stage: "ajcc_pathologic_stage".into(),
            t_category: "ajcc_pathologic_t".into(),
            n_category: "ajcc_pathologic_n".into(),
            m_category: "ajcc_pathologic_m".into(),
            dimension: "dimension".into(),
            morphology: "morphology".into(),
            malignancy: "malignancy".into(),
            primary_diagnosis: "primary_diagnosis".into(),
            cigarettes_per_day: "cigarettes_per_day".into(),
            years_smoked: "years_smoked".into(),
        }
    }
}

fn text(cell: Option<&str>) -> Option<String> {
    cell.filter(|c| !is_missing(c))
        .map(|c| c.trim().to_string())
}

/// "T1a" -> "T1", "N2" -> "N2". X categories count as missing.
fn tnm_major(cell: Option<&str>) -> Option<String> {
    let raw = text(cell)?;
    let mut chars = raw.chars();
    let letter = chars.next()?.to_ascii_uppercase();
    let rest: String = chars.collect();
    let code: String = rest
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect();
    let major = code.chars().next()?;
    if major.eq_ignore_ascii_case(&'x') {
        return None;
    }
    if major.is_ascii_digit() {
        Some(format!("{letter}{major}"))
    } else {
        // Tis and similar
        Some(format!("{letter}{code}"))
    }
}

fn yes_no(cell: Option<&str>) -> Option<bool> {
    let raw = text(cell)?.to_ascii_lowercase();
    match raw.as_str() {
        "yes" | "y" | "true" | "1" => Some(true),
        "no" | "n" | "false" | "0" => Some(false),
        _ => None,
    }
}

fn vital(cell: Option<&str>) -> Option<bool> {
    let raw = text(cell)?.to_ascii_lowercase();
    match raw.as_str() {
        "dead" | "deceased" | "1" | "true" => Some(true),
        "alive" | "living" | "0" | "false" => Some(false),
        _ => None,
    }
}

fn non_negative(cell: Option<&str>) -> Option<f64> {
    cell.and_then(parse_number).filter(|v| *v >= 0.0)
}

pub fn parse_clinical_table(
    path: &Path,
    columns: &ClinicalColumns,
) -> Result<Vec<ClinicalRecord>, IngestError> {
    let contents = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_clinical_str(&contents, columns)
}

pub fn parse_clinical_str(
    contents: &str,
    columns: &ClinicalColumns,
) -> Result<Vec<ClinicalRecord>, IngestError> {
    let mut lines = contents.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = match lines.next() {
        Some(h) => h
            .trim_start_matches('\u{feff}')
            .split('\t')
            .map(str::trim)
            .collect(),
        None => return Err(IngestError::EmptyFile),
    };
    let index: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (*h, i)).collect();
    let col = |name: &str| index.get(name).copied();

    let patient_col = col(&columns.patient_id)
        .ok_or_else(|| IngestError::MissingColumn(columns.patient_id.clone()))?;
    let sample_col = col(&columns.sample_id).unwrap_or(patient_col);
    let vital_col = col(&columns.vital_status);
    let death_col = col(&columns.days_to_death);
    let follow_col = col(&columns.days_to_last_follow_up);
    let stage_col = col(&columns.stage);
    let t_col = col(&columns.t_category);
    let n_col = col(&columns.n_category);
    let m_col = col(&columns.m_category);
    let dim_col = col(&columns.dimension);
    let morph_col = col(&columns.morphology);
    let malig_col = col(&columns.malignancy);
    let diag_col = col(&columns.primary_diagnosis);
    let cig_col = col(&columns.cigarettes_per_day);
    let years_col = col(&columns.years_smoked);

    let mut records = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.split('\t').collect();
        let get = |c: Option<usize>| c.and_then(|i| cells.get(i).copied());
        let patient_id = match text(get(Some(patient_col))) {
            Some(p) => p,
            None => {
                log::warn!("skipping clinical row without patient id");
                continue;
            }
        };
        let sample_id = text(get(Some(sample_col))).unwrap_or_else(|| patient_id.clone());

        let observed_death = vital(get(vital_col));
        let days = match observed_death {
            Some(true) => non_negative(get(death_col)),
            Some(false) => non_negative(get(follow_col)),
            None => None,
        };
        let survival_time = days.map(|d| d / DAYS_PER_MONTH);
        let event = survival_time.and(observed_death);

        records.push(ClinicalRecord {
            patient_id,
            sample_id,
            survival_time,
            event,
            stage: get(stage_col).and_then(Stage::parse),
            t_category: tnm_major(get(t_col)),
            n_category: tnm_major(get(n_col)),
            m_category: tnm_major(get(m_col)),
            dimension: non_negative(get(dim_col)),
            morphology: text(get(morph_col)),
            malignancy: yes_no(get(malig_col)),
            primary_diagnosis: text(get(diag_col)),
            cigarettes_per_day: non_negative(get(cig_col)),
            years_smoked: non_negative(get(years_col)),
        });
    }
    if records.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "patient_id\tsample_id\tvital_status\tdays_to_death\tdays_to_last_follow_up\tajcc_pathologic_stage\tajcc_pathologic_t\tajcc_pathologic_n\tajcc_pathologic_m\tdimension\tmorphology\tmalignancy\tprimary_diagnosis\tcigarettes_per_day\tyears_smoked\textra";

    #[test]
    fn three_rows_populated() {
        let body = format!(
            "{HEADER}\n\
             P1\tP1-01A\tDead\t304.4\tNA\tStage IIB\tT2a\tN1\tM0\t0.5\t8140/3\tNo\tAdenocarcinoma, NOS\t2.5\t30\tzzz\n\
             P2\tP2-01A\tAlive\tNA\t913.2\tStage I\tT1b\tN0\tMX\t1.2\t8480/3\tyes\tMucinous adenocarcinoma\t1\t40\tq\n\
             P3\tP3-01A\tAlive\t--\t60.88\tStage IV\tT4\tN2\tM1b\t0.7\t8140/3\tNo\tAdenocarcinoma, NOS\tnull\t12\tq\n"
        );
        let recs = parse_clinical_str(&body, &ClinicalColumns::default()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].patient_id, "P1");
        assert!((recs[0].survival_time.unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(recs[0].event, Some(true));
        assert_eq!(recs[0].stage, Some(Stage::Ii));
        assert_eq!(recs[0].t_category.as_deref(), Some("T2"));
        assert_eq!(recs[1].m_category, None);
        assert_eq!(recs[1].malignancy, Some(true));
        assert!((recs[1].survival_time.unwrap() - 30.0).abs() < 1e-12);
        assert_eq!(recs[2].m_category.as_deref(), Some("M1"));
        assert_eq!(recs[2].cigarettes_per_day, None);
        assert_eq!(recs[2].stage, Some(Stage::Iv));
    }

    #[test]
    fn na_survival_time_is_missing() {
        let body = format!("{HEADER}\nP1\tS1\tDead\tNA\t100\t\t\t\t\t\t\t\t\t\t\t\n");
        let recs = parse_clinical_str(&body, &ClinicalColumns::default()).unwrap();
        assert_eq!(recs[0].survival_time, None);
        assert_eq!(recs[0].event, None);
    }

    #[test]
    fn header_only_is_empty() {
        let err =
            parse_clinical_str(&format!("{HEADER}\n"), &ClinicalColumns::default()).unwrap_err();
        assert!(matches!(err, IngestError::EmptyFile));
    }

    #[test]
    fn missing_patient_column() {
        let err = parse_clinical_str(
            "sample_id\tvital_status\nS1\tDead\n",
            &ClinicalColumns::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "patient_id"));
    }

    #[test]
    fn stage_parsing() {
        assert_eq!(Stage::parse("Stage IIIA"), Some(Stage::Iii));
        assert_eq!(Stage::parse("iv"), Some(Stage::Iv));
        assert_eq!(Stage::parse("Stage X"), None);
        assert_eq!(Stage::parse("NA"), None);
    }
}
