use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::format::Locale;
use crate::ingest::{
    default_rules, ClinicalColumns, ClinicalField, DichotomizationRule, ImputationPolicy,
};
use crate::models::{default_scenarios, AlgorithmKind, Hyperparameters, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryPath {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub clinical: PathBuf,
    pub expression: PathBuf,
    #[serde(default)]
    pub libraries: Vec<LibraryPath>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegSettings {
    pub log2_threshold: f64,
    pub alpha: f64,
    pub pseudocount: f64,
}

impl Default for DegSettings {
    fn default() -> Self {
        Self {
            log2_threshold: 1.0,
            alpha: 0.05,
            pseudocount: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnrichmentSettings {
    pub alpha: f64,
}

impl Default for EnrichmentSettings {
    fn default() -> Self {
        Self { alpha: 0.05 }
    }
}

fn default_k() -> usize {
    10
}

fn default_seed() -> u64 {
    42
}

fn default_parameters() -> Vec<String> {
    ClinicalField::ALL
        .iter()
        .map(|f| f.name().to_string())
        .collect()
}

fn default_algorithms() -> Vec<AlgorithmKind> {
    AlgorithmKind::ALL.to_vec()
}

/// Everything a run needs. Relative input paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub inputs: Inputs,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub locale: Locale,
    #[serde(default)]
    pub imputation: ImputationPolicy,
    #[serde(default)]
    pub columns: ClinicalColumns,
    #[serde(default = "default_rules")]
    pub rules: Vec<DichotomizationRule>,
    #[serde(default)]
    pub deg: DegSettings,
    #[serde(default)]
    pub enrichment: EnrichmentSettings,
    #[serde(default = "default_parameters")]
    pub survival_parameters: Vec<String>,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<AlgorithmKind>,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
}

impl PipelineConfig {
    pub fn new(
        clinical: impl Into<PathBuf>,
        expression: impl Into<PathBuf>,
        libraries: Vec<LibraryPath>,
        out: impl Into<PathBuf>,
    ) -> Self {
        Self {
            inputs: Inputs {
                clinical: clinical.into(),
                expression: expression.into(),
                libraries,
                out: out.into(),
            },
            seed: default_seed(),
            k: default_k(),
            locale: Locale::default(),
            imputation: ImputationPolicy::default(),
            columns: ClinicalColumns::default(),
            rules: default_rules(),
            deg: DegSettings::default(),
            enrichment: EnrichmentSettings::default(),
            survival_parameters: default_parameters(),
            scenarios: default_scenarios(),
            algorithms: default_algorithms(),
            hyperparameters: Hyperparameters::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Parse and resolve relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_against(base);
        Ok(config)
    }

    pub fn resolve_against(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.inputs.clinical);
        fix(&mut self.inputs.expression);
        fix(&mut self.inputs.out);
        for lib in &mut self.inputs.libraries {
            fix(&mut lib.path);
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        let positive = [
            ("deg.log2_threshold", self.deg.log2_threshold),
            ("deg.alpha", self.deg.alpha),
            ("enrichment.alpha", self.enrichment.alpha),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.deg.alpha > 1.0 || self.enrichment.alpha > 1.0 {
            return bad("alpha must not exceed 1".into());
        }
        if !(self.deg.pseudocount >= 0.0 && self.deg.pseudocount.is_finite()) {
            return bad(format!(
                "deg.pseudocount must be non-negative, got {}",
                self.deg.pseudocount
            ));
        }
        for rule in &self.rules {
            rule.validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        for p in &self.survival_parameters {
            if p.parse::<ClinicalField>().is_err() {
                return bad(format!("unknown survival parameter `{p}`"));
            }
        }
        if self.scenarios.is_empty() {
            return bad("at least one scenario is required".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        let mut names: Vec<&str> = self
            .inputs
            .libraries
            .iter()
            .map(|l| l.name.as_str())
            .collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("library names must be unique".into());
        }
        if let Some(l) = self.inputs.libraries.iter().find(|l| {
            l.name.is_empty()
                || !l
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        }) {
            return bad(format!(
                "library name `{}` must be non-empty [A-Za-z0-9_-]",
                l.name
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[inputs]
clinical = "clinical.tsv"
expression = "expression.tsv"
out = "out"
libraries = [{ name = "kegg", path = "kegg.gmt" }]
"#;

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.k, 10);
        assert_eq!(c.seed, 42);
        assert_eq!(c.rules, default_rules());
        assert_eq!(c.scenarios.len(), 4);
        assert_eq!(c.algorithms.len(), 4);
        assert_eq!(c.survival_parameters.len(), 10);
        c.validate().unwrap();
    }

    #[test]
    fn k_one_rejected() {
        let c = PipelineConfig::from_toml(&format!("k = 1\n{MINIMAL}")).unwrap();
        assert!(matches!(c.validate(), Err(PipelineError::Config(m)) if m.contains("k must be")));
    }

    #[test]
    fn relative_paths_resolve() {
        let mut c = PipelineConfig::from_toml(MINIMAL).unwrap();
        c.resolve_against(Path::new("/data/run"));
        assert_eq!(c.inputs.clinical, Path::new("/data/run/clinical.tsv"));
        assert_eq!(c.inputs.libraries[0].path, Path::new("/data/run/kegg.gmt"));
    }

    #[test]
    fn toml_round_trip() {
        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(PipelineConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn bad_threshold_rejected() {
        let c = PipelineConfig::from_toml(&format!("{MINIMAL}\n[deg]\nlog2_threshold = 0.0\n"))
            .unwrap();
        assert!(c.validate().is_err());
    }
}
