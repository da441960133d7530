use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineConfig, PipelineError, Stage};
use crate::diffexpr::DegList;
use crate::enrichment::EnrichmentResult;
use crate::ingest::Provenance;
use crate::models::{AlgorithmKind, EvalReport, ScenarioName, TrainedModel};
use crate::survival::{SurvivalCurves, SurvivalRow};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMESTAMPS_FILE: &str = "timestamps.json";
pub const MANIFEST_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRef {
    pub scenario: ScenarioName,
    pub algorithm: AlgorithmKind,
    /// Relative to the bundle directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub samples: usize,
    pub genes: usize,
    pub high_risk: usize,
    pub low_risk: usize,
    pub provenance: Provenance,
    pub levels: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificantTerm {
    pub library: String,
    pub term: String,
    pub q_value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cohort: Option<CohortSummary>,
    pub genes_tested: Option<usize>,
    pub degs_up: Option<usize>,
    pub degs_down: Option<usize>,
    pub significant_terms: Option<Vec<SignificantTerm>>,
    /// DEG members of each scenario gene-set term, used as model features.
    pub genes_by_term: Option<BTreeMap<String, Vec<String>>>,
    pub metrics_cells: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub tool_version: String,
    pub status: RunStatus,
    /// Stages that completed, in order.
    pub stages: Vec<Stage>,
    pub failed_stage: Option<Stage>,
    pub error: Option<String>,
    pub seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    pub config: PipelineConfig,
    pub inputs: BTreeMap<String, FileDigest>,
    /// Relative output path -> sha256.
    pub outputs: BTreeMap<String, String>,
    pub models: Vec<ModelRef>,
    pub summary: Summary,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub(crate) fn new(config: PipelineConfig, stage_seeds: BTreeMap<String, u64>) -> Self {
        Manifest {
            format: MANIFEST_FORMAT,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            status: RunStatus::Running,
            stages: Vec::new(),
            failed_stage: None,
            error: None,
            seed: config.seed,
            stage_seeds,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            models: Vec::new(),
            summary: Summary::default(),
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub stages: BTreeMap<String, StageTimes>,
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// A completed run loaded from disk, with every output checked against the manifest.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
    /// sha256 of `manifest.json` as stored.
    pub digest: String,
    pub survival_rows: Vec<SurvivalRow>,
    pub survival_curves: SurvivalCurves,
    pub degs: DegList,
    pub enrichment: BTreeMap<String, Vec<EnrichmentResult>>,
    pub metrics: Vec<EvalReport>,
    pub models: BTreeMap<(ScenarioName, AlgorithmKind), TrainedModel>,
}

impl ReportBundle {
    pub fn load(dir: &Path) -> Result<ReportBundle, PipelineError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let bytes =
            fs::read(&manifest_path).map_err(|e| PipelineError::bundle(&manifest_path, e))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        let manifest: Manifest =
            serde_json::from_slice(&bytes).map_err(|e| PipelineError::bundle(&manifest_path, e))?;
        if manifest.status != RunStatus::Complete || !manifest.stages.contains(&Stage::Train) {
            return Err(PipelineError::bundle(
                &manifest_path,
                "run did not complete every stage",
            ));
        }
        Self::verify_outputs(dir, &manifest)?;

        let read = |rel: &str| -> Result<Vec<u8>, PipelineError> {
            fs::read(dir.join(rel)).map_err(|e| PipelineError::bundle(dir.join(rel), e))
        };
        fn parse<T: DeserializeOwned>(
            dir: &Path,
            rel: &str,
            bytes: &[u8],
        ) -> Result<T, PipelineError> {
            serde_json::from_slice(bytes).map_err(|e| PipelineError::bundle(dir.join(rel), e))
        }

        let mut enrichment = BTreeMap::new();
        for lib in &manifest.config.inputs.libraries {
            let rel = format!("enrichment_{}.json", lib.name);
            enrichment.insert(lib.name.clone(), parse(dir, &rel, &read(&rel)?)?);
        }
        let mut models = BTreeMap::new();
        for m in &manifest.models {
            let model = TrainedModel::from_json(&String::from_utf8_lossy(&read(&m.path)?))
                .map_err(|e| PipelineError::bundle(dir.join(&m.path), e))?;
            models.insert((m.scenario, m.algorithm), model);
        }
        Ok(ReportBundle {
            dir: dir.to_path_buf(),
            survival_rows: parse(dir, "survival_table.json", &read("survival_table.json")?)?,
            survival_curves: parse(dir, "survival_curves.json", &read("survival_curves.json")?)?,
            degs: parse(dir, "degs.json", &read("degs.json")?)?,
            metrics: parse(dir, "metrics.json", &read("metrics.json")?)?,
            enrichment,
            models,
            manifest,
            digest,
        })
    }

    /// Every output listed in the manifest exists with the recorded digest, and
    /// every referenced model is among them.
    pub fn verify_outputs(dir: &Path, manifest: &Manifest) -> Result<(), PipelineError> {
        for (rel, expected) in &manifest.outputs {
            let actual =
                sha256_file(&dir.join(rel)).map_err(|e| PipelineError::bundle(dir.join(rel), e))?;
            if &actual != expected {
                return Err(PipelineError::DigestMismatch(rel.clone()));
            }
        }
        if let Some(m) = manifest
            .models
            .iter()
            .find(|m| !manifest.outputs.contains_key(&m.path))
        {
            return Err(PipelineError::bundle(
                dir.join(&m.path),
                "model is not listed among the outputs",
            ));
        }
        Ok(())
    }

    /// Re-hash the input files the run read.
    pub fn verify_inputs(&self) -> Result<(), PipelineError> {
        for (role, input) in &self.manifest.inputs {
            let actual =
                sha256_file(&input.path).map_err(|e| PipelineError::bundle(&input.path, e))?;
            if actual != input.sha256 {
                return Err(PipelineError::DigestMismatch(format!(
                    "input {role} ({})",
                    input.path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn model(&self, scenario: ScenarioName, algorithm: AlgorithmKind) -> Option<&TrainedModel> {
        self.models.get(&(scenario, algorithm))
    }

    pub fn report(&self, scenario: ScenarioName, algorithm: AlgorithmKind) -> Option<&EvalReport> {
        self.metrics
            .iter()
            .find(|r| r.scenario == scenario.as_str() && r.algorithm == algorithm)
    }
}
