use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::bundle::{
    CohortSummary, FileDigest, Manifest, ModelRef, RunStatus, SignificantTerm, StageTimes,
    Timestamps,
};
use super::bundle::{MANIFEST_FILE, TIMESTAMPS_FILE};
use super::{PipelineConfig, PipelineError, Stage};
use crate::canonical;
use crate::diffexpr::{
    differential_expression, gene_stats_tsv, select_degs, DegList, DiffExprConfig,
};
use crate::enrichment::{enrich, enrichment_tsv, parse_gmt, EnrichmentError, EnrichmentResult};
use crate::ingest::{build_cohort, parse_clinical_str, parse_expression_str, Cohort};
use crate::models::{
    build_scenario_dataset, grid_tsv, scenario_grid, train, AlgorithmKind, ScenarioName,
};
use crate::seed::derive_seed;
use crate::survival::survival_table;

const LOCK_FILE: &str = ".oncoprog.lock";
pub const MODELS_DIR: &str = "models";

pub fn model_file_name(scenario: ScenarioName, algorithm: AlgorithmKind) -> String {
    format!("{MODELS_DIR}/{scenario}__{algorithm}.json")
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

struct LockGuard(PathBuf);

impl LockGuard {
    fn acquire(dir: &Path) -> Result<LockGuard, PipelineError> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(LockGuard(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(PipelineError::Locked(dir.to_path_buf()))
            }
            Err(e) => Err(PipelineError::Config(format!(
                "output directory {} is not writable: {e}",
                dir.display()
            ))),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn hex_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output writer that records a digest for everything it writes.
struct Writer {
    dir: PathBuf,
    outputs: BTreeMap<String, String>,
}

impl Writer {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), String> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
        }
        fs::write(&path, bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        self.outputs.insert(rel.to_string(), hex_digest(bytes));
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<(), String> {
        let text = canonical::to_string_pretty(value).map_err(|e| e.to_string())?;
        self.write(rel, text.as_bytes())
    }
}

struct Run<'a> {
    config: &'a PipelineConfig,
    writer: Writer,
    manifest: Manifest,
    times: Timestamps,
    cohort: Option<Cohort>,
    degs: Option<DegList>,
    genes_by_term: BTreeMap<String, Vec<String>>,
}

fn read_input(path: &Path) -> Result<(String, String), String> {
    let bytes = fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let digest = hex_digest(&bytes);
    let text = String::from_utf8(bytes).map_err(|_| format!("{} is not UTF-8", path.display()))?;
    Ok((text, digest))
}

impl Run<'_> {
    fn record_input(&mut self, role: String, path: &Path, sha256: String) {
        self.manifest.inputs.insert(
            role,
            FileDigest {
                path: path.to_path_buf(),
                sha256,
            },
        );
    }

    fn ingest(&mut self) -> Result<(), String> {
        let cfg = self.config;
        let (clinical_text, clinical_digest) = read_input(&cfg.inputs.clinical)?;
        self.record_input("clinical".into(), &cfg.inputs.clinical, clinical_digest);
        let (expr_text, expr_digest) = read_input(&cfg.inputs.expression)?;
        self.record_input("expression".into(), &cfg.inputs.expression, expr_digest);

        let records = parse_clinical_str(&clinical_text, &cfg.columns)
            .map_err(|e| format!("{}: {e}", cfg.inputs.clinical.display()))?;
        let expr = parse_expression_str(&expr_text)
            .map_err(|e| format!("{}: {e}", cfg.inputs.expression.display()))?;
        let cohort =
            build_cohort(&records, &expr, &cfg.rules, cfg.imputation).map_err(|e| e.to_string())?;

        let (high, low) = cohort.labels.iter().fold((0, 0), |(h, l), x| {
            if x.is_positive() {
                (h + 1, l)
            } else {
                (h, l + 1)
            }
        });
        let summary = CohortSummary {
            samples: cohort.len(),
            genes: cohort.expression.genes.len(),
            high_risk: high,
            low_risk: low,
            provenance: cohort.provenance.clone(),
            levels: cohort
                .levels
                .iter()
                .map(|(k, v)| (k.name().to_string(), v.clone()))
                .collect(),
        };
        self.writer.json("cohort.json", &summary)?;
        self.manifest.summary.cohort = Some(summary);
        self.cohort = Some(cohort);
        Ok(())
    }

    fn survival(&mut self) -> Result<(), String> {
        let cohort = self.cohort.as_ref().expect("ingest ran");
        let table =
            survival_table(cohort, &self.config.survival_parameters).map_err(|e| e.to_string())?;
        self.writer.write(
            "survival_table.tsv",
            table.to_tsv(self.config.locale).as_bytes(),
        )?;
        self.writer.json("survival_table.json", &table.rows)?;
        self.writer.json("survival_curves.json", &table.curves)?;
        Ok(())
    }

    fn diffexpr(&mut self) -> Result<(), String> {
        let cohort = self.cohort.as_ref().expect("ingest ran");
        let cfg = &self.config.deg;
        let stats = differential_expression(
            &cohort.expression,
            &cohort.label_flags(),
            &DiffExprConfig {
                pseudocount: cfg.pseudocount,
            },
        )
        .map_err(|e| e.to_string())?;
        let degs = select_degs(&stats, cfg.log2_threshold, cfg.alpha);
        self.writer.write(
            "gene_stats.tsv",
            gene_stats_tsv(&stats, self.config.locale).as_bytes(),
        )?;
        self.writer.json("gene_stats.json", &stats)?;
        self.writer.json("degs.json", &degs)?;
        self.manifest.summary.genes_tested = Some(stats.len());
        self.manifest.summary.degs_up = Some(degs.up.len());
        self.manifest.summary.degs_down = Some(degs.down.len());
        self.degs = Some(degs);
        Ok(())
    }

    fn enrichment(&mut self) -> Result<(), String> {
        let cohort = self.cohort.as_ref().expect("ingest ran");
        let degs = self.degs.as_ref().expect("diffexpr ran");
        let universe: BTreeSet<String> = cohort.expression.genes.iter().cloned().collect();
        let wanted: BTreeSet<&str> = self
            .config
            .scenarios
            .iter()
            .flat_map(|s| s.gene_terms.iter().map(String::as_str))
            .collect();
        let mut genes_by_term: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut significant = Vec::new();
        let mut inputs = Vec::new();
        let mut warnings = Vec::new();

        for lib in &self.config.inputs.libraries {
            let (text, digest) = read_input(&lib.path)?;
            inputs.push((format!("library/{}", lib.name), lib.path.clone(), digest));
            let library =
                parse_gmt(&text, &lib.name).map_err(|e| format!("{}: {e}", lib.path.display()))?;
            let results: Vec<EnrichmentResult> = match enrich(degs, &library, &universe) {
                Ok(r) => r,
                Err(EnrichmentError::EmptyQuery) => {
                    warnings.push(format!(
                        "library `{}`: no differentially expressed genes to test",
                        lib.name
                    ));
                    Vec::new()
                }
                Err(e) => return Err(format!("library `{}`: {e}", lib.name)),
            };
            for r in &results {
                if r.q_value < self.config.enrichment.alpha {
                    significant.push(SignificantTerm {
                        library: lib.name.clone(),
                        term: r.term.clone(),
                        q_value: r.q_value,
                    });
                }
                if wanted.contains(r.term.as_str()) {
                    let entry = genes_by_term.entry(r.term.clone()).or_default();
                    for g in r.genes() {
                        if !entry.contains(g) {
                            entry.push(g.clone());
                        }
                    }
                }
            }
            self.writer.write(
                &format!("enrichment_{}.tsv", lib.name),
                enrichment_tsv(&results).as_bytes(),
            )?;
            self.writer
                .json(&format!("enrichment_{}.json", lib.name), &results)?;
        }
        for (role, path, digest) in inputs {
            self.record_input(role, &path, digest);
        }
        self.manifest.warnings.extend(warnings);
        self.manifest.summary.significant_terms = Some(significant);
        self.manifest.summary.genes_by_term = Some(genes_by_term.clone());
        self.genes_by_term = genes_by_term;
        Ok(())
    }

    fn train(&mut self, seed: u64) -> Result<(), String> {
        let cfg = self.config;
        let cohort = self.cohort.as_ref().expect("ingest ran");
        let hp = &cfg.hyperparameters;
        let (reports, warnings) = scenario_grid(
            cohort,
            &self.genes_by_term,
            &cfg.scenarios,
            &cfg.algorithms,
            cfg.k,
            seed,
            hp,
        )
        .map_err(|e| e.to_string())?;
        self.writer
            .write("metrics.tsv", grid_tsv(&reports, cfg.locale).as_bytes())?;
        self.writer.json("metrics.json", &reports)?;

        let mut cells = Vec::new();
        for spec in &cfg.scenarios {
            let (data, _) = build_scenario_dataset(cohort, &self.genes_by_term, spec)
                .map_err(|e| e.to_string())?;
            for &alg in &cfg.algorithms {
                cells.push((spec.name, alg, data.clone()));
            }
        }
        let models = cells
            .par_iter()
            .map(|(scenario, alg, data)| {
                let model =
                    train(*alg, data, hp, seed).map_err(|e| format!("{scenario}/{alg}: {e}"))?;
                let text = canonical::to_string_pretty(&model).map_err(|e| e.to_string())?;
                Ok((*scenario, *alg, text))
            })
            .collect::<Result<Vec<_>, String>>()?;
        for (scenario, algorithm, text) in models {
            let path = model_file_name(scenario, algorithm);
            self.writer.write(&path, text.as_bytes())?;
            self.manifest.models.push(ModelRef {
                scenario,
                algorithm,
                path,
            });
        }
        self.manifest.summary.metrics_cells = Some(reports.len());
        self.manifest.warnings.extend(warnings);
        Ok(())
    }

    fn stage(&mut self, stage: Stage) -> Result<(), String> {
        match stage {
            Stage::Ingest => self.ingest(),
            Stage::Survival => self.survival(),
            Stage::Diffexpr => self.diffexpr(),
            Stage::Enrichment => self.enrichment(),
            Stage::Train => {
                let seed = self.manifest.stage_seeds[Stage::Train.as_str()];
                self.train(seed)
            }
        }
    }

    fn finish(&mut self) -> Result<(), PipelineError> {
        self.times.finished_unix_ms = now_ms();
        let dir = self.writer.dir.clone();
        let write = |name: &str, text: String| {
            fs::write(dir.join(name), text).map_err(|e| PipelineError::bundle(dir.join(name), e))
        };
        self.manifest.outputs = self.writer.outputs.clone();
        write(
            TIMESTAMPS_FILE,
            canonical::to_string_pretty(&self.times).expect("timestamps serialize"),
        )?;
        write(
            MANIFEST_FILE,
            canonical::to_string_pretty(&self.manifest).expect("manifest serializes"),
        )
    }
}

/// Run every stage up to and including `through`.
///
/// A stage failure still writes a manifest, marked failed with the stage name,
/// listing the outputs produced so far.
pub fn run_pipeline(config: &PipelineConfig, through: Stage) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let out = &config.inputs.out;
    fs::create_dir_all(out).map_err(|e| {
        PipelineError::Config(format!(
            "cannot create output directory {}: {e}",
            out.display()
        ))
    })?;
    let _lock = LockGuard::acquire(out)?;

    let stage_seeds = Stage::ALL
        .iter()
        .map(|s| (s.as_str().to_string(), derive_seed(config.seed, s.as_str())))
        .collect();
    let mut run = Run {
        config,
        writer: Writer {
            dir: out.clone(),
            outputs: BTreeMap::new(),
        },
        manifest: Manifest::new(config.clone(), stage_seeds),
        times: Timestamps {
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
            stages: BTreeMap::new(),
        },
        cohort: None,
        degs: None,
        genes_by_term: BTreeMap::new(),
    };

    for stage in Stage::ALL.into_iter().filter(|s| *s <= through) {
        let started = now_ms();
        log::info!("stage {stage}: starting");
        let result = run.stage(stage);
        run.times.stages.insert(
            stage.as_str().to_string(),
            StageTimes {
                started_unix_ms: started,
                finished_unix_ms: now_ms(),
            },
        );
        match result {
            Ok(()) => {
                log::info!("stage {stage}: done");
                run.manifest.stages.push(stage);
            }
            Err(message) => {
                log::error!("stage {stage}: {message}");
                run.manifest.status = RunStatus::Failed;
                run.manifest.failed_stage = Some(stage);
                run.manifest.error = Some(message.clone());
                run.finish()?;
                return Err(PipelineError::Stage { stage, message });
            }
        }
    }
    run.manifest.status = RunStatus::Complete;
    run.finish()?;
    Ok(RunOutcome {
        manifest: run.manifest,
        out_dir: out.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::LibraryPath;

    fn config(dir: &Path) -> PipelineConfig {
        PipelineConfig::new(
            dir.join("clinical.tsv"),
            dir.join("missing_expression.tsv"),
            vec![LibraryPath {
                name: "kegg".into(),
                path: dir.join("kegg.gmt"),
            }],
            dir.join("out"),
        )
    }

    #[test]
    fn k_one_fails_before_any_stage() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(dir.path());
        c.k = 1;
        assert!(matches!(
            run_pipeline(&c, Stage::Train),
            Err(PipelineError::Config(_))
        ));
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn unreadable_expression_fails_ingest() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("clinical.tsv"), "patient_id\tsample_id\n").unwrap();
        let c = config(dir.path());
        match run_pipeline(&c, Stage::Train) {
            Err(PipelineError::Stage { stage, .. }) => assert_eq!(stage, Stage::Ingest),
            other => panic!("{other:?}"),
        }
        let manifest: Manifest = serde_json::from_str(
            &fs::read_to_string(dir.path().join("out").join(MANIFEST_FILE)).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest.status, RunStatus::Failed);
        assert_eq!(manifest.failed_stage, Some(Stage::Ingest));
        assert!(manifest.stages.is_empty());
        assert!(manifest.outputs.is_empty());
        assert!(!dir.path().join("out").join(LOCK_FILE).exists());
    }

    #[test]
    fn held_lock_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(dir.path());
        fs::create_dir_all(&c.inputs.out).unwrap();
        fs::write(c.inputs.out.join(LOCK_FILE), "").unwrap();
        assert!(matches!(
            run_pipeline(&c, Stage::Train),
            Err(PipelineError::Locked(_))
        ));
    }
}
