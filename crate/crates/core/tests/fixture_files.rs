use std::collections::BTreeSet;
use std::path::PathBuf;

use oncoprog::models::dataset::{build_scenario_dataset, default_scenarios, FeatureKind};
use oncoprog::models::ScenarioName;
use oncoprog::pipeline::{run_pipeline, PipelineConfig, Stage};
use oncoprog::synthetic::{generate, FILES, FIXTURE_SEED};

fn committed() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[test]
fn committed_fixture_matches_generator() {
    let fixture = generate(FIXTURE_SEED);
    for (name, contents) in fixture.files() {
        let on_disk = std::fs::read_to_string(committed().join(name)).unwrap();
        assert!(
            on_disk == contents,
            "fixtures/{name} is stale; regenerate with `oncoprog generate-fixture fixtures`"
        );
    }
    assert_eq!(FILES.len(), fixture.files().len());
}

#[test]
fn scenario_gene_sets_follow_term_overlap() {
    let dir = tempfile::tempdir().unwrap();
    generate(FIXTURE_SEED).write_to(dir.path()).unwrap();
    let config = PipelineConfig::load(&dir.path().join("config.toml")).unwrap();
    let manifest = run_pipeline(&config, Stage::Enrichment).unwrap().manifest;
    let genes_by_term = manifest.summary.genes_by_term.unwrap();

    let records =
        oncoprog::ingest::parse_clinical_table(&config.inputs.clinical, &config.columns).unwrap();
    let expr = oncoprog::ingest::parse_expression_matrix(&config.inputs.expression).unwrap();
    let cohort =
        oncoprog::ingest::build_cohort(&records, &expr, &config.rules, config.imputation).unwrap();

    let genes_of = |name: ScenarioName| -> Vec<String> {
        let spec = default_scenarios()
            .into_iter()
            .find(|s| s.name == name)
            .unwrap();
        let (data, warnings) = build_scenario_dataset(&cohort, &genes_by_term, &spec).unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        data.features
            .iter()
            .filter(|f| f.kind == FeatureKind::Numeric)
            .map(|f| f.name.clone())
            .collect()
    };

    let nicotine: BTreeSet<String> = genes_of(ScenarioName::ClinicalNicotine)
        .into_iter()
        .collect();
    let expected: BTreeSet<String> = ["CACNA1A", "GABRA2", "GRIA2", "GRIA1"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(nicotine, expected);
    assert!(genes_of(ScenarioName::ClinicalOnly).is_empty());

    let kras = genes_of(ScenarioName::ClinicalKras);
    let all = genes_of(ScenarioName::AllParameters);
    let unique: BTreeSet<&String> = all.iter().collect();
    assert_eq!(unique.len(), all.len(), "duplicate gene features");
    let union: BTreeSet<&String> = nicotine.iter().chain(&kras).collect();
    assert_eq!(unique, union);
}
