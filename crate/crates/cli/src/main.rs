use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use oncoprog::diffexpr::DegList;
use oncoprog::enrichment::enrichment_tsv;
use oncoprog::format::Locale;
use oncoprog::models::grid_tsv;
use oncoprog::pipeline::{
    run_pipeline, Manifest, PipelineConfig, PipelineError, ReportBundle, Stage,
};
use oncoprog::survival::SurvivalTable;
use oncoprog_service::{CorsConfig, DEFAULT_PORT, PORT_ENV};

const EXIT_VALIDATION: u8 = 2;
const EXIT_STAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "oncoprog",
    version,
    about = "Survival, differential expression, enrichment and risk classifiers for clinical + expression cohorts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of cross-validation folds.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and summarize the inputs.
    Ingest(RunArgs),
    /// Survival table, differential expression and enrichment.
    Analyze(RunArgs),
    /// Cross-validated scenario grid and final models (runs the analysis stages first).
    Train(RunArgs),
    /// Full pipeline.
    Run(RunArgs),
    /// Print the tables of a finished bundle.
    Report {
        /// Bundle directory (the run's output directory).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Table::All)]
        table: Table,
        /// Decimal separator; defaults to the run's configured locale.
        #[arg(long, value_parser = parse_locale)]
        locale: Option<Locale>,
        /// Also re-hash the input files recorded in the manifest.
        #[arg(long)]
        verify_inputs: bool,
    },
    /// Serve a finished bundle over HTTP.
    Serve {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Allowed CORS origin; repeat for several. Any origin when omitted.
        #[arg(long = "cors-origin")]
        cors_origins: Vec<String>,
    },
    /// Write the synthetic fixture cohort.
    #[command(hide = true)]
    GenerateFixture {
        dir: PathBuf,
        #[arg(long, default_value_t = oncoprog::synthetic::FIXTURE_SEED)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Table {
    Survival,
    Degs,
    Enrichment,
    Metrics,
    All,
}

fn parse_locale(s: &str) -> Result<Locale, String> {
    match s {
        "dot" => Ok(Locale::Dot),
        "comma" => Ok(Locale::Comma),
        _ => Err(format!("unknown locale `{s}` (dot or comma)")),
    }
}

fn load_config(args: &RunArgs) -> Result<PipelineConfig, PipelineError> {
    let mut config = PipelineConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.inputs.out = out.clone();
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    Ok(config)
}

fn print_summary(manifest: &Manifest) {
    let s = &manifest.summary;
    if let Some(c) = &s.cohort {
        println!(
            "cohort: {} samples ({} high risk, {} low risk), {} genes; dropped {} non-primary, {} without clinical data, {} unlabeled, {} duplicates; {} imputed cells",
            c.samples,
            c.high_risk,
            c.low_risk,
            c.genes,
            c.provenance.non_primary_dropped,
            c.provenance.no_clinical_dropped,
            c.provenance.unlabeled_dropped,
            c.provenance.deduplicated,
            c.provenance.imputed
        );
    }
    if let (Some(t), Some(up), Some(down)) = (s.genes_tested, s.degs_up, s.degs_down) {
        println!("differential expression: {t} genes tested, {up} up, {down} down");
    }
    if let Some(terms) = &s.significant_terms {
        println!("enrichment: {} significant terms", terms.len());
        for t in terms {
            println!("  {}\t{}\tq={:.3e}", t.library, t.term, t.q_value);
        }
    }
    if let Some(n) = s.metrics_cells {
        println!("models: {n} cells evaluated");
    }
    for w in &manifest.warnings {
        println!("warning: {w}");
    }
}

fn pipeline(args: &RunArgs, through: Stage) -> Result<(), PipelineError> {
    let config = load_config(args)?;
    let outcome = run_pipeline(&config, through)?;
    print_summary(&outcome.manifest);
    if through == Stage::Train {
        let metrics =
            std::fs::read_to_string(outcome.out_dir.join("metrics.tsv")).unwrap_or_default();
        print!("{metrics}");
    }
    println!("bundle written to {}", outcome.out_dir.display());
    Ok(())
}

fn report(
    dir: &Path,
    table: Table,
    locale: Option<Locale>,
    verify_inputs: bool,
) -> Result<(), PipelineError> {
    let bundle = ReportBundle::load(dir)?;
    if verify_inputs {
        bundle.verify_inputs()?;
        println!("inputs match the recorded digests");
    }
    let locale = locale.unwrap_or(bundle.manifest.config.locale);
    let show = |t: Table| table == Table::All || table == t;
    if show(Table::Survival) {
        let t = SurvivalTable {
            rows: bundle.survival_rows.clone(),
            curves: Vec::new(),
        };
        println!("# survival\n{}", t.to_tsv(locale));
    }
    if show(Table::Degs) {
        let DegList {
            up,
            down,
            threshold,
            alpha,
        } = &bundle.degs;
        println!("# differentially expressed genes (|log2 FC| >= {threshold}, q < {alpha})");
        println!("up\t{}\ndown\t{}\n", up.join(","), down.join(","));
    }
    if show(Table::Enrichment) {
        for (lib, results) in &bundle.enrichment {
            println!("# enrichment: {lib}\n{}", enrichment_tsv(results));
        }
    }
    if show(Table::Metrics) {
        println!("# metrics\n{}", grid_tsv(&bundle.metrics, locale));
    }
    Ok(())
}

fn exit_for(e: &PipelineError) -> u8 {
    match e {
        PipelineError::Config(_) => EXIT_VALIDATION,
        _ => EXIT_STAGE,
    }
}

fn serve(dir: &Path, addr: SocketAddr, origins: Vec<String>) -> anyhow::Result<()> {
    let cors = CorsConfig {
        origins: (!origins.is_empty()).then_some(origins),
    };
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(oncoprog_service::serve(dir, addr, &cors))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => pipeline(&a, Stage::Ingest),
        Command::Analyze(a) => pipeline(&a, Stage::Enrichment),
        Command::Train(a) | Command::Run(a) => pipeline(&a, Stage::Train),
        Command::Report {
            out,
            table,
            locale,
            verify_inputs,
        } => report(&out, table, locale, verify_inputs),
        Command::Serve {
            out,
            port,
            host,
            cors_origins,
        } => {
            return match serve(&out, SocketAddr::new(host, port), cors_origins) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(EXIT_STAGE)
                }
            };
        }
        Command::GenerateFixture { dir, seed } => {
            return match oncoprog::synthetic::generate(seed).write_to(&dir) {
                Ok(()) => {
                    println!("fixture written to {}", dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {}: {e}", dir.display());
                    ExitCode::from(EXIT_STAGE)
                }
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
