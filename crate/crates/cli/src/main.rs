use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use techrates::config::{ConfigError, PipelineConfig};
use techrates::corpus::{generate_synthetic_corpus, write_corpus, SynthConfig};
use techrates::pipeline::{self, StageReport};
use techrates::search::engine::SearchResponse;
use techrates::SearchEngine;
use techrates_server::ServeOptions;

const EXIT_CONFIG: u8 = 2;
const EXIT_STAGE: u8 = 3;

/// Technology domains, citation centrality and improvement rates from a
/// patent corpus.
#[derive(Parser)]
#[command(name = "techrates", version)]
struct Cli {
    /// Flat key = value config file; TECHRATES_<KEY> variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory (overrides output_dir).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Corpus directory (overrides input_dir).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage in order.
    Run(InputArgs),
    /// Load, validate and filter the input corpus.
    Ingest(InputArgs),
    /// Build technology domains from class overlaps.
    Decompose,
    /// Score patents by SPNP against the rewired null model.
    Centrality,
    /// Estimate improvement rates per domain.
    Estimate {
        /// Residual variance for the retransformation factor (overrides sigma2).
        #[arg(long)]
        sigma2: Option<f64>,
    },
    /// Distribution fits, normality tests, size regression, dedup comparison.
    Stats,
    /// Build the keyword index.
    Index,
    /// Serve the HTTP API over an artifact directory.
    Serve {
        #[arg(long)]
        artifacts: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Seed of the random patent samples.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory of static UI assets served under /ui/.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Query the artifacts offline.
    Search {
        query: String,
        #[arg(long)]
        artifacts: Option<PathBuf>,
        /// Number of domains.
        #[arg(long, short)]
        n: Option<usize>,
        /// Print the JSON the service would return instead of a table.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a seeded synthetic corpus.
    Synth {
        /// Target directory.
        dir: PathBuf,
        #[arg(long, default_value_t = 5000)]
        patents: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Config(String),
    Stage(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Stage(e)
    }
}

fn load_config(cli: &Cli, input: Option<&Path>) -> Result<PipelineConfig, Failure> {
    let mut config =
        PipelineConfig::load(cli.config.as_deref(), std::env::vars()).map_err(|e: ConfigError| Failure::Config(e.to_string()))?;
    if let Some(o) = &cli.output {
        config.output_dir = o.clone();
    }
    if let Some(i) = input {
        config.input_dir = i.to_path_buf();
    }
    if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot start {} workers: {e}", config.workers)))?;
    }
    Ok(config)
}

fn print_reports(reports: &[StageReport]) {
    for r in reports {
        for s in &r.summary {
            println!("[{}] {s}", r.stage);
        }
        for w in &r.warnings {
            eprintln!("[{}] warning: {w}", r.stage);
        }
    }
}

fn stage(name: &str, config: &PipelineConfig) -> Result<(), Failure> {
    let report = pipeline::run_stage(name, config).map_err(|e| Failure::Stage(e.into()))?;
    print_reports(&[report]);
    Ok(())
}

fn print_table(r: &SearchResponse) {
    println!("query {:?} -> tokens {:?}, {} matching patents", r.query, r.tokens, r.matched_patents);
    if r.results.is_empty() {
        println!("no domains matched");
        return;
    }
    println!("{:>4}  {:<12} {:>6} {:>7} {:>7} {:>9} {:>9}", "rank", "domain", "size", "match", "MPR", "X", "K %/yr");
    for m in &r.results {
        let (x, k) = match &m.rate {
            Some(rate) => (format!("{:.4}", rate.x), format!("{:.1}", rate.k_percent_per_year)),
            None => ("-".into(), "-".into()),
        };
        println!(
            "{:>4}  {:<12} {:>6} {:>7} {:>7.4} {:>9} {:>9}",
            m.rank, m.domain_code, m.domain_size, m.matched_count, m.mpr, x, k
        );
    }
}

fn artifacts_dir(explicit: &Option<PathBuf>, cli: &Cli) -> Result<PathBuf, Failure> {
    Ok(match explicit {
        Some(d) => d.clone(),
        None => load_config(cli, None)?.output_dir,
    })
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run(a) => {
            let config = load_config(cli, a.input.as_deref())?;
            for name in pipeline::STAGES {
                stage(name, &config).map_err(|f| match f {
                    Failure::Stage(e) => Failure::Stage(e.context(format!(
                        "artifacts of earlier stages remain in {}; rerun with `techrates {name}`",
                        config.output_dir.display()
                    ))),
                    other => other,
                })?;
            }
            println!("artifacts written to {}", config.output_dir.display());
        }
        Command::Ingest(a) => stage("ingest", &load_config(cli, a.input.as_deref())?)?,
        Command::Decompose => stage("decompose", &load_config(cli, None)?)?,
        Command::Centrality => stage("centrality", &load_config(cli, None)?)?,
        Command::Estimate { sigma2 } => {
            let mut config = load_config(cli, None)?;
            if let Some(s) = sigma2 {
                config.sigma2 = *s;
                config.validate().map_err(|e| Failure::Config(e.to_string()))?;
            }
            stage("estimate", &config)?
        }
        Command::Stats => stage("stats", &load_config(cli, None)?)?,
        Command::Index => stage("index", &load_config(cli, None)?)?,
        Command::Serve { artifacts, bind, seed, ui } => {
            let dir = artifacts_dir(artifacts, cli)?;
            let seed = match seed {
                Some(s) => *s,
                None => load_config(cli, None)?.sample_seed,
            };
            let options = ServeOptions {
                artifacts: dir,
                bind: *bind,
                seed,
                ui_dir: ui.clone(),
            };
            let rt = tokio::runtime::Runtime::new().context("cannot start runtime")?;
            rt.block_on(techrates_server::serve(options)).map_err(|e| anyhow::anyhow!(e))?;
        }
        Command::Search { query, artifacts, n, json, seed } => {
            let dir = artifacts_dir(artifacts, cli)?;
            let seed = match seed {
                Some(s) => *s,
                None => load_config(cli, None)?.sample_seed,
            };
            let engine = SearchEngine::load(&dir, seed).context("cannot load artifacts")?;
            let response = engine.search(query, *n).map_err(|e| Failure::Config(e.to_string()))?;
            if *json {
                println!("{}", serde_json::to_string_pretty(&response).context("cannot encode response")?);
            } else {
                print_table(&response);
            }
        }
        Command::Synth { dir, patents, seed } => {
            let config = SynthConfig {
                patents: *patents,
                ..SynthConfig::default()
            };
            let store = generate_synthetic_corpus(&config, *seed).context("cannot generate corpus")?;
            write_corpus(&store, dir).context("cannot write corpus")?;
            println!("{} patents, {} citations written to {}", store.len(), store.citations().len(), dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_STAGE)
        }
    }
}
