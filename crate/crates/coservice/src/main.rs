use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{error, info};
use mrin_core::evalharness::EvalKind;
use mrin_coservice::artifacts::Artifacts;
use mrin_coservice::commands::{self, load_corpus};
use mrin_coservice::config::AppConfig;
use mrin_coservice::server::{serve, AppState, ServiceConfig};
use mrin_coservice::CommandError;

/// Train, evaluate and serve the co-creative level design agent.
#[derive(Parser)]
#[command(name = "mrin", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Train a model with attribution tracking.
    Train {
        #[command(flatten)]
        common: Common,
        /// Training session log (JSON lines).
        #[arg(long)]
        sessions: PathBuf,
        /// Output model directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Most-responsible-level explainability evaluation.
    EvalExplain(EvalArgs),
    /// User labeling error evaluation.
    EvalLabels(EvalArgs),
    /// Write a synthetic session corpus and its ground truth.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve suggest, explain and session endpoints.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// Training session log the model was trained on.
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Directory for recording live sessions.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Trained model directory.
    #[arg(long)]
    model: PathBuf,
    /// Training session log.
    #[arg(long)]
    sessions: PathBuf,
    /// Test session log.
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

const LIVE_SESSIONS_FILE: &str = "live_sessions.jsonl";

fn load_config(common: &Common) -> Result<Option<AppConfig>, CommandError> {
    common.config.as_deref().map(AppConfig::load).transpose()
}

fn train(common: &Common, sessions_path: &Path, out: &Path) -> Result<()> {
    let sessions = load_corpus(sessions_path)?;
    let mut cfg = load_config(common)?.unwrap_or_default();
    if let Some(seed) = common.seed {
        let mut network = cfg.network_for(&sessions)?;
        network.seed = seed;
        cfg.network = Some(network);
    }
    let outcome = commands::train(&cfg, &sessions, out)?;
    info!(
        "trained on {} instances, final loss {:e}, fingerprint {}",
        outcome.instances,
        outcome.epoch_losses.last().copied().unwrap_or(f64::NAN),
        outcome.fingerprint
    );
    Ok(())
}

fn eval(kind: EvalKind, args: &EvalArgs) -> Result<()> {
    let cfg = load_config(&args.common)?.unwrap_or_default();
    let artifacts = Artifacts::load(&args.model, &args.sessions)?;
    let test = load_corpus(&args.test)?;
    let report = commands::eval(
        kind,
        &cfg.eval,
        args.common.seed.unwrap_or(0),
        &artifacts,
        &test,
        &args.out,
    )?;
    print!("{}", report.to_table());
    Ok(())
}

fn gen_data(common: &Common, out: &Path) -> Result<()> {
    let cfg = load_config(common)?.unwrap_or_default();
    let corpus = commands::gen_data(&cfg.generator, common.seed.unwrap_or(0), out)?;
    info!(
        "wrote {} sessions with {} injected errors to {}",
        corpus.sessions.len(),
        corpus.injected.len(),
        out.display()
    );
    Ok(())
}

fn run_server(
    common: &Common,
    model: &Path,
    sessions: &Path,
    bind: SocketAddr,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(common)?.unwrap_or_default();
    let opts = cfg.eval.options(0)?;
    let artifacts = Artifacts::load(model, sessions)?;
    let record_path = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CommandError::Io {
                path: dir.to_path_buf(),
                source: e,
            })?;
            Some(dir.join(LIVE_SESSIONS_FILE))
        }
        None => None,
    };
    let service = ServiceConfig {
        suggest: cfg.suggest,
        layer: opts.layer,
        norm: opts.norm,
        record_path,
    };
    let state = AppState::new(artifacts, service);
    let rt = tokio::runtime::Runtime::new().context("starting the async runtime")?;
    rt.block_on(serve(state, bind))
        .with_context(|| format!("serving on {bind}"))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<CommandError>())
        .map_or(1, CommandError::exit_code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.verb {
        Verb::Train {
            common,
            sessions,
            out,
        } => train(common, sessions, out),
        Verb::EvalExplain(a) => eval(EvalKind::Explainability, a),
        Verb::EvalLabels(a) => eval(EvalKind::LabelingError, a),
        Verb::GenData { common, out } => gen_data(common, out),
        Verb::Serve {
            common,
            model,
            sessions,
            bind,
            out,
        } => run_server(common, model, sessions, *bind, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
