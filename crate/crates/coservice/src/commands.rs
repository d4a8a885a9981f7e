//! The CLI verbs as library functions.

use std::fs;
use std::path::Path;

use log::info;
use mrin_core::attribution::{train_tracked, Attribution};
use mrin_core::evalharness::{explainability_eval, labeling_error_eval, EvalKind, EvalReport};
use mrin_core::neuralnet::{save_model, ModelMeta, SavedModel};
use mrin_core::sessionlog::{
    build_training_set, gen_synthetic, load_sessions, save_sessions, Session, SynthParams,
    SyntheticCorpus,
};
use serde::Serialize;

use crate::artifacts::{Artifacts, FINGERPRINT_FILE, MODEL_FILE, MRIN_FILE, TRAIN_LOG_FILE};
use crate::config::{AppConfig, EvalConfig};
use crate::CommandError;

pub const SESSIONS_FILE: &str = "sessions.jsonl";
pub const TRUTH_FILE: &str = "truth.json";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub fingerprint: String,
    pub instances: usize,
    pub epoch_losses: Vec<f64>,
}

pub fn load_corpus(path: &Path) -> Result<Vec<Session>, CommandError> {
    match load_sessions(path) {
        Ok(s) => Ok(s),
        Err(mrin_core::sessionlog::SessionError::IoFailure(e)) => Err(CommandError::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        Err(e) => Err(CommandError::Data(format!("{}: {e}", path.display()))),
    }
}

fn create_dir(dir: &Path) -> Result<(), CommandError> {
    fs::create_dir_all(dir).map_err(CommandError::io(dir))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CommandError> {
    fs::write(path, contents).map_err(CommandError::io(path))
}

/// Trains with attribution tracking and writes the model directory.
pub fn train(
    cfg: &AppConfig,
    sessions: &[Session],
    out_dir: &Path,
) -> Result<TrainOutcome, CommandError> {
    cfg.validate()?;
    let instances = build_training_set(sessions)?;
    let epochs = cfg.training.epochs;
    info!(
        "{} sessions, {} training instances",
        sessions.len(),
        instances.len()
    );
    let network = cfg.network_for(sessions)?;
    let run = train_tracked(&network, &instances, epochs)?;
    create_dir(out_dir)?;
    let model = SavedModel {
        params: run.params.clone(),
        meta: ModelMeta {
            fingerprint: run.fingerprint.clone(),
            epochs,
            instances: instances.len(),
        },
    };
    save_model(&model, &out_dir.join(MODEL_FILE))?;
    let mrin_path = out_dir.join(MRIN_FILE);
    write(&mrin_path, Attribution::from_run(&run, false).to_json())?;
    write(
        &out_dir.join(FINGERPRINT_FILE),
        format!("{}\n", run.fingerprint),
    )?;
    let mut log = String::from("epoch,mean_loss\n");
    for (e, l) in run.epoch_losses.iter().enumerate() {
        log.push_str(&format!("{e},{l:e}\n"));
    }
    write(&out_dir.join(TRAIN_LOG_FILE), log)?;
    Ok(TrainOutcome {
        fingerprint: run.fingerprint,
        instances: instances.len(),
        epoch_losses: run.epoch_losses,
    })
}

pub fn report_stem(kind: EvalKind) -> &'static str {
    match kind {
        EvalKind::Explainability => "explain_report",
        EvalKind::LabelingError => "labels_report",
    }
}

/// Runs one evaluation and writes `<stem>.json` (with traces) and `<stem>.txt` (summary table).
pub fn eval(
    kind: EvalKind,
    cfg: &EvalConfig,
    seed: u64,
    artifacts: &Artifacts,
    test: &[Session],
    out_dir: &Path,
) -> Result<EvalReport, CommandError> {
    let opts = cfg.options(seed)?;
    let (model, attr, train) = (
        &artifacts.model,
        &artifacts.attribution,
        &artifacts.sessions,
    );
    let report = match kind {
        EvalKind::Explainability => explainability_eval(model, attr, train, test, &opts)?,
        EvalKind::LabelingError => labeling_error_eval(model, attr, train, test, &opts)?,
    };
    create_dir(out_dir)?;
    let stem = report_stem(kind);
    write(&out_dir.join(format!("{stem}.json")), report.to_json())?;
    write(&out_dir.join(format!("{stem}.txt")), report.to_table())?;
    Ok(report)
}

#[derive(Serialize)]
struct Truth<'a> {
    schema: &'static str,
    version: u32,
    seed: u64,
    params: &'a SynthParams,
    motifs: &'a [mrin_core::sessionlog::Motif],
    injected: &'a [mrin_core::sessionlog::InjectedError],
}

/// Writes `sessions.jsonl` and the generator's ground truth `truth.json`.
pub fn gen_data(
    params: &SynthParams,
    seed: u64,
    out_dir: &Path,
) -> Result<SyntheticCorpus, CommandError> {
    let corpus = gen_synthetic(seed, params)?;
    create_dir(out_dir)?;
    let path = out_dir.join(SESSIONS_FILE);
    save_sessions(&corpus.sessions, &path)
        .map_err(|e| CommandError::Data(format!("{}: {e}", path.display())))?;
    let truth = Truth {
        schema: "mrin-synthetic-truth",
        version: 1,
        seed,
        params,
        motifs: &corpus.motifs,
        injected: &corpus.injected,
    };
    let mut text = serde_json::to_string_pretty(&truth).expect("truth serializes");
    text.push('\n');
    write(&out_dir.join(TRUTH_FILE), text)?;
    Ok(corpus)
}
