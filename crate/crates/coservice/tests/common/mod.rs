#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mrin_core::sessionlog::{gen_synthetic, save_sessions, Session, SynthParams, Turn};
use mrin_core::tilegrid::{Change, ChangeSet, TileGrid, TileId};
use mrin_coservice::artifacts::Artifacts;
use mrin_coservice::commands;
use mrin_coservice::config::{AppConfig, TrainingConfig};

pub fn small_params(n_sessions: usize, prefix: &str) -> SynthParams {
    SynthParams {
        n_sessions,
        width: 8,
        height: 6,
        id_prefix: prefix.to_string(),
        ..SynthParams::default()
    }
}

pub fn small_corpus(seed: u64, n_sessions: usize) -> Vec<Session> {
    gen_synthetic(seed, &small_params(n_sessions, "s"))
        .unwrap()
        .sessions
}

pub fn write_corpus(dir: &Path, name: &str, sessions: &[Session]) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let path = dir.join(name);
    save_sessions(sessions, &path).unwrap();
    path
}

/// Trains `sessions` for `epochs` into `dir/model` and loads the result back.
pub fn train_into(dir: &Path, sessions: &[Session], epochs: usize) -> Artifacts {
    let corpus = write_corpus(dir, "train.jsonl", sessions);
    let cfg = AppConfig {
        training: TrainingConfig { epochs },
        ..AppConfig::default()
    };
    let model_dir = dir.join("model");
    commands::train(&cfg, sessions, &model_dir).unwrap();
    Artifacts::load(&model_dir, &corpus).unwrap()
}

/// 8x6 level with a ground row and one agent turn adding three coins.
pub fn single_instance_session() -> Session {
    let mut initial = TileGrid::new(8, 6).unwrap();
    for x in 0..8 {
        initial.set(x, 5, TileId::GROUND).unwrap();
    }
    initial.set(1, 4, TileId::PLAYER).unwrap();
    initial.set(6, 4, TileId::FLAG).unwrap();
    let adds = [(2, 2), (3, 2), (4, 2)]
        .iter()
        .map(|&(x, y)| Change {
            x,
            y,
            before: TileId::EMPTY,
            after: TileId::COIN,
        })
        .collect();
    Session::from_turns(
        "solo",
        initial,
        vec![Turn::agent(ChangeSet::new(adds).unwrap())],
    )
    .unwrap()
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mrin")
}
