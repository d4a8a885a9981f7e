mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mrin_core::sessionlog::{build_training_set, load_sessions};
use mrin_core::tilegrid::TileId;
use mrin_coservice::artifacts::{artifact_paths, Artifacts, TRAIN_LOG_FILE};
use mrin_coservice::commands::{SESSIONS_FILE, TRUTH_FILE};
use mrin_coservice::suggest::{suggest, SuggestConfig};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(common::bin())
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn losses(model_dir: &Path) -> Vec<f64> {
    fs::read_to_string(model_dir.join(TRAIN_LOG_FILE))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let corpus = common::write_corpus(dir.path(), "c.jsonl", &common::small_corpus(1, 2));
    let bad = dir.path().join("bad.toml");
    for text in [
        "[training]\nepochs = 0\n",
        "[network]\nwidth = 8\nheight = 6\nbogus = 1\n",
        "not toml [",
    ] {
        fs::write(&bad, text).unwrap();
        let o = run(&[
            "train",
            "--config",
            s(&bad),
            "--sessions",
            s(&corpus),
            "--out",
            s(&dir.path().join("m")),
        ]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
    }
    let missing = dir.path().join("missing.toml");
    let o = run(&[
        "gen-data",
        "--config",
        s(&missing),
        "--out",
        s(&dir.path().join("g")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(&bad, "[generator]\nfp_rate = 2.0\n").unwrap();
    let o = run(&[
        "gen-data",
        "--config",
        s(&bad),
        "--out",
        s(&dir.path().join("g")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn data_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let garbage = dir.path().join("garbage.jsonl");
    fs::write(
        &garbage,
        "{\"schema\":\"mrin-session-log\",\"version\":1,\"legend\":\"standard\"}\n{oops\n",
    )
    .unwrap();
    let o = run(&[
        "train",
        "--sessions",
        s(&garbage),
        "--out",
        s(&dir.path().join("m")),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    // a network sized differently from the corpus
    let corpus = common::write_corpus(dir.path(), "c.jsonl", &common::small_corpus(1, 2));
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[network]\nwidth = 10\nheight = 6\n").unwrap();
    let o = run(&[
        "train",
        "--config",
        s(&cfg),
        "--sessions",
        s(&corpus),
        "--out",
        s(&dir.path().join("m")),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn artifacts_from_another_corpus_are_rejected() {
    let dir = TempDir::new().unwrap();
    common::train_into(dir.path(), &common::small_corpus(1, 3), 1);
    let other = common::write_corpus(dir.path(), "other.jsonl", &common::small_corpus(2, 3));
    let o = run(&[
        "eval-explain",
        "--model",
        s(&dir.path().join("model")),
        "--sessions",
        s(&other),
        "--test",
        s(&other),
        "--out",
        s(&dir.path().join("r")),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("fingerprint"));
}

#[test]
fn divergence_exits_4() {
    let dir = TempDir::new().unwrap();
    let corpus = common::write_corpus(dir.path(), "c.jsonl", &common::small_corpus(1, 3));
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "[network]\nwidth = 8\nheight = 6\n[network.adam]\nlr = 1e6\n[training]\nepochs = 10\n",
    )
    .unwrap();
    let out = dir.path().join("m");
    let o = run(&[
        "train",
        "--config",
        s(&cfg),
        "--sessions",
        s(&corpus),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("numeric failure"), "{}", stderr(&o));
    assert!(!out.join("model.bin").exists());
}

#[test]
fn single_instance_is_memorized() {
    let dir = TempDir::new().unwrap();
    let solo = common::single_instance_session();
    let corpus = common::write_corpus(dir.path(), "solo.jsonl", std::slice::from_ref(&solo));
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[training]\nepochs = 200\n").unwrap();
    let model_dir = dir.path().join("model");
    let o = run(&[
        "train",
        "--config",
        s(&cfg),
        "--sessions",
        s(&corpus),
        "--out",
        s(&model_dir),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for p in artifact_paths(&model_dir) {
        assert!(p.exists(), "{} missing", p.display());
    }

    let l = losses(&model_dir);
    assert_eq!(l.len(), 200);
    assert!(l[199] < 0.01 * l[0], "initial {} final {}", l[0], l[199]);

    // queried with its own state the model suggests every target cell
    let artifacts = Artifacts::load(&model_dir, &corpus).unwrap();
    let picks = suggest(
        &artifacts.model.params,
        &solo.initial,
        &SuggestConfig::default(),
    )
    .unwrap();
    let target = &solo.turns[0].changes;
    assert_eq!(
        build_training_set(std::slice::from_ref(&solo))
            .unwrap()
            .len(),
        1
    );
    for c in target.iter() {
        let hit = picks
            .iter()
            .find(|p| (p.x, p.y) == (c.x, c.y))
            .unwrap_or_else(|| panic!("({}, {}) not suggested: {picks:?}", c.x, c.y));
        assert_eq!(hit.tile, c.after);
        assert!((0.5..=1.5).contains(&hit.q_value), "q {}", hit.q_value);
    }
    assert!(picks
        .iter()
        .all(|p| p.tile != TileId::PLAYER && p.tile != TileId::FLAG));
}

#[test]
fn gen_data_writes_corpus_and_truth() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("g.toml");
    fs::write(
        &cfg,
        "[generator]\nn_sessions = 5\nwidth = 10\nheight = 7\nfp_rate = 0.3\nfn_rate = 0.3\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&[
            "gen-data",
            "--config",
            s(&cfg),
            "--seed",
            "7",
            "--out",
            s(out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in [SESSIONS_FILE, TRUTH_FILE] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let sessions = load_sessions(&a.join(SESSIONS_FILE)).unwrap();
    assert_eq!(sessions.len(), 5);
    assert_eq!(sessions[0].initial.dims(), (10, 7));
    let truth: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join(TRUTH_FILE)).unwrap()).unwrap();
    assert_eq!(truth["schema"], "mrin-synthetic-truth");
    assert_eq!(truth["seed"], 7);
    assert!(!truth["injected"].as_array().unwrap().is_empty());

    let c = dir.path().join("c");
    run(&[
        "gen-data",
        "--config",
        s(&cfg),
        "--seed",
        "8",
        "--out",
        s(&c),
    ]);
    assert_ne!(
        fs::read(a.join(SESSIONS_FILE)).unwrap(),
        fs::read(c.join(SESSIONS_FILE)).unwrap()
    );
}

#[test]
fn usage_errors_are_reported() {
    let o = run(&["train"]);
    assert!(!o.status.success());
    let o = run(&["frobnicate"]);
    assert!(!o.status.success());
    let o = run(&["--help"]);
    assert!(o.status.success());
    let help = String::from_utf8_lossy(&o.stdout);
    for verb in ["train", "eval-explain", "eval-labels", "gen-data", "serve"] {
        assert!(help.contains(verb), "{verb} missing from help");
    }
}
