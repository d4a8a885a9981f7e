//! Contradicted decisions: detection, I/C/D states and degenerate handling.

use std::collections::BTreeSet;

use mrin_core::attribution::{train_tracked, Attribution};
use mrin_core::evalharness::{
    build_icd, detect_label_errors, labeling_error_eval, EvalOptions, ExampleKey,
};
use mrin_core::neuralnet::{ModelMeta, NetworkConfig, SavedModel};
use mrin_core::sessionlog::{
    build_training_set, gen_synthetic, Decision, LabelErrorKind, Session, SynthParams, Turn,
    Verdict,
};
use mrin_core::tilegrid::{Change, ChangeSet, TileGrid, TileId};

const W: usize = 8;
const H: usize = 5;

fn floor() -> TileGrid {
    let mut g = TileGrid::new(W, H).unwrap();
    for x in 0..W {
        g.set(x, H - 1, TileId::GROUND).unwrap();
    }
    g
}

fn add(x: usize, y: usize, t: TileId) -> Change {
    Change {
        x,
        y,
        before: TileId::EMPTY,
        after: t,
    }
}

fn del(x: usize, y: usize, t: TileId) -> Change {
    Change {
        x,
        y,
        before: t,
        after: TileId::EMPTY,
    }
}

fn decide(x: usize, y: usize, tile: TileId, verdict: Verdict) -> Decision {
    Decision {
        x,
        y,
        tile,
        verdict,
    }
}

fn cs(v: Vec<Change>) -> ChangeSet {
    ChangeSet::new(v).unwrap()
}

/// Two kept additions later removed by the human, one deleted addition later put back.
fn handcrafted() -> Session {
    use TileId as T;
    use Verdict::*;
    Session::from_turns(
        "hand",
        floor(),
        vec![
            Turn::agent(cs(vec![
                add(1, 3, T::GOOMBA),
                add(2, 2, T::COIN),
                add(3, 2, T::BRICK),
                add(5, 1, T::COIN),
            ])),
            Turn::human(
                cs(vec![del(5, 1, T::COIN), add(6, 3, T::BRICK)]),
                vec![
                    decide(1, 3, T::GOOMBA, Keep),
                    decide(2, 2, T::COIN, Keep),
                    decide(3, 2, T::BRICK, Keep),
                    decide(5, 1, T::COIN, Delete),
                ],
            ),
            Turn::agent(cs(vec![add(4, 2, T::BRICK)])),
            Turn::human(
                cs(vec![del(1, 3, T::GOOMBA), add(5, 1, T::COIN)]),
                vec![decide(4, 2, T::BRICK, Keep)],
            ),
            Turn::agent(cs(vec![add(6, 2, T::COIN)])),
            Turn::human(
                cs(vec![del(3, 2, T::BRICK), del(6, 2, T::COIN)]),
                vec![decide(6, 2, T::COIN, Delete)],
            ),
        ],
    )
    .unwrap()
}

/// Replay-and-compare oracle for the difference of two snapshots.
fn oracle_diff(a: &TileGrid, b: &TileGrid) -> BTreeSet<(usize, usize, TileId, TileId)> {
    let mut out = BTreeSet::new();
    for y in 0..a.height() {
        for x in 0..a.width() {
            if a.get(x, y) != b.get(x, y) {
                out.insert((x, y, a.get(x, y), b.get(x, y)));
            }
        }
    }
    out
}

fn as_set(d: &ChangeSet) -> BTreeSet<(usize, usize, TileId, TileId)> {
    d.iter().map(|c| (c.x, c.y, c.before, c.after)).collect()
}

#[test]
fn handcrafted_two_fp_one_fn_field_exact() {
    let s = handcrafted();
    let found = detect_label_errors(&s).unwrap();
    let got: Vec<_> = found
        .iter()
        .map(|e| {
            (
                e.kind,
                e.x,
                e.y,
                e.tile,
                e.decision_turn,
                e.intro_turn,
                e.contradiction_turn,
            )
        })
        .collect();
    use LabelErrorKind::*;
    assert_eq!(
        got,
        vec![
            (FalsePositive, 1, 3, TileId::GOOMBA, 1, 0, 3),
            (FalsePositive, 3, 2, TileId::BRICK, 1, 0, 5),
            (FalseNegative, 5, 1, TileId::COIN, 1, 0, 3),
        ]
    );
    let snaps = s.snapshots().unwrap();
    for e in &found {
        assert_eq!(e.session_id, "hand");
        assert_eq!(e.i_state, snaps[0]);
        assert_eq!(e.c_state, snaps[e.contradiction_turn + 1]);
    }
}

#[test]
fn multi_turn_gap_matches_replay_diff() {
    let s = handcrafted();
    let snaps = s.snapshots().unwrap();
    let found = detect_label_errors(&s).unwrap();
    let gap = found.iter().find(|e| e.tile == TileId::BRICK).unwrap();
    let (i, c, d) = build_icd(&s, gap).unwrap();
    assert_eq!(i, snaps[0]);
    assert_eq!(c, snaps[6]);
    let expected = oracle_diff(&snaps[0], &snaps[6]);
    assert_eq!(as_set(&d), expected);
    // The interleaved human BRICK and the second agent BRICK are both in the window.
    assert!(expected.contains(&(6, 3, TileId::EMPTY, TileId::BRICK)));
    assert!(expected.contains(&(4, 2, TileId::EMPTY, TileId::BRICK)));
    for e in &found {
        let (_, _, d) = build_icd(&s, e).unwrap();
        assert_eq!(as_set(&d), oracle_diff(&e.i_state, &e.c_state));
    }
}

#[test]
fn generator_ground_truth_precision_and_recall() {
    for seed in [1u64, 13, 99] {
        let p = SynthParams {
            n_sessions: 30,
            fp_rate: 0.2,
            fn_rate: 0.1,
            ..SynthParams::default()
        };
        let corpus = gen_synthetic(seed, &p).unwrap();
        let truth: BTreeSet<ExampleKey> = corpus
            .injected
            .iter()
            .map(|e| ExampleKey {
                session_id: e.session_id.clone(),
                kind: e.kind,
                x: e.x,
                y: e.y,
                tile: e.tile,
            })
            .collect();
        let mut detected = BTreeSet::new();
        for s in &corpus.sessions {
            for e in detect_label_errors(s).unwrap() {
                assert!(
                    detected.insert(e.key()),
                    "duplicate detection {:?}",
                    e.key()
                );
            }
        }
        assert!(truth
            .iter()
            .any(|k| k.kind == LabelErrorKind::FalsePositive));
        assert!(truth
            .iter()
            .any(|k| k.kind == LabelErrorKind::FalseNegative));
        let tp = truth.intersection(&detected).count();
        assert_eq!(tp, detected.len(), "seed {seed}: precision below 1");
        assert_eq!(tp, truth.len(), "seed {seed}: recall below 1");
    }
}

/// A kept tile the human removes once the agent's next turn added nothing:
/// the I-state and the C-state are the same level.
fn degenerate() -> Session {
    Session::from_turns(
        "degenerate",
        floor(),
        vec![
            Turn::agent(cs(vec![add(2, 2, TileId::COIN)])),
            Turn::human(
                ChangeSet::empty(),
                vec![decide(2, 2, TileId::COIN, Verdict::Keep)],
            ),
            Turn::agent(ChangeSet::empty()),
            Turn::human(cs(vec![del(2, 2, TileId::COIN)]), vec![]),
        ],
    )
    .unwrap()
}

#[test]
fn empty_d_state_is_skipped_and_reported() {
    let d = degenerate();
    let found = detect_label_errors(&d).unwrap();
    assert_eq!(found.len(), 1);
    assert!(found[0].d_state.is_empty());

    let train = gen_synthetic(
        4,
        &SynthParams {
            n_sessions: 4,
            width: W,
            height: H,
            agent_turns: 2,
            agent_additions: (2, 4),
            ..SynthParams::default()
        },
    )
    .unwrap()
    .sessions;
    let instances = build_training_set(&train).unwrap();
    let cfg = NetworkConfig {
        width: W,
        height: H,
        seed: 2,
        conv_filters: [2, 2, 2],
        ..NetworkConfig::default()
    };
    let run = train_tracked(&cfg, &instances, 1).unwrap();
    let model = SavedModel {
        params: run.params.clone(),
        meta: ModelMeta {
            fingerprint: run.fingerprint.clone(),
            epochs: 1,
            instances: instances.len(),
        },
    };
    let attr = Attribution::from_run(&run, false);
    let opts = EvalOptions {
        n_random: 2,
        seed: 7,
        ..EvalOptions::default()
    };
    let report = labeling_error_eval(&model, &attr, &train, &[handcrafted(), d], &opts).unwrap();
    assert_eq!(report.eligible_count, 3);
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].session_id, "degenerate");
    let fp = report
        .by_kind
        .iter()
        .find(|k| k.kind == LabelErrorKind::FalsePositive)
        .unwrap();
    let fneg = report
        .by_kind
        .iter()
        .find(|k| k.kind == LabelErrorKind::FalseNegative)
        .unwrap();
    assert_eq!((fp.tally.count, fneg.tally.count), (2, 1));
    assert_eq!(fp.tally.wins + fneg.tally.wins, report.win_count);
}
