use std::sync::OnceLock;

use mrin_core::attribution::{
    explain, most_activated_channel, train_tracked, Attribution, DeltaLedger, SliceNorm,
};
use mrin_core::neuralnet::{ModelMeta, NetworkConfig, ParamLayout, SavedModel};
use mrin_core::overlap::local_overlap_ratio;
use mrin_core::sessionlog::{build_training_set, gen_synthetic, Session, SynthParams};
use mrin_core::tensor::Tensor3;
use mrin_core::tilegrid::{
    apply, diff, parse_text_level, render_text_level, Legend, TileGrid, TileId,
};
use proptest::prelude::*;

fn grid_strategy(max_w: usize, max_h: usize) -> impl Strategy<Value = TileGrid> {
    (3..=max_w, 3..=max_h).prop_flat_map(|(w, h)| {
        // Mostly empty cells, like real levels.
        let tile = prop_oneof![3 => Just(0u8), 1 => 0u8..34];
        prop::collection::vec(tile, w * h).prop_map(move |ids| {
            TileGrid::from_cells(
                w,
                h,
                ids.into_iter().map(|i| TileId::new(i).unwrap()).collect(),
            )
            .unwrap()
        })
    })
}

fn same_size_pair(max_w: usize, max_h: usize) -> impl Strategy<Value = (TileGrid, TileGrid)> {
    grid_strategy(max_w, max_h).prop_flat_map(|a| {
        let (w, h) = a.dims();
        let tile = prop_oneof![3 => Just(0u8), 1 => 0u8..34];
        prop::collection::vec(tile, w * h).prop_map(move |ids| {
            let b = TileGrid::from_cells(
                w,
                h,
                ids.into_iter().map(|i| TileId::new(i).unwrap()).collect(),
            )
            .unwrap();
            (a.clone(), b)
        })
    })
}

/// Non-empty 3x3 windows collected by hand, then sorted.
fn sorted_windows(g: &TileGrid) -> Vec<[u8; 9]> {
    let mut out = Vec::new();
    for y in 0..g.height() - 2 {
        for x in 0..g.width() - 2 {
            let mut p = [0u8; 9];
            for (i, v) in p.iter_mut().enumerate() {
                *v = g.get(x + i % 3, y + i / 3).raw();
            }
            if p.iter().any(|&t| t != 0) {
                out.push(p);
            }
        }
    }
    out.sort_unstable();
    out
}

fn merge_count(a: &[[u8; 9]], b: &[[u8; 9]]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

struct Fixture {
    model: SavedModel,
    attr: Attribution,
    sessions: Vec<Session>,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let sessions = gen_synthetic(
            8,
            &SynthParams {
                n_sessions: 5,
                width: 7,
                height: 5,
                agent_turns: 2,
                agent_additions: (2, 5),
                ..SynthParams::default()
            },
        )
        .unwrap()
        .sessions;
        let inst = build_training_set(&sessions).unwrap();
        let cfg = NetworkConfig {
            width: 7,
            height: 5,
            seed: 4,
            ..NetworkConfig::default()
        };
        let run = train_tracked(&cfg, &inst, 2).unwrap();
        Fixture {
            model: SavedModel {
                params: run.params.clone(),
                meta: ModelMeta {
                    fingerprint: run.fingerprint.clone(),
                    epochs: 2,
                    instances: inst.len(),
                },
            },
            attr: Attribution::from_run(&run, false),
            sessions,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn one_hot_state(g in grid_strategy(10, 8)) {
        let t = g.to_state_tensor();
        prop_assert_eq!(t.shape(), (g.width(), g.height(), 34));
        for (x, y, tile) in g.iter() {
            let cell = t.cell(x, y);
            prop_assert_eq!(cell.iter().filter(|&&v| v == 1.0).count(), 1);
            prop_assert_eq!(cell.iter().filter(|&&v| v == 0.0).count(), 33);
            prop_assert_eq!(cell[tile.index()], 1.0);
        }
    }

    #[test]
    fn patch_count_bounded_by_windows(g in grid_strategy(12, 9)) {
        let n = mrin_core::tilegrid::extract_patches(&g).unwrap().len();
        prop_assert!(n <= (g.width() - 2) * (g.height() - 2));
        prop_assert_eq!(n, sorted_windows(&g).len());
    }

    #[test]
    fn diff_then_apply_round_trips((a, b) in same_size_pair(10, 8)) {
        let d = diff(&a, &b).unwrap();
        prop_assert_eq!(apply(&a, &d).unwrap(), b.clone());
        prop_assert_eq!(d.len(), a.cells().iter().zip(b.cells()).filter(|(x, y)| x != y).count());
        prop_assert!(diff(&a, &a).unwrap().is_empty());
    }

    #[test]
    fn text_round_trips(g in grid_strategy(12, 9)) {
        let legend = Legend::standard();
        let text = render_text_level(&g, legend);
        prop_assert_eq!(parse_text_level(&text, legend).unwrap(), g.clone());
        prop_assert_eq!(parse_text_level(&format!("{text}\n"), legend).unwrap(), g);
    }

    #[test]
    fn overlap_matches_sort_merge((level, action) in same_size_pair(10, 8)) {
        let a = sorted_windows(&action);
        match local_overlap_ratio(&level, &action) {
            Ok(r) => {
                let l = sorted_windows(&level);
                prop_assert_eq!(r.matched, merge_count(&l, &a));
                prop_assert_eq!(r.action_patches, a.len());
                prop_assert_eq!(r.ratio, r.matched as f64 / a.len() as f64);
                prop_assert!((0.0..=1.0).contains(&r.ratio));
            }
            Err(_) => prop_assert!(a.is_empty()),
        }
    }

    #[test]
    fn filter_choice_ignores_positive_scale(
        vals in prop::collection::vec(-5.0f64..5.0, 4 * 3 * 6),
        k in -6i32..6,
    ) {
        let t = Tensor3::from_vec(4, 3, 6, vals.clone()).unwrap();
        let s = 2f64.powi(k);
        let scaled = Tensor3::from_vec(4, 3, 6, vals.iter().map(|v| v * s).collect()).unwrap();
        for norm in [SliceNorm::L1, SliceNorm::L2, SliceNorm::Max] {
            prop_assert_eq!(most_activated_channel(&t, norm), most_activated_channel(&scaled, norm));
        }
    }

    #[test]
    fn flat_index_is_a_bijection(w in 3usize..9, h in 3usize..7, f1 in 1usize..5, f2 in 1usize..5, f3 in 1usize..5, probe in 0.0f64..1.0) {
        let cfg = NetworkConfig { width: w, height: h, conv_filters: [f1, f2, f3], ..NetworkConfig::default() };
        let layout = ParamLayout::for_config(&cfg);
        let flat = ((layout.total as f64) * probe) as usize % layout.total;
        let r = layout.locate(flat).unwrap();
        prop_assert_eq!(layout.flat_index(r), Some(flat));
        prop_assert!(layout.locate(layout.total).is_none());
    }

    #[test]
    fn finalize_is_pure(deltas in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 16 + 8 + 2), 1..6)) {
        let mut ledger = DeltaLedger::with_shapes([(2, 2, 2), (2, 1, 4), (1, 1, 2)], deltas.len());
        let zero = vec![0.0; deltas[0].len()];
        for (i, d) in deltas.iter().enumerate() {
            ledger.record_conv_delta(i, &zero, d).unwrap();
        }
        let before = ledger.clone();
        let a = ledger.finalize().unwrap();
        let b = ledger.finalize().unwrap();
        prop_assert_eq!(&ledger, &before);
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn explanations_stay_inside_the_training_set(
        ids in prop::collection::vec(prop_oneof![3 => Just(0u8), 1 => 0u8..34], 7 * 5)
    ) {
        let f = fixture();
        let state = TileGrid::from_cells(7, 5, ids.into_iter().map(|i| TileId::new(i).unwrap()).collect()).unwrap();
        let e = explain(&f.model, &f.attr, &f.sessions, &state).unwrap();
        prop_assert!(e.instance_id < f.model.meta.instances);
        prop_assert!(e.filter_index < 8);
        let owner = f.sessions.iter().find(|s| s.session_id == e.session_id).unwrap();
        prop_assert_eq!(&e.responsible_level, &owner.final_level);
        prop_assert_eq!(&f.attr.instance_sessions[e.instance_id], &e.session_id);
    }
}
