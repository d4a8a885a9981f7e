//! Seeded synthetic co-creation corpora.
//!
//! Every level starts from a ground row with PLAYER, FLAG and a ground step
//! at random interior positions. Each session is dominated by one [`Motif`]: a structural pattern drawn in a
//! single tile type. Sessions alternate AGENT turns (motif stamps) and HUMAN
//! turns (KEEP/DELETE decisions on every addition of the preceding agent turn,
//! a few motif tiles of their own, and any scheduled contradictions).
//!
//! Contradictions are the injected labeling errors: a KEEP whose tile the
//! human deletes in a later turn (false positive) or a DELETE whose tile the
//! human puts back in a later turn (false negative). Deleted cells are never
//! reused by anyone else, so no contradiction happens by accident and the
//! returned ground truth is exact.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Decision, Session, SessionError, Turn, Verdict};
use crate::tilegrid::{apply, Change, ChangeSet, TileGrid, TileId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotifKind {
    Row,
    Column,
    Staircase,
    Pyramid,
    Block,
    Diagonal,
    Checker,
    Ring,
}

impl MotifKind {
    pub const ALL: [MotifKind; 8] = [
        MotifKind::Row,
        MotifKind::Column,
        MotifKind::Staircase,
        MotifKind::Pyramid,
        MotifKind::Block,
        MotifKind::Diagonal,
        MotifKind::Checker,
        MotifKind::Ring,
    ];

    /// Cell offsets `(dx, dy)` of one stamp relative to its anchor. `dy` grows
    /// downwards; grounded shapes are anchored on their bottom row.
    fn offsets(self) -> Vec<(i64, i64)> {
        match self {
            MotifKind::Row => (0..4).map(|i| (i, 0)).collect(),
            MotifKind::Column => (0..3).map(|j| (0, -j)).collect(),
            MotifKind::Staircase => (0..3).flat_map(|i| (0..=i).map(move |j| (i, -j))).collect(),
            MotifKind::Pyramid => vec![
                (0, 0),
                (1, 0),
                (2, 0),
                (3, 0),
                (4, 0),
                (1, -1),
                (2, -1),
                (3, -1),
                (2, -2),
            ],
            MotifKind::Block => (0..3).flat_map(|i| (0..2).map(move |j| (i, -j))).collect(),
            MotifKind::Diagonal => (0..4).map(|i| (i, -i)).collect(),
            MotifKind::Checker => (0..4)
                .flat_map(|i| (0..2).map(move |j| (i, -j)))
                .filter(|(i, j)| (i + j) % 2 == 0)
                .collect(),
            MotifKind::Ring => (0..3)
                .flat_map(|i| (0..3).map(move |j| (i, -j)))
                .filter(|&(i, j)| !(i == 1 && j == -1))
                .collect(),
        }
    }

    /// Grounded shapes sit on the row just above the floor.
    fn grounded(self) -> bool {
        matches!(
            self,
            MotifKind::Column | MotifKind::Staircase | MotifKind::Pyramid | MotifKind::Block
        )
    }
}

/// A structural pattern drawn in one tile type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Motif {
    pub kind: MotifKind,
    pub tile: TileId,
}

impl Motif {
    /// 30 motifs, one per placeable non-EMPTY non-GROUND tile, cycling through the kinds.
    pub fn standard_palette() -> Vec<Motif> {
        TileId::all()
            .filter(|t| t.is_placeable() && !t.is_empty() && *t != TileId::GROUND)
            .enumerate()
            .map(|(i, tile)| Motif {
                kind: MotifKind::ALL[i % MotifKind::ALL.len()],
                tile,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub n_sessions: usize,
    pub width: usize,
    pub height: usize,
    /// Probability that a KEEP decision is contradicted later.
    pub fp_rate: f64,
    /// Probability that a DELETE decision is contradicted later.
    pub fn_rate: f64,
    /// Session `i` uses `motif_palette[i % len]`; empty means [`Motif::standard_palette`].
    pub motif_palette: Vec<Motif>,
    /// AGENT turns per session (each followed by a HUMAN turn); at least 2.
    pub agent_turns: usize,
    /// Inclusive range of tiles per agent turn.
    pub agent_additions: (usize, usize),
    /// Probability that the human deletes an agent addition.
    pub delete_rate: f64,
    /// Random single tiles scattered over the starting chunk.
    pub scenery: usize,
    /// Prefix for session ids (`{prefix}{index:03}`).
    pub id_prefix: String,
    /// Optional session whose single agent proposal dominates training.
    pub plant: Option<Plant>,
    /// When set, every AGENT turn stamps this motif instead of the session's own.
    pub agent_motif: Option<Motif>,
}

/// A planted session: the agent proposes the same large stamp from the same
/// state `repeats` times. The human silently reverts it every time but the
/// last, then KEEPs it. The training set therefore holds `repeats` identical
/// instances with an unusually large target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plant {
    pub session: usize,
    pub repeats: usize,
    pub additions: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_sessions: 24,
            width: 12,
            height: 8,
            fp_rate: 0.0,
            fn_rate: 0.0,
            motif_palette: Vec::new(),
            agent_turns: 4,
            agent_additions: (8, 16),
            delete_rate: 0.25,
            scenery: 4,
            id_prefix: "s".to_string(),
            plant: None,
            agent_motif: None,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: &str| Err(SessionError::BadParams(m.to_string()));
        for (name, r) in [
            ("fp_rate", self.fp_rate),
            ("fn_rate", self.fn_rate),
            ("delete_rate", self.delete_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(SessionError::BadParams(format!(
                    "{name} {r} outside [0, 1]"
                )));
            }
        }
        if self.n_sessions == 0 {
            return bad("n_sessions must be positive");
        }
        if self.width < 6 || self.height < 5 {
            return bad("grid must be at least 6x5");
        }
        if self.agent_turns < 2 {
            return bad("agent_turns must be at least 2");
        }
        let (lo, hi) = self.agent_additions;
        if lo == 0 || lo > hi {
            return bad("agent_additions must be a non-empty range of positive counts");
        }
        if let Some(pl) = self.plant {
            if pl.session >= self.n_sessions || pl.repeats == 0 || pl.additions == 0 {
                return bad(
                    "plant must name an existing session with positive repeats and additions",
                );
            }
        }
        let agent = self.agent_motif.iter();
        if self
            .motif_palette
            .iter()
            .chain(agent)
            .any(|m| !m.tile.is_placeable() || m.tile.is_empty())
        {
            return bad("motif tiles must be placeable and non-empty");
        }
        Ok(())
    }

    pub fn palette(&self) -> Vec<Motif> {
        if self.motif_palette.is_empty() {
            Motif::standard_palette()
        } else {
            self.motif_palette.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LabelErrorKind {
    FalsePositive,
    FalseNegative,
}

/// Ground truth for one injected contradiction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InjectedError {
    pub session_id: String,
    pub kind: LabelErrorKind,
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub sessions: Vec<Session>,
    /// Motif of each session, parallel to `sessions`.
    pub motifs: Vec<Motif>,
    pub injected: Vec<InjectedError>,
}

pub fn gen_synthetic(seed: u64, params: &SynthParams) -> Result<SyntheticCorpus, SessionError> {
    params.validate()?;
    let palette = params.palette();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = SyntheticCorpus {
        sessions: Vec::with_capacity(params.n_sessions),
        motifs: Vec::with_capacity(params.n_sessions),
        injected: Vec::new(),
    };
    for i in 0..params.n_sessions {
        let motif = palette[i % palette.len()];
        let id = format!("{}{:03}", params.id_prefix, i);
        // Session 0 carries one forced event of each enabled kind.
        let force = i == 0;
        let builder = SessionBuilder::new(params, motif, &mut rng)?;
        let (session, injected) = match params.plant {
            Some(pl) if pl.session == i => (builder.run_planted(&id, pl)?, Vec::new()),
            _ => builder.run(&id, force)?,
        };
        corpus.sessions.push(session);
        corpus.motifs.push(motif);
        corpus.injected.extend(injected);
    }
    Ok(corpus)
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    due_human_turn: usize,
    kind: LabelErrorKind,
    x: usize,
    y: usize,
    tile: TileId,
}

struct SessionBuilder<'a, R: Rng> {
    params: &'a SynthParams,
    motif: Motif,
    rng: &'a mut R,
    level: TileGrid,
    initial: TileGrid,
    /// Cells nobody may place on again (deleted agent additions, contradicted keeps).
    forbidden: HashSet<(usize, usize)>,
}

impl<'a, R: Rng> SessionBuilder<'a, R> {
    fn new(params: &'a SynthParams, motif: Motif, rng: &'a mut R) -> Result<Self, SessionError> {
        let (w, h) = (params.width, params.height);
        let grid_err = |e: crate::tilegrid::GridError| SessionError::BadParams(e.to_string());
        let mut level = TileGrid::new(w, h).map_err(grid_err)?;
        for x in 0..w {
            level.set(x, h - 1, TileId::GROUND).map_err(grid_err)?;
        }
        // Frame tiles stay off the outer columns and the ground also rises
        // once inside the grid, so every conv1 kernel tap sees each of them.
        let player_x = rng.gen_range(2..w / 2);
        let flag_x = rng.gen_range(w / 2..w - 1);
        level
            .set(player_x, h - 2, TileId::PLAYER)
            .map_err(grid_err)?;
        level.set(flag_x, h - 2, TileId::FLAG).map_err(grid_err)?;
        let step_x = loop {
            let x = rng.gen_range(2..w - 1);
            if x != player_x && x != flag_x {
                break x;
            }
        };
        for y in (h - 1 - rng.gen_range(1..=2))..h - 1 {
            level.set(step_x, y, TileId::GROUND).map_err(grid_err)?;
        }
        let mut b = SessionBuilder {
            params,
            motif,
            rng,
            initial: level.clone(),
            level,
            forbidden: HashSet::new(),
        };
        // One motif stamp in the starting chunk.
        let seed_cells = b.stamp(motif.kind.offsets().len());
        for c in &seed_cells {
            b.level.set(c.x, c.y, c.after).map_err(grid_err)?;
        }
        let scenery_tiles: Vec<TileId> = TileId::all()
            .filter(|t| t.is_placeable() && !t.is_empty() && *t != TileId::GROUND)
            .collect();
        for _ in 0..params.scenery {
            let (x, y) = (b.rng.gen_range(2..w - 1), b.rng.gen_range(2..h - 1));
            let tile = *scenery_tiles.choose(b.rng).expect("non-empty");
            if b.level.get(x, y).is_empty() {
                b.level.set(x, y, tile).map_err(grid_err)?;
            }
        }
        b.initial = b.level.clone();
        Ok(b)
    }

    fn available(&self, x: usize, y: usize) -> bool {
        self.level.get(x, y).is_empty() && !self.forbidden.contains(&(x, y))
    }

    /// Up to `n` additions forming stamps of the session motif on free cells.
    fn stamp(&mut self, n: usize) -> Vec<Change> {
        self.stamp_motif(self.motif, n)
    }

    fn stamp_motif(&mut self, motif: Motif, n: usize) -> Vec<Change> {
        let (w, h) = self.level.dims();
        let offsets = motif.kind.offsets();
        let mut chosen: Vec<Change> = Vec::new();
        let mut taken: HashSet<(usize, usize)> = HashSet::new();
        for attempt in 0..80 {
            if chosen.len() >= n {
                break;
            }
            let ax = self.rng.gen_range(0..w as i64);
            // Grounded shapes float once the floor is crowded.
            let ay = if motif.kind.grounded() && attempt < 30 {
                h as i64 - 2
            } else {
                self.rng.gen_range(2..h as i64 - 1)
            };
            let cells: Vec<(usize, usize)> = offsets
                .iter()
                .map(|(dx, dy)| (ax + dx, ay + dy))
                .filter(|&(x, y)| x >= 0 && y >= 0 && x < w as i64 && y < h as i64 - 1)
                .map(|(x, y)| (x as usize, y as usize))
                .collect();
            // Whole stamps only, so the motif stays recognisable.
            if cells.len() != offsets.len()
                || cells
                    .iter()
                    .any(|&(x, y)| !self.available(x, y) || taken.contains(&(x, y)))
            {
                continue;
            }
            for (x, y) in cells {
                if chosen.len() >= n {
                    break;
                }
                taken.insert((x, y));
                chosen.push(Change {
                    x,
                    y,
                    before: TileId::EMPTY,
                    after: motif.tile,
                });
            }
        }
        chosen
    }

    fn run_planted(mut self, session_id: &str, plant: Plant) -> Result<Session, SessionError> {
        let grid_err = |e: crate::tilegrid::GridError| SessionError::BadParams(e.to_string());
        let additions = self.stamp(plant.additions);
        let proposal = ChangeSet::new(additions.clone()).map_err(grid_err)?;
        let revert = ChangeSet::new(
            additions
                .iter()
                .map(|a| Change {
                    x: a.x,
                    y: a.y,
                    before: a.after,
                    after: TileId::EMPTY,
                })
                .collect(),
        )
        .map_err(grid_err)?;
        let keep: Vec<Decision> = additions
            .iter()
            .map(|a| Decision {
                x: a.x,
                y: a.y,
                tile: a.after,
                verdict: Verdict::Keep,
            })
            .collect();
        let mut turns = Vec::with_capacity(2 * plant.repeats);
        for r in 0..plant.repeats {
            turns.push(Turn::agent(proposal.clone()));
            if r + 1 < plant.repeats {
                turns.push(Turn::human(revert.clone(), Vec::new()));
            } else {
                turns.push(Turn::human(ChangeSet::empty(), keep.clone()));
            }
        }
        Session::from_turns(session_id, self.initial, turns)
    }

    fn run(
        mut self,
        session_id: &str,
        force: bool,
    ) -> Result<(Session, Vec<InjectedError>), SessionError> {
        let p = self.params;
        let k_turns = p.agent_turns;
        let mut turns = Vec::with_capacity(2 * k_turns);
        let mut schedule: Vec<Scheduled> = Vec::new();
        let mut injected = Vec::new();
        let grid_err = |e: crate::tilegrid::GridError| SessionError::BadParams(e.to_string());

        for k in 0..k_turns {
            // AGENT turn.
            let n = self
                .rng
                .gen_range(p.agent_additions.0..=p.agent_additions.1);
            let additions = self.stamp_motif(p.agent_motif.unwrap_or(self.motif), n);
            let agent_cs = ChangeSet::new(additions.clone()).map_err(grid_err)?;
            self.level = apply(&self.level, &agent_cs).map_err(grid_err)?;
            turns.push(Turn::agent(agent_cs));

            // HUMAN turn `k`.
            let mut changes: Vec<Change> = Vec::new();
            let mut decisions = Vec::with_capacity(additions.len());
            let later_turns = k + 1..k_turns;
            for (j, a) in additions.iter().enumerate() {
                let forced_fn = force && k == 0 && j == 0 && p.fn_rate > 0.0;
                let forced_fp = force && k == 0 && j == 1 && p.fp_rate > 0.0;
                let delete = if forced_fn {
                    true
                } else if forced_fp {
                    false
                } else {
                    self.rng.gen_bool(p.delete_rate)
                };
                let verdict = if delete {
                    Verdict::Delete
                } else {
                    Verdict::Keep
                };
                decisions.push(Decision {
                    x: a.x,
                    y: a.y,
                    tile: a.after,
                    verdict,
                });
                let (rate, kind, forced) = if delete {
                    (p.fn_rate, LabelErrorKind::FalseNegative, forced_fn)
                } else {
                    (p.fp_rate, LabelErrorKind::FalsePositive, forced_fp)
                };
                let contradict =
                    !later_turns.is_empty() && (forced || (rate > 0.0 && self.rng.gen_bool(rate)));
                if delete {
                    changes.push(Change {
                        x: a.x,
                        y: a.y,
                        before: a.after,
                        after: TileId::EMPTY,
                    });
                    self.forbidden.insert((a.x, a.y));
                }
                if contradict {
                    let due = if forced {
                        k + 1
                    } else {
                        self.rng.gen_range(later_turns.clone())
                    };
                    schedule.push(Scheduled {
                        due_human_turn: due,
                        kind,
                        x: a.x,
                        y: a.y,
                        tile: a.after,
                    });
                }
            }
            for ev in schedule.iter().filter(|e| e.due_human_turn == k) {
                let change = match ev.kind {
                    LabelErrorKind::FalsePositive => {
                        self.forbidden.insert((ev.x, ev.y));
                        Change {
                            x: ev.x,
                            y: ev.y,
                            before: ev.tile,
                            after: TileId::EMPTY,
                        }
                    }
                    LabelErrorKind::FalseNegative => Change {
                        x: ev.x,
                        y: ev.y,
                        before: TileId::EMPTY,
                        after: ev.tile,
                    },
                };
                changes.push(change);
                injected.push(InjectedError {
                    session_id: session_id.to_string(),
                    kind: ev.kind,
                    x: ev.x,
                    y: ev.y,
                    tile: ev.tile,
                });
            }
            // Decisions and contradictions first, then the human's own motif work on what is left.
            let cs = ChangeSet::new(changes.clone()).map_err(grid_err)?;
            self.level = apply(&self.level, &cs).map_err(grid_err)?;
            let extra = self.rng.gen_range(0..=3);
            let mut own = self.stamp(extra);
            own.shuffle(self.rng);
            let own_cs = ChangeSet::new(own.clone()).map_err(grid_err)?;
            self.level = apply(&self.level, &own_cs).map_err(grid_err)?;
            changes.extend(own);
            turns.push(Turn::human(
                ChangeSet::new(changes).map_err(grid_err)?,
                decisions,
            ));
        }

        let session = Session::from_turns(session_id, self.initial, turns)?;
        debug_assert_eq!(session.final_level, self.level);
        Ok((session, injected))
    }
}
