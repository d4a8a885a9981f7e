use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::sessionlog::{Actor, LabelErrorKind, Session, Verdict};
use crate::tilegrid::{diff, ChangeSet, TileGrid, TileId};

/// One contradicted human decision with its three states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelErrorExample {
    pub kind: LabelErrorKind,
    pub session_id: String,
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
    /// Turn holding the KEEP/DELETE decision.
    pub decision_turn: usize,
    /// AGENT turn that introduced the addition.
    pub intro_turn: usize,
    /// Turn that deleted (FP) or re-added (FN) the tile.
    pub contradiction_turn: usize,
    pub i_state: TileGrid,
    pub c_state: TileGrid,
    pub d_state: ChangeSet,
}

/// Identity of an example without its states, for comparisons against ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExampleKey {
    pub session_id: String,
    pub kind: LabelErrorKind,
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
}

impl LabelErrorExample {
    pub fn key(&self) -> ExampleKey {
        ExampleKey {
            session_id: self.session_id.clone(),
            kind: self.kind,
            x: self.x,
            y: self.y,
            tile: self.tile,
        }
    }
}

/// Every decision the final level contradicts: a KEEP whose tile is gone is a
/// false positive, a DELETE whose tile is present is a false negative.
pub fn detect_label_errors(session: &Session) -> Result<Vec<LabelErrorExample>, EvalError> {
    let snaps = session.snapshots()?;
    let mut out = Vec::new();
    for (k, turn) in session.turns.iter().enumerate() {
        if turn.actor != Actor::Human {
            continue;
        }
        for d in &turn.decisions {
            let present = session.final_level.get(d.x, d.y) == d.tile;
            let kind = match (d.verdict, present) {
                (Verdict::Keep, false) => LabelErrorKind::FalsePositive,
                (Verdict::Delete, true) => LabelErrorKind::FalseNegative,
                _ => continue,
            };
            out.push(build_icd_from(session, &snaps, kind, d.x, d.y, d.tile, k)?);
        }
    }
    Ok(out)
}

/// Recomputes the I-, C- and D-states of `example` from the session and
/// checks them against the example.
pub fn build_icd(
    session: &Session,
    example: &LabelErrorExample,
) -> Result<(TileGrid, TileGrid, ChangeSet), EvalError> {
    if example.session_id != session.session_id {
        return Err(EvalError::InconsistentExample(format!(
            "example belongs to session {}, not {}",
            example.session_id, session.session_id
        )));
    }
    let snaps = session.snapshots()?;
    let fresh = build_icd_from(
        session,
        &snaps,
        example.kind,
        example.x,
        example.y,
        example.tile,
        example.decision_turn,
    )?;
    if fresh.intro_turn != example.intro_turn
        || fresh.contradiction_turn != example.contradiction_turn
    {
        return Err(EvalError::InconsistentExample(format!(
            "turns {}/{} recorded, {}/{} replayed",
            example.intro_turn,
            example.contradiction_turn,
            fresh.intro_turn,
            fresh.contradiction_turn
        )));
    }
    Ok((fresh.i_state, fresh.c_state, fresh.d_state))
}

fn build_icd_from(
    session: &Session,
    snaps: &[TileGrid],
    kind: LabelErrorKind,
    x: usize,
    y: usize,
    tile: TileId,
    decision_turn: usize,
) -> Result<LabelErrorExample, EvalError> {
    let bad = |m: String| {
        EvalError::InconsistentExample(format!("{} ({x},{y}): {m}", session.session_id))
    };
    if decision_turn >= session.turns.len() {
        return Err(bad(format!("no turn {decision_turn}")));
    }
    let intro_turn = (0..decision_turn)
        .rev()
        .find(|&t| {
            let turn = &session.turns[t];
            turn.actor == Actor::Agent
                && turn
                    .changes
                    .find(x, y)
                    .is_some_and(|c| c.after == tile && c.is_addition())
        })
        .ok_or_else(|| bad("no introducing agent turn".into()))?;
    // snaps[t + 1] is the level after turn t.
    let contradiction_turn = (decision_turn + 1..session.turns.len())
        .find(|&t| {
            let (before, after) = (snaps[t].get(x, y), snaps[t + 1].get(x, y));
            match kind {
                LabelErrorKind::FalsePositive => before == tile && after != tile,
                LabelErrorKind::FalseNegative => before != tile && after == tile,
            }
        })
        .ok_or_else(|| bad("no contradicting turn".into()))?;
    let i_state = snaps[intro_turn].clone();
    let c_state = snaps[contradiction_turn + 1].clone();
    let d_state = diff(&i_state, &c_state).map_err(|e| bad(e.to_string()))?;
    Ok(LabelErrorExample {
        kind,
        session_id: session.session_id.clone(),
        x,
        y,
        tile,
        decision_turn,
        intro_turn,
        contradiction_turn,
        i_state,
        c_state,
        d_state,
    })
}
