//! Recorded co-creation sessions, their persistence, conversion to training
//! instances, and a synthetic corpus generator.

mod io;
mod model;
mod synth;

pub use io::{
    glyph_to_tile, load_sessions, save_sessions, sessions_from_str, sessions_to_string,
    tile_to_glyph, ChangeRecord, DecisionRecord, SessionRecord, TurnRecord, LOG_SCHEMA,
    LOG_VERSION,
};
pub use model::{Actor, Decision, Session, Turn, Verdict};
pub use synth::{
    gen_synthetic, InjectedError, LabelErrorKind, Motif, MotifKind, Plant, SynthParams,
    SyntheticCorpus,
};

use thiserror::Error;

use crate::tensor::Tensor3;
use crate::tilegrid::{GridError, ACTION_CHANNELS};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error(transparent)]
    IoFailure(#[from] std::io::Error),
    #[error("replay failed at turn {turn}: {source}")]
    Replay { turn: usize, source: GridError },
    #[error("session {0}: final level does not equal the replayed turns")]
    FinalLevelMismatch(String),
    #[error("session {session}, turn {turn}: {message}")]
    InvalidDecision {
        session: String,
        turn: usize,
        message: String,
    },
    #[error("corpus has no AGENT turns")]
    NoAgentTurns,
    #[error("bad generator parameters: {0}")]
    BadParams(String),
}

/// One (state, target) pair, numbered in presentation order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingInstance {
    pub instance_id: usize,
    pub session_id: String,
    /// Index of the AGENT turn inside its session.
    pub turn_index: usize,
    /// One-hot level before the agent turn, `(width, height, 34)`.
    pub state: Tensor3,
    /// 1.0 at `(x, y, tile)` for every tile the agent added, `(width, height, 32)`.
    pub target_q: Tensor3,
}

/// One instance per AGENT turn, in corpus order.
///
/// The target is the binary addition grid of the turn: channel `tile` is 1.0
/// where the agent placed `tile`, everything else 0.0.
pub fn build_training_set(sessions: &[Session]) -> Result<Vec<TrainingInstance>, SessionError> {
    let mut out = Vec::new();
    for s in sessions {
        let snaps = s.snapshots()?;
        for (k, turn) in s.turns.iter().enumerate() {
            if turn.actor != Actor::Agent {
                continue;
            }
            let before = &snaps[k];
            let mut target = Tensor3::zeros(before.width(), before.height(), ACTION_CHANNELS);
            for c in turn.changes.additions() {
                if !c.after.is_placeable() {
                    return Err(SessionError::InvalidDecision {
                        session: s.session_id.clone(),
                        turn: k,
                        message: "agent addition of a non-placeable tile".into(),
                    });
                }
                target.set(c.x, c.y, c.after.index(), 1.0);
            }
            out.push(TrainingInstance {
                instance_id: out.len(),
                session_id: s.session_id.clone(),
                turn_index: k,
                state: before.to_state_tensor(),
                target_q: target,
            });
        }
    }
    if out.is_empty() {
        return Err(SessionError::NoAgentTurns);
    }
    Ok(out)
}
