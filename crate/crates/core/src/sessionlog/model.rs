use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::tilegrid::{apply, ChangeSet, TileGrid, TileId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Actor {
    Human,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Keep,
    Delete,
}

/// A human judgement on one earlier agent addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decision {
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub actor: Actor,
    pub changes: ChangeSet,
    /// Only HUMAN turns carry decisions.
    pub decisions: Vec<Decision>,
}

impl Turn {
    pub fn agent(changes: ChangeSet) -> Self {
        Self {
            actor: Actor::Agent,
            changes,
            decisions: Vec::new(),
        }
    }

    pub fn human(changes: ChangeSet, decisions: Vec<Decision>) -> Self {
        Self {
            actor: Actor::Human,
            changes,
            decisions,
        }
    }
}

/// One recorded co-creation session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub session_id: String,
    pub initial: TileGrid,
    pub turns: Vec<Turn>,
    pub final_level: TileGrid,
}

impl Session {
    /// Builds a session whose final level is the replay of `turns` over `initial`.
    pub fn from_turns(
        session_id: impl Into<String>,
        initial: TileGrid,
        turns: Vec<Turn>,
    ) -> Result<Self, SessionError> {
        let mut level = initial.clone();
        for (i, t) in turns.iter().enumerate() {
            level = apply(&level, &t.changes)
                .map_err(|e| SessionError::Replay { turn: i, source: e })?;
        }
        let s = Session {
            session_id: session_id.into(),
            initial,
            turns,
            final_level: level,
        };
        s.validate()?;
        Ok(s)
    }

    /// Level snapshots: index 0 is `initial`, index `k + 1` is the level after turn `k`.
    pub fn snapshots(&self) -> Result<Vec<TileGrid>, SessionError> {
        let mut out = Vec::with_capacity(self.turns.len() + 1);
        out.push(self.initial.clone());
        for (i, t) in self.turns.iter().enumerate() {
            let next = apply(out.last().unwrap(), &t.changes)
                .map_err(|e| SessionError::Replay { turn: i, source: e })?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn agent_turn_count(&self) -> usize {
        self.turns
            .iter()
            .filter(|t| t.actor == Actor::Agent)
            .count()
    }

    /// Checks replay consistency and that every decision refers to an addition
    /// made by an earlier AGENT turn, with DELETE decisions removing it in the
    /// same turn and KEEP decisions leaving it untouched.
    pub fn validate(&self) -> Result<(), SessionError> {
        let snaps = self.snapshots()?;
        if snaps.last() != Some(&self.final_level) {
            return Err(SessionError::FinalLevelMismatch(self.session_id.clone()));
        }
        for (k, turn) in self.turns.iter().enumerate() {
            if turn.actor == Actor::Agent {
                if !turn.decisions.is_empty() {
                    return Err(self.bad_decision(k, "agent turns cannot carry decisions"));
                }
                if turn.changes.iter().any(|c| !c.after.is_placeable()) {
                    return Err(self.bad_decision(k, "agent placed PLAYER or FLAG"));
                }
                continue;
            }
            for d in &turn.decisions {
                let introduced = self.turns[..k].iter().any(|t| {
                    t.actor == Actor::Agent
                        && t.changes
                            .find(d.x, d.y)
                            .is_some_and(|c| c.after == d.tile && c.is_addition())
                });
                if !introduced {
                    return Err(
                        self.bad_decision(k, "decision does not match an earlier agent addition")
                    );
                }
                let own = turn.changes.find(d.x, d.y);
                let ok = match d.verdict {
                    Verdict::Delete => {
                        own.is_some_and(|c| c.before == d.tile && c.after.is_empty())
                    }
                    Verdict::Keep => own.is_none() && snaps[k].get(d.x, d.y) == d.tile,
                };
                if !ok {
                    return Err(self.bad_decision(k, "decision inconsistent with the turn's edits"));
                }
            }
        }
        Ok(())
    }

    fn bad_decision(&self, turn: usize, message: &str) -> SessionError {
        SessionError::InvalidDecision {
            session: self.session_id.clone(),
            turn,
            message: message.to_string(),
        }
    }
}
