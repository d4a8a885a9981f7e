//! JSON bodies of the service endpoints.
//!
//! Every response carries `schema` and `version`. Requests may carry a
//! `schema`; when present it must name the expected request schema. Grids are
//! arrays of glyph rows and tiles single glyphs, as in the session log.
//!
//! | endpoint                    | request schema        | response schema      |
//! |-----------------------------|-----------------------|----------------------|
//! | `GET /health`               |                       | `mrin-health`        |
//! | `POST /suggest`             | `mrin-level`          | `mrin-suggestion`    |
//! | `POST /explain`             | `mrin-level`          | `mrin-explanation`   |
//! | `GET /sessions`             |                       | `mrin-session-list`  |
//! | `POST /sessions`            | `mrin-session-create` | `mrin-session`       |
//! | `GET /sessions/{id}`        |                       | `mrin-session`       |
//! | `POST /sessions/{id}/turns` | `mrin-turn`           | `mrin-session`       |
//!
//! Errors are `{"schema":"mrin-error","version":1,"code":..,"message":..}`.

use mrin_core::sessionlog::{Actor, ChangeRecord, DecisionRecord, SessionRecord, TurnRecord};
use serde::{Deserialize, Serialize};

pub const WIRE_VERSION: u32 = 1;
pub const LEVEL_SCHEMA: &str = "mrin-level";
pub const SUGGESTION_SCHEMA: &str = "mrin-suggestion";
pub const EXPLANATION_SCHEMA: &str = "mrin-explanation";
pub const SESSION_CREATE_SCHEMA: &str = "mrin-session-create";
pub const SESSION_SCHEMA: &str = "mrin-session";
pub const SESSION_LIST_SCHEMA: &str = "mrin-session-list";
pub const TURN_SCHEMA: &str = "mrin-turn";
pub const HEALTH_SCHEMA: &str = "mrin-health";
pub const ERROR_SCHEMA: &str = "mrin-error";

/// Body of suggest and explain requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub level: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuggestionItem {
    pub x: usize,
    pub y: usize,
    pub tile: String,
    pub q_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuggestionResponse {
    pub schema: String,
    pub version: u32,
    pub suggestion_id: String,
    /// Sorted by descending `q_value`.
    pub additions: Vec<SuggestionItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplanationResponse {
    pub schema: String,
    pub version: u32,
    pub instance_id: usize,
    pub session_id: String,
    pub layer: usize,
    pub filter_index: usize,
    pub modal_count: usize,
    pub responsible_level: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionCreateRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    /// Generated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub initial: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub actor: Actor,
    pub changes: Vec<ChangeRecord>,
    #[serde(default)]
    pub decisions: Vec<DecisionRecord>,
}

impl TurnRequest {
    pub fn into_record(self) -> TurnRecord {
        TurnRecord {
            actor: self.actor,
            changes: self.changes,
            decisions: self.decisions,
        }
    }
}

/// A session in log form plus the wire envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResponse {
    pub schema: String,
    pub version: u32,
    pub session_id: String,
    pub initial: Vec<String>,
    pub turns: Vec<TurnRecord>,
    pub final_level: Vec<String>,
}

impl SessionResponse {
    pub fn new(r: SessionRecord) -> Self {
        Self {
            schema: SESSION_SCHEMA.to_string(),
            version: WIRE_VERSION,
            session_id: r.session_id,
            initial: r.initial,
            turns: r.turns,
            final_level: r.final_level,
        }
    }

    pub fn into_record(self) -> SessionRecord {
        SessionRecord {
            session_id: self.session_id,
            initial: self.initial,
            turns: self.turns,
            final_level: self.final_level,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionListResponse {
    pub schema: String,
    pub version: u32,
    pub sessions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub schema: String,
    pub version: u32,
    pub status: String,
    pub fingerprint: String,
    pub width: usize,
    pub height: usize,
    pub training_instances: usize,
    pub training_sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub schema: String,
    pub version: u32,
    pub code: String,
    pub message: String,
}
