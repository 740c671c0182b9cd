//! Wire messages. One JSON object per line in each direction.

use std::fmt;
use std::str::FromStr;

use gvg_core::engine::{Action, Status};
use gvg_core::render::GridObservation;
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

/// Longest accepted request line in bytes, newline excluded.
pub const MAX_LINE: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObsMode {
    #[default]
    Grid,
    Pixels,
    Both,
}

impl ObsMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ObsMode::Grid => "grid",
            ObsMode::Pixels => "pixels",
            ObsMode::Both => "both",
        }
    }

    pub fn grid(self) -> bool {
        self != ObsMode::Pixels
    }

    pub fn pixels(self) -> bool {
        self != ObsMode::Grid
    }
}

impl FromStr for ObsMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(ObsMode::Grid),
            "pixels" => Ok(ObsMode::Pixels),
            "both" => Ok(ObsMode::Both),
            _ => Err(format!("unknown observation mode `{s}`")),
        }
    }
}

impl fmt::Display for ObsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    /// Not valid UTF-8 JSON, not an object, or over [`MAX_LINE`].
    BadJson,
    /// Missing or unrecognised `type`.
    UnknownType,
    /// A field is missing or has the wrong shape.
    BadRequest,
    UnknownGame,
    BadLevel,
    NoEpisode,
    IllegalAction,
    LearningClockExpired,
}

/// Parsed client request.
#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Hello,
    Reset { game: String, level: usize, seed: u64, obs_mode: Option<ObsMode> },
    Step { action: ActionRef },
    Abort,
    Goodbye,
}

/// An action by name or by index into the game's action list.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionRef {
    Name(String),
    Index(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolError {
    pub code: ErrorCode,
    pub detail: String,
}

impl ProtocolError {
    pub fn new(code: ErrorCode, detail: impl Into<String>) -> Self {
        ProtocolError { code, detail: detail.into() }
    }
}

fn bad(detail: impl Into<String>) -> ProtocolError {
    ProtocolError::new(ErrorCode::BadRequest, detail)
}

/// Parses one request line. Unknown fields are ignored.
pub fn parse_request(line: &[u8]) -> Result<Request, ProtocolError> {
    let text = std::str::from_utf8(line).map_err(|_| ProtocolError::new(ErrorCode::BadJson, "line is not UTF-8"))?;
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ProtocolError::new(ErrorCode::BadJson, e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| ProtocolError::new(ErrorCode::BadJson, "expected a JSON object"))?;
    let ty = match obj.get("type") {
        Some(serde_json::Value::String(t)) => t.as_str(),
        Some(_) => return Err(ProtocolError::new(ErrorCode::UnknownType, "`type` must be a string")),
        None => return Err(ProtocolError::new(ErrorCode::UnknownType, "missing `type`")),
    };
    match ty {
        "hello" => Ok(Request::Hello),
        "abort" => Ok(Request::Abort),
        "goodbye" => Ok(Request::Goodbye),
        "reset" => {
            let game = match obj.get("game") {
                Some(serde_json::Value::String(g)) => g.clone(),
                _ => return Err(bad("reset needs a string `game`")),
            };
            let level = match obj.get("level") {
                None | Some(serde_json::Value::Null) => 0,
                Some(v) => v.as_u64().ok_or_else(|| bad("`level` must be a non-negative integer"))? as usize,
            };
            let seed = match obj.get("seed") {
                None | Some(serde_json::Value::Null) => 0,
                Some(v) => v.as_u64().ok_or_else(|| bad("`seed` must be a non-negative integer"))?,
            };
            let obs_mode = match obj.get("obs_mode") {
                None | Some(serde_json::Value::Null) => None,
                Some(serde_json::Value::String(m)) => Some(m.parse().map_err(bad)?),
                Some(_) => return Err(bad("`obs_mode` must be a string")),
            };
            Ok(Request::Reset { game, level, seed, obs_mode })
        }
        "step" => {
            let action = match obj.get("action") {
                Some(serde_json::Value::String(a)) => ActionRef::Name(a.clone()),
                Some(v) if v.is_u64() => ActionRef::Index(v.as_u64().unwrap()),
                _ => return Err(bad("step needs `action`: a name or a non-negative index")),
            };
            Ok(Request::Step { action })
        }
        other => Err(ProtocolError::new(ErrorCode::UnknownType, format!("unknown message type `{other}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameInfo {
    pub id: String,
    pub levels: usize,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelsView {
    pub width: usize,
    pub height: usize,
    pub tile_size: usize,
    /// Base64 (standard alphabet, padded) of an 8-bit RGB PNG.
    pub png: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<GridObservation>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pixels: Option<PixelsView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Info {
    pub game: String,
    pub level: usize,
    pub tick: u64,
    pub score: i64,
    pub status: Status,
    /// Episodes started in this session, this one included.
    pub episode: u64,
    /// Episodes of this session ended by abort or by a reset mid-episode.
    pub aborted: u64,
    /// The step arrived after the decision budget and NIL was played.
    pub late: bool,
    /// Legal actions, sent on reset only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub actions: Option<Vec<Action>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Reply {
    Welcome {
        protocol_version: u32,
        games: Vec<GameInfo>,
    },
    State {
        obs: Observation,
        reward: i64,
        done: bool,
        info: Info,
    },
    Error {
        code: ErrorCode,
        detail: String,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        legal: Option<Vec<Action>>,
    },
    Bye,
}

impl Reply {
    pub fn error(e: ProtocolError) -> Reply {
        Reply::Error { code: e.code, detail: e.detail, legal: None }
    }

    /// Serialized form, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("replies always serialize")
    }
}
