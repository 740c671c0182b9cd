//! Tick-based simulation of compiled games.

mod game;
mod serial;
mod state;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::vgdl::{Direction, EffectClass};

pub use game::{action_space_for, init_state, Game, SpriteType, TypeId, DEFAULT_MAX_TICKS};
pub use game::{FLAK_ACTIONS, MOVE_ACTIONS, NO_ACTIONS, SHOOT_ACTIONS};
pub use serial::STATE_FORMAT_VERSION;
pub use state::{GameState, Sprite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Use,
    Nil,
}

impl Action {
    pub const ALL: [Action; 6] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Use, Action::Nil];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Up => "UP",
            Action::Down => "DOWN",
            Action::Left => "LEFT",
            Action::Right => "RIGHT",
            Action::Use => "USE",
            Action::Nil => "NIL",
        }
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            Action::Up => Some(Direction::Up),
            Action::Down => Some(Direction::Down),
            Action::Left => Some(Direction::Left),
            Action::Right => Some(Direction::Right),
            Action::Use | Action::Nil => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown action `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Running,
    Win,
    Lose,
    Aborted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Running => "RUNNING",
            Status::Win => "WIN",
            Status::Lose => "LOSE",
            Status::Aborted => "ABORTED",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(c: u8) -> Option<Status> {
        [Status::Running, Status::Win, Status::Lose, Status::Aborted].get(c as usize).copied()
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("level places `{id}`, which the game does not declare")]
    IncompatibleLevel { id: String },
    #[error("game is over ({status})")]
    GameOver { status: Status },
    #[error("illegal action {action}; legal: {legal:?}")]
    IllegalAction { action: Action, legal: Vec<Action> },
    #[error("bad state encoding: {0}")]
    Decode(String),
}

/// One applied interaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub effect: EffectClass,
    pub first: TypeId,
    /// `None` for a collision with the level boundary.
    pub second: Option<TypeId>,
    pub cell: (u16, u16),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    /// Score change over the tick, termination bonus included.
    pub reward: i64,
    /// Termination bonus applied this tick (part of `reward`).
    pub bonus: i64,
    pub events: Vec<Event>,
    pub status: Status,
}
