//! Episode server: line-delimited JSON over TCP, one session per connection.
//!
//! The wire format is described in `docs/protocol.md`. [`Session`] holds all
//! protocol logic and is usable without a socket.

pub mod fuzz;
mod net;
pub mod protocol;
mod session;

pub use net::{serve, Server};
pub use protocol::{ErrorCode, ObsMode, Reply, Request, PROTOCOL_VERSION};
pub use session::{Outcome, Session};

use gvg_core::games::{Corpus, CorpusError, LoadedGame};
use gvg_core::render::DEFAULT_TILE_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServerConfig {
    /// Decision budget per step; `None` disables the check.
    pub budget_ms: Option<u64>,
    /// Used when a reset does not name a mode.
    pub obs_mode: ObsMode,
    pub tile_size: usize,
    /// Total session time allowed from the first reset; `None` is unlimited.
    pub learning_clock_ms: Option<u64>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { budget_ms: None, obs_mode: ObsMode::Grid, tile_size: DEFAULT_TILE_SIZE, learning_clock_ms: None }
    }
}

/// Every game of a corpus, parsed and compiled once and shared read-only
/// by all sessions.
#[derive(Debug)]
pub struct Library {
    games: Vec<LoadedGame>,
}

impl Library {
    pub fn load(corpus: &Corpus) -> Result<Library, CorpusError> {
        let games = corpus.ids().map(|id| corpus.load(id)).collect::<Result<_, _>>()?;
        Ok(Library { games })
    }

    pub fn builtin() -> Library {
        Library::load(&Corpus::builtin()).expect("builtin corpus loads")
    }

    pub fn games(&self) -> &[LoadedGame] {
        &self.games
    }

    pub fn index(&self, id: &str) -> Option<usize> {
        self.games.iter().position(|g| g.manifest.id == id)
    }
}
