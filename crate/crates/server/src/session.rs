use std::sync::Arc;
use std::time::{Duration, Instant};

use base64::Engine as _;
use gvg_core::engine::{Action, GameState, Status};
use gvg_core::render::{render_grid, render_pixels};

use crate::protocol::{
    parse_request, ActionRef, ErrorCode, GameInfo, Info, ObsMode, Observation, PixelsView, ProtocolError, Reply,
    Request, PROTOCOL_VERSION,
};
use crate::{Library, ServerConfig};

struct Episode {
    game: usize,
    level: usize,
    state: GameState,
    obs_mode: ObsMode,
}

/// Reply to one line, plus whether the connection should close after it.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub reply: Reply,
    pub close: bool,
}

/// Protocol state of one connection.
pub struct Session {
    library: Arc<Library>,
    config: ServerConfig,
    episode: Option<Episode>,
    episodes: u64,
    aborted: u64,
    last_reply: Option<Instant>,
    started: Option<Instant>,
}

impl Session {
    pub fn new(library: Arc<Library>, config: ServerConfig) -> Session {
        Session { library, config, episode: None, episodes: 0, aborted: 0, last_reply: None, started: None }
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn aborted(&self) -> u64 {
        self.aborted
    }

    /// Current engine state, if an episode is live or just ended.
    pub fn state(&self) -> Option<&GameState> {
        self.episode.as_ref().map(|e| &e.state)
    }

    pub fn handle_line(&mut self, line: &[u8]) -> Outcome {
        self.handle_line_at(line, Instant::now())
    }

    /// As [`Session::handle_line`] with an explicit arrival time, which only
    /// matters when a decision budget or learning clock is configured.
    pub fn handle_line_at(&mut self, line: &[u8], now: Instant) -> Outcome {
        let req = match parse_request(line) {
            Ok(r) => r,
            Err(e) => return Outcome { reply: Reply::error(e), close: false },
        };
        let close = req == Request::Goodbye;
        let reply = match self.dispatch(req, now) {
            Ok(r) => r,
            Err(e) => e,
        };
        if matches!(reply, Reply::State { .. }) {
            self.last_reply = Some(now);
        }
        Outcome { reply, close }
    }

    fn dispatch(&mut self, req: Request, now: Instant) -> Result<Reply, Reply> {
        match req {
            Request::Hello => Ok(Reply::Welcome { protocol_version: PROTOCOL_VERSION, games: self.games() }),
            Request::Goodbye => Ok(Reply::Bye),
            Request::Reset { game, level, seed, obs_mode } => {
                self.check_clock(now)?;
                self.reset(&game, level, seed, obs_mode)
            }
            Request::Step { action } => {
                self.check_clock(now)?;
                self.step(action, now)
            }
            Request::Abort => self.abort(),
        }
    }

    fn games(&self) -> Vec<GameInfo> {
        self.library
            .games()
            .iter()
            .map(|g| GameInfo { id: g.manifest.id.clone(), levels: g.levels.len(), actions: g.game.action_space().to_vec() })
            .collect()
    }

    fn check_clock(&mut self, now: Instant) -> Result<(), Reply> {
        let Some(limit) = self.config.learning_clock_ms else { return Ok(()) };
        let started = *self.started.get_or_insert(now);
        if now.saturating_duration_since(started) > Duration::from_millis(limit) {
            return Err(err(ErrorCode::LearningClockExpired, format!("learning clock of {limit} ms has run out")));
        }
        Ok(())
    }

    fn live(&self) -> bool {
        self.episode.as_ref().is_some_and(|e| !e.state.is_terminal())
    }

    fn reset(&mut self, game: &str, level: usize, seed: u64, obs_mode: Option<ObsMode>) -> Result<Reply, Reply> {
        let gi = self.library.index(game).ok_or_else(|| err(ErrorCode::UnknownGame, format!("unknown game `{game}`")))?;
        let loaded = &self.library.games()[gi];
        if level >= loaded.levels.len() {
            return Err(err(
                ErrorCode::BadLevel,
                format!("`{game}` has levels 0..{}, got {level}", loaded.levels.len()),
            ));
        }
        let state = loaded
            .game
            .init_state(&loaded.levels[level], seed)
            .map_err(|e| err(ErrorCode::BadLevel, e.to_string()))?;
        if self.live() {
            self.aborted += 1;
        }
        self.episodes += 1;
        let obs_mode = obs_mode.unwrap_or(self.config.obs_mode);
        self.episode = Some(Episode { game: gi, level, state, obs_mode });
        let mut reply = self.state_reply(0, false);
        if let Reply::State { info, .. } = &mut reply {
            info.actions = Some(self.episode.as_ref().unwrap().state.action_space().to_vec());
        }
        Ok(reply)
    }

    fn step(&mut self, action: ActionRef, now: Instant) -> Result<Reply, Reply> {
        if !self.live() {
            return Err(err(ErrorCode::NoEpisode, "no live episode; send reset"));
        }
        let ep = self.episode.as_mut().unwrap();
        let legal = ep.state.action_space();
        let chosen = match &action {
            ActionRef::Name(n) => n.parse::<Action>().ok().filter(|a| legal.contains(a)),
            ActionRef::Index(i) => legal.get(*i as usize).copied(),
        };
        let Some(mut chosen) = chosen else {
            let shown = match action {
                ActionRef::Name(n) => format!("`{n}`"),
                ActionRef::Index(i) => format!("index {i}"),
            };
            return Err(Reply::Error {
                code: ErrorCode::IllegalAction,
                detail: format!("{shown} is not legal here"),
                legal: Some(legal.to_vec()),
            });
        };
        let late = match (self.config.budget_ms, self.last_reply) {
            (Some(ms), Some(sent)) => now.saturating_duration_since(sent) > Duration::from_millis(ms),
            _ => false,
        };
        if late {
            chosen = Action::Nil;
        }
        let result = ep.state.advance(chosen).expect("live episode and legal action");
        let mut reply = self.state_reply(result.reward, result.status != Status::Running);
        if let Reply::State { info, .. } = &mut reply {
            info.late = late;
        }
        Ok(reply)
    }

    fn abort(&mut self) -> Result<Reply, Reply> {
        if !self.live() {
            return Err(err(ErrorCode::NoEpisode, "no live episode to abort"));
        }
        self.episode.as_mut().unwrap().state.abort();
        self.aborted += 1;
        Ok(self.state_reply(0, true))
    }

    fn state_reply(&self, reward: i64, done: bool) -> Reply {
        let ep = self.episode.as_ref().expect("episode present");
        let s = &ep.state;
        let grid = ep.obs_mode.grid().then(|| render_grid(s));
        let pixels = ep.obs_mode.pixels().then(|| {
            let frame = render_pixels(s, self.config.tile_size);
            let png = frame.to_png().expect("in-memory PNG encoding");
            PixelsView {
                width: frame.width,
                height: frame.height,
                tile_size: frame.tile_size,
                png: base64::engine::general_purpose::STANDARD.encode(png),
            }
        });
        Reply::State {
            obs: Observation { grid, pixels },
            reward,
            done,
            info: Info {
                game: self.library.games()[ep.game].manifest.id.clone(),
                level: ep.level,
                tick: s.tick(),
                score: s.score(),
                status: s.status(),
                episode: self.episodes,
                aborted: self.aborted,
                late: false,
                actions: None,
            },
        }
    }
}

fn err(code: ErrorCode, detail: impl Into<String>) -> Reply {
    Reply::error(ProtocolError::new(code, detail))
}
