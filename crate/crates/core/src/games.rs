//! The builtin game corpus and its loader.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::engine::{EngineError, Game, Status};
use crate::vgdl::{parse_game, parse_level, GameDescription, LevelError, LevelGrid, VgdlError};

const MANIFEST: &str = include_str!("../games/manifest.toml");

macro_rules! builtin_files {
    ($($id:literal),* $(,)?) => {
        &[$(
            (concat!($id, "/", $id, ".vgdl"), include_str!(concat!("../games/", $id, "/", $id, ".vgdl"))),
            (concat!($id, "/", $id, "_lvl0.txt"), include_str!(concat!("../games/", $id, "/", $id, "_lvl0.txt"))),
            (concat!($id, "/", $id, "_lvl1.txt"), include_str!(concat!("../games/", $id, "/", $id, "_lvl1.txt"))),
        )*]
    };
}

static BUILTIN: &[(&str, &str)] = builtin_files!(
    "aliens",
    "boulder_dash",
    "frogs",
    "missile_command",
    "seaquest",
    "superman",
    "wait_for_breakfast",
    "zelda",
);

/// Reference scores per game, columns in [`REFERENCE_AGENTS`] order.
/// Annotations only: the games here are reconstructions.
pub const REFERENCE_AGENTS: [&str; 7] = ["Random", "GA", "MCTS", "IW", "DQN", "PDDQN", "A2C"];
pub const REFERENCE_SCORES: [(&str, [f64; 7]); 8] = [
    ("aliens", [52.0, 80.4, 72.6, 80.2, 75.0, 74.0, 77.0]),
    ("wait_for_breakfast", [0.0, 1.0, 0.4, 1.0, 1.0, 1.0, 1.0]),
    ("frogs", [-2.0, 1.0, -0.4, 1.0, 0.0, 0.0, 0.0]),
    ("missile_command", [-2.2, 2.6, -3.0, 6.8, 5.0, 8.0, 5.0]),
    ("seaquest", [17.2, 435.0, 638.2, 224.6, 600.0, 800.0, 1200.0]),
    ("boulder_dash", [1.4, 3.4, 16.4, 8.8, 2.5, 5.0, 15.5]),
    ("zelda", [-5.2, 3.4, 6.8, 7.6, 4.2, 4.2, 6.0]),
    ("superman", [4.0, 157.0, 6699.0, 130.2, 500.0, 0.0, 800.0]),
];

/// Reference score of `agent` (case-insensitive) on `game`, if listed.
pub fn reference_score(game: &str, agent: &str) -> Option<f64> {
    let col = REFERENCE_AGENTS.iter().position(|a| a.eq_ignore_ascii_case(agent))?;
    REFERENCE_SCORES.iter().find(|(g, _)| *g == game).map(|(_, row)| row[col])
}

/// One manifest entry.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GameManifest {
    pub id: String,
    pub name: String,
    pub vgdl: String,
    pub levels: Vec<String>,
    #[serde(default)]
    pub actions: String,
    #[serde(default)]
    pub rewards: String,
    #[serde(default)]
    pub stochastic: bool,
}

#[derive(Deserialize)]
struct ManifestFile {
    game: Vec<GameManifest>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{id}: {error}")]
    Parse { id: String, error: VgdlError },
    #[error("{id} level {level}: {error}")]
    Level { id: String, level: usize, error: LevelError },
    #[error("{id} level {level}: {error}")]
    Engine { id: String, level: usize, error: EngineError },
}

#[derive(Debug, Clone)]
enum Source {
    Builtin,
    Dir(PathBuf),
}

/// A game parsed and compiled, with its levels.
#[derive(Debug, Clone)]
pub struct LoadedGame {
    pub manifest: GameManifest,
    pub desc: GameDescription,
    pub game: Arc<Game>,
    pub levels: Vec<LevelGrid>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    games: Vec<GameManifest>,
    source: Source,
}

impl Corpus {
    pub fn builtin() -> Corpus {
        let games = parse_manifest(MANIFEST).expect("builtin manifest is valid");
        Corpus { games, source: Source::Builtin }
    }

    /// Reads `manifest.toml` and the files it names from `dir`. Game files
    /// are read lazily by [`Corpus::load`].
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join("manifest.toml");
        let text = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io { path, source })?;
        Ok(Corpus { games: parse_manifest(&text)?, source: Source::Dir(dir) })
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.games.iter().map(|g| g.id.as_str())
    }

    pub fn manifest(&self, id: &str) -> Option<&GameManifest> {
        self.games.iter().find(|g| g.id == id)
    }

    fn read(&self, rel: &str) -> Result<String, CorpusError> {
        match &self.source {
            Source::Builtin => BUILTIN
                .iter()
                .find(|(p, _)| *p == rel)
                .map(|(_, text)| text.to_string())
                .ok_or_else(|| CorpusError::Io {
                    path: rel.into(),
                    source: std::io::Error::from(std::io::ErrorKind::NotFound),
                }),
            Source::Dir(dir) => {
                let path = dir.join(rel);
                std::fs::read_to_string(&path).map_err(|source| CorpusError::Io { path, source })
            }
        }
    }

    pub fn load(&self, id: &str) -> Result<LoadedGame, CorpusError> {
        let manifest = self.manifest(id).ok_or_else(|| CorpusError::UnknownGame(id.to_string()))?.clone();
        let desc = parse_game(&self.read(&manifest.vgdl)?)
            .map_err(|error| CorpusError::Parse { id: id.to_string(), error })?;
        let mut levels = Vec::with_capacity(manifest.levels.len());
        for (k, rel) in manifest.levels.iter().enumerate() {
            let grid = parse_level(&self.read(rel)?, &desc)
                .map_err(|error| CorpusError::Level { id: id.to_string(), level: k, error })?;
            levels.push(grid);
        }
        let game = Game::compile(desc.clone());
        for (k, lvl) in levels.iter().enumerate() {
            game.init_state(lvl, 0).map_err(|error| CorpusError::Engine { id: id.to_string(), level: k, error })?;
        }
        Ok(LoadedGame { manifest, desc, game, levels })
    }
}

fn parse_manifest(text: &str) -> Result<Vec<GameManifest>, CorpusError> {
    let file: ManifestFile = toml::from_str(text).map_err(|e| CorpusError::Manifest(e.to_string()))?;
    let mut seen = BTreeSet::new();
    for g in &file.game {
        if !seen.insert(g.id.as_str()) {
            return Err(CorpusError::Manifest(format!("duplicate id `{}`", g.id)));
        }
        if g.levels.is_empty() {
            return Err(CorpusError::Manifest(format!("`{}` has no level 0", g.id)));
        }
    }
    Ok(file.game)
}

/// Loads a game from the builtin corpus.
pub fn load_game(id: &str) -> Result<LoadedGame, CorpusError> {
    Corpus::builtin().load(id)
}

/// Result of checking one manifest entry.
#[derive(Debug, Clone)]
pub struct GameCheck {
    pub id: String,
    pub error: Option<String>,
    pub episodes: usize,
    pub wins: usize,
    pub min_score: i64,
    pub max_score: i64,
    pub mean_score: f64,
    pub mean_ticks: f64,
    pub reference_random: Option<f64>,
}

impl GameCheck {
    pub fn passed(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub games: Vec<GameCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> usize {
        self.games.iter().filter(|g| g.passed()).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.games.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<20} {:>6} {:>5} {:>7} {:>7} {:>8} {:>8} {:>8}", "game", "status", "wins", "min", "max", "mean", "ticks", "ref")?;
        for g in &self.games {
            match &g.error {
                Some(e) => writeln!(f, "{:<20} FAIL   {e}", g.id)?,
                None => writeln!(
                    f,
                    "{:<20} {:>6} {:>5} {:>7} {:>7} {:>8.2} {:>8.1} {:>8}",
                    g.id,
                    "ok",
                    g.wins,
                    g.min_score,
                    g.max_score,
                    g.mean_score,
                    g.mean_ticks,
                    g.reference_random.map_or("-".into(), |r| format!("{r}")),
                )?,
            }
        }
        write!(f, "{}/{} games pass", self.passed(), self.games.len())
    }
}

/// Uniform random play until the episode ends; returns the final state.
pub fn random_episode(game: &Arc<Game>, level: &LevelGrid, seed: u64) -> Result<crate::engine::GameState, EngineError> {
    let mut state = game.init_state(level, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    while state.status() == Status::Running {
        let actions = state.action_space();
        let a = actions[rng.random_range(0..actions.len())];
        state.advance(a)?;
    }
    Ok(state)
}

/// Parses every entry, initializes every level and plays `episodes` random
/// episodes on level 0. Failures are recorded per game.
pub fn validate_corpus(corpus: &Corpus, episodes: usize, seed: u64) -> ValidationReport {
    let mut games = Vec::new();
    for id in corpus.ids() {
        let mut check = GameCheck {
            id: id.to_string(),
            error: None,
            episodes: 0,
            wins: 0,
            min_score: 0,
            max_score: 0,
            mean_score: 0.0,
            mean_ticks: 0.0,
            reference_random: reference_score(id, "Random"),
        };
        match corpus.load(id) {
            Err(e) => check.error = Some(e.to_string()),
            Ok(g) => {
                let mut scores = Vec::with_capacity(episodes);
                let mut ticks = 0u64;
                for i in 0..episodes {
                    match random_episode(&g.game, &g.levels[0], seed + i as u64) {
                        Ok(end) => {
                            scores.push(end.score());
                            ticks += end.tick();
                            check.wins += (end.status() == Status::Win) as usize;
                        }
                        Err(e) => {
                            check.error = Some(format!("episode {i}: {e}"));
                            break;
                        }
                    }
                }
                check.episodes = scores.len();
                if !scores.is_empty() {
                    check.min_score = *scores.iter().min().unwrap();
                    check.max_score = *scores.iter().max().unwrap();
                    check.mean_score = scores.iter().sum::<i64>() as f64 / scores.len() as f64;
                    check.mean_ticks = ticks as f64 / scores.len() as f64;
                }
            }
        }
        games.push(check);
    }
    ValidationReport { games }
}
