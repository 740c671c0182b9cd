//! Planning-agent benchmark: every (game, agent) cell plays `episodes`
//! episodes with seeds `seed + i`. Config format in `docs/config-format.md`.

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use gvg_core::agents::{run_episode, AgentConfig, AgentKind, GaParams, IwParams, MctsParams, PlanBudget};
use gvg_core::engine::{Status, STATE_FORMAT_VERSION};
use gvg_core::games::{reference_score, Corpus, CorpusError, LoadedGame};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Version of the CSV row layout written by [`BenchReport::to_csv`].
pub const CSV_SCHEMA: u32 = 1;
pub const CSV_HEADER: &str =
    "schema,game,agent,episodes,mean_score,std_score,win_rate,mean_ticks,failures,reference,config_hash";

fn default_episodes() -> u32 {
    20
}

fn default_budget() -> PlanBudget {
    PlanBudget::Rollouts(100)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub kind: AgentKind,
    /// Column name in reports; defaults to the kind's display name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Overrides the spec-wide budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<PlanBudget>,
    #[serde(default)]
    pub mcts: MctsParams,
    #[serde(default)]
    pub ga: GaParams,
    #[serde(default)]
    pub iw: IwParams,
}

impl AgentSpec {
    pub fn new(kind: AgentKind) -> AgentSpec {
        AgentSpec {
            kind,
            label: None,
            budget: None,
            mcts: MctsParams::default(),
            ga: GaParams::default(),
            iw: IwParams::default(),
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.as_str())
    }

    pub fn config(&self, seed: u64, default_budget: PlanBudget) -> AgentConfig {
        AgentConfig {
            kind: self.kind,
            seed,
            budget: self.budget.unwrap_or(default_budget),
            mcts: self.mcts,
            ga: self.ga,
            iw: self.iw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    /// Empty means every game in the corpus, in manifest order.
    #[serde(default)]
    pub games: Vec<String>,
    pub agents: Vec<AgentSpec>,
    #[serde(default = "default_episodes")]
    pub episodes: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub level: usize,
    #[serde(default = "default_budget")]
    pub budget: PlanBudget,
    /// Report path prefix: `<output>.txt` and `<output>.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("bench spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl BenchSpec {
    pub fn from_toml(text: &str) -> Result<BenchSpec, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Spec(e.to_string()))
    }

    /// Checks the spec against `corpus` and fills in the game list.
    pub fn resolve(mut self, corpus: &Corpus) -> Result<BenchSpec, BenchError> {
        if self.episodes == 0 {
            return Err(BenchError::Spec("episodes must be at least 1".into()));
        }
        if self.agents.is_empty() {
            return Err(BenchError::Spec("no agents".into()));
        }
        if self.games.is_empty() {
            self.games = corpus.ids().map(str::to_string).collect();
        }
        for g in &self.games {
            let m = corpus.manifest(g).ok_or_else(|| CorpusError::UnknownGame(g.clone()))?;
            if self.level >= m.levels.len() {
                return Err(BenchError::Spec(format!("{g} has no level {}", self.level)));
            }
        }
        for a in &self.agents {
            a.config(self.seed, self.budget).validate().map_err(|e| BenchError::Spec(format!("{}: {e}", a.label())))?;
        }
        Ok(self)
    }

    /// SHA-256 over the canonical JSON form, output path excluded.
    pub fn config_hash(&self) -> String {
        let mut canon = self.clone();
        canon.output = None;
        let digest = Sha256::digest(serde_json::to_vec(&canon).expect("spec serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub game: String,
    pub agent: String,
    pub scores: Vec<i64>,
    pub ticks: Vec<u64>,
    pub wins: u32,
    pub failures: Vec<String>,
}

impl CellResult {
    pub fn episodes(&self) -> usize {
        self.scores.len()
    }

    pub fn mean(&self) -> f64 {
        mean(self.scores.iter().map(|&s| s as f64))
    }

    /// Sample standard deviation; zero below two episodes.
    pub fn std(&self) -> f64 {
        let n = self.scores.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let ss: f64 = self.scores.iter().map(|&s| (s as f64 - m).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    pub fn win_rate(&self) -> f64 {
        if self.scores.is_empty() {
            0.0
        } else {
            self.wins as f64 / self.scores.len() as f64
        }
    }

    pub fn mean_ticks(&self) -> f64 {
        mean(self.ticks.iter().map(|&t| t as f64))
    }

    pub fn reference(&self) -> Option<f64> {
        reference_score(&self.game, &self.agent)
    }
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub spec: BenchSpec,
    pub config_hash: String,
    pub engine: String,
    /// Ordered by game, then agent, as in the spec.
    pub cells: Vec<CellResult>,
}

pub fn engine_version() -> String {
    format!("gvg-core {} state-format {}", env!("CARGO_PKG_VERSION"), STATE_FORMAT_VERSION)
}

fn run_cell(game: &LoadedGame, spec: &BenchSpec, agent: &AgentSpec) -> CellResult {
    let mut cell = CellResult {
        game: game.manifest.id.clone(),
        agent: agent.label().to_string(),
        scores: Vec::new(),
        ticks: Vec::new(),
        wins: 0,
        failures: Vec::new(),
    };
    let level = &game.levels[spec.level];
    for i in 0..spec.episodes as u64 {
        let seed = spec.seed.wrapping_add(i);
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let state = game.game.init_state(level, seed).map_err(|e| e.to_string())?;
            let mut a = agent.config(seed, spec.budget).build();
            Ok::<_, String>(run_episode(a.as_mut(), state))
        }));
        match outcome {
            Ok(Ok(rec)) => {
                cell.scores.push(rec.score);
                cell.ticks.push(rec.ticks);
                cell.wins += (rec.status == Status::Win) as u32;
            }
            Ok(Err(e)) => cell.failures.push(format!("seed {seed}: {e}")),
            Err(p) => {
                let msg = p
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| p.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "panic".into());
                cell.failures.push(format!("seed {seed}: {msg}"));
            }
        }
    }
    cell
}

/// Runs every cell. `jobs` > 1 spreads cells over threads; the report is
/// identical either way.
pub fn run_bench(spec: BenchSpec, corpus: &Corpus, jobs: usize) -> Result<BenchReport, BenchError> {
    let spec = spec.resolve(corpus)?;
    let games = spec.games.iter().map(|g| corpus.load(g)).collect::<Result<Vec<_>, _>>()?;
    let tasks: Vec<(usize, usize)> =
        (0..games.len()).flat_map(|g| (0..spec.agents.len()).map(move |a| (g, a))).collect();
    let mut cells: Vec<Option<CellResult>> = vec![None; tasks.len()];
    let jobs = jobs.clamp(1, tasks.len().max(1));
    if jobs == 1 {
        for (k, &(g, a)) in tasks.iter().enumerate() {
            cells[k] = Some(run_cell(&games[g], &spec, &spec.agents[a]));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let done = std::sync::Mutex::new(&mut cells);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let Some(&(g, a)) = tasks.get(k) else { break };
                    let cell = run_cell(&games[g], &spec, &spec.agents[a]);
                    done.lock().unwrap()[k] = Some(cell);
                });
            }
        });
    }
    Ok(BenchReport {
        config_hash: spec.config_hash(),
        engine: engine_version(),
        cells: cells.into_iter().map(|c| c.expect("every cell ran")).collect(),
        spec,
    })
}

fn fmt_ref(r: Option<f64>) -> String {
    r.map_or(String::new(), |v| format!("{v}"))
}

impl BenchReport {
    pub fn failures(&self) -> usize {
        self.cells.iter().map(|c| c.failures.len()).sum()
    }

    /// Process exit status for the `bench` command.
    pub fn exit_code(&self) -> i32 {
        if self.failures() > 0 {
            crate::EXIT_BENCH_FAILURES
        } else {
            crate::EXIT_OK
        }
    }

    pub fn cell(&self, game: &str, agent: &str) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.game == game && c.agent == agent)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            writeln!(
                out,
                "{CSV_SCHEMA},{},{},{},{:.4},{:.4},{:.4},{:.2},{},{},{}",
                c.game,
                c.agent,
                c.episodes(),
                c.mean(),
                c.std(),
                c.win_rate(),
                c.mean_ticks(),
                c.failures.len(),
                fmt_ref(c.reference()),
                self.config_hash,
            )
            .unwrap();
        }
        out
    }

    pub fn to_table(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        writeln!(out, "engine   {}", self.engine).unwrap();
        writeln!(out, "config   sha256:{}", self.config_hash).unwrap();
        writeln!(
            out,
            "episodes {} per cell, level {}, seeds {}..={}",
            s.episodes,
            s.level,
            s.seed,
            s.seed.wrapping_add(s.episodes as u64 - 1)
        )
        .unwrap();
        writeln!(out, "ref      published scores for the original games, for orientation only").unwrap();
        writeln!(out).unwrap();
        writeln!(out, "{:<20} {:<8} {:>10} {:>9} {:>6} {:>8} {:>9}", "game", "agent", "mean", "std", "win", "ticks", "ref")
            .unwrap();
        for c in &self.cells {
            writeln!(
                out,
                "{:<20} {:<8} {:>10.2} {:>9.2} {:>6.2} {:>8.1} {:>9}",
                c.game,
                c.agent,
                c.mean(),
                c.std(),
                c.win_rate(),
                c.mean_ticks(),
                fmt_ref(c.reference()),
            )
            .unwrap();
        }
        let failures: Vec<_> = self.cells.iter().flat_map(|c| c.failures.iter().map(move |f| (c, f))).collect();
        if !failures.is_empty() {
            writeln!(out, "\n{} failed episodes:", failures.len()).unwrap();
            for (c, f) in failures {
                writeln!(out, "  {} {}: {f}", c.game, c.agent).unwrap();
            }
        }
        out
    }
}
