use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use gvg_cli::bench::{run_bench, BenchError, BenchSpec};
use gvg_cli::curves::{emit_curves, DEFAULT_WINDOW};
use gvg_cli::play::{play, KeySource, ScriptedKeys, TerminalKeys};
use gvg_cli::{EXIT_CORPUS, EXIT_OK, EXIT_USAGE};
use gvg_core::games::{validate_corpus, Corpus};
use gvg_server::{Library, ObsMode, ServerConfig};

#[derive(Parser)]
#[command(name = "gvg", version, about = "Grid games from VGDL: play, validate, serve, benchmark")]
struct Cli {
    /// Game directory with a manifest.toml; the builtin corpus if omitted.
    #[arg(long, global = true)]
    games: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play a game in the terminal.
    Play {
        game: String,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Milliseconds per tick.
        #[arg(long, default_value_t = 150)]
        tick_ms: u64,
        /// Scripted keys instead of the keyboard: one char per tick.
        #[arg(long)]
        keys: Option<String>,
    },
    /// Parse every game, initialise every level and run random episodes.
    Validate {
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the episode server.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7007")]
        bind: String,
        /// Decision budget in milliseconds, or `off`.
        #[arg(long, default_value = "off")]
        budget_ms: String,
        #[arg(long, default_value = "grid")]
        obs: String,
        #[arg(long, default_value_t = gvg_core::render::DEFAULT_TILE_SIZE)]
        tile_size: usize,
        /// Session learning clock in milliseconds, or `off`.
        #[arg(long, default_value = "off")]
        learning_clock_ms: String,
    },
    /// Run a benchmark spec (TOML) and write the report.
    Bench {
        spec: PathBuf,
        /// Report path prefix; overrides `output` in the spec.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cells run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Plot smoothed reward curves from training logs.
    Curves {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, default_value = "curves")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
    },
}

fn corpus(dir: &Option<PathBuf>) -> Result<Corpus, ExitCode> {
    match dir {
        None => Ok(Corpus::builtin()),
        Some(d) => Corpus::load_dir(d).map_err(|e| fail(EXIT_CORPUS, e)),
    }
}

fn fail(code: i32, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("gvg: {msg}");
    ExitCode::from(code as u8)
}

fn off_or_ms(s: &str, what: &str) -> Result<Option<u64>, ExitCode> {
    if s == "off" {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| fail(EXIT_USAGE, format!("{what}: expected milliseconds or `off`, got `{s}`")))
}

fn write_report(prefix: &Path, table: &str, csv: &str) -> std::io::Result<()> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(prefix.with_extension("txt"), table)?;
    std::fs::write(prefix.with_extension("csv"), csv)
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    match cli.command {
        Command::Play { game, level, seed, tick_ms, keys } => {
            let corpus = corpus(&cli.games)?;
            let g = corpus.load(&game).map_err(|e| fail(EXIT_CORPUS, e))?;
            let lvl = g.levels.get(level).ok_or_else(|| fail(EXIT_USAGE, format!("{game} has no level {level}")))?;
            let state = g.game.init_state(lvl, seed).map_err(|e| fail(EXIT_CORPUS, e))?;
            let mut scripted;
            let mut terminal;
            let source: &mut dyn KeySource = match &keys {
                Some(k) => {
                    scripted = ScriptedKeys::new(k);
                    &mut scripted
                }
                None => {
                    terminal = TerminalKeys::new().map_err(|e| fail(EXIT_USAGE, e))?;
                    &mut terminal
                }
            };
            let mut out = std::io::stdout();
            play(state, source, &mut out, Duration::from_millis(tick_ms), keys.is_none())
                .map_err(|e| fail(EXIT_USAGE, e))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { episodes, seed } => {
            let corpus = corpus(&cli.games)?;
            let report = validate_corpus(&corpus, episodes, seed);
            println!("{report}");
            Ok(ExitCode::from(if report.all_passed() { EXIT_OK } else { EXIT_CORPUS } as u8))
        }
        Command::Serve { bind, budget_ms, obs, tile_size, learning_clock_ms } => {
            let obs_mode: ObsMode = obs.parse().map_err(|e| fail(EXIT_USAGE, e))?;
            if tile_size == 0 {
                return Err(fail(EXIT_USAGE, "tile size must be positive"));
            }
            let config = ServerConfig {
                budget_ms: off_or_ms(&budget_ms, "--budget-ms")?,
                obs_mode,
                tile_size,
                learning_clock_ms: off_or_ms(&learning_clock_ms, "--learning-clock-ms")?,
            };
            let corpus = corpus(&cli.games)?;
            let library = Library::load(&corpus).map_err(|e| fail(EXIT_CORPUS, e))?;
            let server = gvg_server::Server::bind(&bind, Arc::new(library), config)
                .map_err(|e| fail(EXIT_USAGE, format!("bind {bind}: {e}")))?;
            eprintln!("gvg: serving on {}", server.local_addr().map_err(|e| fail(EXIT_USAGE, e))?);
            server.run().map_err(|e| fail(EXIT_USAGE, e))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { spec, out, jobs } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", spec.display())))?;
            let parsed = BenchSpec::from_toml(&text).map_err(|e| fail(EXIT_USAGE, e))?;
            let corpus = corpus(&cli.games)?;
            let prefix = out.or_else(|| parsed.output.clone());
            let report = run_bench(parsed, &corpus, jobs).map_err(|e| match e {
                BenchError::Spec(_) => fail(EXIT_USAGE, e),
                BenchError::Corpus(_) => fail(EXIT_CORPUS, e),
            })?;
            let table = report.to_table();
            print!("{table}");
            if let Some(prefix) = prefix {
                write_report(&prefix, &table, &report.to_csv()).map_err(|e| fail(EXIT_USAGE, e))?;
            }
            Ok(ExitCode::from(report.exit_code() as u8))
        }
        Command::Curves { logs, out, window } => {
            if window == 0 {
                return Err(fail(EXIT_USAGE, "window must be positive"));
            }
            let written = emit_curves(&logs, &out, window).map_err(|e| fail(EXIT_USAGE, e))?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE as u8) } else { ExitCode::SUCCESS };
        }
    };
    run(cli).unwrap_or_else(|code| code)
}
