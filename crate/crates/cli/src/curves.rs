//! Training-log reader and smoothed reward curves.
//!
//! Log format (see `docs/training-log.md`):
//!
//! ```text
//! # gvg-training-log 1
//! # algo=dqn
//! # game=zelda
//! # config_hash=3f2a...
//! frames,episode_return,episode_length,wall_time
//! 400,-1,400,0.91
//! ```
//!
//! An optional fifth column `worker` tags rows from parallel workers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const LOG_MAGIC: &str = "# gvg-training-log 1";
pub const COLUMNS: &str = "frames,episode_return,episode_length,wall_time";
pub const COLUMNS_WORKER: &str = "frames,episode_return,episode_length,wall_time,worker";
pub const DEFAULT_WINDOW: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub frames: u64,
    pub episode_return: f64,
    pub episode_length: u64,
    pub wall_time: f64,
    pub worker: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<LogRow>,
}

impl TrainingLog {
    pub fn algo(&self) -> &str {
        &self.meta["algo"]
    }

    pub fn game(&self) -> &str {
        &self.meta["game"]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CurvesError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Malformed { path: PathBuf, line: usize, msg: String },
    #[error("{path}: log has no episodes")]
    Empty { path: PathBuf },
    #[error("no logs given")]
    NoLogs,
}

pub fn parse_log(text: &str, path: &Path) -> Result<TrainingLog, CurvesError> {
    let bad = |line: usize, msg: String| CurvesError::Malformed { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, LOG_MAGIC)) => {}
        Some((n, _)) => return Err(bad(n, format!("expected `{LOG_MAGIC}`"))),
        None => return Err(CurvesError::Empty { path: path.to_path_buf() }),
    }
    let mut meta = BTreeMap::new();
    let mut with_worker = None;
    let mut rows: Vec<LogRow> = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if with_worker.is_some() {
                return Err(bad(n, "metadata after the column header".into()));
            }
            let (k, v) = rest.trim().split_once('=').ok_or_else(|| bad(n, "metadata must be `# key=value`".into()))?;
            meta.insert(k.trim().to_string(), v.trim().to_string());
            continue;
        }
        let Some(worker) = with_worker else {
            with_worker = Some(match line {
                COLUMNS => false,
                COLUMNS_WORKER => true,
                _ => return Err(bad(n, format!("expected column header `{COLUMNS}`"))),
            });
            continue;
        };
        let fields: Vec<&str> = line.split(',').collect();
        let want = 4 + worker as usize;
        if fields.len() != want {
            return Err(bad(n, format!("expected {want} fields, found {}", fields.len())));
        }
        let num = |i: usize, what: &str| -> Result<f64, CurvesError> {
            fields[i].trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(n, format!("bad {what} `{}`", fields[i])))
        };
        let int = |i: usize, what: &str| -> Result<u64, CurvesError> {
            fields[i].trim().parse::<u64>().map_err(|_| bad(n, format!("bad {what} `{}`", fields[i])))
        };
        let row = LogRow {
            frames: int(0, "frame count")?,
            episode_return: num(1, "return")?,
            episode_length: int(2, "episode length")?,
            wall_time: num(3, "wall time")?,
            worker: if worker { Some(int(4, "worker")? as u32) } else { None },
        };
        if let Some(prev) = rows.last() {
            if row.frames < prev.frames {
                return Err(bad(n, format!("frame count {} goes backwards (previous {})", row.frames, prev.frames)));
            }
        }
        rows.push(row);
    }
    for key in ["algo", "game"] {
        if !meta.contains_key(key) {
            return Err(bad(1, format!("missing `# {key}=` metadata")));
        }
    }
    if rows.is_empty() {
        return Err(CurvesError::Empty { path: path.to_path_buf() });
    }
    Ok(TrainingLog { meta, rows })
}

pub fn read_log(path: &Path) -> Result<TrainingLog, CurvesError> {
    let text = std::fs::read_to_string(path).map_err(|source| CurvesError::Io { path: path.to_path_buf(), source })?;
    parse_log(&text, path)
}

/// Trailing mean over the last `window` returns (fewer at the start),
/// plotted at each row's frame count.
pub fn smooth(rows: &[LogRow], window: usize) -> Vec<(u64, f64)> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(rows.len());
    let mut sum = 0.0;
    for (i, r) in rows.iter().enumerate() {
        sum += r.episode_return;
        if i >= window {
            sum -= rows[i - window].episode_return;
        }
        let n = (i + 1).min(window);
        out.push((r.frames, sum / n as f64));
    }
    out
}

/// Smoothed series of one game: algorithm name to points.
pub type GameCurves = BTreeMap<String, Vec<(u64, f64)>>;

/// Groups logs by game and algorithm. Logs sharing both (parallel
/// workers, split runs) are merged in frame order before smoothing.
pub fn build_curves(logs: &[TrainingLog], window: usize) -> BTreeMap<String, GameCurves> {
    let mut merged: BTreeMap<(String, String), Vec<LogRow>> = BTreeMap::new();
    for log in logs {
        merged.entry((log.game().to_string(), log.algo().to_string())).or_default().extend(log.rows.iter().cloned());
    }
    let mut out: BTreeMap<String, GameCurves> = BTreeMap::new();
    for ((game, algo), mut rows) in merged {
        rows.sort_by_key(|r| r.frames);
        out.entry(game).or_default().insert(algo, smooth(&rows, window));
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub fn render_svg(game: &str, curves: &GameCurves) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let pts = curves.values().flatten();
    let xmax = pts.clone().map(|p| p.0).max().unwrap_or(1).max(1) as f64;
    let mut ymin = pts.clone().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut ymax = pts.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !ymin.is_finite() {
        (ymin, ymax) = (0.0, 1.0);
    }
    if ymax - ymin < 1e-9 {
        ymin -= 1.0;
        ymax += 1.0;
    }
    let sx = |x: f64| pad + x / xmax * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - ymin) / (ymax - ymin) * (h - 2.0 * pad);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{game}</text>"#, w / 2.0).unwrap();
    writeln!(
        s,
        r#"<path d="M{pad} {pad} V{} H{}" stroke="black" fill="none"/>"#,
        h - pad,
        w - pad
    )
    .unwrap();
    writeln!(s, r#"<text x="{pad}" y="{}" text-anchor="middle">0</text>"#, h - pad + 16.0).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xmax} frames</text>"#, w - pad, h - pad + 16.0).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{ymin:.2}</text>"#, pad - 4.0, h - pad).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{ymax:.2}</text>"#, pad - 4.0, pad + 4.0).unwrap();
    for (i, (algo, points)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, &(x, y)) in points.iter().enumerate() {
            write!(d, "{}{:.2} {:.2}", if j == 0 { "M" } else { " L" }, sx(x as f64), sy(y)).unwrap();
        }
        writeln!(s, r#"<path d="{d}" stroke="{color}" fill="none" stroke-width="1.5"/>"#).unwrap();
        let ly = pad + 16.0 * i as f64;
        writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{algo}</text>"#, w - pad - 80.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn curves_csv(curves: &GameCurves) -> String {
    let mut s = String::from("algo,frames,smoothed_return\n");
    for (algo, points) in curves {
        for (x, y) in points {
            writeln!(s, "{algo},{x},{y:.6}").unwrap();
        }
    }
    s
}

/// Reads `paths`, writes `<game>.svg` and `<game>.csv` into `out`, and
/// returns the files written.
pub fn emit_curves(paths: &[PathBuf], out: &Path, window: usize) -> Result<Vec<PathBuf>, CurvesError> {
    if paths.is_empty() {
        return Err(CurvesError::NoLogs);
    }
    let logs = paths.iter().map(|p| read_log(p)).collect::<Result<Vec<_>, _>>()?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CurvesError::Io { path, source }
    };
    std::fs::create_dir_all(out).map_err(io(out))?;
    let mut written = Vec::new();
    for (game, curves) in build_curves(&logs, window) {
        let svg = out.join(format!("{game}.svg"));
        std::fs::write(&svg, render_svg(&game, &curves)).map_err(io(&svg))?;
        let csv = out.join(format!("{game}.csv"));
        std::fs::write(&csv, curves_csv(&curves)).map_err(io(&csv))?;
        written.extend([svg, csv]);
    }
    Ok(written)
}
