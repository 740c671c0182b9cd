#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use gvg_server::{Library, Reply, ServerConfig, Session};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub fn library() -> Arc<Library> {
    static LIB: OnceLock<Arc<Library>> = OnceLock::new();
    LIB.get_or_init(|| Arc::new(Library::builtin())).clone()
}

pub fn session() -> Session {
    Session::new(library(), ServerConfig::default())
}

pub fn send(s: &mut Session, v: serde_json::Value) -> Reply {
    s.handle_line(v.to_string().as_bytes()).reply
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Requests of a scripted random session: `steps` step messages on `game`,
/// with a fresh reset (next seed) whenever an episode ends.
pub fn random_script(game: &str, steps: usize, seed: u64, obs_mode: &str) -> Vec<String> {
    let lib = library();
    let n_actions = lib.games()[lib.index(game).unwrap()].game.action_space().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = session();
    let mut out = vec![json!({"type": "hello"}).to_string()];
    let mut ep_seed = seed;
    let reset = |out: &mut Vec<String>, probe: &mut Session, ep_seed: u64| {
        let line = json!({"type": "reset", "game": game, "level": 0, "seed": ep_seed, "obs_mode": obs_mode}).to_string();
        probe.handle_line(line.as_bytes());
        out.push(line);
    };
    reset(&mut out, &mut probe, ep_seed);
    for _ in 0..steps {
        let line = json!({"type": "step", "action": rng.random_range(0..n_actions)}).to_string();
        let reply = probe.handle_line(line.as_bytes()).reply;
        out.push(line);
        if let Reply::State { done: true, .. } = reply {
            ep_seed += 1;
            reset(&mut out, &mut probe, ep_seed);
        }
    }
    out.push(json!({"type": "goodbye"}).to_string());
    out
}

/// Interleaves requests and replies as `C: ` / `S: ` lines.
pub fn transcript(requests: &[String]) -> String {
    let mut s = session();
    let mut out = String::new();
    for r in requests {
        let reply = s.handle_line(r.as_bytes()).reply.to_line();
        out.push_str("C: ");
        out.push_str(r);
        out.push_str("\nS: ");
        out.push_str(&reply);
        out.push('\n');
    }
    out
}

/// Replays a golden file request by request; returns the first mismatch.
pub fn replay(text: &str) -> Result<usize, String> {
    let mut s = session();
    let mut lines = text.lines();
    let mut n = 0;
    while let Some(c) = lines.next() {
        let req = c.strip_prefix("C: ").ok_or_else(|| format!("line {}: expected `C: `", 2 * n + 1))?;
        let want = lines
            .next()
            .and_then(|l| l.strip_prefix("S: "))
            .ok_or_else(|| format!("line {}: expected `S: `", 2 * n + 2))?;
        let got = s.handle_line(req.as_bytes()).reply.to_line();
        if got != want {
            return Err(format!("exchange {n}: request {req}\n want {want}\n  got {got}"));
        }
        n += 1;
    }
    Ok(n)
}

/// Rewrites the golden file when `GVG_BLESS` is set, else returns it.
pub fn golden(name: &str, fresh: impl FnOnce() -> String) -> String {
    let path = golden_path(name);
    if std::env::var_os("GVG_BLESS").is_some() {
        std::fs::write(&path, fresh()).unwrap();
    }
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e} (run with GVG_BLESS=1 to create)", path.display()))
}
