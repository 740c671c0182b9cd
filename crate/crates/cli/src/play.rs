//! Human play in the terminal, or from a scripted key sequence.

use std::collections::VecDeque;
use std::io::{self, IsTerminal, Write};
use std::time::Duration;

use gvg_core::agents::EpisodeRecord;
use gvg_core::engine::{Action, GameState};
use gvg_core::render::render_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Key {
    Act(Action),
    Quit,
}

/// `w a s d` or arrows move, space is USE, `q` or Esc quits.
pub fn map_char(c: char) -> Option<Key> {
    Some(match c {
        'w' | 'W' => Key::Act(Action::Up),
        's' | 'S' => Key::Act(Action::Down),
        'a' | 'A' => Key::Act(Action::Left),
        'd' | 'D' => Key::Act(Action::Right),
        ' ' => Key::Act(Action::Use),
        'q' | 'Q' => Key::Quit,
        _ => return None,
    })
}

pub trait KeySource {
    /// The key pressed within `timeout`, if any.
    fn next_key(&mut self, timeout: Duration) -> io::Result<Option<Key>>;
}

/// Replays a fixed string: one character per tick, `.` or any unmapped
/// character means no key. When the script runs out the player quits.
pub struct ScriptedKeys {
    keys: VecDeque<char>,
}

impl ScriptedKeys {
    pub fn new(script: &str) -> ScriptedKeys {
        ScriptedKeys { keys: script.chars().filter(|c| *c != '\n').collect() }
    }
}

impl KeySource for ScriptedKeys {
    fn next_key(&mut self, _timeout: Duration) -> io::Result<Option<Key>> {
        Ok(match self.keys.pop_front() {
            Some(c) => map_char(c),
            None => Some(Key::Quit),
        })
    }
}

/// Raw-mode keyboard input. Restores the terminal on drop.
pub struct TerminalKeys(());

impl TerminalKeys {
    pub fn new() -> io::Result<TerminalKeys> {
        if !io::stdin().is_terminal() || !io::stdout().is_terminal() {
            return Err(io::Error::other("play needs an interactive terminal (or --keys for a scripted run)"));
        }
        crossterm::terminal::enable_raw_mode()?;
        Ok(TerminalKeys(()))
    }
}

impl Drop for TerminalKeys {
    fn drop(&mut self) {
        let _ = crossterm::terminal::disable_raw_mode();
    }
}

impl KeySource for TerminalKeys {
    fn next_key(&mut self, timeout: Duration) -> io::Result<Option<Key>> {
        use crossterm::event::{self, Event, KeyCode, KeyEventKind};
        let deadline = std::time::Instant::now() + timeout;
        let mut key = None;
        // drain everything typed during the tick; the last key wins
        loop {
            let left = deadline.saturating_duration_since(std::time::Instant::now());
            if !event::poll(left)? {
                return Ok(key);
            }
            if let Event::Key(k) = event::read()? {
                if k.kind == KeyEventKind::Release {
                    continue;
                }
                let mapped = match k.code {
                    KeyCode::Up => Some(Key::Act(Action::Up)),
                    KeyCode::Down => Some(Key::Act(Action::Down)),
                    KeyCode::Left => Some(Key::Act(Action::Left)),
                    KeyCode::Right => Some(Key::Act(Action::Right)),
                    KeyCode::Esc => Some(Key::Quit),
                    KeyCode::Char('c') if k.modifiers.contains(event::KeyModifiers::CONTROL) => Some(Key::Quit),
                    KeyCode::Char(c) => map_char(c),
                    _ => None,
                };
                if mapped == Some(Key::Quit) {
                    return Ok(mapped);
                }
                key = mapped.or(key);
            }
        }
    }
}

fn frame(state: &GameState, clear: bool) -> String {
    let grid = render_text(state).replace('\n', "\r\n");
    format!(
        "{}tick {} score {} {}\r\n{grid}",
        if clear { "\x1b[2J\x1b[H" } else { "" },
        state.tick(),
        state.score(),
        state.status()
    )
}

/// Plays until the episode ends or the player quits (status ABORTED).
/// Keys that are not legal in the game play NIL.
pub fn play(
    mut state: GameState,
    keys: &mut dyn KeySource,
    out: &mut dyn Write,
    tick: Duration,
    clear: bool,
) -> io::Result<EpisodeRecord> {
    let mut rewards = Vec::new();
    out.write_all(frame(&state, clear).as_bytes())?;
    while !state.is_terminal() {
        let action = match keys.next_key(tick)? {
            Some(Key::Quit) => {
                state.abort();
                break;
            }
            Some(Key::Act(a)) if state.action_space().contains(&a) => a,
            _ => Action::Nil,
        };
        let r = state.advance(action).expect("legal action on a live episode");
        rewards.push(r.reward);
        out.write_all(frame(&state, clear).as_bytes())?;
        out.flush()?;
    }
    write!(out, "{} score {} after {} ticks\r\n", state.status(), state.score(), state.tick())?;
    out.flush()?;
    Ok(EpisodeRecord { score: state.score(), status: state.status(), ticks: state.tick(), rewards })
}
