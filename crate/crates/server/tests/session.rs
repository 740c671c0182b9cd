mod common;

use std::time::{Duration, Instant};

use base64::Engine as _;
use common::{send, session};
use gvg_core::agents::{AgentConfig, AgentKind, PlanBudget};
use gvg_core::engine::{Action, Status};
use gvg_core::render::PixelFrame;
use gvg_server::fuzz::malformed_line;
use gvg_server::protocol::Info;
use gvg_server::{ErrorCode, Reply, ServerConfig, Session, PROTOCOL_VERSION};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn code(r: &Reply) -> ErrorCode {
    match r {
        Reply::Error { code, .. } => *code,
        other => panic!("expected an error, got {other:?}"),
    }
}

fn state(r: Reply) -> (i64, bool, Info) {
    match r {
        Reply::State { reward, done, info, .. } => (reward, done, info),
        other => panic!("expected a state, got {other:?}"),
    }
}

#[test]
fn hello_lists_the_corpus() {
    let mut s = session();
    match send(&mut s, json!({"type": "hello"})) {
        Reply::Welcome { protocol_version, games } => {
            assert_eq!(protocol_version, PROTOCOL_VERSION);
            assert_eq!(games.len(), 8);
            let frogs = games.iter().find(|g| g.id == "frogs").unwrap();
            assert_eq!(frogs.levels, 2);
            assert!(frogs.actions.contains(&Action::Nil));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn reset_is_deterministic() {
    let line = json!({"type": "reset", "game": "aliens", "level": 0, "seed": 7, "obs_mode": "both"}).to_string();
    let a = session().handle_line(line.as_bytes()).reply.to_line();
    let b = session().handle_line(line.as_bytes()).reply.to_line();
    assert_eq!(a, b);
    let (reward, done, info) = state(session().handle_line(line.as_bytes()).reply);
    assert_eq!((reward, done, info.tick, info.episode), (0, false, 0, 1));
    assert!(info.actions.is_some());
}

#[test]
fn reset_errors_keep_the_session() {
    let mut s = session();
    assert_eq!(code(&send(&mut s, json!({"type": "reset", "game": "frogs", "level": 99}))), ErrorCode::BadLevel);
    assert_eq!(code(&send(&mut s, json!({"type": "reset", "game": "pacman"}))), ErrorCode::UnknownGame);
    let (_, done, info) = state(send(&mut s, json!({"type": "reset", "game": "frogs", "level": 1})));
    assert!(!done);
    assert_eq!((info.level, info.episode), (1, 1));
}

#[test]
fn step_needs_a_live_episode() {
    let mut s = session();
    assert_eq!(code(&send(&mut s, json!({"type": "step", "action": "NIL"}))), ErrorCode::NoEpisode);
    assert_eq!(code(&send(&mut s, json!({"type": "abort"}))), ErrorCode::NoEpisode);
    send(&mut s, json!({"type": "reset", "game": "frogs"}));
    let (_, done, info) = state(send(&mut s, json!({"type": "abort"})));
    assert!(done);
    assert_eq!((info.status, info.aborted), (Status::Aborted, 1));
    assert_eq!(code(&send(&mut s, json!({"type": "step", "action": "NIL"}))), ErrorCode::NoEpisode);
}

#[test]
fn illegal_action_names_the_legal_set() {
    let mut s = session();
    send(&mut s, json!({"type": "reset", "game": "frogs"}));
    match send(&mut s, json!({"type": "step", "action": "USE"})) {
        Reply::Error { code, legal, .. } => {
            assert_eq!(code, ErrorCode::IllegalAction);
            let legal = legal.unwrap();
            assert_eq!(legal.len(), 5);
            assert!(!legal.contains(&Action::Use));
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(code(&send(&mut s, json!({"type": "step", "action": 5}))), ErrorCode::IllegalAction);
    // index 4 is the fifth legal action
    let (_, _, info) = state(send(&mut s, json!({"type": "step", "action": 4})));
    assert_eq!(info.tick, 1);
}

#[test]
fn reset_mid_episode_counts_as_aborted() {
    let mut s = session();
    send(&mut s, json!({"type": "reset", "game": "aliens"}));
    send(&mut s, json!({"type": "step", "action": "NIL"}));
    let (_, _, info) = state(send(&mut s, json!({"type": "reset", "game": "aliens", "seed": 2})));
    assert_eq!((info.episode, info.aborted, info.tick), (2, 1, 0));
    // a finished episode is not counted when the next one starts
    send(&mut s, json!({"type": "abort"}));
    let (_, _, info) = state(send(&mut s, json!({"type": "reset", "game": "aliens"})));
    assert_eq!((info.episode, info.aborted), (3, 2));
}

/// Plans a Frogs win offline, then replays it through the protocol.
#[test]
fn frogs_win_pays_exactly_one_point() {
    let lib = common::library();
    let frogs = &lib.games()[lib.index("frogs").unwrap()];
    let mut st = frogs.game.init_state(&frogs.levels[0], 4).unwrap();
    let mut agent = AgentConfig::new(AgentKind::Iw, 4, PlanBudget::Rollouts(2000)).build();
    let mut plan = Vec::new();
    while !st.is_terminal() {
        let a = agent.act(&st);
        plan.push(a);
        st.advance(a).unwrap();
    }
    assert_eq!(st.status(), Status::Win);

    let mut s = session();
    send(&mut s, json!({"type": "reset", "game": "frogs", "seed": 4}));
    let mut rewards = Vec::new();
    let mut last = None;
    for a in plan {
        let (r, done, info) = state(send(&mut s, json!({"type": "step", "action": a.as_str()})));
        rewards.push(r);
        last = Some((done, info));
    }
    let (done, info) = last.unwrap();
    assert!(done);
    assert_eq!((info.status, info.score), (Status::Win, 1));
    assert_eq!(rewards.iter().filter(|&&r| r != 0).collect::<Vec<_>>(), [&1]);
}

#[test]
fn rewards_telescope_to_score() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for game in ["aliens", "seaquest", "missile_command", "zelda"] {
        let mut s = session();
        let (_, _, info) = state(send(&mut s, json!({"type": "reset", "game": game, "seed": 3})));
        let n = info.actions.unwrap().len();
        let mut sum = 0;
        for _ in 0..500 {
            let (r, done, info) = state(send(&mut s, json!({"type": "step", "action": rng.random_range(0..n)})));
            sum += r;
            assert_eq!(sum, info.score, "{game}");
            if done {
                break;
            }
        }
    }
}

#[test]
fn pixels_decode_to_grid_times_tile() {
    let mut s = Session::new(common::library(), ServerConfig { tile_size: 4, ..ServerConfig::default() });
    match send(&mut s, json!({"type": "reset", "game": "zelda", "obs_mode": "pixels"})) {
        Reply::State { obs, .. } => {
            assert!(obs.grid.is_none());
            let px = obs.pixels.unwrap();
            let png = base64::engine::general_purpose::STANDARD.decode(&px.png).unwrap();
            let frame = PixelFrame::from_png(&png, 4).unwrap();
            let st = s.state().unwrap();
            assert_eq!((frame.width, frame.height), (st.width() * 4, st.height() * 4));
            assert_eq!((px.width, px.height), (frame.width, frame.height));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn late_step_plays_nil() {
    let config = ServerConfig { budget_ms: Some(40), ..ServerConfig::default() };
    let t0 = Instant::now();
    let reset = json!({"type": "reset", "game": "aliens", "seed": 5}).to_string();
    let step = json!({"type": "step", "action": "LEFT"}).to_string();

    let mut on_time = Session::new(common::library(), config);
    on_time.handle_line_at(reset.as_bytes(), t0);
    let (_, _, info) = state(on_time.handle_line_at(step.as_bytes(), t0 + Duration::from_millis(39)).reply);
    assert!(!info.late);

    let mut late = Session::new(common::library(), config);
    late.handle_line_at(reset.as_bytes(), t0);
    let (_, _, info) = state(late.handle_line_at(step.as_bytes(), t0 + Duration::from_millis(41)).reply);
    assert!(info.late);

    let mut nil = session();
    nil.handle_line(reset.as_bytes());
    nil.handle_line(json!({"type": "step", "action": "NIL"}).to_string().as_bytes());
    assert_eq!(late.state().unwrap().to_bytes(), nil.state().unwrap().to_bytes());
    assert_ne!(on_time.state().unwrap().to_bytes(), nil.state().unwrap().to_bytes());
}

#[test]
fn learning_clock_expires() {
    let config = ServerConfig { learning_clock_ms: Some(1000), ..ServerConfig::default() };
    let mut s = Session::new(common::library(), config);
    let t0 = Instant::now();
    let reset = json!({"type": "reset", "game": "frogs"}).to_string();
    assert!(matches!(s.handle_line_at(reset.as_bytes(), t0).reply, Reply::State { .. }));
    let r = s.handle_line_at(reset.as_bytes(), t0 + Duration::from_millis(1001)).reply;
    assert_eq!(code(&r), ErrorCode::LearningClockExpired);
    // other messages still work
    assert!(matches!(s.handle_line_at(b"{\"type\":\"hello\"}", t0).reply, Reply::Welcome { .. }));
}

#[test]
fn unknown_fields_are_ignored() {
    let mut s = session();
    let r = send(&mut s, json!({"type": "reset", "game": "frogs", "colour": "red", "extra": [1, 2]}));
    assert!(matches!(r, Reply::State { .. }));
}

#[test]
fn goodbye_closes() {
    let out = session().handle_line(b"{\"type\":\"goodbye\"}");
    assert!(out.close);
    assert_eq!(out.reply.to_line(), r#"{"type":"bye"}"#);
}

#[test]
fn fuzz_lines_all_draw_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut s = session();
    send(&mut s, json!({"type": "reset", "game": "aliens", "seed": 1}));
    let before = s.state().unwrap().to_bytes();
    for _ in 0..20_000 {
        let line = malformed_line(&mut rng);
        let out = s.handle_line(&line);
        assert!(
            matches!(out.reply, Reply::Error { .. }) && !out.close,
            "{:?} -> {:?}",
            String::from_utf8_lossy(&line),
            out.reply
        );
    }
    // malformed input never touches the episode
    assert_eq!(s.state().unwrap().to_bytes(), before);
    assert!(matches!(send(&mut s, json!({"type": "step", "action": "NIL"})), Reply::State { .. }));
}
