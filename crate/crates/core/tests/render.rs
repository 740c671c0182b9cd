use std::collections::BTreeMap;

use gvg_core::engine::{init_state, Action, Status};
use gvg_core::games::load_game;
use gvg_core::render::{export_png, render_grid, render_pixels, PixelFrame, BACKGROUND, DEFAULT_TILE_SIZE};
use gvg_core::vgdl::{parse_game, parse_level};

const MINI: &str = "\
BasicGame
  SpriteSet
    avatar > MovingAvatar color=BLUE
    gem > Immovable color=GREEN
  InteractionSet
    gem avatar > killSprite scoreChange=1
  TerminationSet
    Timeout limit=20
  LevelMapping
    A > avatar
    g > gem
";

fn mini(level: &str) -> gvg_core::engine::GameState {
    let desc = parse_game(MINI).unwrap();
    init_state(&desc, &parse_level(level, &desc).unwrap(), 0).unwrap()
}

#[test]
fn empty_grid_is_background() {
    // the avatar and the gem destroy each other, leaving nothing on the grid
    let g = MINI.replace("killSprite scoreChange=1", "killBoth");
    let desc = parse_game(&g).unwrap();
    let mut s = init_state(&desc, &parse_level("Ag\n  \n", &desc).unwrap(), 0).unwrap();
    s.advance(Action::Right).unwrap();
    assert!(s.sprites().is_empty());
    let f = render_pixels(&s, 1);
    assert_eq!((f.width, f.height, f.bytes.len()), (2, 2, 12));
    assert!(f.bytes.chunks(3).all(|p| p == BACKGROUND));
}

#[test]
fn frame_is_deterministic() {
    let g = load_game("aliens").unwrap();
    let s = g.game.init_state(&g.levels[0], 5).unwrap();
    assert_eq!(render_pixels(&s, 4), render_pixels(&s, 4));
    assert_eq!(render_grid(&s), render_grid(&s));
}

#[test]
fn pixel_counts_match_level_oracle() {
    let g = load_game("aliens").unwrap();
    let lvl = &g.levels[0];
    let s = g.game.init_state(lvl, 0).unwrap();
    let f = render_pixels(&s, DEFAULT_TILE_SIZE);
    assert_eq!((f.width, f.height), (lvl.width * 10, lvl.height * 10));

    // oracle straight from the level characters: topmost declared type per cell
    let mut expect: BTreeMap<[u8; 3], usize> = BTreeMap::new();
    for y in 0..lvl.height {
        for x in 0..lvl.width {
            let top = lvl.cell(x, y).iter().map(|n| g.game.type_id(n).unwrap()).max();
            let color = top.map_or(BACKGROUND, |t| g.game.sprite_type(t).color);
            *expect.entry(color).or_default() += 100;
        }
    }
    let mut got: BTreeMap<[u8; 3], usize> = BTreeMap::new();
    for p in f.bytes.chunks(3) {
        *got.entry([p[0], p[1], p[2]]).or_default() += 1;
    }
    assert_eq!(got, expect);
}

#[test]
fn tiles_are_solid() {
    let f = render_pixels(&mini("Ag\n"), 3);
    let blue = f.pixel(0, 0);
    let green = f.pixel(3, 0);
    assert_ne!(blue, green);
    for y in 0..3 {
        for x in 0..3 {
            assert_eq!(f.pixel(x, y), blue);
            assert_eq!(f.pixel(x + 3, y), green);
        }
    }
}

#[test]
fn png_round_trip_on_corpus_frames() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["aliens", "boulder_dash", "seaquest"] {
        let g = load_game(id).unwrap();
        let mut s = g.game.init_state(&g.levels[0], 3).unwrap();
        for _ in 0..5 {
            let a = s.action_space()[0];
            if s.status() == Status::Running {
                s.advance(a).unwrap();
            }
        }
        let f = render_pixels(&s, DEFAULT_TILE_SIZE);
        let path = dir.path().join(format!("{id}.png"));
        export_png(&f, &path).unwrap();
        let back = PixelFrame::from_png(&std::fs::read(&path).unwrap(), DEFAULT_TILE_SIZE).unwrap();
        assert_eq!(back, f);
    }
}

#[test]
fn png_one_pixel() {
    let f = PixelFrame { width: 1, height: 1, tile_size: 1, bytes: vec![1, 2, 3] };
    let back = PixelFrame::from_png(&f.to_png().unwrap(), 1).unwrap();
    assert_eq!(back, f);
}

#[test]
fn png_unwritable_path() {
    let f = render_pixels(&mini("A\n"), 1);
    assert!(export_png(&f, "/nonexistent-dir/x/frame.png").is_err());
}

#[test]
fn grid_initial_minimal() {
    let obs = render_grid(&mini("Ag\n"));
    assert_eq!((obs.score, obs.tick, obs.status), (0, 0, Status::Running));
    let a = obs.avatar.unwrap();
    assert_eq!((a.x, a.y), (0, 0));
    let avatars = obs.grid.iter().flatten().flatten().filter(|&&t| t == 0).count();
    assert_eq!(avatars, 1);
}

#[test]
fn grid_drops_killed_sprite() {
    let mut s = mini("Ag\n");
    let gem = s.game().type_id("gem").unwrap();
    assert!(render_grid(&s).grid[0][1].contains(&gem));
    s.advance(Action::Right).unwrap();
    let obs = render_grid(&s);
    assert_eq!(obs.score, 1);
    assert!(!obs.grid.iter().flatten().flatten().any(|&t| t == gem));
}

#[test]
fn grid_json_has_no_type_names() {
    for id in ["aliens", "zelda", "superman"] {
        let g = load_game(id).unwrap();
        let a = g.game.init_state(&g.levels[0], 1).unwrap();
        let b = g.game.init_state(&g.levels[0], 2).unwrap();
        let ja = serde_json::to_string(&render_grid(&a)).unwrap();
        let jb = serde_json::to_string(&render_grid(&b)).unwrap();
        let value: serde_json::Value = serde_json::from_str(&ja).unwrap();
        let mut strings = Vec::new();
        collect_strings(&value, &mut strings);
        for t in g.game.types() {
            assert!(!strings.contains(&t.name), "{id} leaks {}", t.name);
        }
        // ids are a function of the type table, so two episodes agree on level layout
        assert_eq!(render_grid(&a).grid, render_grid(&b).grid);
        assert_eq!(ja.len(), jb.len());
    }
}

fn collect_strings(v: &serde_json::Value, out: &mut Vec<String>) {
    match v {
        serde_json::Value::String(s) => out.push(s.clone()),
        serde_json::Value::Array(a) => a.iter().for_each(|x| collect_strings(x, out)),
        serde_json::Value::Object(m) => m.values().for_each(|x| collect_strings(x, out)),
        _ => {}
    }
}
