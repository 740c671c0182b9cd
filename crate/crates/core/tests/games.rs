use gvg_core::agents::{run_episode, Agent, IwAgent, IwParams, PlanBudget, RandomAgent};
use gvg_core::engine::{Action, GameState, Status};
use gvg_core::games::{load_game, validate_corpus, Corpus, CorpusError, LoadedGame};
use gvg_core::vgdl::{parse_level, EffectClass};

fn custom(g: &LoadedGame, level: &str) -> GameState {
    g.game.init_state(&parse_level(level, &g.desc).unwrap(), 0).unwrap()
}

fn episodes(id: &str, n: u64, agent: impl Fn(u64) -> Box<dyn Agent>) -> Vec<gvg_core::agents::EpisodeRecord> {
    let g = load_game(id).unwrap();
    (0..n)
        .map(|seed| run_episode(agent(seed).as_mut(), g.game.init_state(&g.levels[0], seed).unwrap()))
        .collect()
}

fn iw(budget: u32) -> impl Fn(u64) -> Box<dyn Agent> {
    move |seed| Box::new(IwAgent::new(seed, PlanBudget::Rollouts(budget), IwParams::default()))
}

fn random(seed: u64) -> Box<dyn Agent> {
    Box::new(RandomAgent::new(seed))
}

#[test]
fn unknown_game() {
    assert!(matches!(load_game("nonexistent"), Err(CorpusError::UnknownGame(_))));
}

#[test]
fn frogs_only_pays_for_the_win() {
    let g = load_game("frogs").unwrap();
    let scoring: Vec<_> = g.desc.interactions.iter().filter(|r| r.score_change() != 0).collect();
    assert_eq!(scoring.len(), 1);
    assert_eq!((scoring[0].first.as_str(), scoring[0].second.as_str()), ("avatar", "goal"));
    assert!(g.desc.terminations.iter().all(|t| t.bonus == 0));

    let mut wins = 0;
    for rec in episodes("frogs", 20, iw(500)).into_iter().chain(episodes("frogs", 50, random)) {
        let nonzero: Vec<i64> = rec.rewards.iter().copied().filter(|&r| r != 0).collect();
        if rec.status == Status::Win {
            wins += 1;
            assert_eq!(nonzero, [1]);
            assert_eq!(*rec.rewards.last().unwrap(), 1);
        } else {
            assert!(nonzero.is_empty());
        }
    }
    assert!(wins >= 18);
}

#[test]
fn missile_command_cities_and_fireballs() {
    let g = load_game("missile_command").unwrap();
    let s = g.game.init_state(&g.levels[0], 0).unwrap();
    let t = |name: &str| g.game.type_id(name).unwrap();
    assert_eq!(s.count_of(t("city")), 3);
    assert_eq!(s.count_of(t("incoming")), 4);
    assert_eq!(g.levels[0].count("city"), 3);
}

#[test]
fn seaquest_air_runs_out_after_25_ticks() {
    let g = load_game("seaquest").unwrap();
    let level = "A\n~\n~\n";
    // dive at tick 1; the 25th consecutive tick under water is fatal
    let mut s = custom(&g, level);
    s.advance(Action::Down).unwrap();
    for _ in 0..23 {
        s.advance(Action::Nil).unwrap();
    }
    assert_eq!((s.tick(), s.status()), (24, Status::Running));
    s.advance(Action::Nil).unwrap();
    assert_eq!((s.tick(), s.status()), (25, Status::Lose));

    // surfacing after 24 ticks refills the air
    let mut s = custom(&g, level);
    for _ in 0..3 {
        s.advance(Action::Down).unwrap();
        for _ in 0..23 {
            s.advance(Action::Nil).unwrap();
        }
        s.advance(Action::Up).unwrap();
        assert_eq!(s.status(), Status::Running);
    }
}

#[test]
fn superman_win_bonus() {
    let g = load_game("superman").unwrap();
    // no portals, villains or prisoners left: the city is safe at once
    let mut s = custom(&g, "wAjw\n");
    let r = s.advance(Action::Nil).unwrap();
    assert_eq!((r.status, r.reward, r.bonus), (Status::Win, 1000, 1000));
}

#[test]
fn superman_pays_for_delivery_not_capture() {
    let g = load_game("superman").unwrap();
    let t = |name: &str| g.game.type_id(name).unwrap();
    let (civilian, prisoner, villain, avatar, jail) = (t("civilian"), t("prisoner"), t("villain"), t("avatar"), t("jail"));
    let mut captures = 0;
    let mut deliveries = 0;
    for seed in 0..4 {
        let mut agent = IwAgent::new(seed, PlanBudget::Rollouts(100), IwParams::default());
        let mut s = g.game.init_state(&g.levels[0], seed).unwrap();
        while !s.is_terminal() {
            let r = s.advance(agent.act(&s)).unwrap();
            let mut paid = 0;
            for e in &r.events {
                match (e.effect, e.first, e.second) {
                    (EffectClass::TransformTo, f, Some(a)) if f == villain && a == avatar => captures += 1,
                    (EffectClass::KillSprite, f, Some(a)) if f == civilian && a == avatar => paid += 1,
                    (EffectClass::KillSprite, f, Some(j)) if f == prisoner && j == jail => {
                        paid += 1;
                        deliveries += 1;
                    }
                    _ => {}
                }
            }
            assert_eq!(r.reward - r.bonus, paid);
        }
    }
    assert!(captures > 0 && deliveries > 0, "{captures} captures, {deliveries} deliveries");
}

#[test]
fn wait_for_breakfast_is_binary() {
    let recs = episodes("wait_for_breakfast", 100, random).into_iter().chain(episodes("wait_for_breakfast", 10, iw(100)));
    let mut wins = 0;
    for rec in recs {
        let nonzero: Vec<i64> = rec.rewards.iter().copied().filter(|&r| r != 0).collect();
        match rec.status {
            Status::Win => {
                wins += 1;
                assert_eq!(nonzero, [1]);
            }
            _ => assert!(nonzero.is_empty(), "{rec:?}"),
        }
    }
    assert!(wins >= 10);
}

#[test]
fn boulder_dash_diamond_releases_the_rock_above() {
    let g = load_game("boulder_dash").unwrap();
    let level = "wwwww\nw.o.w\nw.x.w\nw.A.w\nwe..w\nwwwww\n";
    let boulder = g.game.type_id("boulder").unwrap();
    let rock = |s: &GameState| s.sprites().iter().find(|sp| sp.ty == boulder).unwrap().cell();
    let mut s = custom(&g, level);
    for _ in 0..5 {
        s.advance(Action::Nil).unwrap();
    }
    // the diamond holds the rock up
    assert_eq!(rock(&s), (2, 1));
    // collecting from below: the avatar keeps its cell and the rock is freed
    let r = s.advance(Action::Up).unwrap();
    assert_eq!(r.reward, 2);
    assert_eq!(s.avatar().unwrap().cell(), (2, 3));
    let mut stay = s.clone();
    stay.advance(Action::Nil).unwrap();
    assert_eq!(rock(&stay), (2, 2));
    let r = stay.advance(Action::Nil).unwrap();
    assert_eq!((r.status, r.reward), (Status::Lose, -1));

    // dodging lets the rock come to rest where the avatar stood
    let mut dodge = s.clone();
    dodge.advance(Action::Right).unwrap();
    for _ in 0..4 {
        dodge.advance(Action::Nil).unwrap();
    }
    assert_eq!((dodge.status(), rock(&dodge)), (Status::Running, (2, 3)));
}

#[test]
fn unmapped_character_flags_only_that_game() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("games");
    std::fs::copy(src.join("manifest.toml"), dir.path().join("manifest.toml")).unwrap();
    for id in Corpus::builtin().ids() {
        std::fs::create_dir(dir.path().join(id)).unwrap();
        for entry in std::fs::read_dir(src.join(id)).unwrap() {
            let p = entry.unwrap().path();
            std::fs::copy(&p, dir.path().join(id).join(p.file_name().unwrap())).unwrap();
        }
    }
    let lvl = dir.path().join("zelda/zelda_lvl1.txt");
    let text = std::fs::read_to_string(&lvl).unwrap().replacen(' ', "?", 1);
    std::fs::write(&lvl, text).unwrap();
    let report = validate_corpus(&Corpus::load_dir(dir.path()).unwrap(), 2, 0);
    let failed: Vec<&str> = report.games.iter().filter(|g| !g.passed()).map(|g| g.id.as_str()).collect();
    assert_eq!(failed, ["zelda"]);
    assert_eq!(report.passed(), 7);
}

#[test]
fn builtin_corpus_validates() {
    let report = validate_corpus(&Corpus::builtin(), 5, 0);
    assert!(report.all_passed(), "{report}");
    assert_eq!(report.games.len(), 8);
}
