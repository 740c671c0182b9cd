use gvg_core::agents::{
    run_episode, Agent, AgentConfig, AgentKind, GaAgent, GaParams, IwAgent, IwParams, MctsAgent, MctsParams, PlanBudget,
    RandomAgent,
};
use gvg_core::engine::{init_state, Action, GameState, Status, MOVE_ACTIONS};
use gvg_core::games::{load_game, Corpus, LoadedGame};
use gvg_core::vgdl::{parse_game, parse_level};
use proptest::prelude::*;
use std::sync::OnceLock;

fn corpus() -> &'static [LoadedGame] {
    static GAMES: OnceLock<Vec<LoadedGame>> = OnceLock::new();
    GAMES.get_or_init(|| {
        let c = Corpus::builtin();
        c.ids().map(|id| c.load(id).unwrap()).collect()
    })
}

fn setup(game: &str, level: &str) -> GameState {
    let d = parse_game(game).unwrap();
    init_state(&d, &parse_level(level, &d).unwrap(), 0).unwrap()
}

/// Reaching `g` wins; walls everywhere else.
const GOAL: &str = "\
BasicGame
  SpriteSet
    avatar > MovingAvatar
    goal > Immovable
  InteractionSet
    avatar wall > stepBack
    goal avatar > killSprite scoreChange=1
  TerminationSet
    SpriteCounter stype=goal limit=0 win=True
    Timeout limit=100
  LevelMapping
    A > avatar
    g > goal
    w > wall
";

fn one_step_from_win() -> GameState {
    setup(GOAL, "wwwww\nw   w\nw Agw\nw   w\nwwwww\n")
}

fn mcts(seed: u64, n: u32) -> MctsAgent {
    MctsAgent::new(seed, PlanBudget::Rollouts(n), MctsParams::default())
}

fn ga(seed: u64, n: u32, params: GaParams) -> GaAgent {
    GaAgent::new(seed, PlanBudget::Rollouts(n), params)
}

fn iw(seed: u64, n: u32) -> IwAgent {
    IwAgent::new(seed, PlanBudget::Rollouts(n), IwParams::default())
}

#[test]
fn random_is_uniform() {
    let s = one_step_from_win();
    let mut agent = RandomAgent::new(3);
    let mut counts = [0f64; 5];
    let draws = 10_000.0;
    for _ in 0..draws as usize {
        let a = agent.act(&s);
        counts[MOVE_ACTIONS.iter().position(|&x| x == a).unwrap()] += 1.0;
    }
    let e = draws / 5.0;
    let sigma = (draws * 0.2 * 0.8f64).sqrt();
    let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
    assert!(counts.iter().all(|c| (c - e).abs() < 3.0 * sigma), "{counts:?}");
    // 4 degrees of freedom, p = 0.001
    assert!(chi2 < 18.47, "{chi2}");
}

#[test]
fn random_never_wins_frogs() {
    let g = load_game("frogs").unwrap();
    for seed in 0..100 {
        let rec = run_episode(&mut RandomAgent::new(seed), g.game.init_state(&g.levels[0], seed).unwrap());
        assert_ne!(rec.status, Status::Win, "seed {seed}");
    }
}

#[test]
fn zero_budget_plays_nil() {
    let s = one_step_from_win();
    assert_eq!(mcts(0, 0).act(&s), Action::Nil);
    assert_eq!(ga(0, 0, GaParams::default()).act(&s), Action::Nil);
    assert_eq!(iw(0, 0).act(&s), Action::Nil);
}

#[test]
fn one_step_win_is_found() {
    let s = one_step_from_win();
    let n = s.action_space().len() as u32;
    for seed in 0..20 {
        assert_eq!(mcts(seed, n * 10).act(&s), Action::Right, "mcts seed {seed}");
        let params = GaParams { population: n as usize, ..GaParams::default() };
        assert_eq!(ga(seed, n * 10, params).act(&s), Action::Right, "ga seed {seed}");
        assert_eq!(iw(seed, n).act(&s), Action::Right, "iw seed {seed}");
    }
}

#[test]
fn more_budget_never_loses_the_win() {
    // anytime: from |A| x 10 upward, larger budgets keep the winning move
    let s = one_step_from_win();
    for seed in 0..10 {
        for n in [50, 100, 200, 400] {
            assert_eq!(mcts(seed, n).act(&s), Action::Right, "mcts {n}");
            assert_eq!(ga(seed, n, GaParams::default()).act(&s), Action::Right, "ga {n}");
            assert_eq!(iw(seed, n).act(&s), Action::Right, "iw {n}");
        }
    }
}

#[test]
fn short_horizon_ga_is_blind() {
    // the reward is two moves away
    let s = setup(GOAL, "wwwwww\nw    w\nwA  gw\nw    w\nwwwwww\n");
    let s = {
        let mut t = s;
        t.advance(Action::Right).unwrap();
        t
    };
    for seed in 0..10 {
        let mut short = ga(seed, 240, GaParams { genome_length: 1, ..GaParams::default() });
        short.act(&s);
        assert_eq!(short.last_best_fitness, 0.0);
        let mut long = ga(seed, 240, GaParams { genome_length: 2, ..GaParams::default() });
        assert_eq!(long.act(&s), Action::Right);
        assert!(long.last_best_fitness > 1.0);
    }
}

#[test]
fn iw_corridor() {
    let mut s = setup(GOAL, "A g\n");
    let mut agent = iw(0, 1000);
    let a = agent.act(&s);
    assert_eq!(a, Action::Right);
    // atoms: each type on each cell, plus score buckets
    let atoms = s.game().type_count() as u32 * 3 + 2;
    assert!(agent.last_kept <= atoms, "{} > {atoms}", agent.last_kept);
    s.advance(a).unwrap();
    let r = s.advance(agent.act(&s)).unwrap();
    assert_eq!(r.status, Status::Win);
    assert_eq!(s.tick(), 2);
}

#[test]
fn iw_with_nothing_new_plays_nil() {
    let s = setup(GOAL, "Awg\n");
    for seed in 0..5 {
        let mut agent = iw(seed, 100);
        assert_eq!(agent.act(&s), Action::Nil);
        assert_eq!(agent.last_kept, 0);
    }
}

#[test]
fn mcts_is_invariant_to_score_scale() {
    let g = load_game("aliens").unwrap();
    let text = std::fs::read_to_string(format!("{}/games/aliens/aliens.vgdl", env!("CARGO_MANIFEST_DIR"))).unwrap();
    for k in [3, 10] {
        let scaled = text
            .replace("scoreChange=-1", &format!("scoreChange=-{k}"))
            .replace("scoreChange=1", &format!("scoreChange={k}"))
            .replace("scoreChange=2", &format!("scoreChange={}", 2 * k));
        let d = parse_game(&scaled).unwrap();
        let mut a = g.game.init_state(&g.levels[0], 5).unwrap();
        let mut b = init_state(&d, &g.levels[0], 5).unwrap();
        let (mut pa, mut pb) = (mcts(9, 60), mcts(9, 60));
        for _ in 0..60 {
            if a.is_terminal() {
                break;
            }
            let (x, y) = (pa.act(&a), pb.act(&b));
            assert_eq!(x, y, "tick {}", a.tick());
            a.advance(x).unwrap();
            b.advance(y).unwrap();
            assert_eq!(a.score() * k, b.score());
        }
    }
}

#[test]
fn mcts_beats_random_on_aliens() {
    let g = load_game("aliens").unwrap();
    let mean = |agent: &dyn Fn(u64) -> Box<dyn Agent>| {
        let total: i64 = (0..20)
            .map(|seed| run_episode(agent(seed).as_mut(), g.game.init_state(&g.levels[0], seed).unwrap()).score)
            .sum();
        total as f64 / 20.0
    };
    let m = mean(&|seed| Box::new(mcts(seed, 400)));
    let r = mean(&|seed| Box::new(RandomAgent::new(seed)));
    assert!(m >= r + 15.0, "mcts {m} random {r}");
}

#[test]
fn iw_wins_frogs() {
    let g = load_game("frogs").unwrap();
    let wins = (0..20)
        .filter(|&seed| {
            run_episode(&mut iw(seed, 2000), g.game.init_state(&g.levels[0], seed).unwrap()).status == Status::Win
        })
        .count();
    assert!(wins >= 18, "{wins}/20");
}

#[test]
fn ga_and_iw_solve_wait_for_breakfast() {
    let g = load_game("wait_for_breakfast").unwrap();
    for seed in 0..20 {
        let s = || g.game.init_state(&g.levels[0], seed).unwrap();
        assert_eq!(run_episode(&mut ga(seed, 100, GaParams::default()), s()).status, Status::Win, "ga {seed}");
        assert_eq!(run_episode(&mut iw(seed, 100), s()).status, Status::Win, "iw {seed}");
    }
}

#[test]
fn heavy_search_leaves_the_source_alone() {
    let g = load_game("boulder_dash").unwrap();
    let s = g.game.init_state(&g.levels[0], 1).unwrap();
    let before = s.to_bytes();
    mcts(0, 1000).act(&s);
    assert_eq!(s.tick(), 0);
    assert_eq!(s.to_bytes(), before);
}

#[test]
fn config_builds_and_validates() {
    let mut c = AgentConfig::new(AgentKind::Ga, 1, PlanBudget::Rollouts(10));
    assert!(c.validate().is_ok());
    assert_eq!(c.build().name(), "GA");
    c.ga.elitism = c.ga.population;
    assert!(c.validate().is_err());
    let c: AgentConfig = serde_json::from_str(r#"{"kind":"iw","seed":3,"budget":{"rollouts":7}}"#).unwrap();
    assert_eq!((c.kind, c.budget), (AgentKind::Iw, PlanBudget::Rollouts(7)));
    assert_eq!(PlanBudget::default(), PlanBudget::Millis(40));
}

fn kind(k: u8) -> AgentKind {
    [AgentKind::Random, AgentKind::Ga, AgentKind::Mcts, AgentKind::Iw][k as usize % 4]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn agents_do_not_mutate_and_are_deterministic(game in 0usize..8, k in 0u8..4, seed in any::<u64>(),
                                                  prefix in proptest::collection::vec(any::<u8>(), 0..60)) {
        let g = &corpus()[game];
        let mut s = g.game.init_state(&g.levels[0], seed).unwrap();
        for p in prefix {
            if s.is_terminal() {
                break;
            }
            let acts = s.action_space();
            s.advance(acts[p as usize % acts.len()]).unwrap();
        }
        prop_assume!(!s.is_terminal());
        let before = s.to_bytes();
        let config = AgentConfig::new(kind(k), seed, PlanBudget::Rollouts(40));
        let a = config.build().act(&s);
        prop_assert_eq!(s.to_bytes(), before);
        prop_assert_eq!(config.build().act(&s), a);
        prop_assert!(s.action_space().contains(&a));
    }
}
