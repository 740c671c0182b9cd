use gvg_cli::bench::{run_bench, AgentSpec, BenchError, BenchReport, BenchSpec, CellResult, CSV_HEADER};
use gvg_cli::{EXIT_BENCH_FAILURES, EXIT_OK};
use gvg_core::agents::{AgentKind, PlanBudget};
use gvg_core::games::Corpus;

fn spec(games: &[&str], agents: &[AgentKind], episodes: u32) -> BenchSpec {
    BenchSpec {
        games: games.iter().map(|g| g.to_string()).collect(),
        agents: agents.iter().map(|&k| AgentSpec::new(k)).collect(),
        episodes,
        seed: 0,
        level: 0,
        budget: PlanBudget::Rollouts(30),
        output: None,
    }
}

#[test]
fn toml_spec_round_trip() {
    let text = r#"
games = ["frogs", "zelda"]
episodes = 5
seed = 100
budget = { rollouts = 50 }

[[agents]]
kind = "random"

[[agents]]
kind = "mcts"
label = "MCTS-deep"
budget = { millis = 40 }
mcts = { rollout_depth = 20 }
"#;
    let s = BenchSpec::from_toml(text).unwrap();
    assert_eq!(s.episodes, 5);
    assert_eq!(s.budget, PlanBudget::Rollouts(50));
    assert_eq!(s.agents[1].label(), "MCTS-deep");
    assert_eq!(s.agents[1].budget, Some(PlanBudget::Millis(40)));
    assert_eq!(s.agents[1].mcts.rollout_depth, 20);
    assert_eq!(s.agents[0].label(), "Random");
    assert!(matches!(BenchSpec::from_toml("agents = []\nbogus = 1\n"), Err(BenchError::Spec(_))));
}

#[test]
fn invalid_specs() {
    let c = Corpus::builtin();
    let e = run_bench(spec(&["frogs"], &[AgentKind::Random], 0), &c, 1).unwrap_err();
    assert!(matches!(e, BenchError::Spec(_)));
    let e = run_bench(spec(&["pong"], &[AgentKind::Random], 1), &c, 1).unwrap_err();
    assert!(matches!(e, BenchError::Corpus(_)));
    let mut s = spec(&["frogs"], &[AgentKind::Random], 1);
    s.level = 5;
    assert!(matches!(run_bench(s, &c, 1), Err(BenchError::Spec(_))));
    let mut s = spec(&["frogs"], &[AgentKind::Ga], 1);
    s.agents[0].ga.population = 0;
    assert!(matches!(run_bench(s, &c, 1), Err(BenchError::Spec(_))));
}

#[test]
fn empty_game_list_means_whole_corpus() {
    let r = run_bench(spec(&[], &[AgentKind::Random], 1), &Corpus::builtin(), 1).unwrap();
    assert_eq!(r.cells.len(), 8);
    assert_eq!(r.spec.games.len(), 8);
}

#[test]
fn report_is_reproducible_and_job_count_free() {
    let c = Corpus::builtin();
    let s = spec(&["aliens", "frogs"], &[AgentKind::Random, AgentKind::Iw], 3);
    let a = run_bench(s.clone(), &c, 1).unwrap();
    let b = run_bench(s.clone(), &c, 1).unwrap();
    let p = run_bench(s, &c, 3).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_table(), b.to_table());
    assert_eq!(a.to_csv(), p.to_csv());
    assert_eq!(a.cells.len(), 4);
    assert_eq!((a.cells[1].game.as_str(), a.cells[1].agent.as_str()), ("aliens", "IW"));
}

#[test]
fn csv_layout() {
    let r = run_bench(spec(&["frogs"], &[AgentKind::Random, AgentKind::Iw], 2), &Corpus::builtin(), 1).unwrap();
    let csv = r.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), CSV_HEADER.split(',').count());
    assert_eq!(&row[..4], ["1", "frogs", "Random", "2"]);
    assert_eq!(row[9], "-2");
    assert_eq!(row[10], r.config_hash);
    assert_eq!(r.config_hash.len(), 64);
}

#[test]
fn config_hash_ignores_output_only() {
    let s = spec(&["frogs"], &[AgentKind::Random], 2);
    let mut t = s.clone();
    t.output = Some("elsewhere/report".into());
    assert_eq!(s.config_hash(), t.config_hash());
    t.seed = 1;
    assert_ne!(s.config_hash(), t.config_hash());
}

#[test]
fn statistics_match_hand_computation() {
    let cell = CellResult {
        game: "zelda".into(),
        agent: "GA".into(),
        scores: vec![2, 4, 4, 4, 5, 5, 7, 9],
        ticks: vec![10; 8],
        wins: 2,
        failures: vec![],
    };
    assert_eq!(cell.mean(), 5.0);
    // sum of squared deviations is 32, over n - 1 = 7
    assert!((cell.std() - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    assert_eq!(cell.win_rate(), 0.25);
    assert_eq!(cell.reference(), Some(3.4));
}

#[test]
fn failures_set_the_exit_code() {
    let mut r = run_bench(spec(&["frogs"], &[AgentKind::Random], 1), &Corpus::builtin(), 1).unwrap();
    assert_eq!(r.exit_code(), EXIT_OK);
    r.cells[0].failures.push("seed 0: synthetic".into());
    assert_eq!(r.exit_code(), EXIT_BENCH_FAILURES);
    assert!(r.to_table().contains("1 failed episodes"));
}

#[test]
fn random_never_wins_frogs() {
    let r: BenchReport = run_bench(spec(&["frogs"], &[AgentKind::Random], 100), &Corpus::builtin(), 1).unwrap();
    assert_eq!(r.cells[0].win_rate(), 0.0);
}
