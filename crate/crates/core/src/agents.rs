//! Planning agents over the forward model, and the random baseline.

use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Action, GameState, Status};

pub trait Agent {
    /// Chooses an action for `state` without modifying it.
    fn act(&mut self, state: &GameState) -> Action;
    fn name(&self) -> &'static str;
}

/// Per-decision budget: a count of forward-model units (MCTS simulations,
/// GA genome evaluations, IW generated nodes) or a wall-clock limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanBudget {
    Rollouts(u32),
    Millis(u64),
}

impl Default for PlanBudget {
    fn default() -> Self {
        PlanBudget::Millis(40)
    }
}

struct Meter {
    budget: PlanBudget,
    start: Instant,
    used: u32,
}

impl Meter {
    fn new(budget: PlanBudget) -> Meter {
        Meter { budget, start: Instant::now(), used: 0 }
    }

    fn spend(&mut self) -> bool {
        let ok = match self.budget {
            PlanBudget::Rollouts(n) => self.used < n,
            PlanBudget::Millis(ms) => self.start.elapsed() < Duration::from_millis(ms),
        };
        self.used += ok as u32;
        ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Random,
    Ga,
    Mcts,
    Iw,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Random => "Random",
            AgentKind::Ga => "GA",
            AgentKind::Mcts => "MCTS",
            AgentKind::Iw => "IW",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MctsParams {
    pub exploration: f64,
    pub rollout_depth: u32,
}

impl Default for MctsParams {
    fn default() -> Self {
        MctsParams { exploration: std::f64::consts::SQRT_2, rollout_depth: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population: usize,
    pub genome_length: usize,
    /// Per-gene mutation probability; `None` means `1 / genome_length`.
    pub mutation_rate: Option<f64>,
    pub elitism: usize,
    pub win_bonus: f64,
    pub loss_penalty: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 24,
            genome_length: 14,
            mutation_rate: None,
            elitism: 1,
            win_bonus: 1e6,
            loss_penalty: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IwParams {
    pub width: u32,
    /// Score atom bucket size in points.
    pub score_bucket: i64,
}

impl Default for IwParams {
    fn default() -> Self {
        IwParams { width: 1, score_bucket: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub seed: u64,
    #[serde(default)]
    pub budget: PlanBudget,
    #[serde(default)]
    pub mcts: MctsParams,
    #[serde(default)]
    pub ga: GaParams,
    #[serde(default)]
    pub iw: IwParams,
}

impl AgentConfig {
    pub fn new(kind: AgentKind, seed: u64, budget: PlanBudget) -> AgentConfig {
        AgentConfig {
            kind,
            seed,
            budget,
            mcts: MctsParams::default(),
            ga: GaParams::default(),
            iw: IwParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = |ok: bool, what: &str| if ok { Ok(()) } else { Err(format!("{what} must be positive")) };
        positive(self.mcts.exploration > 0.0, "mcts.exploration")?;
        positive(self.mcts.rollout_depth > 0, "mcts.rollout_depth")?;
        positive(self.ga.population > 0, "ga.population")?;
        positive(self.ga.genome_length > 0, "ga.genome_length")?;
        positive(self.ga.elitism < self.ga.population, "ga.population - ga.elitism")?;
        if let Some(r) = self.ga.mutation_rate {
            if !(0.0..=1.0).contains(&r) {
                return Err("ga.mutation_rate must be in [0, 1]".into());
            }
        }
        if self.iw.width != 1 {
            return Err("only iw.width = 1 is supported".into());
        }
        positive(self.iw.score_bucket > 0, "iw.score_bucket")
    }

    pub fn build(&self) -> Box<dyn Agent + Send> {
        match self.kind {
            AgentKind::Random => Box::new(RandomAgent::new(self.seed)),
            AgentKind::Mcts => Box::new(MctsAgent::new(self.seed, self.budget, self.mcts)),
            AgentKind::Ga => Box::new(GaAgent::new(self.seed, self.budget, self.ga)),
            AgentKind::Iw => Box::new(IwAgent::new(self.seed, self.budget, self.iw)),
        }
    }
}

pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> RandomAgent {
        RandomAgent { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, state: &GameState) -> Action {
        *state.action_space().choose(&mut self.rng).unwrap_or(&Action::Nil)
    }

    fn name(&self) -> &'static str {
        "Random"
    }
}

// ---------------------------------------------------------------- MCTS

const UNEXPANDED: u32 = u32::MAX;

struct Node {
    state: GameState,
    parent: u32,
    depth: u32,
    children: Vec<u32>,
    visits: u32,
    total: f64,
}

/// Running score bounds; maps raw outcomes into [0, 1].
struct Bounds {
    lo: i64,
    hi: i64,
}

impl Bounds {
    fn observe(&mut self, s: i64) {
        self.lo = self.lo.min(s);
        self.hi = self.hi.max(s);
    }

    fn value(&self, state: &GameState) -> f64 {
        match state.status() {
            Status::Win => 1.0,
            Status::Lose => 0.0,
            _ if self.hi == self.lo => 0.5,
            _ => 0.1 + 0.8 * ((state.score() - self.lo) as f64 / (self.hi - self.lo) as f64),
        }
    }
}

/// UCT over cloned states (closed loop), uniform random rollouts.
pub struct MctsAgent {
    rng: ChaCha8Rng,
    budget: PlanBudget,
    params: MctsParams,
    /// Simulations completed in the last call to `act`.
    pub last_iterations: u32,
}

impl MctsAgent {
    pub fn new(seed: u64, budget: PlanBudget, params: MctsParams) -> MctsAgent {
        MctsAgent { rng: ChaCha8Rng::seed_from_u64(seed), budget, params, last_iterations: 0 }
    }

    fn select_child(&mut self, tree: &[Node], node: usize) -> usize {
        let n = &tree[node];
        let ln = (n.visits.max(1) as f64).ln();
        let mut best = f64::NEG_INFINITY;
        let mut ties = 0u32;
        let mut pick = 0;
        for (i, &c) in n.children.iter().enumerate() {
            let c = &tree[c as usize];
            let u = c.total / c.visits as f64 + self.params.exploration * (ln / c.visits as f64).sqrt();
            if u > best {
                best = u;
                ties = 1;
                pick = i;
            } else if u == best {
                ties += 1;
                if self.rng.random_range(0..ties) == 0 {
                    pick = i;
                }
            }
        }
        pick
    }
}

impl Agent for MctsAgent {
    fn act(&mut self, root_state: &GameState) -> Action {
        let actions = root_state.action_space();
        let mut meter = Meter::new(self.budget);
        let mut bounds = Bounds { lo: root_state.score(), hi: root_state.score() };
        let mut tree = vec![Node {
            state: root_state.clone(),
            parent: UNEXPANDED,
            depth: 0,
            children: vec![UNEXPANDED; actions.len()],
            visits: 0,
            total: 0.0,
        }];
        let depth_limit = self.params.rollout_depth;
        let mut iterations = 0;
        while meter.spend() {
            iterations += 1;
            // selection
            let mut node = 0usize;
            loop {
                let n = &tree[node];
                if n.state.is_terminal() || n.depth >= depth_limit {
                    break;
                }
                let open: Vec<usize> = (0..n.children.len()).filter(|&i| n.children[i] == UNEXPANDED).collect();
                if let Some(&i) = open.choose(&mut self.rng) {
                    // expansion
                    let mut s = n.state.clone();
                    s.advance(actions[i]).expect("legal action on running state");
                    let child = Node {
                        state: s,
                        parent: node as u32,
                        depth: n.depth + 1,
                        children: vec![UNEXPANDED; actions.len()],
                        visits: 0,
                        total: 0.0,
                    };
                    tree.push(child);
                    let id = (tree.len() - 1) as u32;
                    tree[node].children[i] = id;
                    node = id as usize;
                    break;
                }
                let i = self.select_child(&tree, node);
                node = tree[node].children[i] as usize;
            }
            // rollout
            let mut s = tree[node].state.clone();
            let mut depth = tree[node].depth;
            while depth < depth_limit && !s.is_terminal() {
                let a = actions[self.rng.random_range(0..actions.len())];
                s.advance(a).expect("legal action on running state");
                depth += 1;
            }
            bounds.observe(s.score());
            let v = bounds.value(&s);
            // backpropagation
            let mut cur = node as u32;
            while cur != UNEXPANDED {
                let n = &mut tree[cur as usize];
                n.visits += 1;
                n.total += v;
                cur = n.parent;
            }
        }
        self.last_iterations = iterations;

        let root = &tree[0];
        let mut best = 0u32;
        let mut ties = 0u32;
        let mut pick = None;
        for (i, &c) in root.children.iter().enumerate() {
            if c == UNEXPANDED {
                continue;
            }
            let v = tree[c as usize].visits;
            if v > best {
                best = v;
                ties = 1;
                pick = Some(i);
            } else if v == best {
                ties += 1;
                if self.rng.random_range(0..ties) == 0 {
                    pick = Some(i);
                }
            }
        }
        pick.map_or(Action::Nil, |i| actions[i])
    }

    fn name(&self) -> &'static str {
        "MCTS"
    }
}

// ---------------------------------------------------------------- GA

/// Rolling-horizon evolution of fixed-length action sequences.
pub struct GaAgent {
    rng: ChaCha8Rng,
    budget: PlanBudget,
    params: GaParams,
    /// Best genome of the previous decision, as action indices.
    carry: Option<Vec<u8>>,
    /// Fitness of the best genome found in the last call to `act`.
    pub last_best_fitness: f64,
    /// Genome evaluations in the last call to `act`.
    pub last_evaluations: u32,
}

impl GaAgent {
    pub fn new(seed: u64, budget: PlanBudget, params: GaParams) -> GaAgent {
        GaAgent {
            rng: ChaCha8Rng::seed_from_u64(seed),
            budget,
            params,
            carry: None,
            last_best_fitness: f64::NEG_INFINITY,
            last_evaluations: 0,
        }
    }

    fn fitness(&self, root: &GameState, actions: &[Action], genome: &[u8]) -> f64 {
        let mut s = root.clone();
        let mut steps = 0;
        for &g in genome {
            if s.is_terminal() {
                break;
            }
            s.advance(actions[g as usize]).expect("legal action on running state");
            steps += 1;
        }
        // sooner wins and later losses rank higher; the term stays below
        // one point so it never outweighs a score difference
        let haste = steps as f64 / (genome.len() + 1) as f64;
        let bonus = match s.status() {
            Status::Win => self.params.win_bonus - haste,
            Status::Lose => haste - self.params.loss_penalty,
            _ => 0.0,
        };
        s.score() as f64 + bonus
    }

    fn random_genome(&mut self, n: usize, first: Option<u8>) -> Vec<u8> {
        let len = self.params.genome_length;
        let mut g: Vec<u8> = (0..len).map(|_| self.rng.random_range(0..n) as u8).collect();
        if let Some(f) = first {
            g[0] = f;
        }
        g
    }

    fn tournament(&mut self, pop: &[(Vec<u8>, f64)]) -> usize {
        let a = self.rng.random_range(0..pop.len());
        let b = self.rng.random_range(0..pop.len());
        if pop[b].1 > pop[a].1 {
            b
        } else {
            a
        }
    }
}

impl Agent for GaAgent {
    fn act(&mut self, root: &GameState) -> Action {
        let actions = root.action_space();
        let n = actions.len();
        let len = self.params.genome_length;
        let rate = self.params.mutation_rate.unwrap_or(1.0 / len as f64);
        let mut meter = Meter::new(self.budget);
        let mut pop: Vec<(Vec<u8>, f64)> = Vec::with_capacity(self.params.population);

        // seed: previous best shifted by one, then genomes whose first
        // actions cycle through the action space
        let mut seeds = Vec::with_capacity(self.params.population);
        if let Some(prev) = self.carry.take().filter(|g| g.len() == len && g.iter().all(|&a| (a as usize) < n)) {
            let mut g = prev[1..].to_vec();
            g.push(self.rng.random_range(0..n) as u8);
            seeds.push(g);
        }
        let mut k = 0;
        while seeds.len() < self.params.population {
            seeds.push(self.random_genome(n, Some((k % n) as u8)));
            k += 1;
        }
        for g in seeds {
            if !meter.spend() {
                break;
            }
            let f = self.fitness(root, actions, &g);
            pop.push((g, f));
        }

        if pop.len() == self.params.population {
            'evolve: loop {
                pop.sort_by(|a, b| b.1.total_cmp(&a.1));
                let mut next: Vec<(Vec<u8>, f64)> = pop[..self.params.elitism].to_vec();
                while next.len() < self.params.population {
                    let (i, j) = (self.tournament(&pop), self.tournament(&pop));
                    let mut child: Vec<u8> = (0..len)
                        .map(|x| if self.rng.random::<bool>() { pop[i].0[x] } else { pop[j].0[x] })
                        .collect();
                    for gene in child.iter_mut() {
                        if self.rng.random::<f64>() < rate {
                            *gene = self.rng.random_range(0..n) as u8;
                        }
                    }
                    if !meter.spend() {
                        pop.extend(next);
                        break 'evolve;
                    }
                    let f = self.fitness(root, actions, &child);
                    next.push((child, f));
                }
                pop = next;
            }
        }
        self.last_evaluations = meter.used;
        if pop.is_empty() {
            self.last_best_fitness = f64::NEG_INFINITY;
            return Action::Nil;
        }

        let best_f = pop.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let best: Vec<usize> = (0..pop.len()).filter(|&i| pop[i].1 == best_f).collect();
        let pick = *best.choose(&mut self.rng).unwrap();
        self.last_best_fitness = best_f;
        let genome = pop.swap_remove(pick).0;
        let a = actions[genome[0] as usize];
        self.carry = Some(genome);
        a
    }

    fn name(&self) -> &'static str {
        "GA"
    }
}

// ---------------------------------------------------------------- IW(1)

/// Breadth-first search pruning states that make no atom true for the first
/// time. Atoms: a sprite type occupying a cell, and score at least `k`
/// buckets.
pub struct IwAgent {
    rng: ChaCha8Rng,
    budget: PlanBudget,
    params: IwParams,
    /// Nodes generated and kept (novel) in the last call to `act`.
    pub last_generated: u32,
    pub last_kept: u32,
}

struct IwNode {
    state: GameState,
    first: u8,
    depth: u32,
}

impl IwAgent {
    pub fn new(seed: u64, budget: PlanBudget, params: IwParams) -> IwAgent {
        IwAgent { rng: ChaCha8Rng::seed_from_u64(seed), budget, params, last_generated: 0, last_kept: 0 }
    }
}

struct Novelty {
    seen: Vec<bool>,
    cells: usize,
    best_bucket: i64,
}

impl Novelty {
    /// Marks the atoms of `s`; true when at least one was new.
    fn visit(&mut self, s: &GameState, bucket: i64) -> bool {
        let mut novel = false;
        for sp in s.sprites() {
            let i = sp.ty as usize * self.cells + sp.y as usize * s.width() + sp.x as usize;
            if !self.seen[i] {
                self.seen[i] = true;
                novel = true;
            }
        }
        let b = s.score().div_euclid(bucket);
        if b > self.best_bucket {
            self.best_bucket = b;
            novel = true;
        }
        novel
    }
}

fn status_rank(s: Status) -> u8 {
    match s {
        Status::Lose | Status::Aborted => 0,
        Status::Running => 1,
        Status::Win => 2,
    }
}

impl Agent for IwAgent {
    fn act(&mut self, root: &GameState) -> Action {
        let actions = root.action_space();
        let cells = root.width() * root.height();
        let mut novelty = Novelty {
            seen: vec![false; root.game().type_count() * cells],
            cells,
            best_bucket: i64::MIN,
        };
        let bucket = self.params.score_bucket;
        novelty.visit(root, bucket);
        let mut meter = Meter::new(self.budget);
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(IwNode { state: root.clone(), first: u8::MAX, depth: 0 });
        let mut best: Option<((i64, u8, i64), u8)> = None;
        let mut ties = 0u32;
        let (mut generated, mut kept) = (0, 0);
        'search: while let Some(node) = queue.pop_front() {
            for (i, &a) in actions.iter().enumerate() {
                if !meter.spend() {
                    break 'search;
                }
                generated += 1;
                let mut s = node.state.clone();
                s.advance(a).expect("legal action on running state");
                let novel = novelty.visit(&s, bucket);
                let won = s.status() == Status::Win;
                if !novel && !won {
                    continue;
                }
                kept += 1;
                let first = if node.first == u8::MAX { i as u8 } else { node.first };
                let depth = node.depth + 1;
                // deeper is better for ongoing states, sooner for wins
                let depth_key = if won { -(depth as i64) } else { depth as i64 };
                let key = (s.score(), status_rank(s.status()), depth_key);
                match &best {
                    Some((k, _)) if key < *k => {}
                    Some((k, _)) if key == *k => {
                        ties += 1;
                        if self.rng.random_range(0..ties) == 0 {
                            best = Some((key, first));
                        }
                    }
                    _ => {
                        best = Some((key, first));
                        ties = 1;
                    }
                }
                if !s.is_terminal() {
                    queue.push_back(IwNode { state: s, first, depth });
                }
            }
        }
        self.last_generated = generated;
        self.last_kept = kept;
        best.map_or(Action::Nil, |(_, i)| actions[i as usize])
    }

    fn name(&self) -> &'static str {
        "IW"
    }
}

/// Outcome of one agent episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub score: i64,
    pub status: Status,
    pub ticks: u64,
    pub rewards: Vec<i64>,
}

/// Plays `agent` from `state` until the episode ends.
pub fn run_episode(agent: &mut dyn Agent, mut state: GameState) -> EpisodeRecord {
    let mut rewards = Vec::new();
    while !state.is_terminal() {
        let a = agent.act(&state);
        let r = state.advance(a).expect("agents return legal actions");
        rewards.push(r.reward);
    }
    EpisodeRecord { score: state.score(), status: state.status(), ticks: state.tick(), rewards }
}
