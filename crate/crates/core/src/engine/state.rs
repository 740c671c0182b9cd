use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::vgdl::{Direction, EffectClass, LevelGrid, SpriteClass, TerminationKind};

use super::game::{Game, TypeId, NO_ACTIONS};
use super::{Action, EngineError, Event, Status, StepResult};

/// One live sprite instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sprite {
    /// Creation-order identifier, unique within an episode.
    pub id: u32,
    pub ty: TypeId,
    pub x: u16,
    pub y: u16,
    pub orientation: Direction,
    pub(crate) move_timer: u16,
    pub(crate) spawn_timer: u16,
    pub(crate) age: u32,
    pub(crate) spawned: u32,
    /// Held resources, sorted by resource type.
    pub resources: Vec<(TypeId, i32)>,
    // Per-tick bookkeeping; reset at the start of every tick.
    pub(crate) prev: (u16, u16),
    pub(crate) alive: bool,
}

impl Sprite {
    pub fn cell(&self) -> (usize, usize) {
        (self.x as usize, self.y as usize)
    }

    pub fn resource(&self, ty: TypeId) -> i32 {
        self.resources.iter().find(|(t, _)| *t == ty).map_or(0, |(_, v)| *v)
    }

    fn set_resource(&mut self, ty: TypeId, amount: i32) {
        match self.resources.binary_search_by_key(&ty, |(t, _)| *t) {
            Ok(i) if amount == 0 => {
                self.resources.remove(i);
            }
            Ok(i) => self.resources[i].1 = amount,
            Err(_) if amount == 0 => {}
            Err(i) => self.resources.insert(i, (ty, amount)),
        }
    }
}

/// Complete simulation state of one episode.
///
/// Cloning yields an independent forward model: the clone carries a copy of
/// the random stream, so advancing source and clone with the same actions
/// produces identical trajectories.
#[derive(Debug, Clone)]
pub struct GameState {
    pub(crate) game: Arc<Game>,
    pub(crate) width: u16,
    pub(crate) height: u16,
    pub(crate) tick: u32,
    pub(crate) score: i64,
    pub(crate) status: Status,
    pub(crate) next_id: u32,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) actions: &'static [Action],
    /// Live sprites in creation order.
    pub(crate) sprites: Vec<Sprite>,
    /// Live instance count per concrete type.
    pub(crate) counts: Vec<u32>,
    /// Cell index in CSR form: sprites of cell `c` are
    /// `cell_items[cell_start[c]..cell_start[c + 1]]`, in creation order.
    pub(crate) cell_start: Vec<u32>,
    pub(crate) cell_items: Vec<u32>,
}

struct Pending {
    rule: u16,
    first: usize,
    /// `None` for the level boundary.
    second: Option<usize>,
    /// Attempted move that left the grid (boundary collisions only).
    dir: Option<Direction>,
}

impl GameState {
    pub(crate) fn new(game: Arc<Game>, level: &LevelGrid, seed: u64) -> Result<GameState, EngineError> {
        let mut state = GameState::empty(game, level.width as u16, level.height as u16, ChaCha8Rng::seed_from_u64(seed));
        for (i, ids) in level.cells.iter().enumerate() {
            let (x, y) = ((i % level.width) as u16, (i / level.width) as u16);
            for id in ids {
                let ty = state
                    .game
                    .type_id(id)
                    .ok_or_else(|| EngineError::IncompatibleLevel { id: id.clone() })?;
                state.spawn(ty, x, y, None, true);
            }
        }
        state.actions = state.game.action_space();
        state.rebuild_index();
        Ok(state)
    }

    pub(crate) fn empty(game: Arc<Game>, width: u16, height: u16, rng: ChaCha8Rng) -> GameState {
        let n = game.type_count();
        GameState {
            game,
            width,
            height,
            tick: 0,
            score: 0,
            status: Status::Running,
            next_id: 0,
            rng,
            actions: NO_ACTIONS,
            sprites: Vec::new(),
            counts: vec![0; n],
            cell_start: vec![0; width as usize * height as usize + 1],
            cell_items: Vec::new(),
        }
    }

    pub fn game(&self) -> &Arc<Game> {
        &self.game
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn height(&self) -> usize {
        self.height as usize
    }

    pub fn tick(&self) -> u64 {
        self.tick as u64
    }

    pub fn score(&self) -> i64 {
        self.score
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn is_terminal(&self) -> bool {
        self.status != Status::Running
    }

    pub fn action_space(&self) -> &'static [Action] {
        self.actions
    }

    pub fn sprites(&self) -> &[Sprite] {
        &self.sprites
    }

    pub fn avatar(&self) -> Option<&Sprite> {
        self.sprites.iter().find(|s| s.alive && self.game.sprite_type(s.ty).class.is_avatar())
    }

    /// Live sprites at a cell, in creation order.
    pub fn sprites_at(&self, x: usize, y: usize) -> impl Iterator<Item = &Sprite> + '_ {
        let c = y * self.width as usize + x;
        let range = self.cell_start[c] as usize..self.cell_start[c + 1] as usize;
        self.cell_items[range].iter().map(move |&i| &self.sprites[i as usize])
    }

    /// Live instances of `ty` and its descendants.
    pub fn count_of(&self, ty: TypeId) -> u32 {
        (0..self.counts.len())
            .filter(|&t| self.game.is_a(t as TypeId, ty))
            .map(|t| self.counts[t])
            .sum()
    }

    /// Marks the episode as aborted. Has no effect once the game has ended.
    pub fn abort(&mut self) {
        if self.status == Status::Running {
            self.status = Status::Aborted;
        }
    }

    /// True when the stored cell index equals one rebuilt from the sprites.
    pub fn index_consistent(&self) -> bool {
        let mut fresh = self.clone();
        fresh.rebuild_index();
        fresh.cell_start == self.cell_start && fresh.cell_items == self.cell_items
    }

    pub(crate) fn rebuild_index(&mut self) {
        let cells = self.width as usize * self.height as usize;
        let w = self.width as usize;
        self.cell_start.clear();
        self.cell_start.resize(cells + 1, 0);
        for s in &self.sprites {
            if s.alive {
                self.cell_start[s.y as usize * w + s.x as usize] += 1;
            }
        }
        // inclusive prefix sums give each cell's end; filling backwards
        // walks every entry down to its cell's start
        let mut total = 0;
        for c in &mut self.cell_start[..cells] {
            total += *c;
            *c = total;
        }
        self.cell_start[cells] = total;
        self.cell_items.clear();
        self.cell_items.resize(total as usize, 0);
        for (i, s) in self.sprites.iter().enumerate().rev() {
            if s.alive {
                let c = s.y as usize * w + s.x as usize;
                self.cell_start[c] -= 1;
                self.cell_items[self.cell_start[c] as usize] = i as u32;
            }
        }
    }

    fn spawn(&mut self, ty: TypeId, x: u16, y: u16, orientation: Option<Direction>, force: bool) -> Option<usize> {
        let st = self.game.sprite_type(ty);
        if !force && st.singleton && self.counts[ty as usize] > 0 {
            return None;
        }
        let default_dir = if st.class.is_avatar() { Direction::Up } else { Direction::Right };
        let orientation = orientation.or(st.orientation).unwrap_or(default_dir);
        self.sprites.push(Sprite {
            id: self.next_id,
            ty,
            x,
            y,
            orientation,
            move_timer: 0,
            spawn_timer: 0,
            age: 0,
            spawned: 0,
            resources: Vec::new(),
            prev: (x, y),
            alive: true,
        });
        self.next_id += 1;
        self.counts[ty as usize] += 1;
        Some(self.sprites.len() - 1)
    }

    fn kill(&mut self, i: usize) {
        if self.sprites[i].alive {
            self.sprites[i].alive = false;
            self.counts[self.sprites[i].ty as usize] -= 1;
        }
    }

    fn step_target(&self, i: usize, dir: Direction) -> Option<(u16, u16)> {
        let s = &self.sprites[i];
        let (dx, dy) = dir.delta();
        let nx = s.x as i32 + dx;
        let ny = s.y as i32 + dy;
        (nx >= 0 && ny >= 0 && nx < self.width as i32 && ny < self.height as i32).then_some((nx as u16, ny as u16))
    }

    /// Moves sprite `i` one cell; a move off the grid leaves it in place and
    /// records a boundary collision.
    fn try_move(&mut self, i: usize, dir: Direction, eos: &mut Vec<(usize, Direction)>) {
        match self.step_target(i, dir) {
            Some((x, y)) => {
                self.sprites[i].x = x;
                self.sprites[i].y = y;
            }
            None => eos.push((i, dir)),
        }
    }

    /// Advances the simulation by one tick.
    pub fn advance(&mut self, action: Action) -> Result<StepResult, EngineError> {
        if self.status != Status::Running {
            return Err(EngineError::GameOver { status: self.status });
        }
        if !self.actions.contains(&action) {
            return Err(EngineError::IllegalAction { action, legal: self.actions.to_vec() });
        }
        let score_before = self.score;
        let mut events = Vec::new();
        let mut eos: Vec<(usize, Direction)> = Vec::new();

        for s in &mut self.sprites {
            s.prev = (s.x, s.y);
        }
        let existing = self.sprites.len();

        // 1. avatar
        if let Some(a) = self.sprites.iter().position(|s| self.game.sprite_type(s.ty).class.is_avatar()) {
            self.apply_action(a, action, &mut eos);
        }

        // 2. non-avatar sprites in creation order
        for i in 0..existing {
            if self.sprites[i].alive {
                self.update_npc(i, &mut eos);
            }
        }
        // spawners after everything else has moved
        for i in 0..existing {
            if self.sprites[i].alive {
                self.update_spawner(i);
            }
        }

        // 3-4. collisions and interactions
        self.rebuild_index();
        let fired = self.resolve_collisions(&eos, &mut events);
        let live = self.counts.iter().map(|&c| c as usize).sum::<usize>();
        if live != self.sprites.len() {
            self.sprites.retain(|s| s.alive);
            self.rebuild_index();
        } else if fired {
            self.rebuild_index();
        }

        // 5-6. termination is evaluated against the tick count after this step
        self.tick += 1;
        let bonus = self.check_termination_inner();

        Ok(StepResult { reward: self.score - score_before, bonus, events, status: self.status })
    }

    fn apply_action(&mut self, a: usize, action: Action, eos: &mut Vec<(usize, Direction)>) {
        let st = self.game.sprite_type(self.sprites[a].ty);
        let (class, stype, cooldown) = (st.class, st.stype, st.cooldown);
        // shooters count ticks since their last shot
        if stype.is_some() {
            let s = &mut self.sprites[a];
            s.spawn_timer = s.spawn_timer.saturating_add(1);
        }
        if let Some(dir) = action.direction() {
            self.sprites[a].orientation = dir;
            self.try_move(a, dir, eos);
            return;
        }
        let Some(stype) = stype.filter(|_| action == Action::Use) else {
            return;
        };
        let s = &self.sprites[a];
        if (s.spawn_timer as u32) <= cooldown {
            return;
        }
        let facing = s.orientation;
        let target = match class {
            SpriteClass::FlakAvatar => Some((s.x, s.y)),
            SpriteClass::ShootAvatar => self.step_target(a, facing),
            _ => None,
        };
        if let Some((x, y)) = target {
            let dir = if class == SpriteClass::FlakAvatar { None } else { Some(facing) };
            if self.spawn(stype, x, y, dir, false).is_some() {
                self.sprites[a].spawn_timer = 0;
            }
        }
    }

    fn movement_due(&mut self, i: usize) -> bool {
        let period = self.game.sprite_type(self.sprites[i].ty).move_period;
        let s = &mut self.sprites[i];
        s.move_timer += 1;
        if s.move_timer as u32 >= period {
            s.move_timer = 0;
            true
        } else {
            false
        }
    }

    fn update_npc(&mut self, i: usize, eos: &mut Vec<(usize, Direction)>) {
        let st = self.game.sprite_type(self.sprites[i].ty);
        match st.class {
            SpriteClass::Flicker => {
                let limit = st.limit;
                self.sprites[i].age += 1;
                if self.sprites[i].age >= limit {
                    self.kill(i);
                }
            }
            SpriteClass::Missile | SpriteClass::Bomber => {
                if self.movement_due(i) {
                    let dir = self.sprites[i].orientation;
                    self.try_move(i, dir, eos);
                }
            }
            SpriteClass::RandomNpc => {
                if self.movement_due(i) {
                    let dir = Direction::ALL[self.rng.random_range(0..4)];
                    self.sprites[i].orientation = dir;
                    self.try_move(i, dir, eos);
                }
            }
            SpriteClass::Chaser | SpriteClass::Fleeing => {
                let flee = st.class == SpriteClass::Fleeing;
                let target = st.stype;
                if self.movement_due(i) {
                    if let Some(dir) = target.and_then(|t| self.pursuit_direction(i, t, flee)) {
                        self.sprites[i].orientation = dir;
                        self.try_move(i, dir, eos);
                    }
                }
            }
            _ => {}
        }
    }

    /// Direction for a chaser (or fleeing sprite) relative to the nearest
    /// instance of `target`; ties between equally good moves draw from the
    /// state's random stream.
    fn pursuit_direction(&mut self, i: usize, target: TypeId, flee: bool) -> Option<Direction> {
        let me = &self.sprites[i];
        let (mx, my) = (me.x as i32, me.y as i32);
        let mut nearest: Option<(i32, i32, i32)> = None;
        for (j, s) in self.sprites.iter().enumerate() {
            if j == i || !s.alive || !self.game.is_a(s.ty, target) {
                continue;
            }
            let d = (s.x as i32 - mx).abs() + (s.y as i32 - my).abs();
            if nearest.is_none_or(|(best, _, _)| d < best) {
                nearest = Some((d, s.x as i32, s.y as i32));
            }
        }
        let (dist, tx, ty) = nearest?;
        if dist == 0 && !flee {
            return None;
        }
        let mut best: Option<i32> = None;
        let mut options = [Direction::Up; 4];
        let mut n = 0;
        for dir in Direction::ALL {
            let Some((nx, ny)) = self.step_target(i, dir) else { continue };
            let d = (tx - nx as i32).abs() + (ty - ny as i32).abs();
            let score = if flee { -d } else { d };
            match best {
                Some(b) if score > b => continue,
                Some(b) if score == b => {}
                _ => {
                    best = Some(score);
                    n = 0;
                }
            }
            options[n] = dir;
            n += 1;
        }
        match n {
            0 => None,
            1 => Some(options[0]),
            _ => Some(options[self.rng.random_range(0..n)]),
        }
    }

    fn update_spawner(&mut self, i: usize) {
        let st = self.game.sprite_type(self.sprites[i].ty);
        if !matches!(st.class, SpriteClass::Spawnpoint | SpriteClass::Bomber) {
            return;
        }
        let Some(stype) = st.stype else { return };
        let (cooldown, prob, total, class) = (st.cooldown, st.prob, st.total, st.class);
        let s = &mut self.sprites[i];
        s.spawn_timer = s.spawn_timer.saturating_add(1);
        if (s.spawn_timer as u32) < cooldown {
            return;
        }
        if prob < 1.0 && self.rng.random::<f64>() >= prob {
            return;
        }
        let (x, y) = (self.sprites[i].x, self.sprites[i].y);
        if self.spawn(stype, x, y, None, false).is_some() {
            let s = &mut self.sprites[i];
            s.spawn_timer = 0;
            s.spawned += 1;
            if class == SpriteClass::Spawnpoint && total > 0 && s.spawned >= total {
                self.kill(i);
            }
        }
    }

    fn resolve_collisions(&mut self, eos: &[(usize, Direction)], events: &mut Vec<Event>) -> bool {
        let mut queue: Vec<Pending> = Vec::new();
        for &(i, dir) in eos {
            for &rule in self.game.rules_for(self.sprites[i].ty, None) {
                queue.push(Pending { rule, first: i, second: None, dir: Some(dir) });
            }
        }
        let mut fired = self.apply_queue(&mut queue, events);
        if fired {
            // boundary effects may have moved sprites to other cells
            self.rebuild_index();
        }

        let width = self.width as usize;
        let cells = width * self.height as usize;
        let mut members: Vec<usize> = Vec::new();
        for c in 0..cells {
            let (lo, hi) = (self.cell_start[c] as usize, self.cell_start[c + 1] as usize);
            if hi - lo < 2 {
                continue;
            }
            let (cx, cy) = ((c % width) as u16, (c / width) as u16);
            members.clear();
            members.extend(self.cell_items[lo..hi].iter().map(|&i| i as usize).filter(|&i| {
                let s = &self.sprites[i];
                s.alive && s.x == cx && s.y == cy
            }));
            for &a in &members {
                for &b in &members {
                    if a == b {
                        continue;
                    }
                    for &rule in self.game.rules_for(self.sprites[a].ty, Some(self.sprites[b].ty)) {
                        queue.push(Pending { rule, first: a, second: Some(b), dir: None });
                    }
                }
            }
            fired |= self.apply_queue(&mut queue, events);
        }
        fired
    }

    /// Applies queued effects in rule declaration order (stable within a rule).
    fn apply_queue(&mut self, queue: &mut Vec<Pending>, events: &mut Vec<Event>) -> bool {
        if queue.is_empty() {
            return false;
        }
        let mut fired = false;
        queue.sort_by_key(|p| p.rule);
        for p in queue.drain(..) {
            if !self.sprites[p.first].alive {
                continue;
            }
            let (first_ty, cell) = {
                let s = &self.sprites[p.first];
                (s.ty, (s.x, s.y))
            };
            let second_ty = p.second.map(|b| self.sprites[b].ty);
            if self.apply_effect(&p) {
                fired = true;
                let rule = &self.game.rules[p.rule as usize];
                self.score += rule.score;
                events.push(Event { effect: rule.effect, first: first_ty, second: second_ty, cell });
            }
        }
        fired
    }

    /// Executes one effect. Returns false when a conditional effect did not
    /// fire (no score is awarded then).
    fn apply_effect(&mut self, p: &Pending) -> bool {
        let game = Arc::clone(&self.game);
        let rule = &game.rules[p.rule as usize];
        let a = p.first;
        let (w, h) = (self.width as i32, self.height as i32);
        match rule.effect {
            EffectClass::KillSprite => self.kill(a),
            EffectClass::KillBoth => {
                self.kill(a);
                if let Some(b) = p.second {
                    self.kill(b);
                }
            }
            EffectClass::KillIfFromAbove => {
                let Some(b) = p.second else { return false };
                let (sa, sb) = (&self.sprites[a], &self.sprites[b]);
                let fell_in = sb.alive
                    && (sb.x, sb.y) == (sa.x, sa.y)
                    && sb.prev.0 == sa.x
                    && sb.prev.1 as i32 + 1 == sa.y as i32;
                if !fell_in {
                    return false;
                }
                self.kill(a);
            }
            EffectClass::KillIfOtherHasMore => {
                let (Some(b), Some(res)) = (p.second, rule.resource) else { return false };
                if (self.sprites[b].resource(res) as i64) < rule.limit {
                    return false;
                }
                self.kill(a);
            }
            EffectClass::KillIfHasMore => {
                let Some(res) = rule.resource else { return false };
                if (self.sprites[a].resource(res) as i64) < rule.limit {
                    return false;
                }
                self.kill(a);
            }
            EffectClass::StepBack => {
                let s = &mut self.sprites[a];
                (s.x, s.y) = s.prev;
            }
            EffectClass::UndoAll => {
                for s in &mut self.sprites {
                    (s.x, s.y) = s.prev;
                }
            }
            EffectClass::TransformTo => {
                let Some(stype) = rule.stype else { return false };
                let (x, y, dir) = (self.sprites[a].x, self.sprites[a].y, self.sprites[a].orientation);
                let resources = std::mem::take(&mut self.sprites[a].resources);
                self.kill(a);
                if let Some(n) = self.spawn(stype, x, y, Some(dir), false) {
                    self.sprites[n].resources = resources;
                }
            }
            EffectClass::CollectResource => {
                let Some(b) = p.second else { return false };
                let res = self.sprites[a].ty;
                let st = game.sprite_type(res);
                let (value, limit) = if st.class == SpriteClass::Resource { (st.value, st.limit) } else { (1, 100) };
                let held = self.sprites[b].resource(res);
                if held >= limit as i32 {
                    return false;
                }
                self.sprites[b].set_resource(res, (held + value as i32).min(limit as i32));
                self.kill(a);
            }
            EffectClass::ChangeResource => {
                let Some(res) = rule.resource else { return false };
                let limit = game.sprite_type(res).limit as i64;
                let held = self.sprites[a].resource(res) as i64;
                self.sprites[a].set_resource(res, (held + rule.value).clamp(0, limit) as i32);
            }
            EffectClass::ReverseDirection => {
                let s = &mut self.sprites[a];
                s.orientation = s.orientation.opposite();
            }
            EffectClass::BounceForward | EffectClass::PullWithIt => {
                let Some(b) = p.second else { return false };
                let sb = &self.sprites[b];
                let (dx, dy) = (sb.x as i32 - sb.prev.0 as i32, sb.y as i32 - sb.prev.1 as i32);
                if (dx, dy) == (0, 0) {
                    return false;
                }
                let s = &self.sprites[a];
                let (nx, ny) = (s.x as i32 + dx, s.y as i32 + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    return false;
                }
                let s = &mut self.sprites[a];
                (s.x, s.y) = (nx as u16, ny as u16);
            }
            EffectClass::SpawnBehind => {
                let (Some(b), Some(stype)) = (p.second, rule.stype) else { return false };
                let (x, y) = self.sprites[b].prev;
                self.spawn(stype, x, y, None, false);
            }
            EffectClass::TeleportToExit => {
                let Some(b) = p.second else { return false };
                let Some(exit) = game.sprite_type(self.sprites[b].ty).stype else { return false };
                let exits: Vec<(u16, u16)> = self
                    .sprites
                    .iter()
                    .filter(|s| s.alive && game.is_a(s.ty, exit))
                    .map(|s| (s.x, s.y))
                    .collect();
                let pick = match exits.len() {
                    0 => return false,
                    1 => exits[0],
                    n => exits[self.rng.random_range(0..n)],
                };
                let s = &mut self.sprites[a];
                (s.x, s.y) = pick;
            }
            EffectClass::WrapAround => {
                let s = &self.sprites[a];
                let dir = p.dir.or_else(|| {
                    let (dx, dy) = (s.x as i32 - s.prev.0 as i32, s.y as i32 - s.prev.1 as i32);
                    Direction::ALL.into_iter().find(|d| d.delta() == (dx.signum(), dy.signum()))
                });
                let Some(dir) = dir else { return false };
                let (dx, dy) = dir.delta();
                let s = &mut self.sprites[a];
                s.x = (s.x as i32 + dx).rem_euclid(w) as u16;
                s.y = (s.y as i32 + dy).rem_euclid(h) as u16;
            }
        }
        true
    }

    /// Evaluates termination rules in order against the current state. The
    /// first rule that holds ends the game and adds its bonus to the score.
    pub fn check_termination(&mut self) -> Status {
        self.check_termination_inner();
        self.status
    }

    fn check_termination_inner(&mut self) -> i64 {
        if self.status != Status::Running {
            return 0;
        }
        let game = Arc::clone(&self.game);
        for t in &game.terminations {
            let count = || t.counted.iter().map(|&ty| self.counts[ty as usize] as u64).sum::<u64>();
            let fired = match t.kind {
                TerminationKind::SpriteCounter => count() <= t.limit,
                TerminationKind::MultiSpriteCounter => count() == t.limit,
                TerminationKind::Timeout => self.tick as u64 >= t.limit,
            };
            if fired {
                self.status = if t.win { Status::Win } else { Status::Lose };
                self.score += t.bonus;
                return t.bonus;
            }
        }
        0
    }
}
