use std::collections::BTreeMap;
use std::sync::Arc;

use crate::vgdl::registry::color_rgb;
use crate::vgdl::{
    Direction, EffectClass, GameDescription, LevelGrid, ParamValue, Params, SpriteClass, TerminationKind,
    EOS,
};

use super::{Action, EngineError, GameState};

pub type TypeId = u16;

/// Default episode cap when a game declares no `Timeout`.
pub const DEFAULT_MAX_TICKS: u64 = 2000;

/// A sprite type with inherited parameters resolved.
#[derive(Debug, Clone)]
pub struct SpriteType {
    pub name: String,
    pub parent: Option<TypeId>,
    pub class: SpriteClass,
    pub color: [u8; 3],
    /// Ticks between steps: `max(1, round(1 / speed))`.
    pub move_period: u32,
    pub cooldown: u32,
    pub prob: f64,
    pub total: u32,
    pub stype: Option<TypeId>,
    pub orientation: Option<Direction>,
    pub singleton: bool,
    pub limit: u32,
    pub value: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct Rule {
    pub effect: EffectClass,
    pub score: i64,
    pub stype: Option<TypeId>,
    pub resource: Option<TypeId>,
    pub value: i64,
    pub limit: i64,
}

#[derive(Debug, Clone)]
pub(crate) struct Termination {
    pub kind: TerminationKind,
    /// Concrete types counted (descendants of the named types, with
    /// repetition when named types overlap).
    pub counted: Vec<TypeId>,
    pub limit: u64,
    pub win: bool,
    pub bonus: i64,
}

/// A game description compiled for simulation.
#[derive(Debug)]
pub struct Game {
    desc: GameDescription,
    types: Vec<SpriteType>,
    /// `is_a[t * n + a]`: type `t` is `a` or descends from it.
    is_a: Vec<bool>,
    /// Rule indices per (first, second) type; second index `n` is EOS.
    pair_rules: Vec<Vec<u16>>,
    pub(crate) rules: Vec<Rule>,
    pub(crate) terminations: Vec<Termination>,
    mapping: BTreeMap<char, Vec<TypeId>>,
}

pub const MOVE_ACTIONS: &[Action] = &[Action::Up, Action::Down, Action::Left, Action::Right, Action::Nil];
pub const SHOOT_ACTIONS: &[Action] =
    &[Action::Up, Action::Down, Action::Left, Action::Right, Action::Use, Action::Nil];
pub const FLAK_ACTIONS: &[Action] = &[Action::Left, Action::Right, Action::Use, Action::Nil];
pub const NO_ACTIONS: &[Action] = &[Action::Nil];

pub fn action_space_for(class: SpriteClass) -> &'static [Action] {
    match class {
        SpriteClass::MovingAvatar | SpriteClass::OrientedAvatar => MOVE_ACTIONS,
        SpriteClass::ShootAvatar => SHOOT_ACTIONS,
        SpriteClass::FlakAvatar => FLAK_ACTIONS,
        _ => NO_ACTIONS,
    }
}

fn default_color(class: SpriteClass) -> [u8; 3] {
    let name = match class {
        SpriteClass::Immovable => "GRAY",
        SpriteClass::Passive => "BROWN",
        SpriteClass::Resource => "GOLD",
        SpriteClass::Flicker => "ORANGE",
        SpriteClass::Spawnpoint => "DARKGRAY",
        SpriteClass::Portal => "PURPLE",
        SpriteClass::Missile => "RED",
        SpriteClass::RandomNpc => "PINK",
        SpriteClass::Chaser => "YELLOW",
        SpriteClass::Fleeing => "CYAN",
        SpriteClass::Bomber => "LIGHTGRAY",
        _ => "WHITE",
    };
    color_rgb(name).unwrap()
}

fn referenced_ids(desc: &GameDescription) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for r in &desc.interactions {
        out.push(&r.first);
        out.push(&r.second);
        out.extend(r.params.values().filter_map(ParamValue::as_sprite));
    }
    for t in &desc.terminations {
        out.extend(t.stypes.iter().map(String::as_str));
    }
    for ids in desc.level_mapping.values() {
        out.extend(ids.iter().map(String::as_str));
    }
    for (d, _) in desc.flatten() {
        out.extend(d.params.values().filter_map(ParamValue::as_sprite));
    }
    out
}

impl Game {
    pub fn compile(desc: GameDescription) -> Arc<Game> {
        let flat = desc.flatten();
        let mut names: Vec<String> = flat.iter().map(|(d, _)| d.id.clone()).collect();
        let mut parents: Vec<Option<TypeId>> = flat
            .iter()
            .map(|(_, p)| p.map(|p| names.iter().position(|n| n == p).unwrap() as TypeId))
            .collect();
        let mut own: Vec<(Option<SpriteClass>, Params)> =
            flat.iter().map(|(d, _)| (d.class, d.params.clone())).collect();
        // Reserved ids used without a declaration get their implicit class.
        let refs = referenced_ids(&desc);
        for (implicit, class) in [("avatar", SpriteClass::MovingAvatar), ("wall", SpriteClass::Immovable)] {
            if !names.iter().any(|n| n == implicit) && refs.contains(&implicit) {
                names.push(implicit.to_string());
                parents.push(None);
                own.push((Some(class), Params::new()));
            }
        }
        let n = names.len();
        let id_of = |name: &str| names.iter().position(|n| n == name).map(|i| i as TypeId);

        let mut types = Vec::with_capacity(n);
        for t in 0..n {
            // merge parameters root-first so children override
            let mut chain = vec![t];
            while let Some(p) = parents[*chain.last().unwrap()] {
                chain.push(p as usize);
            }
            let mut class = None;
            let mut params = Params::new();
            for &c in chain.iter().rev() {
                if own[c].0.is_some() {
                    class = own[c].0;
                }
                params.extend(own[c].1.iter().map(|(k, v)| (k.clone(), v.clone())));
            }
            let class = class.unwrap_or(SpriteClass::Immovable);
            let f = |k: &str| params.get(k).and_then(ParamValue::as_float);
            let i = |k: &str| params.get(k).and_then(ParamValue::as_int);
            let speed = f("speed").unwrap_or(1.0);
            let default_limit = match class {
                SpriteClass::Resource => 100,
                _ => 1,
            };
            types.push(SpriteType {
                name: names[t].clone(),
                parent: parents[t],
                class,
                color: params
                    .get("color")
                    .and_then(ParamValue::as_text)
                    .and_then(color_rgb)
                    .unwrap_or_else(|| default_color(class)),
                move_period: ((1.0 / speed).round() as u32).max(1),
                cooldown: i("cooldown").unwrap_or(0) as u32,
                prob: f("prob").unwrap_or(1.0),
                total: i("total").unwrap_or(0) as u32,
                stype: params.get("stype").and_then(ParamValue::as_sprite).and_then(id_of),
                orientation: params.get("orientation").and_then(ParamValue::as_dir),
                singleton: params.get("singleton").and_then(ParamValue::as_bool).unwrap_or(false),
                limit: i("limit").unwrap_or(default_limit) as u32,
                value: i("value").unwrap_or(1) as u32,
            });
        }

        let mut is_a = vec![false; n * n];
        for t in 0..n {
            let mut cur = Some(t as TypeId);
            while let Some(a) = cur {
                is_a[t * n + a as usize] = true;
                cur = parents[a as usize];
            }
        }

        let mut rules = Vec::new();
        let mut pair_rules = vec![Vec::new(); n * (n + 1)];
        for (ri, r) in desc.interactions.iter().enumerate() {
            let first = id_of(&r.first).expect("validated reference") as usize;
            let second = if r.second == EOS { None } else { Some(id_of(&r.second).expect("validated") as usize) };
            rules.push(Rule {
                effect: r.effect,
                score: r.score_change(),
                stype: r.sprite_param("stype").and_then(id_of),
                resource: r.sprite_param("resource").and_then(id_of),
                value: r.int_param("value").unwrap_or(0),
                limit: r.int_param("limit").unwrap_or(0),
            });
            for a in 0..n {
                if !is_a[a * n + first] {
                    continue;
                }
                match second {
                    None => pair_rules[a * (n + 1) + n].push(ri as u16),
                    Some(s) => {
                        for b in 0..n {
                            if is_a[b * n + s] {
                                pair_rules[a * (n + 1) + b].push(ri as u16);
                            }
                        }
                    }
                }
            }
        }

        let is_a_ref = &is_a;
        let descendants = |target: usize| (0..n).filter(move |&t| is_a_ref[t * n + target]).map(|t| t as TypeId);
        let mut terminations: Vec<Termination> = desc
            .terminations
            .iter()
            .map(|t| Termination {
                kind: t.kind,
                counted: t
                    .stypes
                    .iter()
                    .flat_map(|s| descendants(id_of(s).expect("validated") as usize))
                    .collect(),
                limit: t.limit,
                win: t.win,
                bonus: t.bonus,
            })
            .collect();
        if !terminations.iter().any(|t| t.kind == TerminationKind::Timeout) {
            terminations.push(Termination {
                kind: TerminationKind::Timeout,
                counted: Vec::new(),
                limit: DEFAULT_MAX_TICKS,
                win: false,
                bonus: 0,
            });
        }

        let mapping = desc
            .level_mapping
            .iter()
            .map(|(c, ids)| (*c, ids.iter().filter_map(|s| id_of(s)).collect()))
            .collect();

        Arc::new(Game { desc, types, is_a, pair_rules, rules, terminations, mapping })
    }

    pub fn description(&self) -> &GameDescription {
        &self.desc
    }

    pub fn name(&self) -> &str {
        &self.desc.name
    }

    pub fn types(&self) -> &[SpriteType] {
        &self.types
    }

    pub fn sprite_type(&self, t: TypeId) -> &SpriteType {
        &self.types[t as usize]
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.types.iter().position(|t| t.name == name).map(|i| i as TypeId)
    }

    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    #[inline]
    pub fn is_a(&self, t: TypeId, ancestor: TypeId) -> bool {
        self.is_a[t as usize * self.types.len() + ancestor as usize]
    }

    #[inline]
    pub(crate) fn rules_for(&self, first: TypeId, second: Option<TypeId>) -> &[u16] {
        let n = self.types.len();
        let s = second.map_or(n, |s| s as usize);
        &self.pair_rules[first as usize * (n + 1) + s]
    }

    /// Action space of the game's avatar class (first avatar type declared).
    pub fn action_space(&self) -> &'static [Action] {
        self.types
            .iter()
            .find(|t| t.class.is_avatar())
            .map_or(NO_ACTIONS, |t| action_space_for(t.class))
    }

    pub fn mapping(&self, ch: char) -> Option<&[TypeId]> {
        self.mapping.get(&ch).map(Vec::as_slice)
    }

    /// Largest tick count after which the game is guaranteed to have ended.
    pub fn max_ticks(&self) -> u64 {
        self.terminations
            .iter()
            .filter(|t| t.kind == TerminationKind::Timeout)
            .map(|t| t.limit)
            .min()
            .unwrap_or(DEFAULT_MAX_TICKS)
    }

    /// Fresh episode on `level`.
    pub fn init_state(self: &Arc<Self>, level: &LevelGrid, seed: u64) -> Result<GameState, EngineError> {
        GameState::new(Arc::clone(self), level, seed)
    }
}

/// Compile `desc` and initialize an episode.
pub fn init_state(desc: &GameDescription, level: &LevelGrid, seed: u64) -> Result<GameState, EngineError> {
    Game::compile(desc.clone()).init_state(level, seed)
}
