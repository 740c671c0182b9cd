//! VGDL game descriptions and level files.
//!
//! A game file has a `BasicGame` header followed by four indented sections
//! (`SpriteSet`, `InteractionSet`, `TerminationSet`, `LevelMapping`) in any
//! order. The accepted grammar is documented in `docs/vgdl-subset.md`.

mod error;
mod level;
mod parser;
pub mod registry;
mod unparse;

use std::collections::BTreeMap;
use std::fmt;

pub use error::{LevelError, SourceLoc, VgdlError};
pub use level::{parse_level, LevelGrid};
pub use parser::parse_game;
pub use registry::{Direction, EffectClass, SpriteClass, TerminationKind};
pub use unparse::unparse;

/// Identifier usable in interactions for the level boundary.
pub const EOS: &str = "EOS";
/// Identifiers that may be referenced without being declared.
pub const RESERVED_IDS: [&str; 3] = ["avatar", "wall", EOS];

/// A typed parameter value.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Sprite(String),
    Dir(Direction),
    Color(String),
    Text(String),
}

impl ParamValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            ParamValue::Float(v) => Some(*v),
            ParamValue::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            ParamValue::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_sprite(&self) -> Option<&str> {
        match self {
            ParamValue::Sprite(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_dir(&self) -> Option<Direction> {
        match self {
            ParamValue::Dir(d) => Some(*d),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            ParamValue::Color(s) | ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => {
                if v.fract() == 0.0 && v.abs() < 1e15 {
                    write!(f, "{v:.1}")
                } else {
                    write!(f, "{v}")
                }
            }
            ParamValue::Bool(true) => f.write_str("True"),
            ParamValue::Bool(false) => f.write_str("False"),
            ParamValue::Dir(d) => f.write_str(d.as_str()),
            ParamValue::Sprite(s) | ParamValue::Color(s) | ParamValue::Text(s) => f.write_str(s),
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

/// One node of the sprite taxonomy. Children inherit the class and the
/// parameters of their parent and may override both.
#[derive(Debug, Clone, PartialEq)]
pub struct SpriteDef {
    pub id: String,
    pub class: Option<SpriteClass>,
    pub params: Params,
    pub children: Vec<SpriteDef>,
}

impl SpriteDef {
    pub fn new(id: impl Into<String>, class: Option<SpriteClass>) -> Self {
        SpriteDef { id: id.into(), class, params: Params::new(), children: Vec::new() }
    }

    pub fn with_param(mut self, key: &str, value: ParamValue) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_child(mut self, child: SpriteDef) -> Self {
        self.children.push(child);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionRule {
    pub first: String,
    pub second: String,
    pub effect: EffectClass,
    pub params: Params,
}

impl InteractionRule {
    pub fn score_change(&self) -> i64 {
        self.params.get("scoreChange").and_then(ParamValue::as_int).unwrap_or(0)
    }

    pub fn sprite_param(&self, key: &str) -> Option<&str> {
        self.params.get(key).and_then(ParamValue::as_sprite)
    }

    pub fn int_param(&self, key: &str) -> Option<i64> {
        self.params.get(key).and_then(ParamValue::as_int)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminationRule {
    pub kind: TerminationKind,
    /// Counted sprite types; empty for `Timeout`.
    pub stypes: Vec<String>,
    pub limit: u64,
    pub win: bool,
    pub bonus: i64,
}

/// A parsed, validated game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameDescription {
    pub name: String,
    pub sprites: Vec<SpriteDef>,
    pub interactions: Vec<InteractionRule>,
    pub terminations: Vec<TerminationRule>,
    pub level_mapping: BTreeMap<char, Vec<String>>,
}

impl GameDescription {
    /// Sprite definitions in taxonomy (pre-)order, paired with their parent id.
    pub fn flatten(&self) -> Vec<(&SpriteDef, Option<&str>)> {
        fn walk<'a>(defs: &'a [SpriteDef], parent: Option<&'a str>, out: &mut Vec<(&'a SpriteDef, Option<&'a str>)>) {
            for d in defs {
                out.push((d, parent));
                walk(&d.children, Some(&d.id), out);
            }
        }
        let mut out = Vec::new();
        walk(&self.sprites, None, &mut out);
        out
    }

    pub fn sprite(&self, id: &str) -> Option<&SpriteDef> {
        self.flatten().into_iter().map(|(d, _)| d).find(|d| d.id == id)
    }

    /// Class of `id` after inheritance, falling back to the implicit classes
    /// of the reserved `avatar` and `wall` identifiers.
    pub fn effective_class(&self, id: &str) -> Option<SpriteClass> {
        let flat = self.flatten();
        let mut cur = Some(id);
        while let Some(name) = cur {
            match flat.iter().find(|(d, _)| d.id == name) {
                Some((d, parent)) => {
                    if let Some(c) = d.class {
                        return Some(c);
                    }
                    cur = *parent;
                }
                None => break,
            }
        }
        match id {
            "avatar" => Some(SpriteClass::MovingAvatar),
            "wall" => Some(SpriteClass::Immovable),
            _ if flat.iter().any(|(d, _)| d.id == id) => Some(SpriteClass::Immovable),
            _ => None,
        }
    }

    /// Number of sprite definitions in the taxonomy.
    pub fn sprite_count(&self) -> usize {
        self.flatten().len()
    }
}
