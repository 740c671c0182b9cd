//! Closed registries of sprite classes, interaction effects and termination
//! kinds, together with the parameter schema each of them accepts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Grid direction. Row 0 is the top of the level, so `Up` decrements `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (0, -1),
            Direction::Down => (0, 1),
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "UP",
            Direction::Down => "DOWN",
            Direction::Left => "LEFT",
            Direction::Right => "RIGHT",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Direction::Up => 0,
            Direction::Down => 1,
            Direction::Left => 2,
            Direction::Right => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Direction> {
        Direction::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "UP" => Ok(Direction::Up),
            "DOWN" => Ok(Direction::Down),
            "LEFT" => Ok(Direction::Left),
            "RIGHT" => Ok(Direction::Right),
            _ => Err(()),
        }
    }
}

/// Named colors accepted by the `color` parameter, with their RGB values.
pub const PALETTE: &[(&str, [u8; 3])] = &[
    ("BLACK", [0, 0, 0]),
    ("WHITE", [255, 255, 255]),
    ("RED", [220, 40, 40]),
    ("GREEN", [40, 190, 60]),
    ("BLUE", [50, 90, 230]),
    ("YELLOW", [240, 220, 40]),
    ("ORANGE", [250, 140, 20]),
    ("BROWN", [130, 80, 30]),
    ("GRAY", [128, 128, 128]),
    ("DARKGRAY", [64, 64, 64]),
    ("LIGHTGRAY", [190, 190, 190]),
    ("PINK", [250, 150, 200]),
    ("PURPLE", [140, 50, 170]),
    ("GOLD", [212, 175, 55]),
    ("CYAN", [40, 210, 220]),
    ("DARKBLUE", [20, 30, 120]),
    ("LIGHTBLUE", [140, 190, 250]),
    ("LIGHTGREEN", [150, 230, 140]),
    ("DARKGREEN", [20, 100, 30]),
];

pub fn color_rgb(name: &str) -> Option<[u8; 3]> {
    PALETTE.iter().find(|(n, _)| *n == name).map(|(_, rgb)| *rgb)
}

/// Value type expected by a parameter key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    /// Signed integer.
    Int,
    /// Integer `>= 0`.
    Count,
    /// Float `> 0`.
    Rate,
    /// Float in `[0, 1]`.
    Prob,
    Bool,
    SpriteRef,
    Dir,
    Color,
    Text,
}

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn from_name(name: &str) -> Option<$name> {
                match name {
                    $($text => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

named_enum!(
    /// Sprite behaviors supported by the engine.
    SpriteClass {
        Immovable => "Immovable",
        Passive => "Passive",
        Resource => "Resource",
        Flicker => "Flicker",
        Spawnpoint => "SpawnPoint",
        Portal => "Portal",
        Missile => "Missile",
        RandomNpc => "RandomNPC",
        Chaser => "Chaser",
        Fleeing => "Fleeing",
        Bomber => "Bomber",
        MovingAvatar => "MovingAvatar",
        OrientedAvatar => "OrientedAvatar",
        ShootAvatar => "ShootAvatar",
        FlakAvatar => "FlakAvatar",
    }
);

named_enum!(
    /// Interaction effects applied to colliding sprite pairs.
    EffectClass {
        KillSprite => "killSprite",
        KillBoth => "killBoth",
        KillIfFromAbove => "killIfFromAbove",
        KillIfOtherHasMore => "killIfOtherHasMore",
        KillIfHasMore => "killIfHasMore",
        StepBack => "stepBack",
        UndoAll => "undoAll",
        TransformTo => "transformTo",
        CollectResource => "collectResource",
        ChangeResource => "changeResource",
        ReverseDirection => "reverseDirection",
        BounceForward => "bounceForward",
        PullWithIt => "pullWithIt",
        SpawnBehind => "spawnBehind",
        TeleportToExit => "teleportToExit",
        WrapAround => "wrapAround",
    }
);

named_enum!(
    /// Termination condition kinds.
    TerminationKind {
        SpriteCounter => "SpriteCounter",
        MultiSpriteCounter => "MultiSpriteCounter",
        Timeout => "Timeout",
    }
);

const COMMON_SPRITE_PARAMS: &[(&str, ParamType)] = &[
    ("img", ParamType::Text),
    ("color", ParamType::Color),
    ("singleton", ParamType::Bool),
    ("speed", ParamType::Rate),
    ("orientation", ParamType::Dir),
];

impl SpriteClass {
    pub fn is_avatar(self) -> bool {
        matches!(
            self,
            SpriteClass::MovingAvatar
                | SpriteClass::OrientedAvatar
                | SpriteClass::ShootAvatar
                | SpriteClass::FlakAvatar
        )
    }

    /// Class-specific parameters (in addition to the common ones).
    fn extra_params(self) -> &'static [(&'static str, ParamType)] {
        use ParamType::*;
        match self {
            SpriteClass::Immovable
            | SpriteClass::Passive
            | SpriteClass::Missile
            | SpriteClass::RandomNpc
            | SpriteClass::MovingAvatar
            | SpriteClass::OrientedAvatar => &[],
            SpriteClass::Resource => &[("value", Count), ("limit", Count)],
            SpriteClass::Flicker => &[("limit", Count)],
            SpriteClass::Spawnpoint => &[
                ("stype", SpriteRef),
                ("prob", Prob),
                ("cooldown", Count),
                ("total", Count),
            ],
            SpriteClass::Portal => &[("stype", SpriteRef)],
            SpriteClass::Chaser | SpriteClass::Fleeing => &[("stype", SpriteRef)],
            SpriteClass::Bomber => &[("stype", SpriteRef), ("prob", Prob), ("cooldown", Count)],
            SpriteClass::ShootAvatar | SpriteClass::FlakAvatar => {
                &[("stype", SpriteRef), ("cooldown", Count)]
            }
        }
    }

    /// Parameters a concrete (leaf) sprite of this class must end up with.
    pub fn required_params(self) -> &'static [&'static str] {
        match self {
            SpriteClass::Spawnpoint
            | SpriteClass::Chaser
            | SpriteClass::Fleeing
            | SpriteClass::Bomber
            | SpriteClass::ShootAvatar
            | SpriteClass::FlakAvatar => &["stype"],
            _ => &[],
        }
    }

    pub fn param_type(self, key: &str) -> Option<ParamType> {
        COMMON_SPRITE_PARAMS
            .iter()
            .chain(self.extra_params())
            .find(|(k, _)| *k == key)
            .map(|(_, t)| *t)
    }
}

/// Type of a sprite parameter key when the owning sprite has no class of its
/// own (an abstract grouping node): any key accepted by some class.
pub fn any_sprite_param_type(key: &str) -> Option<ParamType> {
    SpriteClass::ALL.iter().find_map(|c| c.param_type(key))
}

impl EffectClass {
    pub fn param_type(self, key: &str) -> Option<ParamType> {
        use ParamType::*;
        if key == "scoreChange" {
            return Some(Int);
        }
        let extra: &[(&str, ParamType)] = match self {
            EffectClass::TransformTo | EffectClass::SpawnBehind => &[("stype", SpriteRef)],
            EffectClass::KillIfOtherHasMore | EffectClass::KillIfHasMore => {
                &[("resource", SpriteRef), ("limit", Count)]
            }
            EffectClass::ChangeResource => &[("resource", SpriteRef), ("value", Int)],
            _ => &[],
        };
        extra.iter().find(|(k, _)| *k == key).map(|(_, t)| *t)
    }

    pub fn required_params(self) -> &'static [&'static str] {
        match self {
            EffectClass::TransformTo | EffectClass::SpawnBehind => &["stype"],
            EffectClass::KillIfOtherHasMore | EffectClass::KillIfHasMore => &["resource", "limit"],
            EffectClass::ChangeResource => &["resource", "value"],
            _ => &[],
        }
    }
}

impl TerminationKind {
    pub fn param_type(self, key: &str) -> Option<ParamType> {
        use ParamType::*;
        match key {
            "limit" => Some(Count),
            "win" => Some(Bool),
            "bonus" => Some(Int),
            "stype" if self == TerminationKind::SpriteCounter => Some(SpriteRef),
            k if self == TerminationKind::MultiSpriteCounter
                && k.strip_prefix("stype").is_some_and(|n| n.parse::<u32>().is_ok_and(|n| n >= 1)) =>
            {
                Some(SpriteRef)
            }
            _ => None,
        }
    }
}

/// Default values that canonical text leaves out.
pub(crate) fn sprite_param_default(key: &str) -> Option<super::ParamValue> {
    use super::ParamValue;
    match key {
        "speed" => Some(ParamValue::Float(1.0)),
        "prob" => Some(ParamValue::Float(1.0)),
        "cooldown" => Some(ParamValue::Int(0)),
        "total" => Some(ParamValue::Int(0)),
        "singleton" => Some(ParamValue::Bool(false)),
        _ => None,
    }
}
