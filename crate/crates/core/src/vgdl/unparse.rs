use std::fmt::Write;

use super::registry::TerminationKind;
use super::{GameDescription, Params, SpriteDef};

const INDENT: &str = "    ";

fn push_params(out: &mut String, params: &Params) {
    for (k, v) in params {
        write!(out, " {k}={v}").unwrap();
    }
}

fn push_sprite(out: &mut String, def: &SpriteDef, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
    write!(out, "{} >", def.id).unwrap();
    if let Some(c) = def.class {
        write!(out, " {c}").unwrap();
    }
    push_params(out, &def.params);
    out.push('\n');
    for child in &def.children {
        push_sprite(out, child, depth + 1);
    }
}

/// Canonical VGDL text for `desc`. Parameters are emitted in key order and
/// parameters equal to their defaults are left out.
pub fn unparse(desc: &GameDescription) -> String {
    let mut out = String::from("BasicGame");
    if !desc.name.is_empty() {
        write!(out, " name={}", desc.name).unwrap();
    }
    out.push('\n');

    out.push_str("    SpriteSet\n");
    for s in &desc.sprites {
        push_sprite(&mut out, s, 2);
    }

    out.push_str("    InteractionSet\n");
    for r in &desc.interactions {
        write!(out, "        {} {} > {}", r.first, r.second, r.effect).unwrap();
        push_params(&mut out, &r.params);
        out.push('\n');
    }

    out.push_str("    TerminationSet\n");
    for t in &desc.terminations {
        write!(out, "        {}", t.kind).unwrap();
        match t.kind {
            TerminationKind::SpriteCounter => write!(out, " stype={}", t.stypes[0]).unwrap(),
            TerminationKind::MultiSpriteCounter => {
                for (i, s) in t.stypes.iter().enumerate() {
                    write!(out, " stype{}={s}", i + 1).unwrap();
                }
            }
            TerminationKind::Timeout => {}
        }
        if t.limit != 0 {
            write!(out, " limit={}", t.limit).unwrap();
        }
        if t.win {
            out.push_str(" win=True");
        }
        if t.bonus != 0 {
            write!(out, " bonus={}", t.bonus).unwrap();
        }
        out.push('\n');
    }

    out.push_str("    LevelMapping\n");
    for (ch, ids) in &desc.level_mapping {
        write!(out, "        {ch} >").unwrap();
        for id in ids {
            write!(out, " {id}").unwrap();
        }
        out.push('\n');
    }
    out
}
