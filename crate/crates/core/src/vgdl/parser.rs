use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::error::{SourceLoc, VgdlError};
use super::registry::{
    any_sprite_param_type, color_rgb, sprite_param_default, Direction, EffectClass, ParamType,
    SpriteClass, TerminationKind,
};
use super::{GameDescription, InteractionRule, ParamValue, Params, SpriteDef, TerminationRule, EOS};

pub(crate) const SECTIONS: [&str; 4] = ["SpriteSet", "InteractionSet", "TerminationSet", "LevelMapping"];

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    col: usize,
}

#[derive(Debug)]
struct Line<'a> {
    no: usize,
    indent: usize,
    tokens: Vec<Token<'a>>,
}

impl Line<'_> {
    fn loc(&self) -> SourceLoc {
        SourceLoc::new(self.no, self.indent + 1)
    }

    fn tok_loc(&self, i: usize) -> SourceLoc {
        SourceLoc::new(self.no, self.tokens[i].col)
    }
}

fn syntax(loc: SourceLoc, token: &str, message: impl Into<String>) -> VgdlError {
    VgdlError::Syntax { loc, token: token.to_string(), message: message.into() }
}

fn lex(text: &str) -> Result<Vec<Line<'_>>, VgdlError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let content = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if let Some(p) = content.find('\t') {
            return Err(syntax(SourceLoc::new(no, p + 1), "\\t", "tabs are not allowed"));
        }
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start_matches(' ').len();
        let mut tokens = Vec::new();
        let mut start = None;
        for (p, ch) in content.char_indices() {
            if ch == ' ' {
                if let Some(s) = start.take() {
                    tokens.push(Token { text: &content[s..p], col: s + 1 });
                }
            } else if start.is_none() {
                start = Some(p);
            }
        }
        if let Some(s) = start {
            tokens.push(Token { text: &content[s..], col: s + 1 });
        }
        lines.push(Line { no, indent, tokens });
    }
    Ok(lines)
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct RawParam<'a> {
    key: &'a str,
    value: &'a str,
    loc: SourceLoc,
}

fn split_params<'a>(line: &Line<'a>, from: usize) -> Result<Vec<RawParam<'a>>, VgdlError> {
    let mut out: Vec<RawParam<'a>> = Vec::new();
    for (i, tok) in line.tokens.iter().enumerate().skip(from) {
        let loc = line.tok_loc(i);
        let Some((key, value)) = tok.text.split_once('=') else {
            return Err(syntax(loc, tok.text, "expected key=value parameter"));
        };
        if key.is_empty() || value.is_empty() {
            return Err(syntax(loc, tok.text, "empty parameter key or value"));
        }
        if out.iter().any(|p| p.key == key) {
            return Err(syntax(loc, tok.text, format!("parameter `{key}` given twice")));
        }
        out.push(RawParam { key, value, loc });
    }
    Ok(out)
}

struct RawSprite<'a> {
    id: &'a str,
    loc: SourceLoc,
    class: Option<SpriteClass>,
    params: Vec<RawParam<'a>>,
    children: Vec<RawSprite<'a>>,
}

#[derive(Default)]
struct Sections<'l, 'a> {
    sprites: Option<Vec<(usize, &'l Line<'a>)>>,
    interactions: Option<Vec<&'l Line<'a>>>,
    terminations: Option<Vec<&'l Line<'a>>>,
    mapping: Option<Vec<&'l Line<'a>>>,
}

/// Parse and validate a VGDL game description.
pub fn parse_game(text: &str) -> Result<GameDescription, VgdlError> {
    let lines = lex(text)?;
    let Some((header, body)) = lines.split_first() else {
        return Err(syntax(SourceLoc::new(1, 1), "", "empty game description"));
    };
    if header.indent != 0 || header.tokens[0].text != "BasicGame" {
        return Err(syntax(header.tok_loc(0), header.tokens[0].text, "expected `BasicGame` header"));
    }
    let mut name = String::new();
    for p in split_params(header, 1)? {
        if p.key != "name" {
            return Err(VgdlError::UnknownParameter {
                loc: p.loc,
                key: p.key.to_string(),
                owner: "BasicGame".into(),
            });
        }
        if !valid_ident(p.value) {
            return Err(VgdlError::InvalidParameter {
                loc: p.loc,
                key: "name".into(),
                value: p.value.into(),
                reason: "game names are identifiers".into(),
            });
        }
        name = p.value.to_string();
    }

    let step = body.iter().map(|l| l.indent).find(|&i| i > 0).unwrap_or(4);
    let mut sections = Sections::default();
    let mut current: Option<&str> = None;
    for line in body {
        if line.indent % step != 0 {
            return Err(syntax(
                line.loc(),
                line.tokens[0].text,
                format!("indentation {} is not a multiple of {step}", line.indent),
            ));
        }
        let level = line.indent / step;
        match level {
            0 => return Err(syntax(line.loc(), line.tokens[0].text, "unexpected top-level line")),
            1 => {
                let tok = line.tokens[0].text;
                if line.tokens.len() != 1 || !SECTIONS.contains(&tok) {
                    return Err(syntax(line.loc(), tok, "expected a section name"));
                }
                let slot_taken = match tok {
                    "SpriteSet" => sections.sprites.replace(Vec::new()).is_some(),
                    "InteractionSet" => sections.interactions.replace(Vec::new()).is_some(),
                    "TerminationSet" => sections.terminations.replace(Vec::new()).is_some(),
                    _ => sections.mapping.replace(Vec::new()).is_some(),
                };
                if slot_taken {
                    return Err(syntax(line.loc(), tok, "duplicate section"));
                }
                current = Some(tok);
            }
            _ => {
                let Some(sec) = current else {
                    return Err(syntax(line.loc(), line.tokens[0].text, "declaration outside of a section"));
                };
                if sec != "SpriteSet" && level != 2 {
                    return Err(syntax(line.loc(), line.tokens[0].text, "unexpected nesting"));
                }
                match sec {
                    "SpriteSet" => sections.sprites.as_mut().unwrap().push((level - 2, line)),
                    "InteractionSet" => sections.interactions.as_mut().unwrap().push(line),
                    "TerminationSet" => sections.terminations.as_mut().unwrap().push(line),
                    _ => sections.mapping.as_mut().unwrap().push(line),
                }
            }
        }
    }

    let eof = SourceLoc::new(lines.last().map_or(1, |l| l.no + 1), 1);
    let missing = |section| VgdlError::MissingSection { loc: eof, section };
    let sprite_lines = sections.sprites.ok_or_else(|| missing(SECTIONS[0]))?;
    let interaction_lines = sections.interactions.ok_or_else(|| missing(SECTIONS[1]))?;
    let termination_lines = sections.terminations.ok_or_else(|| missing(SECTIONS[2]))?;
    let mapping_lines = sections.mapping.ok_or_else(|| missing(SECTIONS[3]))?;

    let raw_sprites = build_tree(&sprite_lines)?;
    let mut declared: HashMap<&str, SourceLoc> = HashMap::new();
    collect_ids(&raw_sprites, &mut declared)?;
    let resolver = Resolver { declared: &declared };

    let mut sprites = Vec::with_capacity(raw_sprites.len());
    for raw in &raw_sprites {
        sprites.push(convert_sprite(raw, None, &BTreeSet::new(), &resolver)?);
    }

    let mut interactions = Vec::new();
    for line in interaction_lines {
        parse_interaction(line, &resolver, &mut interactions)?;
    }

    let mut terminations = Vec::new();
    for line in termination_lines {
        terminations.push(parse_termination(line, &resolver)?);
    }

    let mut level_mapping = BTreeMap::new();
    for line in mapping_lines {
        let (ch, ids) = parse_mapping(line, &resolver)?;
        if level_mapping.insert(ch, ids).is_some() {
            return Err(syntax(line.tok_loc(0), line.tokens[0].text, "character mapped twice"));
        }
    }

    Ok(GameDescription { name, sprites, interactions, terminations, level_mapping })
}

fn build_tree<'a>(lines: &[(usize, &Line<'a>)]) -> Result<Vec<RawSprite<'a>>, VgdlError> {
    // Stack of open ancestors; the sprite at depth d lives at stack[d].
    let mut roots: Vec<RawSprite<'a>> = Vec::new();
    let mut stack: Vec<RawSprite<'a>> = Vec::new();
    for &(depth, line) in lines {
        if depth > stack.len() {
            return Err(syntax(line.loc(), line.tokens[0].text, "nesting skips a level"));
        }
        while stack.len() > depth {
            let done = stack.pop().unwrap();
            match stack.last_mut() {
                Some(parent) => parent.children.push(done),
                None => roots.push(done),
            }
        }
        stack.push(parse_sprite_line(line)?);
    }
    while let Some(done) = stack.pop() {
        match stack.last_mut() {
            Some(parent) => parent.children.push(done),
            None => roots.push(done),
        }
    }
    Ok(roots)
}

fn parse_sprite_line<'a>(line: &Line<'a>) -> Result<RawSprite<'a>, VgdlError> {
    let id = line.tokens[0].text;
    if !valid_ident(id) {
        return Err(syntax(line.tok_loc(0), id, "invalid sprite identifier"));
    }
    if id == EOS {
        return Err(syntax(line.tok_loc(0), id, "`EOS` is reserved and cannot be declared"));
    }
    match line.tokens.get(1) {
        Some(t) if t.text == ">" => {}
        Some(t) => return Err(syntax(line.tok_loc(1), t.text, "expected `>`")),
        None => return Err(syntax(line.tok_loc(0), id, "expected `>` after sprite id")),
    }
    let mut next = 2;
    let mut class = None;
    if let Some(t) = line.tokens.get(2) {
        if !t.text.contains('=') {
            class = Some(SpriteClass::from_name(t.text).ok_or_else(|| VgdlError::UnknownClass {
                loc: line.tok_loc(2),
                kind: "sprite class",
                name: t.text.to_string(),
            })?);
            next = 3;
        }
    }
    Ok(RawSprite { id, loc: line.tok_loc(0), class, params: split_params(line, next)?, children: Vec::new() })
}

fn collect_ids<'a>(sprites: &[RawSprite<'a>], out: &mut HashMap<&'a str, SourceLoc>) -> Result<(), VgdlError> {
    for s in sprites {
        if let Some(first) = out.insert(s.id, s.loc) {
            return Err(VgdlError::DuplicateSpriteId { loc: s.loc, id: s.id.to_string(), first });
        }
        collect_ids(&s.children, out)?;
    }
    Ok(())
}

struct Resolver<'r, 'a> {
    declared: &'r HashMap<&'a str, SourceLoc>,
}

impl Resolver<'_, '_> {
    fn sprite(&self, name: &str, loc: SourceLoc, allow_eos: bool) -> Result<String, VgdlError> {
        if self.declared.contains_key(name) || name == "avatar" || name == "wall" || (allow_eos && name == EOS) {
            Ok(name.to_string())
        } else {
            Err(VgdlError::UnresolvedReference { loc, name: name.to_string() })
        }
    }

    fn value(&self, ty: ParamType, p: &RawParam<'_>) -> Result<ParamValue, VgdlError> {
        let bad = |reason: &str| VgdlError::InvalidParameter {
            loc: p.loc,
            key: p.key.to_string(),
            value: p.value.to_string(),
            reason: reason.to_string(),
        };
        Ok(match ty {
            ParamType::Int => ParamValue::Int(p.value.parse().map_err(|_| bad("expected an integer"))?),
            ParamType::Count => {
                let v: i64 = p.value.parse().map_err(|_| bad("expected an integer"))?;
                if v < 0 {
                    return Err(bad("must be >= 0"));
                }
                ParamValue::Int(v)
            }
            ParamType::Rate => {
                let v: f64 = p.value.parse().map_err(|_| bad("expected a number"))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(bad("must be > 0"));
                }
                ParamValue::Float(v)
            }
            ParamType::Prob => {
                let v: f64 = p.value.parse().map_err(|_| bad("expected a number"))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(bad("must be in [0, 1]"));
                }
                ParamValue::Float(v)
            }
            ParamType::Bool => ParamValue::Bool(match p.value {
                "True" | "true" => true,
                "False" | "false" => false,
                _ => return Err(bad("expected True or False")),
            }),
            ParamType::SpriteRef => ParamValue::Sprite(self.sprite(p.value, p.loc, false)?),
            ParamType::Dir => ParamValue::Dir(
                p.value.parse::<Direction>().map_err(|_| bad("expected UP, DOWN, LEFT or RIGHT"))?,
            ),
            ParamType::Color => {
                if color_rgb(p.value).is_none() {
                    return Err(bad("unknown color"));
                }
                ParamValue::Color(p.value.to_string())
            }
            ParamType::Text => ParamValue::Text(p.value.to_string()),
        })
    }
}

/// Converts a raw sprite node. `inherited` holds the parameter keys set by
/// ancestors: a default-valued parameter is only dropped when no ancestor
/// sets that key, since there it is an override rather than a restatement.
fn convert_sprite(
    raw: &RawSprite<'_>,
    parent_class: Option<SpriteClass>,
    inherited: &BTreeSet<String>,
    resolver: &Resolver<'_, '_>,
) -> Result<SpriteDef, VgdlError> {
    let class = raw.class.or(parent_class);
    let mut params = Params::new();
    for p in &raw.params {
        let ty = match class {
            Some(c) => c.param_type(p.key),
            None => any_sprite_param_type(p.key),
        }
        .ok_or_else(|| VgdlError::UnknownParameter {
            loc: p.loc,
            key: p.key.to_string(),
            owner: raw.id.to_string(),
        })?;
        let value = resolver.value(ty, p)?;
        if !inherited.contains(p.key) && sprite_param_default(p.key).as_ref() == Some(&value) {
            continue;
        }
        params.insert(p.key.to_string(), value);
    }
    let mut keys = inherited.clone();
    keys.extend(raw.params.iter().map(|p| p.key.to_string()));
    if raw.children.is_empty() {
        if let Some(c) = class {
            for req in c.required_params() {
                if !keys.contains(*req) {
                    return Err(VgdlError::InvalidParameter {
                        loc: raw.loc,
                        key: req.to_string(),
                        value: String::new(),
                        reason: format!("required by {c}"),
                    });
                }
            }
        }
    }
    let mut children = Vec::with_capacity(raw.children.len());
    for child in &raw.children {
        children.push(convert_sprite(child, class, &keys, resolver)?);
    }
    Ok(SpriteDef { id: raw.id.to_string(), class: raw.class, params, children })
}

fn parse_interaction(
    line: &Line<'_>,
    resolver: &Resolver<'_, '_>,
    out: &mut Vec<InteractionRule>,
) -> Result<(), VgdlError> {
    let Some(arrow) = line.tokens.iter().position(|t| t.text == ">") else {
        return Err(syntax(line.loc(), line.tokens[0].text, "expected `>` in interaction"));
    };
    if arrow < 2 {
        return Err(syntax(line.tok_loc(arrow), ">", "an interaction needs two sprite types"));
    }
    let Some(effect_tok) = line.tokens.get(arrow + 1) else {
        return Err(syntax(line.tok_loc(arrow), ">", "missing effect"));
    };
    let effect = EffectClass::from_name(effect_tok.text).ok_or_else(|| VgdlError::UnknownClass {
        loc: line.tok_loc(arrow + 1),
        kind: "effect",
        name: effect_tok.text.to_string(),
    })?;
    let first_tok = line.tokens[0];
    if first_tok.text == EOS {
        return Err(syntax(line.tok_loc(0), EOS, "`EOS` may only appear as the second sprite"));
    }
    let first = resolver.sprite(first_tok.text, line.tok_loc(0), false)?;
    let mut params = Params::new();
    for p in split_params(line, arrow + 2)? {
        let ty = effect.param_type(p.key).ok_or_else(|| VgdlError::UnknownParameter {
            loc: p.loc,
            key: p.key.to_string(),
            owner: effect.to_string(),
        })?;
        let value = resolver.value(ty, &p)?;
        if p.key == "scoreChange" && value == ParamValue::Int(0) {
            continue;
        }
        params.insert(p.key.to_string(), value);
    }
    for req in effect.required_params() {
        if !params.contains_key(*req) {
            return Err(VgdlError::InvalidParameter {
                loc: line.tok_loc(arrow + 1),
                key: req.to_string(),
                value: String::new(),
                reason: format!("required by {effect}"),
            });
        }
    }
    for i in 1..arrow {
        let second = resolver.sprite(line.tokens[i].text, line.tok_loc(i), true)?;
        out.push(InteractionRule { first: first.clone(), second, effect, params: params.clone() });
    }
    Ok(())
}

fn parse_termination(line: &Line<'_>, resolver: &Resolver<'_, '_>) -> Result<TerminationRule, VgdlError> {
    let tok = line.tokens[0].text;
    let kind = TerminationKind::from_name(tok).ok_or_else(|| VgdlError::UnknownClass {
        loc: line.tok_loc(0),
        kind: "termination",
        name: tok.to_string(),
    })?;
    let mut rule = TerminationRule { kind, stypes: Vec::new(), limit: 0, win: false, bonus: 0 };
    let mut numbered: Vec<(u32, String)> = Vec::new();
    for p in split_params(line, 1)? {
        let ty = kind.param_type(p.key).ok_or_else(|| VgdlError::UnknownParameter {
            loc: p.loc,
            key: p.key.to_string(),
            owner: kind.to_string(),
        })?;
        match (p.key, resolver.value(ty, &p)?) {
            ("limit", ParamValue::Int(v)) => rule.limit = v as u64,
            ("win", ParamValue::Bool(b)) => rule.win = b,
            ("bonus", ParamValue::Int(v)) => rule.bonus = v,
            ("stype", ParamValue::Sprite(s)) => rule.stypes = vec![s],
            (k, ParamValue::Sprite(s)) => numbered.push((k[5..].parse().unwrap(), s)),
            _ => unreachable!("termination schema covers all keys"),
        }
    }
    if kind == TerminationKind::MultiSpriteCounter {
        numbered.sort_by_key(|(n, _)| *n);
        rule.stypes = numbered.into_iter().map(|(_, s)| s).collect();
    }
    let need = match kind {
        TerminationKind::SpriteCounter if rule.stypes.len() != 1 => Some("stype"),
        TerminationKind::MultiSpriteCounter if rule.stypes.is_empty() => Some("stype1"),
        _ => None,
    };
    if let Some(key) = need {
        return Err(VgdlError::InvalidParameter {
            loc: line.tok_loc(0),
            key: key.into(),
            value: String::new(),
            reason: format!("required by {kind}"),
        });
    }
    Ok(rule)
}

fn parse_mapping(line: &Line<'_>, resolver: &Resolver<'_, '_>) -> Result<(char, Vec<String>), VgdlError> {
    let key = line.tokens[0].text;
    let mut chars = key.chars();
    let (Some(ch), None) = (chars.next(), chars.next()) else {
        return Err(syntax(line.tok_loc(0), key, "level mapping keys are single characters"));
    };
    match line.tokens.get(1) {
        Some(t) if t.text == ">" => {}
        _ => return Err(syntax(line.tok_loc(0), key, "expected `>` after mapping character")),
    }
    if line.tokens.len() < 3 {
        return Err(syntax(line.tok_loc(1), ">", "mapping needs at least one sprite"));
    }
    let ids = (2..line.tokens.len())
        .map(|i| resolver.sprite(line.tokens[i].text, line.tok_loc(i), false))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((ch, ids))
}
