use std::fmt;

use thiserror::Error;

/// 1-based line and column in a source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SourceLoc {
    pub line: usize,
    pub column: usize,
}

impl SourceLoc {
    pub fn new(line: usize, column: usize) -> Self {
        SourceLoc { line, column }
    }
}

impl fmt::Display for SourceLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VgdlError {
    #[error("{loc}: syntax error at `{token}`: {message}")]
    Syntax { loc: SourceLoc, token: String, message: String },
    #[error("{loc}: syntax error: missing section `{section}`")]
    MissingSection { loc: SourceLoc, section: &'static str },
    #[error("{loc}: unknown {kind} `{name}`")]
    UnknownClass { loc: SourceLoc, kind: &'static str, name: String },
    #[error("{loc}: unknown parameter `{key}` for `{owner}`")]
    UnknownParameter { loc: SourceLoc, key: String, owner: String },
    #[error("{loc}: invalid value `{value}` for parameter `{key}`: {reason}")]
    InvalidParameter { loc: SourceLoc, key: String, value: String, reason: String },
    #[error("{loc}: unresolved sprite reference `{name}`")]
    UnresolvedReference { loc: SourceLoc, name: String },
    #[error("{loc}: duplicate sprite id `{id}` (first declared at {first})")]
    DuplicateSpriteId { loc: SourceLoc, id: String, first: SourceLoc },
}

impl VgdlError {
    pub fn loc(&self) -> SourceLoc {
        match self {
            VgdlError::Syntax { loc, .. }
            | VgdlError::MissingSection { loc, .. }
            | VgdlError::UnknownClass { loc, .. }
            | VgdlError::UnknownParameter { loc, .. }
            | VgdlError::InvalidParameter { loc, .. }
            | VgdlError::UnresolvedReference { loc, .. }
            | VgdlError::DuplicateSpriteId { loc, .. } => *loc,
        }
    }

    /// True for errors in the surface syntax (as opposed to validation).
    pub fn is_syntax(&self) -> bool {
        matches!(self, VgdlError::Syntax { .. } | VgdlError::MissingSection { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("level is empty")]
    Empty,
    #[error("ragged grid: row {row} has width {found}, expected {expected}")]
    RaggedGrid { row: usize, expected: usize, found: usize },
    #[error("unmapped character {ch:?} at row {row}, column {col}")]
    UnmappedCharacter { ch: char, row: usize, col: usize },
    #[error("level has no avatar")]
    MissingAvatar,
    #[error("level has {count} avatars, expected exactly one")]
    MultipleAvatars { count: usize },
}
