use super::error::LevelError;
use super::GameDescription;

/// Initial sprite layout of one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelGrid {
    pub width: usize,
    pub height: usize,
    /// Row-major per-cell sprite ids, in mapping order.
    pub cells: Vec<Vec<String>>,
    pub avatar_start: (usize, usize),
}

impl LevelGrid {
    pub fn cell(&self, x: usize, y: usize) -> &[String] {
        &self.cells[y * self.width + x]
    }

    /// Number of instances of `id` placed by the level (exact id match).
    pub fn count(&self, id: &str) -> usize {
        self.cells.iter().flatten().filter(|s| *s == id).count()
    }
}

/// Parse a level file against the mapping of `desc`. The blank character
/// is a space; every other character must be mapped.
pub fn parse_level(text: &str, desc: &GameDescription) -> Result<LevelGrid, LevelError> {
    let mut rows: Vec<Vec<char>> = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l).chars().collect())
        .collect();
    while rows.last().is_some_and(|r| r.is_empty()) {
        rows.pop();
    }
    let width = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || width == 0 {
        return Err(LevelError::Empty);
    }
    let height = rows.len();
    let mut cells = Vec::with_capacity(width * height);
    let mut avatars = Vec::new();
    for (y, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(LevelError::RaggedGrid { row: y, expected: width, found: row.len() });
        }
        for (x, &ch) in row.iter().enumerate() {
            if ch == ' ' {
                cells.push(Vec::new());
                continue;
            }
            let ids = desc
                .level_mapping
                .get(&ch)
                .ok_or(LevelError::UnmappedCharacter { ch, row: y, col: x })?;
            for id in ids {
                if desc.effective_class(id).is_some_and(|c| c.is_avatar()) {
                    avatars.push((x, y));
                }
            }
            cells.push(ids.clone());
        }
    }
    let avatar_start = match avatars.as_slice() {
        [] => return Err(LevelError::MissingAvatar),
        [one] => *one,
        many => return Err(LevelError::MultipleAvatars { count: many.len() }),
    };
    Ok(LevelGrid { width, height, cells, avatar_start })
}
