//! Observations: solid-colour pixel frames and the structured grid view.
//!
//! Schemas are described in `docs/observation-schema.md`.

use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{GameState, Status};
use crate::vgdl::Direction;

pub const DEFAULT_TILE_SIZE: usize = 10;
pub const BACKGROUND: [u8; 3] = [0, 0, 0];
pub const OBSERVATION_VERSION: u32 = 1;

/// Row-major RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelFrame {
    pub width: usize,
    pub height: usize,
    pub tile_size: usize,
    pub bytes: Vec<u8>,
}

impl PixelFrame {
    pub const CHANNELS: usize = 3;

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.bytes[i], self.bytes[i + 1], self.bytes[i + 2]]
    }

    /// Encodes as an 8-bit RGB PNG.
    pub fn to_png(&self) -> Result<Vec<u8>, png::EncodingError> {
        let mut out = Vec::new();
        self.write_png(&mut out)?;
        Ok(out)
    }

    fn write_png<W: std::io::Write>(&self, w: W) -> Result<(), png::EncodingError> {
        let mut enc = png::Encoder::new(w, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&self.bytes)?;
        writer.finish()
    }

    /// Decodes an 8-bit RGB PNG. `tile_size` is not stored in the file.
    pub fn from_png(data: &[u8], tile_size: usize) -> Result<PixelFrame, png::DecodingError> {
        let decoder = png::Decoder::new(std::io::Cursor::new(data));
        let mut reader = decoder.read_info()?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader.next_frame(&mut buf)?;
        if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
            return Err(png::DecodingError::IoError(std::io::Error::other("expected 8-bit RGB")));
        }
        buf.truncate(info.buffer_size());
        Ok(PixelFrame { width: info.width as usize, height: info.height as usize, tile_size, bytes: buf })
    }
}

/// Draws every cell as a solid tile in the colour of its topmost sprite.
/// Topmost means the highest type index; empty cells are [`BACKGROUND`].
///
/// # Panics
/// If `tile_size` is zero.
pub fn render_pixels(state: &GameState, tile_size: usize) -> PixelFrame {
    assert!(tile_size >= 1, "tile_size must be positive");
    let (gw, gh) = (state.width(), state.height());
    let width = gw * tile_size;
    let height = gh * tile_size;
    let mut bytes = vec![0u8; width * height * 3];
    let types = state.game().types();
    for cy in 0..gh {
        for cx in 0..gw {
            let color = match state.sprites_at(cx, cy).map(|s| s.ty).max() {
                Some(t) => types[t as usize].color,
                None => BACKGROUND,
            };
            if color == BACKGROUND {
                continue;
            }
            for py in cy * tile_size..(cy + 1) * tile_size {
                let row = (py * width + cx * tile_size) * 3;
                for px in 0..tile_size {
                    bytes[row + px * 3..row + px * 3 + 3].copy_from_slice(&color);
                }
            }
        }
    }
    PixelFrame { width, height, tile_size, bytes }
}

/// Writes `frame` to `path` as PNG.
pub fn export_png(frame: &PixelFrame, path: impl AsRef<Path>) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    frame.write_png(BufWriter::new(file)).map_err(|e| match e {
        png::EncodingError::IoError(e) => e,
        other => std::io::Error::other(other),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvatarView {
    pub x: usize,
    pub y: usize,
    pub orientation: Direction,
    /// `(type id, amount)`, sorted by id.
    pub resources: Vec<(u16, i32)>,
}

/// Structured observation. Type ids are indices into the game's type
/// table; no names are exposed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridObservation {
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub tick: u64,
    pub score: i64,
    pub status: Status,
    pub avatar: Option<AvatarView>,
    /// `grid[y][x]` lists the type ids present, in ascending order.
    pub grid: Vec<Vec<Vec<u16>>>,
}

pub fn render_grid(state: &GameState) -> GridObservation {
    let grid = (0..state.height())
        .map(|y| {
            (0..state.width())
                .map(|x| {
                    let mut ids: Vec<u16> = state.sprites_at(x, y).map(|s| s.ty).collect();
                    ids.sort_unstable();
                    ids
                })
                .collect()
        })
        .collect();
    let avatar = state.avatar().map(|a| AvatarView {
        x: a.x as usize,
        y: a.y as usize,
        orientation: a.orientation,
        resources: a.resources.clone(),
    });
    GridObservation {
        version: OBSERVATION_VERSION,
        width: state.width(),
        height: state.height(),
        tick: state.tick(),
        score: state.score(),
        status: state.status(),
        avatar,
        grid,
    }
}

/// ASCII view for terminal play. Each cell shows the level character whose
/// topmost type matches the cell's topmost sprite, `A` for avatars, and the
/// first letter of the type name for types no level character produces.
pub fn render_text(state: &GameState) -> String {
    let game = state.game();
    let mut glyph: Vec<char> = game.types().iter().map(|t| t.name.chars().next().unwrap_or('?')).collect();
    for (&ch, names) in game.description().level_mapping.iter().rev() {
        if let Some(top) = names.iter().filter_map(|n| game.type_id(n)).max() {
            glyph[top as usize] = ch;
        }
    }
    for (t, ty) in game.types().iter().enumerate() {
        if ty.class.is_avatar() {
            glyph[t] = 'A';
        }
    }
    let mut out = String::with_capacity((state.width() + 1) * state.height());
    for y in 0..state.height() {
        for x in 0..state.width() {
            out.push(state.sprites_at(x, y).map(|s| s.ty).max().map_or(' ', |t| glyph[t as usize]));
        }
        out.push('\n');
    }
    out
}
