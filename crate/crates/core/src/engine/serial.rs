//! Canonical byte encoding of a [`GameState`]. Layout in `docs/state-format.md`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::vgdl::Direction;

use super::game::Game;
use super::{EngineError, GameState, Sprite, Status};

const MAGIC: &[u8; 4] = b"GVGS";
pub const STATE_FORMAT_VERSION: u16 = 1;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], EngineError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| EngineError::Decode(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn arr<const N: usize>(&mut self) -> Result<[u8; N], EngineError> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8, EngineError> {
        Ok(self.arr::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16, EngineError> {
        Ok(u16::from_le_bytes(self.arr()?))
    }
    fn u32(&mut self) -> Result<u32, EngineError> {
        Ok(u32::from_le_bytes(self.arr()?))
    }
    fn u64(&mut self) -> Result<u64, EngineError> {
        Ok(u64::from_le_bytes(self.arr()?))
    }
    fn i32(&mut self) -> Result<i32, EngineError> {
        Ok(i32::from_le_bytes(self.arr()?))
    }
    fn i64(&mut self) -> Result<i64, EngineError> {
        Ok(i64::from_le_bytes(self.arr()?))
    }
    fn u128(&mut self) -> Result<u128, EngineError> {
        Ok(u128::from_le_bytes(self.arr()?))
    }
}

fn bad(msg: impl Into<String>) -> EngineError {
    EngineError::Decode(msg.into())
}

impl GameState {
    /// Canonical encoding: equal states give equal bytes and vice versa.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(96 + self.sprites.len() * 32);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&STATE_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.tick.to_le_bytes());
        out.extend_from_slice(&self.score.to_le_bytes());
        out.push(self.status.code());
        out.extend_from_slice(&self.next_id.to_le_bytes());
        out.extend_from_slice(&self.rng.get_seed());
        out.extend_from_slice(&self.rng.get_stream().to_le_bytes());
        out.extend_from_slice(&self.rng.get_word_pos().to_le_bytes());
        let live = self.sprites.iter().filter(|s| s.alive).count() as u32;
        out.extend_from_slice(&live.to_le_bytes());
        for s in self.sprites.iter().filter(|s| s.alive) {
            out.extend_from_slice(&s.id.to_le_bytes());
            out.extend_from_slice(&s.ty.to_le_bytes());
            out.extend_from_slice(&s.x.to_le_bytes());
            out.extend_from_slice(&s.y.to_le_bytes());
            out.push(s.orientation.code());
            out.extend_from_slice(&s.move_timer.to_le_bytes());
            out.extend_from_slice(&s.spawn_timer.to_le_bytes());
            out.extend_from_slice(&s.age.to_le_bytes());
            out.extend_from_slice(&s.spawned.to_le_bytes());
            out.extend_from_slice(&(s.resources.len() as u16).to_le_bytes());
            for (t, v) in &s.resources {
                out.extend_from_slice(&t.to_le_bytes());
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Decodes bytes produced by [`GameState::to_bytes`] for the same game.
    pub fn from_bytes(game: Arc<Game>, bytes: &[u8]) -> Result<GameState, EngineError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = r.u16()?;
        if version != STATE_FORMAT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let width = r.u16()?;
        let height = r.u16()?;
        if width == 0 || height == 0 {
            return Err(bad("empty grid"));
        }
        let tick = r.u32()?;
        let score = r.i64()?;
        let status = Status::from_code(r.u8()?).ok_or_else(|| bad("bad status"))?;
        let next_id = r.u32()?;
        let seed: [u8; 32] = r.arr()?;
        let stream = r.u64()?;
        let word_pos = r.u128()?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);

        let mut state = GameState::empty(game, width, height, rng);
        state.tick = tick;
        state.score = score;
        state.status = status;
        state.next_id = next_id;

        let n = r.u32()? as usize;
        let types = state.game.type_count();
        let mut last_id = None;
        for _ in 0..n {
            let id = r.u32()?;
            if last_id.is_some_and(|l| id <= l) || id >= next_id {
                return Err(bad("sprite ids out of order"));
            }
            last_id = Some(id);
            let ty = r.u16()?;
            if ty as usize >= types {
                return Err(bad(format!("unknown type {ty}")));
            }
            let x = r.u16()?;
            let y = r.u16()?;
            if x >= width || y >= height {
                return Err(bad("sprite outside grid"));
            }
            let orientation = Direction::from_code(r.u8()?).ok_or_else(|| bad("bad orientation"))?;
            let move_timer = r.u16()?;
            let spawn_timer = r.u16()?;
            let age = r.u32()?;
            let spawned = r.u32()?;
            let nres = r.u16()? as usize;
            let mut resources = Vec::with_capacity(nres.min(types));
            for _ in 0..nres {
                let t = r.u16()?;
                let v = r.i32()?;
                if t as usize >= types || resources.last().is_some_and(|&(p, _)| t <= p) || v == 0 {
                    return Err(bad("bad resource entry"));
                }
                resources.push((t, v));
            }
            state.counts[ty as usize] += 1;
            state.sprites.push(Sprite {
                id,
                ty,
                x,
                y,
                orientation,
                move_timer,
                spawn_timer,
                age,
                spawned,
                resources,
                prev: (x, y),
                alive: true,
            });
        }
        if r.pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        state.actions = state.game.action_space();
        state.rebuild_index();
        Ok(state)
    }
}
