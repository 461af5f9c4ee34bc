//! Portable parameter checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! 0   magic      "CVCK"
//! 4   u32        format version (1)
//! 8   u32        entry count N
//! 12  u32        metadata length M
//! 16  [u8; M]    metadata, UTF-8 text
//!     N entries: u16 name length, name bytes, u8 rank, u32 × rank dims,
//!                u64 payload byte offset, u64 element count
//!     payload:   f32 little-endian values, entries back to back
//! ```
//!
//! Offsets are relative to the first payload byte.

use std::io::{Read, Write};

use crate::error::{Result, TensorError};
use crate::params::ParamStore;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"CVCK";
pub const VERSION: u32 = 1;

/// Named tensors plus a free-form metadata text section.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub metadata: String,
    pub params: ParamStore<f32>,
}

fn bad(msg: impl Into<String>) -> TensorError {
    TensorError::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut header = Vec::new();
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        header.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        header.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        header.extend_from_slice(self.metadata.as_bytes());
        let mut offset = 0u64;
        for (_, p) in self.params.iter() {
            let name = p.name.as_bytes();
            if name.len() > u16::MAX as usize {
                return Err(bad(format!("parameter name too long: {}", p.name)));
            }
            header.extend_from_slice(&(name.len() as u16).to_le_bytes());
            header.extend_from_slice(name);
            header.push(p.value.rank() as u8);
            for &d in p.value.shape() {
                header.extend_from_slice(&(d as u32).to_le_bytes());
            }
            header.extend_from_slice(&offset.to_le_bytes());
            header.extend_from_slice(&(p.value.numel() as u64).to_le_bytes());
            offset += 4 * p.value.numel() as u64;
        }
        w.write_all(&header)?;
        let mut payload = Vec::with_capacity(offset as usize);
        for (_, p) in self.params.iter() {
            for v in p.value.data() {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&payload)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut cur = Cursor { buf, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(bad("bad magic at offset 0"));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let count = cur.u32()? as usize;
        let meta_len = cur.u32()? as usize;
        let metadata = std::str::from_utf8(cur.take(meta_len)?)
            .map_err(|_| bad("metadata is not UTF-8"))?
            .to_string();
        let mut entries = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let name_len = cur.u16()? as usize;
            let name = std::str::from_utf8(cur.take(name_len)?)
                .map_err(|_| bad(format!("entry name at offset {} not UTF-8", cur.pos)))?
                .to_string();
            let rank = cur.take(1)?[0] as usize;
            let shape = (0..rank)
                .map(|_| cur.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let offset = cur.u64()? as usize;
            let numel = cur.u64()? as usize;
            if shape.iter().product::<usize>() != numel {
                return Err(bad(format!("{name}: shape {shape:?} inconsistent with {numel} values")));
            }
            entries.push((name, shape, offset, numel));
        }
        let payload = &buf[cur.pos..];
        let mut params = ParamStore::new();
        for (name, shape, offset, numel) in entries {
            let end = offset
                .checked_add(numel * 4)
                .filter(|&e| e <= payload.len())
                .ok_or_else(|| bad(format!("{name}: payload range out of bounds")))?;
            let data = payload[offset..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            if params.find(&name).is_some() {
                return Err(bad(format!("duplicate entry {name}")));
            }
            params.add(name, Tensor::new(shape, data)?);
        }
        Ok(Self { metadata, params })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| bad(format!("truncated at offset {} (needed {n} bytes)", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
