//! The CVC1 single-instance container. Byte layout in FORMATS.md.

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CVC1";
pub const VERSION: u16 = 1;

/// How the latent payload was coded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodingMode {
    /// ẑ under the learned factorized prior, ŷ under the Gaussian predicted
    /// from ẑ.
    Hyperprior = 0,
    /// No hyper-latent; ŷ under a per-channel Gaussian stored in the header.
    Factorized = 1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub mode: CodingMode,
    pub channels: u16,
    pub height: u16,
    pub width: u16,
    pub config_hash: u64,
    pub stats_hash: u64,
    pub lambda: f32,
    pub channel_names: Vec<String>,
    /// Per latent channel (location, scale); factorized mode only.
    pub prior: Vec<(f32, f32)>,
    pub z_payload: Vec<u8>,
    pub y_payload: Vec<u8>,
}

fn err(msg: impl Into<String>) -> Error {
    Error::Container(msg.into())
}

impl Container {
    pub fn header_len(&self) -> usize {
        let names: usize = self.channel_names.iter().map(|n| 1 + n.len()).sum();
        let prior = match self.mode {
            CodingMode::Hyperprior => 0,
            CodingMode::Factorized => 1 + 8 * self.prior.len(),
        };
        4 + 2 + 1 + 6 + 8 + 8 + 4 + names + prior + 16 + 4
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.channel_names.len() != self.channels as usize {
            return Err(err("channel-name table length differs from channel count"));
        }
        let mut b = Vec::with_capacity(self.header_len() + self.z_payload.len() + self.y_payload.len());
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.push(self.mode as u8);
        for d in [self.channels, self.height, self.width] {
            b.extend_from_slice(&d.to_le_bytes());
        }
        b.extend_from_slice(&self.config_hash.to_le_bytes());
        b.extend_from_slice(&self.stats_hash.to_le_bytes());
        b.extend_from_slice(&self.lambda.to_le_bytes());
        for name in &self.channel_names {
            let n = name.as_bytes();
            if n.len() > u8::MAX as usize {
                return Err(err(format!("channel name {name:?} longer than 255 bytes")));
            }
            b.push(n.len() as u8);
            b.extend_from_slice(n);
        }
        if self.mode == CodingMode::Factorized {
            if self.prior.len() > u8::MAX as usize {
                return Err(err("too many prior channels"));
            }
            b.push(self.prior.len() as u8);
            for &(loc, scale) in &self.prior {
                b.extend_from_slice(&loc.to_le_bytes());
                b.extend_from_slice(&scale.to_le_bytes());
            }
        }
        for p in [&self.z_payload, &self.y_payload] {
            let len = u32::try_from(p.len()).map_err(|_| err("payload exceeds 4 GiB"))?;
            b.extend_from_slice(&len.to_le_bytes());
        }
        for p in [&self.z_payload, &self.y_payload] {
            b.extend_from_slice(&crc32fast::hash(p).to_le_bytes());
        }
        let header_crc = crc32fast::hash(&b);
        b.extend_from_slice(&header_crc.to_le_bytes());
        b.extend_from_slice(&self.z_payload);
        b.extend_from_slice(&self.y_payload);
        Ok(b)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4, "magic")? != MAGIC {
            return Err(err("bad magic at offset 0"));
        }
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(err(format!("unsupported version {version} at offset 4")));
        }
        let mode = match r.u8("mode")? {
            0 => CodingMode::Hyperprior,
            1 => CodingMode::Factorized,
            m => return Err(err(format!("unknown coding mode {m} at offset 6"))),
        };
        let channels = r.u16("channels")?;
        let height = r.u16("height")?;
        let width = r.u16("width")?;
        let config_hash = r.u64("config hash")?;
        let stats_hash = r.u64("stats hash")?;
        let lambda = f32::from_le_bytes(r.take(4, "lambda")?.try_into().unwrap());
        let mut channel_names = Vec::with_capacity(channels as usize);
        for _ in 0..channels {
            let n = r.u8("channel name length")? as usize;
            let at = r.pos;
            let name = std::str::from_utf8(r.take(n, "channel name")?)
                .map_err(|_| err(format!("channel name at offset {at} is not UTF-8")))?;
            channel_names.push(name.to_string());
        }
        let mut prior = Vec::new();
        if mode == CodingMode::Factorized {
            let k = r.u8("prior channel count")?;
            for _ in 0..k {
                let loc = f32::from_le_bytes(r.take(4, "prior")?.try_into().unwrap());
                let scale = f32::from_le_bytes(r.take(4, "prior")?.try_into().unwrap());
                prior.push((loc, scale));
            }
        }
        let z_len = r.u32("payload length")? as usize;
        let y_len = r.u32("payload length")? as usize;
        let z_crc = r.u32("payload crc")?;
        let y_crc = r.u32("payload crc")?;
        let header_end = r.pos;
        let header_crc = r.u32("header crc")?;
        if crc32fast::hash(&buf[..header_end]) != header_crc {
            return Err(err(format!("header CRC mismatch (header ends at offset {header_end})")));
        }
        let z_at = r.pos;
        let z_payload = r.take(z_len, "hyper-latent payload")?.to_vec();
        let y_at = r.pos;
        let y_payload = r.take(y_len, "latent payload")?.to_vec();
        if r.pos != buf.len() {
            return Err(err(format!(
                "{} trailing bytes after payloads at offset {}",
                buf.len() - r.pos,
                r.pos
            )));
        }
        if crc32fast::hash(&z_payload) != z_crc {
            return Err(err(format!("hyper-latent payload CRC mismatch (payload at offset {z_at})")));
        }
        if crc32fast::hash(&y_payload) != y_crc {
            return Err(err(format!("latent payload CRC mismatch (payload at offset {y_at})")));
        }
        Ok(Self {
            mode,
            channels,
            height,
            width,
            config_hash,
            stats_hash,
            lambda,
            channel_names,
            prior,
            z_payload,
            y_payload,
        })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| err(format!("truncated {what} at offset {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(mode: CodingMode) -> Container {
        Container {
            mode,
            channels: 2,
            height: 32,
            width: 64,
            config_hash: 0x0123_4567_89ab_cdef,
            stats_hash: 42,
            lambda: 0.5,
            channel_names: vec!["t2m".into(), "msl".into()],
            prior: if mode == CodingMode::Factorized {
                vec![(0.25, 3.0)]
            } else {
                vec![]
            },
            z_payload: vec![1, 2, 3],
            y_payload: (0..40).collect(),
        }
    }

    #[test]
    fn roundtrip_both_modes() {
        for mode in [CodingMode::Hyperprior, CodingMode::Factorized] {
            let c = sample(mode);
            let bytes = c.to_bytes().unwrap();
            assert_eq!(bytes.len(), c.header_len() + 43);
            assert_eq!(Container::from_bytes(&bytes).unwrap(), c);
        }
    }

    #[test]
    fn every_single_byte_flip_is_detected() {
        let bytes = sample(CodingMode::Factorized).to_bytes().unwrap();
        for i in 0..bytes.len() {
            for bit in [0x01, 0x80] {
                let mut t = bytes.clone();
                t[i] ^= bit;
                assert!(Container::from_bytes(&t).is_err(), "flip at {i}");
            }
        }
    }

    #[test]
    fn truncation_and_extension_fail() {
        let bytes = sample(CodingMode::Hyperprior).to_bytes().unwrap();
        for n in 0..bytes.len() {
            assert!(Container::from_bytes(&bytes[..n]).is_err());
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(Container::from_bytes(&long).is_err());
    }

    #[test]
    fn header_stays_small() {
        let c = sample(CodingMode::Hyperprior);
        assert!(c.header_len() < 1024);
    }
}
