//! `GRD1` grid files. See FORMATS.md for the byte layout.

use std::path::Path;

use crate::data::grid::GridTensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GRD1";
pub const VERSION: u16 = 1;

pub fn encode(grid: &GridTensor) -> Vec<u8> {
    let (c, h, w) = grid.dims();
    let mut out = Vec::with_capacity(20 + 8 * (h + w) + 4 * grid.len() + 16 * c);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    for d in [c, h, w] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for name in grid.channels() {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    for &v in grid.lat().iter().chain(grid.lon()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &v in grid.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn err<T>(offset: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::GridFile {
        offset,
        msg: msg.into(),
    })
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        match self.pos.checked_add(n) {
            Some(end) if end <= self.buf.len() => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            _ => err(
                self.pos,
                format!("truncated while reading {what} ({n} bytes needed, {} left)", self.buf.len() - self.pos),
            ),
        }
    }
}

pub fn decode(buf: &[u8]) -> Result<GridTensor> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return err(0, "bad magic, expected GRD1");
    }
    let version = u16::from_le_bytes(r.take(2, "version")?.try_into().unwrap());
    if version != VERSION {
        return err(4, format!("unsupported version {version}"));
    }
    let reserved = u16::from_le_bytes(r.take(2, "reserved")?.try_into().unwrap());
    if reserved != 0 {
        return err(6, "reserved field must be zero");
    }
    let mut dims = [0usize; 3];
    for (i, d) in dims.iter_mut().enumerate() {
        let off = r.pos;
        *d = u32::from_le_bytes(r.take(4, "dimension")?.try_into().unwrap()) as usize;
        if *d == 0 {
            return err(off, format!("dimension {i} is zero"));
        }
    }
    let [c, h, w] = dims;
    // reject absurd headers before allocating
    let payload = c
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .and_then(|v| v.checked_mul(4))
        .filter(|&p| p <= buf.len())
        .map_or_else(|| err(8, format!("dimensions {c}x{h}x{w} exceed file size {}", buf.len())), Ok)?;
    let mut channels = Vec::with_capacity(c);
    for _ in 0..c {
        let len = u16::from_le_bytes(r.take(2, "channel name length")?.try_into().unwrap()) as usize;
        let off = r.pos;
        let name = std::str::from_utf8(r.take(len, "channel name")?)
            .map_err(|_| Error::GridFile {
                offset: off,
                msg: "channel name is not UTF-8".into(),
            })?;
        channels.push(name.to_string());
    }
    let mut read_f64s = |n: usize, what: &str| -> Result<(usize, Vec<f64>)> {
        let off = r.pos;
        let bytes = r.take(8 * n, what)?;
        Ok((
            off,
            bytes
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        ))
    };
    let (lat_off, lat) = read_f64s(h, "latitudes")?;
    let (_, lon) = read_f64s(w, "longitudes")?;
    if let Some(i) = lat.iter().position(|v| !v.is_finite() || v.abs() > 90.0) {
        return err(lat_off + 8 * i, format!("latitude {} out of range", lat[i]));
    }
    if let Some(i) = lat.windows(2).position(|p| p[1] >= p[0]) {
        return err(lat_off + 8 * (i + 1), "latitudes must be strictly decreasing");
    }
    let data_off = r.pos;
    let bytes = r.take(payload, "payload")?;
    if r.pos != buf.len() {
        return err(r.pos, format!("{} trailing bytes after payload", buf.len() - r.pos));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    GridTensor::new(channels, lat, lon, data).map_err(|e| Error::GridFile {
        offset: data_off,
        msg: e.to_string(),
    })
}

pub fn write(path: impl AsRef<Path>, grid: &GridTensor) -> Result<()> {
    std::fs::write(path, encode(grid))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<GridTensor> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::grid::regular_coordinates;
    use proptest::prelude::*;

    fn sample() -> GridTensor {
        let (lat, lon) = regular_coordinates(4, 8);
        GridTensor::new(
            vec!["t2m".into(), "msl".into()],
            lat,
            lon,
            (0..64).map(|i| i as f32 * 0.25 - 3.0).collect(),
        )
        .unwrap()
    }

    #[test]
    fn roundtrip() {
        let g = sample();
        assert_eq!(decode(&encode(&g)).unwrap(), g);
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample());
        assert_eq!(&bytes[..4], b"GRD1");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 8);
        assert_eq!(bytes.len(), 20 + (2 + 3) * 2 + 8 * 12 + 4 * 64);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let bytes = encode(&sample());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::GridFile { offset: 0, .. })));

        let e = decode(&bytes[..bytes.len() - 1]).unwrap_err().to_string();
        assert!(e.contains("payload"), "{e}");

        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).unwrap_err().to_string().contains("trailing"));

        // swap the first two latitudes
        let lat_off = 20 + 10;
        let mut swapped = bytes.clone();
        let (a, b) = (swapped[lat_off..lat_off + 8].to_vec(), swapped[lat_off + 8..lat_off + 16].to_vec());
        swapped[lat_off..lat_off + 8].copy_from_slice(&b);
        swapped[lat_off + 8..lat_off + 16].copy_from_slice(&a);
        assert!(decode(&swapped).unwrap_err().to_string().contains("decreasing"));

        let mut huge = bytes;
        huge[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode(&huge).unwrap_err().to_string().contains("exceed"));
    }

    proptest! {
        // Arbitrary corruption must produce an error or a valid grid, never a panic.
        #[test]
        fn fuzzed_headers_never_panic(pos in 0usize..140, byte in any::<u8>(), cut in 0usize..400) {
            let mut bytes = encode(&sample());
            let p = pos % bytes.len();
            bytes[p] = byte;
            bytes.truncate(cut.min(bytes.len()));
            let _ = decode(&bytes);
        }
    }
}
