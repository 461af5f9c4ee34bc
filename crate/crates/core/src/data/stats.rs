//! Per-channel normalisation statistics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::grid::GridTensor;
use crate::error::{Error, Result};
use crate::hash;

/// Per-channel mean and (population) standard deviation over a training split.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub channels: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsFile {
    hash: String,
    channel: Vec<ChannelEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelEntry {
    name: String,
    mean: f64,
    std: f64,
}

impl NormStats {
    pub fn new(channels: Vec<String>, mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if channels.len() != mean.len() || channels.len() != std.len() {
            return Err(Error::Data("stats vectors differ in length".into()));
        }
        if let Some(i) = std.iter().position(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Data(format!(
                "channel {} has non-positive standard deviation {}",
                channels[i], std[i]
            )));
        }
        Ok(Self { channels, mean, std })
    }

    fn digest_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::new();
        for ((name, m), s) in self.channels.iter().zip(&self.mean).zip(&self.std) {
            bytes.extend_from_slice(&(name.len() as u32).to_le_bytes());
            bytes.extend_from_slice(name.as_bytes());
            bytes.extend_from_slice(&m.to_le_bytes());
            bytes.extend_from_slice(&s.to_le_bytes());
        }
        bytes
    }

    /// SHA-256 over names and the exact f64 bit patterns, hex encoded.
    pub fn hash_hex(&self) -> String {
        hash::sha256_hex(&self.digest_bytes())
    }

    pub fn hash(&self) -> u64 {
        hash::sha256_u64(&self.digest_bytes())
    }

    pub fn to_text(&self) -> String {
        let file = StatsFile {
            hash: self.hash_hex(),
            channel: self
                .channels
                .iter()
                .zip(&self.mean)
                .zip(&self.std)
                .map(|((n, &mean), &std)| ChannelEntry {
                    name: n.clone(),
                    mean,
                    std,
                })
                .collect(),
        };
        toml::to_string(&file).expect("stats serialise")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let file: StatsFile = toml::from_str(text).map_err(|e| Error::Data(format!("stats file: {e}")))?;
        let stats = Self::new(
            file.channel.iter().map(|c| c.name.clone()).collect(),
            file.channel.iter().map(|c| c.mean).collect(),
            file.channel.iter().map(|c| c.std).collect(),
        )?;
        if stats.hash_hex() != file.hash {
            return Err(Error::Data("stats file hash does not match its contents".into()));
        }
        Ok(stats)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    fn check(&self, x: &GridTensor) -> Result<()> {
        if x.channels() != self.channels.as_slice() {
            return Err(Error::Data(format!(
                "stats channels {:?} do not match grid channels {:?}",
                self.channels,
                x.channels()
            )));
        }
        Ok(())
    }

    /// Per-channel z-score.
    pub fn normalize(&self, x: &GridTensor) -> Result<GridTensor> {
        self.check(x)?;
        let (c, h, w) = x.dims();
        let hw = h * w;
        let mut data = Vec::with_capacity(c * hw);
        for ch in 0..c {
            let (m, s) = (self.mean[ch], self.std[ch]);
            data.extend(x.channel(ch).iter().map(|&v| ((v as f64 - m) / s) as f32));
        }
        x.with_data(data)
    }

    pub fn denormalize(&self, x: &GridTensor) -> Result<GridTensor> {
        self.check(x)?;
        let (c, h, w) = x.dims();
        let hw = h * w;
        let mut data = Vec::with_capacity(c * hw);
        for ch in 0..c {
            let (m, s) = (self.mean[ch], self.std[ch]);
            data.extend(x.channel(ch).iter().map(|&v| (v as f64 * s + m) as f32));
        }
        x.with_data(data)
    }
}

/// Two-pass mean/std over a nonempty split.
pub fn compute_stats(split: &[GridTensor]) -> Result<NormStats> {
    let first = split
        .first()
        .ok_or_else(|| Error::Data("cannot compute statistics of an empty split".into()))?;
    let c = first.dims().0;
    let mut mean = vec![0.0f64; c];
    let mut count = 0usize;
    for g in split {
        if !g.same_grid(first) {
            return Err(Error::Data("split mixes grids".into()));
        }
        for (ch, m) in mean.iter_mut().enumerate() {
            *m += g.channel(ch).iter().map(|&v| v as f64).sum::<f64>();
        }
        count += g.channel(0).len();
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    let mut var = vec![0.0f64; c];
    for g in split {
        for (ch, v) in var.iter_mut().enumerate() {
            *v += g
                .channel(ch)
                .iter()
                .map(|&x| (x as f64 - mean[ch]).powi(2))
                .sum::<f64>();
        }
    }
    let std = var.iter().map(|v| (v / count as f64).sqrt()).collect();
    NormStats::new(first.channels().to_vec(), mean, std)
}

/// Streaming (Welford) accumulator; agrees with [`compute_stats`] to
/// rounding error.
#[derive(Clone, Debug)]
pub struct StatsAccumulator {
    channels: Vec<String>,
    count: Vec<u64>,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl StatsAccumulator {
    pub fn new(channels: Vec<String>) -> Self {
        let c = channels.len();
        Self {
            channels,
            count: vec![0; c],
            mean: vec![0.0; c],
            m2: vec![0.0; c],
        }
    }

    pub fn push(&mut self, g: &GridTensor) -> Result<()> {
        if g.channels() != self.channels.as_slice() {
            return Err(Error::Data("channel mismatch in stats accumulator".into()));
        }
        for ch in 0..self.channels.len() {
            for &v in g.channel(ch) {
                let x = v as f64;
                self.count[ch] += 1;
                let delta = x - self.mean[ch];
                self.mean[ch] += delta / self.count[ch] as f64;
                self.m2[ch] += delta * (x - self.mean[ch]);
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<NormStats> {
        if self.count.iter().any(|&n| n == 0) {
            return Err(Error::Data("cannot compute statistics of an empty split".into()));
        }
        let std = self
            .m2
            .iter()
            .zip(&self.count)
            .map(|(m2, &n)| (m2 / n as f64).sqrt())
            .collect();
        NormStats::new(self.channels, self.mean, std)
    }
}
