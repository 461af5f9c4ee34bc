//! Synthetic atmosphere-like fields.
//!
//! Each instance is a cos(latitude) mean profile per channel, plus spatially
//! correlated noise with a power-law spectrum, mixed across channels by a
//! coupling matrix, plus a few localized heavy-tailed anomalies so that
//! extreme-value metrics have something to find.
//!
//! Randomness comes from ChaCha8 seeded with `seed`, one stream per split
//! (train 0, val 1, test 2), instances drawn sequentially.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::data::grid::{regular_coordinates, GridTensor};
use crate::data::gridfile;
use crate::error::{Error, Result};

const DEFAULT_NAMES: [&str; 8] = ["t2m", "msl", "u10", "v10", "z500", "t850", "q700", "tcwv"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Power-law exponent of the noise spectrum per channel; larger is smoother.
    pub spectral_slope: Vec<f64>,
    /// Equator-to-pole amplitude of the mean profile per channel.
    pub lat_amplitude: Vec<f64>,
    /// Constant offset per channel (gives channels different physical units).
    pub offset: Vec<f64>,
    /// Standard deviation of the correlated noise per channel.
    pub noise_std: Vec<f64>,
    /// Row-major C×C mixing matrix applied to the unit noise fields.
    pub coupling: Vec<f64>,
    /// Expected number of anomalies per instance.
    pub anomaly_rate: f64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SyntheticSpec {
    /// Desk-scale defaults for a C×H×W grid.
    pub fn desk(channels: usize, height: usize, width: usize, seed: u64) -> Self {
        let c = channels;
        let mut coupling = vec![0.0; c * c];
        for i in 0..c {
            coupling[i * c + i] = 1.0;
            if i > 0 {
                // each channel shares some structure with its neighbour
                coupling[i * c + i - 1] = 0.6;
            }
        }
        Self {
            seed,
            channels,
            height,
            width,
            spectral_slope: (0..c).map(|i| 3.0 + 0.25 * (i % 4) as f64).collect(),
            lat_amplitude: (0..c).map(|i| 10.0 + 5.0 * (i % 3) as f64).collect(),
            offset: (0..c).map(|i| [280.0, 1000.0, 0.0, 0.0, 5500.0, 270.0, 3.0, 20.0][i % 8]).collect(),
            noise_std: (0..c).map(|i| 2.0 + (i % 5) as f64).collect(),
            coupling,
            anomaly_rate: 2.0,
            train: 128,
            val: 16,
            test: 16,
        }
    }

    pub fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.channels;
        if c == 0 || self.height < 4 || self.width < 8 {
            return Err(Error::Config(format!(
                "synthetic grid {}x{}x{} too small (need C ≥ 1, H ≥ 4, W ≥ 8)",
                c, self.height, self.width
            )));
        }
        for (name, len) in [
            ("spectral_slope", self.spectral_slope.len()),
            ("lat_amplitude", self.lat_amplitude.len()),
            ("offset", self.offset.len()),
            ("noise_std", self.noise_std.len()),
        ] {
            if len != c {
                return Err(Error::Config(format!("{name} has {len} entries, expected {c}")));
            }
        }
        if self.coupling.len() != c * c {
            return Err(Error::Config(format!("coupling must have {} entries", c * c)));
        }
        if self.noise_std.iter().any(|&s| !(s > 0.0)) || !(self.anomaly_rate >= 0.0) {
            return Err(Error::Config("noise_std must be positive and anomaly_rate non-negative".into()));
        }
        Ok(())
    }

    pub fn channel_names(&self) -> Vec<String> {
        (0..self.channels)
            .map(|i| match DEFAULT_NAMES.get(i) {
                Some(n) => n.to_string(),
                None => format!("c{i}"),
            })
            .collect()
    }
}

/// All three splits in memory.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub train: Vec<GridTensor>,
    pub val: Vec<GridTensor>,
    pub test: Vec<GridTensor>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[GridTensor] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// Writes `<dir>/<split>/<index:05>.grd`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        for split in Split::ALL {
            let sub = dir.as_ref().join(split.name());
            std::fs::create_dir_all(&sub)?;
            for (i, g) in self.split(split).iter().enumerate() {
                gridfile::write(sub.join(format!("{i:05}.grd")), g)?;
            }
        }
        Ok(())
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        Ok(Self {
            train: read_split(&dir, Split::Train)?,
            val: read_split(&dir, Split::Val)?,
            test: read_split(&dir, Split::Test)?,
        })
    }
}

/// Grid files of one split, in file-name order. A missing directory is an
/// empty split.
pub fn read_split(dir: impl AsRef<Path>, split: Split) -> Result<Vec<GridTensor>> {
    let sub = dir.as_ref().join(split.name());
    if !sub.exists() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(&sub)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "grd"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            gridfile::read(p).map_err(|e| Error::Data(format!("{}: {e}", p.display())))
        })
        .collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut gen = Generator::new(spec);
    Ok(Dataset {
        train: gen.split(Split::Train),
        val: gen.split(Split::Val),
        test: gen.split(Split::Test),
    })
}

struct Generator<'a> {
    spec: &'a SyntheticSpec,
    lat: Vec<f64>,
    lon: Vec<f64>,
    names: Vec<String>,
    /// Spectral amplitude per channel, H×W, unit total variance.
    filters: Vec<Vec<f64>>,
    planner: FftPlanner<f64>,
}

impl<'a> Generator<'a> {
    fn new(spec: &'a SyntheticSpec) -> Self {
        let (h, w) = (spec.height, spec.width);
        let (lat, lon) = regular_coordinates(h, w);
        let filters = spec
            .spectral_slope
            .iter()
            .map(|&slope| {
                let mut f: Vec<f64> = (0..h * w)
                    .map(|i| {
                        let (ky, kx) = (wrap(i / w, h), wrap(i % w, w));
                        let k2 = (ky * ky + kx * kx) as f64;
                        if k2 == 0.0 {
                            0.0
                        } else {
                            k2.powf(-slope / 4.0)
                        }
                    })
                    .collect();
                // white noise of unit variance through the filter keeps
                // variance Σ|f|²/N; normalise that to one
                let power = f.iter().map(|a| a * a).sum::<f64>() / (h * w) as f64;
                let norm = 1.0 / power.sqrt();
                f.iter_mut().for_each(|a| *a *= norm);
                f
            })
            .collect();
        Self {
            spec,
            lat,
            lon,
            names: spec.channel_names(),
            filters,
            planner: FftPlanner::new(),
        }
    }

    fn split(&mut self, split: Split) -> Vec<GridTensor> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(split.stream());
        (0..self.spec.count(split)).map(|_| self.instance(&mut rng)).collect()
    }

    fn smooth_noise(&mut self, rng: &mut ChaCha8Rng, filter: &[f64]) -> Vec<f64> {
        let (h, w) = (self.spec.height, self.spec.width);
        let mut buf: Vec<Complex<f64>> = (0..h * w)
            .map(|_| Complex::new(StandardNormal.sample(rng), 0.0))
            .collect();
        fft2(&mut self.planner, &mut buf, h, w, false);
        for (v, &a) in buf.iter_mut().zip(filter) {
            *v *= a;
        }
        fft2(&mut self.planner, &mut buf, h, w, true);
        let n = (h * w) as f64;
        buf.iter().map(|v| v.re / n).collect()
    }

    fn instance(&mut self, rng: &mut ChaCha8Rng) -> GridTensor {
        let spec = self.spec;
        let (c, h, w) = (spec.channels, spec.height, spec.width);
        let hw = h * w;
        let filters = std::mem::take(&mut self.filters);
        let unit: Vec<Vec<f64>> = filters.iter().map(|f| self.smooth_noise(rng, f)).collect();
        self.filters = filters;

        let mut out = vec![0f64; c * hw];
        for ch in 0..c {
            let row = &spec.coupling[ch * c..(ch + 1) * c];
            let norm = row.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
            for (src, &a) in unit.iter().zip(row) {
                if a == 0.0 {
                    continue;
                }
                let k = a / norm * spec.noise_std[ch];
                for (o, &v) in out[ch * hw..(ch + 1) * hw].iter_mut().zip(src) {
                    *o += k * v;
                }
            }
            for (i, &lat) in self.lat.iter().enumerate() {
                let mean = spec.offset[ch] + spec.lat_amplitude[ch] * lat.to_radians().cos();
                out[ch * hw + i * w..ch * hw + (i + 1) * w]
                    .iter_mut()
                    .for_each(|v| *v += mean);
            }
        }

        // Poisson-distributed anomaly count via sequential thinning
        let mut n_anom = 0usize;
        let mut acc = rng.gen::<f64>();
        let threshold = (-spec.anomaly_rate).exp();
        while acc > threshold {
            n_anom += 1;
            acc *= rng.gen::<f64>();
        }
        let tail = Pareto::new(1.0, 2.5).expect("valid Pareto");
        for _ in 0..n_anom {
            let ch = rng.gen_range(0..c);
            let (ci, cj) = (rng.gen_range(0..h), rng.gen_range(0..w));
            let radius = rng.gen_range(1.0..3.0f64);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let amp = sign * 2.0 * tail.sample(rng) * spec.noise_std[ch];
            for i in 0..h {
                for j in 0..w {
                    let di = i as f64 - ci as f64;
                    // longitude is periodic
                    let dj = {
                        let d = (j as f64 - cj as f64).abs();
                        d.min(w as f64 - d)
                    };
                    let r2 = (di * di + dj * dj) / (radius * radius);
                    if r2 < 9.0 {
                        out[ch * hw + i * w + j] += amp * (-0.5 * r2).exp();
                    }
                }
            }
        }

        GridTensor::new(
            self.names.clone(),
            self.lat.clone(),
            self.lon.clone(),
            out.into_iter().map(|v| v as f32).collect(),
        )
        .expect("generator produces consistent grids")
    }
}

/// Signed wavenumber for index `i` of an `n`-point transform.
fn wrap(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// In-place unnormalised 2-D FFT of a row-major h×w buffer.
fn fft2(planner: &mut FftPlanner<f64>, buf: &mut [Complex<f64>], h: usize, w: usize, inverse: bool) {
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    row_fft.process(buf);
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for j in 0..w {
        for i in 0..h {
            col[i] = buf[i * w + j];
        }
        col_fft.process(&mut col);
        for i in 0..h {
            buf[i * w + j] = col[i];
        }
    }
}
