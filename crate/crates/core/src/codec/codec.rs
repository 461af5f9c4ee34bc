//! compress / decompress for single grid instances.
//!
//! The decoder only ever sees what is in the container: ẑ is decoded under
//! the learned prior, the hyper-decoder turns ẑ into per-element (μ, σ), and
//! ŷ is decoded under those. The encoder derives its coding tables through
//! the very same calls on the very same ẑ, so both sides agree bit for bit.

use cvc_tensor::{Tape, Tensor};

use super::container::{CodingMode, Container};
use crate::data::{regular_coordinates, GridTensor, NormStats};
use crate::entropy::{quantize_infer, range_decode, range_encode, CdfCache, FactorizedPrior, QuantizedCdfTable};
use crate::error::{Error, Result};
use crate::model::{canonical_to_rows, rows_to_canonical, VaeFormer};

/// Clamped symbols above this fraction raise a warning in the report.
pub const CLAMP_WARN_FRACTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct CompressReport {
    pub total_bytes: usize,
    pub header_bytes: usize,
    pub z_bytes: usize,
    pub y_bytes: usize,
    pub y_symbols: usize,
    pub z_symbols: usize,
    pub clamped: usize,
    /// Σ −log₂ p of the coded symbols under the quantized tables.
    pub estimated_bits: f64,
    pub warning: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Compressed {
    pub bytes: Vec<u8>,
    pub report: CompressReport,
}

fn check_grid(model: &VaeFormer, stats: &NormStats, x: &GridTensor) -> Result<()> {
    let c = &model.config;
    if x.dims() != (c.channels, c.height, c.width) {
        return Err(Error::Data(format!(
            "grid {:?} does not match model grid {:?}",
            x.dims(),
            (c.channels, c.height, c.width)
        )));
    }
    if stats.channels.len() != c.channels {
        return Err(Error::Data("normalisation stats have the wrong channel count".into()));
    }
    Ok(())
}

/// Posterior mean rows `[lh·lw, L]` of one normalised instance.
fn latent_mean(model: &VaeFormer, xn: &GridTensor) -> Result<Vec<f32>> {
    let c = &model.config;
    let mut t = Tape::frozen(&model.params);
    let x = t.graph.constant(Tensor::new(vec![1, c.channels, c.height, c.width], xn.data().to_vec())?);
    let post = model.encode(&mut t, x)?;
    Ok(t.graph.value(post.mean).data().to_vec())
}

fn hyper_latent(model: &VaeFormer, y_rows: &[f32]) -> Result<Vec<f32>> {
    let mut t = Tape::frozen(&model.params);
    let y = t.graph.constant(Tensor::new(vec![y_rows.len() / model.config.latent_channels, model.config.latent_channels], y_rows.to_vec())?);
    let z = model.hyper_encode(&mut t, y)?;
    Ok(t.graph.value(z).data().to_vec())
}

/// Canonical-order (μ, σ) for ŷ from canonical-order ẑ symbols.
fn coding_params(model: &VaeFormer, z_symbols: &[i32]) -> Result<(Vec<f32>, Vec<f32>)> {
    let c = &model.config;
    let (hh, hw) = c.hyper_grid();
    let (lh, lw) = c.latent_grid();
    let lz = c.hyper_latent_channels;
    let z_rows: Vec<f32> = canonical_to_rows(z_symbols, 1, lz, hh, hw).iter().map(|&s| s as f32).collect();
    let mut t = Tape::frozen(&model.params);
    let z = t.graph.constant(Tensor::new(vec![hh * hw, lz], z_rows)?);
    let coding = model.hyper_decode(&mut t, z)?;
    let l = c.latent_channels;
    Ok((
        rows_to_canonical(t.graph.value(coding.mean).data(), 1, l, lh, lw),
        rows_to_canonical(t.graph.value(coding.spread).data(), 1, l, lh, lw),
    ))
}

/// Reconstruction (denormalised) from canonical-order ŷ symbols.
fn reconstruct(model: &VaeFormer, stats: &NormStats, y_symbols: &[i32]) -> Result<GridTensor> {
    let c = &model.config;
    let (lh, lw) = c.latent_grid();
    let l = c.latent_channels;
    let rows: Vec<f32> = canonical_to_rows(y_symbols, 1, l, lh, lw).iter().map(|&s| s as f32).collect();
    let mut t = Tape::frozen(&model.params);
    let y = t.graph.constant(Tensor::new(vec![lh * lw, l], rows)?);
    let xh = model.decode(&mut t, y)?;
    let (lat, lon) = regular_coordinates(c.height, c.width);
    let grid = GridTensor::new(stats.channels.clone(), lat, lon, t.graph.value(xh).data().to_vec())?;
    stats.denormalize(&grid)
}

fn y_tables(cache: &mut CdfCache, means: &[f32], scales: &[f32]) -> Vec<std::sync::Arc<QuantizedCdfTable>> {
    means
        .iter()
        .zip(scales)
        .map(|(&m, &s)| cache.get(m as f64, s as f64))
        .collect()
}

fn estimate(tables: &[std::sync::Arc<QuantizedCdfTable>], symbols: &[i32]) -> f64 {
    tables.iter().zip(symbols).map(|(t, &s)| t.bits(s)).sum()
}

/// Quantized latent symbols of one instance, canonical order, plus clamps.
pub fn quantized_latent(model: &VaeFormer, stats: &NormStats, x: &GridTensor) -> Result<(Vec<i32>, usize)> {
    check_grid(model, stats, x)?;
    let c = &model.config;
    let (lh, lw) = c.latent_grid();
    let mean_rows = latent_mean(model, &stats.normalize(x)?)?;
    let q = quantize_infer(&rows_to_canonical(&mean_rows, 1, c.latent_channels, lh, lw), c.symbol_min, c.symbol_max);
    Ok((q.symbols, q.clamped))
}

/// Direct quantized forward pass: x → round(μ_x) → decoder, no bitstream.
pub fn reconstruct_quantized(model: &VaeFormer, stats: &NormStats, x: &GridTensor) -> Result<GridTensor> {
    let (symbols, _) = quantized_latent(model, stats, x)?;
    reconstruct(model, stats, &symbols)
}

fn header(model: &VaeFormer, stats: &NormStats, x: &GridTensor, mode: CodingMode) -> Result<Container> {
    let (ch, h, w) = x.dims();
    let dim = |v: usize| u16::try_from(v).map_err(|_| Error::Container(format!("dimension {v} exceeds u16")));
    Ok(Container {
        mode,
        channels: dim(ch)?,
        height: dim(h)?,
        width: dim(w)?,
        config_hash: model.config.hash(),
        stats_hash: stats.hash(),
        lambda: model.config.lambda as f32,
        channel_names: x.channels().to_vec(),
        prior: Vec::new(),
        z_payload: Vec::new(),
        y_payload: Vec::new(),
    })
}

fn finish(container: Container, y_symbols: usize, z_symbols: usize, clamped: usize, estimated_bits: f64) -> Result<Compressed> {
    let bytes = container.to_bytes()?;
    let fraction = clamped as f64 / (y_symbols + z_symbols).max(1) as f64;
    let warning = (fraction > CLAMP_WARN_FRACTION).then(|| {
        format!(
            "{clamped} of {} symbols ({:.3}%) were clamped to the alphabet",
            y_symbols + z_symbols,
            100.0 * fraction
        )
    });
    let report = CompressReport {
        total_bytes: bytes.len(),
        header_bytes: container.header_len(),
        z_bytes: container.z_payload.len(),
        y_bytes: container.y_payload.len(),
        y_symbols,
        z_symbols,
        clamped,
        estimated_bits,
        warning,
    };
    Ok(Compressed { bytes, report })
}

/// Hyperprior coding of one instance.
pub fn compress(model: &VaeFormer, stats: &NormStats, x: &GridTensor) -> Result<Compressed> {
    check_grid(model, stats, x)?;
    let c = &model.config;
    let (lh, lw) = c.latent_grid();
    let (hh, hw) = c.hyper_grid();
    let (smin, smax) = (c.symbol_min, c.symbol_max);
    let mean_rows = latent_mean(model, &stats.normalize(x)?)?;
    let y = quantize_infer(&rows_to_canonical(&mean_rows, 1, c.latent_channels, lh, lw), smin, smax);
    let z_rows = hyper_latent(model, &mean_rows)?;
    let z = quantize_infer(&rows_to_canonical(&z_rows, 1, c.hyper_latent_channels, hh, hw), smin, smax);

    let mut cache = CdfCache::new(smin, smax);
    let prior_tables = model.prior().tables(&mut cache);
    let per = hh * hw;
    let z_payload = range_encode(&z.symbols, |i| &prior_tables[i / per])?;
    let mut bits = z.symbols.iter().enumerate().map(|(i, &s)| prior_tables[i / per].bits(s)).sum::<f64>();

    let (means, scales) = coding_params(model, &z.symbols)?;
    let tables = y_tables(&mut cache, &means, &scales);
    let y_payload = range_encode(&y.symbols, |i| &tables[i])?;
    bits += estimate(&tables, &y.symbols);

    let mut container = header(model, stats, x, CodingMode::Hyperprior)?;
    container.z_payload = z_payload;
    container.y_payload = y_payload;
    finish(container, y.symbols.len(), z.symbols.len(), y.clamped + z.clamped, bits)
}

/// Baseline coding without the hyper-prior: ŷ under one Gaussian per latent
/// channel, stored in the header.
pub fn compress_factorized(model: &VaeFormer, stats: &NormStats, prior: &FactorizedPrior, x: &GridTensor) -> Result<Compressed> {
    let c = &model.config;
    if prior.channels() != c.latent_channels {
        return Err(Error::Config("factorized prior must have one entry per latent channel".into()));
    }
    let (symbols, clamped) = quantized_latent(model, stats, x)?;
    let stored: Vec<(f32, f32)> = prior.loc.iter().zip(&prior.scale).map(|(&m, &s)| (m as f32, s as f32)).collect();
    let tables = stored_prior_tables(&stored, c.symbol_min, c.symbol_max);
    let (lh, lw) = c.latent_grid();
    let per = lh * lw;
    let y_payload = range_encode(&symbols, |i| &tables[i / per])?;
    let bits = symbols.iter().enumerate().map(|(i, &s)| tables[i / per].bits(s)).sum();
    let mut container = header(model, stats, x, CodingMode::Factorized)?;
    container.prior = stored;
    container.y_payload = y_payload;
    finish(container, symbols.len(), 0, clamped, bits)
}

fn stored_prior_tables(prior: &[(f32, f32)], smin: i32, smax: i32) -> Vec<QuantizedCdfTable> {
    prior
        .iter()
        .map(|&(m, s)| QuantizedCdfTable::from_gaussian(m as f64, s as f64, smin, smax))
        .collect()
}

/// Moment-fitted per-channel prior over the quantized latents of `grids`.
pub fn fit_factorized_prior(model: &VaeFormer, stats: &NormStats, grids: &[GridTensor]) -> Result<FactorizedPrior> {
    let c = &model.config;
    let (lh, lw) = c.latent_grid();
    let per = lh * lw;
    let l = c.latent_channels;
    let mut by_channel = vec![Vec::new(); l];
    for g in grids {
        let (s, _) = quantized_latent(model, stats, g)?;
        for (ch, dst) in by_channel.iter_mut().enumerate() {
            dst.extend_from_slice(&s[ch * per..(ch + 1) * per]);
        }
    }
    let n = by_channel[0].len();
    let flat: Vec<i32> = by_channel.concat();
    Ok(FactorizedPrior::fit(&flat, l, n))
}

/// Inverse of [`compress`] and [`compress_factorized`].
pub fn decompress(model: &VaeFormer, stats: &NormStats, bytes: &[u8]) -> Result<GridTensor> {
    let container = Container::from_bytes(bytes)?;
    let c = &model.config;
    let expected = model.config.hash();
    if container.config_hash != expected {
        return Err(Error::HashMismatch {
            what: "model config",
            expected,
            found: container.config_hash,
        });
    }
    let expected = stats.hash();
    if container.stats_hash != expected {
        return Err(Error::HashMismatch {
            what: "normalisation stats",
            expected,
            found: container.stats_hash,
        });
    }
    let dims = (container.channels as usize, container.height as usize, container.width as usize);
    if dims != (c.channels, c.height, c.width) || container.channel_names != stats.channels {
        return Err(Error::Container("grid header does not match the model and stats".into()));
    }
    let (smin, smax) = (c.symbol_min, c.symbol_max);
    let (lh, lw) = c.latent_grid();
    let ny = c.latent_channels * lh * lw;
    let y_symbols = match container.mode {
        CodingMode::Hyperprior => {
            let (hh, hw) = c.hyper_grid();
            let per = hh * hw;
            let mut cache = CdfCache::new(smin, smax);
            let prior_tables = model.prior().tables(&mut cache);
            let z = range_decode(&container.z_payload, c.hyper_latent_channels * per, |i| &prior_tables[i / per])?;
            let (means, scales) = coding_params(model, &z)?;
            let tables = y_tables(&mut cache, &means, &scales);
            range_decode(&container.y_payload, ny, |i| &tables[i])?
        }
        CodingMode::Factorized => {
            if container.prior.len() != c.latent_channels || !container.z_payload.is_empty() {
                return Err(Error::Container("factorized container has inconsistent prior table".into()));
            }
            let tables = stored_prior_tables(&container.prior, smin, smax);
            let per = lh * lw;
            range_decode(&container.y_payload, ny, |i| &tables[i / per])?
        }
    };
    reconstruct(model, stats, &y_symbols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{compute_stats, generate, SyntheticSpec};
    use crate::model::ModelConfig;

    fn setup() -> (VaeFormer, NormStats, Vec<GridTensor>) {
        let model = VaeFormer::new(ModelConfig::tiny()).unwrap();
        let c = &model.config;
        let mut spec = SyntheticSpec::desk(c.channels, c.height, c.width, 3);
        spec.train = 4;
        spec.val = 1;
        spec.test = 2;
        let ds = generate(&spec).unwrap();
        let stats = compute_stats(&ds.train).unwrap();
        (model, stats, ds.test)
    }

    #[test]
    fn roundtrip_equals_direct_forward() {
        let (model, stats, test) = setup();
        for x in &test {
            let a = compress(&model, &stats, x).unwrap();
            let b = compress(&model, &stats, x).unwrap();
            assert_eq!(a.bytes, b.bytes);
            let realized = 8.0 * (a.report.y_bytes + a.report.z_bytes) as f64;
            assert!(realized >= a.report.estimated_bits - 2.0);
            let back = decompress(&model, &stats, &a.bytes).unwrap();
            let direct = reconstruct_quantized(&model, &stats, x).unwrap();
            assert_eq!(back.data(), direct.data());
            assert_eq!(back.dims(), x.dims());
        }
    }

    #[test]
    fn factorized_roundtrip() {
        let (model, stats, test) = setup();
        let prior = fit_factorized_prior(&model, &stats, &test).unwrap();
        let a = compress_factorized(&model, &stats, &prior, &test[0]).unwrap();
        let back = decompress(&model, &stats, &a.bytes).unwrap();
        assert_eq!(back.data(), reconstruct_quantized(&model, &stats, &test[0]).unwrap().data());
    }

    #[test]
    fn mismatched_model_or_stats_is_rejected() {
        let (model, stats, test) = setup();
        let a = compress(&model, &stats, &test[0]).unwrap();
        let mut cfg = model.config.clone();
        cfg.lambda = 3.0;
        let other = VaeFormer::new(cfg).unwrap();
        assert!(matches!(decompress(&other, &stats, &a.bytes), Err(Error::HashMismatch { .. })));
        let mut s2 = stats.clone();
        s2.mean[0] += 1.0;
        assert!(matches!(decompress(&model, &s2, &a.bytes), Err(Error::HashMismatch { .. })));
    }
}
