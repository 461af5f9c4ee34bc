//! Whole-split evaluation through the real bitstream.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use super::scores::{bpsp_and_ratio, overall_mse, rqe, sedi, weighted_rmse, Tail, SEDI_QUANTILES};
use crate::codec::{compress, compress_factorized, decompress};
use crate::data::{GridTensor, NormStats};
use crate::entropy::FactorizedPrior;
use crate::error::{Error, Result};
use crate::model::VaeFormer;

/// Which entropy model codes the latent.
#[derive(Clone, Copy, Debug)]
pub enum Coder<'a> {
    Hyperprior,
    Factorized(&'a FactorizedPrior),
}

#[derive(Clone, Debug, Serialize)]
pub struct ChannelScores {
    pub name: String,
    pub weighted_rmse: f64,
    /// Computed on normalised fields so channels are comparable.
    pub rqe: f64,
    /// (quantile, SEDI) pairs.
    pub sedi: Vec<(f64, f64)>,
    pub sedi_degenerate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub instances: usize,
    pub mode: String,
    pub lambda: f64,
    pub overall_mse_x100: f64,
    pub compression_ratio: f64,
    pub bpsp: f64,
    pub total_bytes: usize,
    pub values: usize,
    pub channels: Vec<ChannelScores>,
    pub encode_seconds: f64,
    pub decode_seconds: f64,
    pub clamped_symbols: usize,
    pub warnings: Vec<String>,
}

/// Compresses and decompresses every grid, then scores the reconstructions.
pub fn evaluate(model: &VaeFormer, stats: &NormStats, grids: &[GridTensor], coder: Coder) -> Result<(EvalReport, Vec<GridTensor>)> {
    if grids.is_empty() {
        return Err(Error::Data("nothing to evaluate".into()));
    }
    let (mut enc_t, mut dec_t) = (0.0, 0.0);
    let (mut bytes, mut clamped) = (0usize, 0usize);
    let mut warnings = Vec::new();
    let mut recon = Vec::with_capacity(grids.len());
    for (i, x) in grids.iter().enumerate() {
        let t = Instant::now();
        let c = match coder {
            Coder::Hyperprior => compress(model, stats, x)?,
            Coder::Factorized(p) => compress_factorized(model, stats, p, x)?,
        };
        enc_t += t.elapsed().as_secs_f64();
        bytes += c.bytes.len();
        clamped += c.report.clamped;
        if let Some(w) = c.report.warning {
            warnings.push(format!("instance {i}: {w}"));
        }
        let t = Instant::now();
        recon.push(decompress(model, stats, &c.bytes)?);
        dec_t += t.elapsed().as_secs_f64();
    }
    let values = grids.iter().map(|g| g.len()).sum();
    let (bpsp, ratio) = bpsp_and_ratio(bytes, values, 32)?;
    let n = grids.len() as f64;
    let mut mse = 0.0;
    for (x, xh) in grids.iter().zip(&recon) {
        mse += overall_mse(x, xh, stats)?;
    }
    let mut channels = Vec::new();
    for (ch, name) in stats.channels.iter().enumerate() {
        let mut wr = 0.0;
        let mut rq = 0.0;
        let mut sd = vec![0.0; SEDI_QUANTILES.len()];
        let mut degenerate = false;
        for (x, xh) in grids.iter().zip(&recon) {
            wr += weighted_rmse(x, xh, ch)?;
            rq += rqe(&stats.normalize(x)?, &stats.normalize(xh)?, ch)?;
            for (k, &q) in SEDI_QUANTILES.iter().enumerate() {
                let s = sedi(x, xh, q, ch, Tail::Upper)?;
                sd[k] += s.value;
                degenerate |= s.degenerate;
            }
        }
        channels.push(ChannelScores {
            name: name.clone(),
            weighted_rmse: wr / n,
            rqe: rq / n,
            sedi: SEDI_QUANTILES.iter().zip(&sd).map(|(&q, &s)| (q, s / n)).collect(),
            sedi_degenerate: degenerate,
        });
    }
    let report = EvalReport {
        instances: grids.len(),
        mode: match coder {
            Coder::Hyperprior => "hyperprior".into(),
            Coder::Factorized(_) => "factorized".into(),
        },
        lambda: model.config.lambda,
        overall_mse_x100: mse / n,
        compression_ratio: ratio,
        bpsp,
        total_bytes: bytes,
        values,
        channels,
        encode_seconds: enc_t,
        decode_seconds: dec_t,
        clamped_symbols: clamped,
        warnings,
    };
    Ok((report, recon))
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Table-2-shaped TSV: one summary row, then one row per channel.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode\tlambda\toverall_mse_x100\tratio\tbpsp");
        let _ = writeln!(
            s,
            "{}\t{}\t{:.6}\t{:.4}\t{:.6}",
            self.mode, self.lambda, self.overall_mse_x100, self.compression_ratio, self.bpsp
        );
        let _ = writeln!(s);
        let mut head = "channel\tweighted_rmse\trqe".to_string();
        for q in SEDI_QUANTILES {
            let _ = write!(head, "\tsedi_{q}");
        }
        let _ = writeln!(s, "{head}");
        for c in &self.channels {
            let _ = write!(s, "{}\t{:.6}\t{:.6}", c.name, c.weighted_rmse, c.rqe);
            for (_, v) in &c.sedi {
                let _ = write!(s, "\t{v:.6}");
            }
            let _ = writeln!(s);
        }
        s
    }

    /// Long-format SEDI curves (channel, quantile, value) for plotting.
    pub fn sedi_plot_data(&self) -> String {
        let mut s = "channel\tquantile\tsedi\n".to_string();
        for c in &self.channels {
            for (q, v) in &c.sedi {
                let _ = writeln!(s, "{}\t{q}\t{v:.6}", c.name);
            }
        }
        s
    }
}
