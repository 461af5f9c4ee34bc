//! Composite runs: the two-phase ablation and the λ sweep.

use serde::Serialize;

use crate::codec::fit_factorized_prior;
use crate::data::{GridTensor, NormStats};
use crate::error::Result;
use crate::metrics::{evaluate, Coder, EvalReport};
use crate::model::VaeFormer;
use crate::train::{run_phase, RunPaths, TrainConfig, TrainData};

/// Pretrained model with direct factorized coding of ŷ against the same
/// model after rate-distortion fine-tuning.
#[derive(Clone, Debug, Serialize)]
pub struct Ablation {
    pub baseline: EvalReport,
    pub finetuned: EvalReport,
}

impl Ablation {
    pub fn ratio_gain(&self) -> f64 {
        self.finetuned.compression_ratio / self.baseline.compression_ratio
    }

    /// Fine-tuned MSE relative to the baseline's (negative is better).
    pub fn mse_change(&self) -> f64 {
        self.finetuned.overall_mse_x100 / self.baseline.overall_mse_x100 - 1.0
    }
}

/// Codes `test` with a factorized prior fitted on `fit_on`.
pub fn baseline_report(pretrained: &VaeFormer, stats: &NormStats, fit_on: &[GridTensor], test: &[GridTensor]) -> Result<EvalReport> {
    let prior = fit_factorized_prior(pretrained, stats, fit_on)?;
    Ok(evaluate(pretrained, stats, test, Coder::Factorized(&prior))?.0)
}

/// Fine-tunes a copy of `pretrained` and compares it with the baseline.
#[allow(clippy::too_many_arguments)]
pub fn ablation(
    pretrained: &VaeFormer,
    stats: &NormStats,
    train_grids: &[GridTensor],
    train: &TrainData,
    val: &TrainData,
    test: &[GridTensor],
    finetune: &TrainConfig,
    out: Option<&RunPaths>,
) -> Result<(Ablation, VaeFormer)> {
    let baseline = baseline_report(pretrained, stats, train_grids, test)?;
    let mut model = pretrained.clone();
    run_phase(finetune, &mut model, train, val, out, Some(stats.hash()), false)?;
    let finetuned = evaluate(&model, stats, test, Coder::Hyperprior)?.0;
    Ok((Ablation { baseline, finetuned }, model))
}

#[derive(Clone, Debug, Serialize)]
pub struct RdPoint {
    pub lambda: f64,
    pub bpsp: f64,
    pub compression_ratio: f64,
    pub overall_mse_x100: f64,
}

/// Fine-tunes one model per λ from the same pretrained weights and measures
/// each through the real bitstream.
#[allow(clippy::too_many_arguments)]
pub fn rd_sweep(
    pretrained: &VaeFormer,
    stats: &NormStats,
    train: &TrainData,
    val: &TrainData,
    test: &[GridTensor],
    base: &TrainConfig,
    lambdas: &[f64],
    out: Option<&std::path::Path>,
) -> Result<Vec<(RdPoint, VaeFormer)>> {
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let mut cfg = base.clone();
        cfg.lambda = lambda;
        let mut model = pretrained.clone();
        let paths = out.map(|d| RunPaths::new(d.join(format!("lambda_{lambda}"))));
        run_phase(&cfg, &mut model, train, val, paths.as_ref(), Some(stats.hash()), false)?;
        let (report, _) = evaluate(&model, stats, test, Coder::Hyperprior)?;
        points.push((
            RdPoint {
                lambda,
                bpsp: report.bpsp,
                compression_ratio: report.compression_ratio,
                overall_mse_x100: report.overall_mse_x100,
            },
            model,
        ));
    }
    Ok(points)
}

/// True when no point is strictly worse than another in both rate and
/// distortion.
pub fn is_monotone_frontier(points: &[RdPoint]) -> bool {
    points.iter().all(|a| {
        points
            .iter()
            .all(|b| !(b.bpsp < a.bpsp && b.overall_mse_x100 < a.overall_mse_x100))
    })
}

pub fn rd_table(points: &[RdPoint]) -> String {
    let mut s = "lambda\tbpsp\tratio\toverall_mse_x100\n".to_string();
    for p in points {
        s.push_str(&format!(
            "{}\t{:.6}\t{:.4}\t{:.6}\n",
            p.lambda, p.bpsp, p.compression_ratio, p.overall_mse_x100
        ));
    }
    s
}
