//! The training loop shared by both phases.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cvc_tensor::{Checkpoint, ParamGrads, ParamStore, Tape, Tensor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::loss::{pretrain_loss, rd_loss, LossParts, PretrainNoise, RdNoise, DEFAULT_BETA};
use super::optim::AdamW;
use super::schedule::LrSchedule;
use crate::data::{GridTensor, NormStats};
use crate::error::{Error, Result};
use crate::model::VaeFormer;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pretrain,
    Finetune,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Pretrain => "pretrain",
            Phase::Finetune => "finetune",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub phase: Phase,
    pub lr: f64,
    pub warmup: usize,
    pub steps: usize,
    pub batch: usize,
    pub weight_decay: f64,
    /// Latent-rate weight used in fine-tuning; written into the model config.
    pub lambda: f64,
    /// KL weight used in pretraining.
    pub beta: f64,
    pub seed: u64,
    pub clip_norm: f64,
    pub val_every: usize,
    pub checkpoint_every: usize,
    /// Cap on validation items per evaluation (0 = all).
    pub val_items: usize,
    /// Keep the latent encoder fixed during fine-tuning.
    pub freeze_encoder: bool,
}

impl TrainConfig {
    pub fn pretrain() -> Self {
        Self {
            phase: Phase::Pretrain,
            lr: 2e-4,
            warmup: 500,
            steps: 20_000,
            batch: 16,
            weight_decay: 1e-4,
            lambda: 1.0,
            beta: DEFAULT_BETA,
            seed: 0,
            clip_norm: 1.0,
            val_every: 500,
            checkpoint_every: 500,
            val_items: 0,
            freeze_encoder: true,
        }
    }

    pub fn finetune() -> Self {
        Self {
            phase: Phase::Finetune,
            lr: 5e-5,
            warmup: 200,
            steps: 5_000,
            ..Self::pretrain()
        }
    }

    pub fn for_phase(phase: Phase) -> Self {
        match phase {
            Phase::Pretrain => Self::pretrain(),
            Phase::Finetune => Self::finetune(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.steps == 0 || self.warmup >= self.steps {
            return bad("warmup steps must be fewer than total steps");
        }
        if !(self.lr > 0.0) || self.weight_decay < 0.0 || !(self.clip_norm > 0.0) {
            return bad("learning rate and clip norm must be positive, weight decay non-negative");
        }
        if !(self.lambda > 0.0) || self.beta < 0.0 {
            return bad("lambda must be positive and beta non-negative");
        }
        if self.batch == 0 || self.val_every == 0 || self.checkpoint_every == 0 {
            return bad("batch size and cadences must be positive");
        }
        Ok(())
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            peak: self.lr,
            warmup: self.warmup,
            total: self.steps,
        }
    }
}

/// Normalised instances flattened to `C·H·W` values each.
#[derive(Clone, Debug)]
pub struct TrainData {
    pub items: Vec<Vec<f32>>,
    pub dims: (usize, usize, usize),
}

impl TrainData {
    pub fn from_grids(grids: &[GridTensor], stats: &NormStats) -> Result<Self> {
        let first = grids.first().ok_or_else(|| Error::Data("empty split".into()))?;
        let dims = first.dims();
        let items = grids
            .iter()
            .map(|g| {
                if g.dims() != dims {
                    return Err(Error::Data("split mixes grid shapes".into()));
                }
                Ok(stats.normalize(g)?.data().to_vec())
            })
            .collect::<Result<_>>()?;
        Ok(Self { items, dims })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn batch(&self, idx: &[usize]) -> Tensor<f32> {
        let (c, h, w) = self.dims;
        let mut data = Vec::with_capacity(idx.len() * c * h * w);
        for &i in idx {
            data.extend_from_slice(&self.items[i]);
        }
        Tensor::new(vec![idx.len(), c, h, w], data).expect("consistent item sizes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRecord {
    pub step: usize,
    pub phase: Phase,
    /// "train" or "val".
    pub kind: String,
    #[serde(flatten)]
    pub loss: LossParts,
    pub lr: f64,
    pub grad_norm: f64,
    /// Gradient norm over the latent-encoder parameters.
    pub encoder_grad_norm: f64,
    pub wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct PhaseReport {
    pub train_losses: Vec<f64>,
    pub best_step: usize,
    pub best_val: f64,
    pub val_history: Vec<(usize, f64)>,
    pub last_step: usize,
}

impl PhaseReport {
    /// Mean of the first and of the last `window` training losses.
    pub fn smoothed_start_end(&self, window: usize) -> (f64, f64) {
        let n = self.train_losses.len();
        let w = window.min(n).max(1);
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len().max(1) as f64;
        (mean(&self.train_losses[..w.min(n)]), mean(&self.train_losses[n.saturating_sub(w)..]))
    }
}

/// Shards for data-parallel gradient evaluation, from `CVC_THREADS`.
pub fn thread_count() -> usize {
    std::env::var("CVC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

fn item_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const VAL_STREAM: u64 = 1 << 62;
const EPOCH_STREAM: u64 = 1 << 61;

enum Noise {
    Pre(PretrainNoise<f32>),
    Rd(RdNoise<f32>),
}

fn make_noise(model: &VaeFormer, phase: Phase, seed: u64, streams: &[u64]) -> Noise {
    let c = &model.config;
    let (th, tw) = c.token_grid();
    let (hh, hw) = c.hyper_grid();
    let ny = th * tw * c.latent_channels;
    let nz = hh * hw * c.hyper_latent_channels;
    let b = streams.len();
    match phase {
        Phase::Pretrain => {
            let mut eps = Vec::with_capacity(b * ny);
            for &s in streams {
                let mut rng = item_rng(seed, s);
                eps.extend((0..ny).map(|_| rng.sample::<f32, _>(StandardNormal)));
            }
            Noise::Pre(PretrainNoise {
                eps: Tensor::new(vec![b * th * tw, c.latent_channels], eps).unwrap(),
            })
        }
        Phase::Finetune => {
            let (mut y, mut z) = (Vec::with_capacity(b * ny), Vec::with_capacity(b * nz));
            for &s in streams {
                let mut rng = item_rng(seed, s);
                y.extend((0..ny).map(|_| rng.gen_range(-0.5f32..0.5)));
                z.extend((0..nz).map(|_| rng.gen_range(-0.5f32..0.5)));
            }
            Noise::Rd(RdNoise {
                y: Tensor::new(vec![b * th * tw, c.latent_channels], y).unwrap(),
                z: Tensor::new(vec![b * hh * hw, c.hyper_latent_channels], z).unwrap(),
            })
        }
    }
}

/// Loss and parameter gradients for one shard of a batch.
fn shard_grads(
    model: &VaeFormer,
    cfg: &TrainConfig,
    trainable: &[bool],
    x: Tensor<f32>,
    noise: &Noise,
    batch: usize,
    with_grad: bool,
) -> Result<(LossParts, Option<ParamGrads<f32>>)> {
    let mut tape = if with_grad {
        Tape::with_trainable(&model.params, trainable.to_vec())
    } else {
        Tape::frozen(&model.params)
    };
    let xv = tape.graph.constant(x);
    let loss = match noise {
        Noise::Pre(n) => pretrain_loss(model, &mut tape, xv, n, cfg.beta, batch)?,
        Noise::Rd(n) => rd_loss(model, &mut tape, xv, n, model.config.lambda, batch)?,
    };
    let parts = loss.parts(&tape);
    let grads = if with_grad {
        Some(tape.backward(loss.total)?)
    } else {
        None
    };
    Ok((parts, grads))
}

fn add_parts(a: &mut LossParts, b: &LossParts) {
    a.total += b.total;
    a.distortion += b.distortion;
    a.latent += b.latent;
    a.hyper += b.hyper;
    a.squared_error += b.squared_error;
    a.latent_raw += b.latent_raw;
}

/// Evaluates the phase loss (and optionally gradients) on `idx`, split over
/// `threads` shards whose results are reduced in shard order.
#[allow(clippy::too_many_arguments)]
fn batch_eval(
    model: &VaeFormer,
    cfg: &TrainConfig,
    trainable: &[bool],
    data: &TrainData,
    idx: &[usize],
    streams: &[u64],
    norm: usize,
    with_grad: bool,
    threads: usize,
) -> Result<(LossParts, Option<ParamGrads<f32>>)> {
    let shards = threads.min(idx.len()).max(1);
    let per = idx.len().div_ceil(shards);
    let run = |lo: usize, hi: usize| {
        let noise = make_noise(model, cfg.phase, cfg.seed, &streams[lo..hi]);
        shard_grads(model, cfg, trainable, data.batch(&idx[lo..hi]), &noise, norm, with_grad)
    };
    let results: Vec<Result<(LossParts, Option<ParamGrads<f32>>)>> = if shards == 1 {
        vec![run(0, idx.len())]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..shards)
                .map(|k| {
                    let (lo, hi) = (k * per, ((k + 1) * per).min(idx.len()));
                    let run = &run;
                    s.spawn(move || run(lo, hi))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("shard panicked")).collect()
        })
    };
    let mut parts = LossParts::default();
    let mut grads: Option<ParamGrads<f32>> = None;
    for r in results {
        let (p, g) = r?;
        add_parts(&mut parts, &p);
        if let Some(g) = g {
            match &mut grads {
                Some(acc) => acc.accumulate(&g),
                None => grads = Some(g),
            }
        }
    }
    Ok((parts, grads))
}

/// Validation loss: mean per-item phase loss with fixed noise.
pub fn validation_loss(model: &VaeFormer, cfg: &TrainConfig, val: &TrainData) -> Result<LossParts> {
    let n = if cfg.val_items == 0 {
        val.len()
    } else {
        cfg.val_items.min(val.len())
    };
    let mask = vec![false; model.params.len()];
    let mut total = LossParts::default();
    let idx: Vec<usize> = (0..n).collect();
    for chunk in idx.chunks(cfg.batch) {
        let streams: Vec<u64> = chunk.iter().map(|&i| VAL_STREAM + i as u64).collect();
        let (p, _) = batch_eval(model, cfg, &mask, val, chunk, &streams, n, false, thread_count())?;
        add_parts(&mut total, &p);
    }
    Ok(total)
}

/// Deterministic sample order: a fresh permutation per epoch.
struct Sampler {
    seed: u64,
    n: usize,
    epoch: Option<u64>,
    perm: Vec<usize>,
}

impl Sampler {
    fn index(&mut self, k: u64) -> usize {
        let epoch = k / self.n as u64;
        if self.epoch != Some(epoch) {
            self.perm = (0..self.n).collect();
            self.perm.shuffle(&mut item_rng(self.seed, EPOCH_STREAM + epoch));
            self.epoch = Some(epoch);
        }
        self.perm[(k % self.n as u64) as usize]
    }
}

#[derive(Serialize, Deserialize)]
struct ResumeMeta {
    step: usize,
    best_step: usize,
    best_val: f64,
}

fn optimizer_checkpoint(opt: &AdamW, params: &ParamStore<f32>, meta: &ResumeMeta) -> Checkpoint {
    let (m, v, t) = opt.state();
    let mut store = ParamStore::new();
    for (i, (_, p)) in params.iter().enumerate() {
        let shape = p.value.shape().to_vec();
        store.add(format!("m.{}", p.name), Tensor::new(shape.clone(), m[i].clone()).unwrap());
        store.add(format!("v.{}", p.name), Tensor::new(shape, v[i].clone()).unwrap());
        // step counts fit f32 exactly below 2^24
        store.add(format!("t.{}", p.name), Tensor::full(vec![1], t[i] as f32));
    }
    Checkpoint {
        metadata: toml::to_string(meta).unwrap(),
        params: store,
    }
}

fn restore_optimizer(opt: &mut AdamW, params: &ParamStore<f32>, ck: &Checkpoint) -> Result<ResumeMeta> {
    let meta: ResumeMeta =
        toml::from_str(&ck.metadata).map_err(|e| Error::Config(format!("optimizer state: {e}")))?;
    let get = |name: String| {
        ck.params
            .find(&name)
            .map(|id| ck.params.get(id).value.data().to_vec())
            .ok_or_else(|| Error::Config(format!("optimizer state lacks {name}")))
    };
    let mut m = Vec::new();
    let mut v = Vec::new();
    let mut t = Vec::new();
    for (_, p) in params.iter() {
        m.push(get(format!("m.{}", p.name))?);
        v.push(get(format!("v.{}", p.name))?);
        t.push(get(format!("t.{}", p.name))?[0] as u64);
    }
    if !opt.restore(m, v, t) {
        return Err(Error::Config("optimizer state does not match the model".into()));
    }
    Ok(meta)
}

/// Output locations of a phase run.
#[derive(Clone, Debug)]
pub struct RunPaths {
    pub dir: PathBuf,
}

impl RunPaths {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
    pub fn best(&self) -> PathBuf {
        self.dir.join("best.ckpt")
    }
    pub fn last(&self) -> PathBuf {
        self.dir.join("last.ckpt")
    }
    pub fn optimizer(&self) -> PathBuf {
        self.dir.join("optimizer.ckpt")
    }
    pub fn log(&self) -> PathBuf {
        self.dir.join("train_log.jsonl")
    }
}

/// Trains `model` for one phase. On return the model holds the weights with
/// the best validation loss.
///
/// With `out`, writes a JSONL log, the best and last checkpoints and the
/// optimizer state; with `resume`, continues from that state.
pub fn run_phase(
    cfg: &TrainConfig,
    model: &mut VaeFormer,
    train: &TrainData,
    val: &TrainData,
    out: Option<&RunPaths>,
    stats_hash: Option<u64>,
    resume: bool,
) -> Result<PhaseReport> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Data("training and validation splits must be nonempty".into()));
    }
    let c = &model.config;
    if train.dims != (c.channels, c.height, c.width) || val.dims != train.dims {
        return Err(Error::Data(format!(
            "data grid {:?} does not match model grid {:?}",
            train.dims,
            (c.channels, c.height, c.width)
        )));
    }
    if cfg.phase == Phase::Finetune {
        model.config.lambda = cfg.lambda;
    }
    let trainable: Vec<bool> = match cfg.phase {
        Phase::Finetune if cfg.freeze_encoder => model.mask_without_encoder(),
        _ => vec![true; model.params.len()],
    };
    let encoder: Vec<bool> = model.params.iter().map(|(_, p)| p.name.starts_with("enc.")).collect();
    let mut opt = AdamW::new(&model.params, cfg.weight_decay);
    let schedule = cfg.schedule();
    let threads = thread_count();
    let phase = cfg.phase.name();

    let mut start = 0;
    let mut best_val = f64::INFINITY;
    let mut best_step = 0;
    let mut best_params = model.params.clone();
    if let (Some(paths), true) = (out, resume) {
        if paths.optimizer().exists() {
            let (last, _) = VaeFormer::load(paths.last())?;
            model.load_weights(&last)?;
            model.config.lambda = last.config.lambda;
            let meta = restore_optimizer(&mut opt, &model.params, &Checkpoint::load(paths.optimizer())?)?;
            start = meta.step;
            best_val = meta.best_val;
            best_step = meta.best_step;
            if paths.best().exists() {
                best_params = VaeFormer::load(paths.best())?.0.params;
            }
        }
    }
    let mut log: Option<BufWriter<File>> = match out {
        Some(p) => {
            std::fs::create_dir_all(&p.dir)?;
            let f = OpenOptions::new()
                .create(true)
                .append(resume)
                .write(true)
                .truncate(!resume)
                .open(p.log())?;
            Some(BufWriter::new(f))
        }
        None => None,
    };
    let mut write_record = |rec: &TrainLogRecord| -> Result<()> {
        if let Some(w) = log.as_mut() {
            serde_json::to_writer(&mut *w, rec).map_err(|e| Error::Data(e.to_string()))?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        Ok(())
    };

    let mut sampler = Sampler {
        seed: cfg.seed,
        n: train.len(),
        epoch: None,
        perm: Vec::new(),
    };
    let clock = Instant::now();
    let mut report = PhaseReport {
        train_losses: Vec::new(),
        best_step,
        best_val,
        val_history: Vec::new(),
        last_step: start,
    };

    for step in start..cfg.steps {
        let lr = schedule.rate(step + 1);
        let ks: Vec<u64> = (0..cfg.batch as u64).map(|j| (step * cfg.batch) as u64 + j).collect();
        let idx: Vec<usize> = ks.iter().map(|&k| sampler.index(k)).collect();
        let (parts, grads) = batch_eval(model, cfg, &trainable, train, &idx, &ks, cfg.batch, true, threads)?;
        if !parts.total.is_finite() {
            return Err(Error::Numerical(format!("{phase} step {step}: non-finite loss {parts:?}")));
        }
        let mut grads = grads.expect("gradients requested");
        let grad_norm = grads.global_norm();
        if !grad_norm.is_finite() {
            return Err(Error::Numerical(format!("{phase} step {step}: non-finite gradient norm")));
        }
        let encoder_grad_norm = grads
            .grads
            .iter()
            .zip(&encoder)
            .filter(|(_, &e)| e)
            .filter_map(|(g, _)| g.as_ref())
            .flat_map(|g| g.iter())
            .map(|&v| (v as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        if grad_norm > cfg.clip_norm {
            grads.scale((cfg.clip_norm / grad_norm) as f32);
        }
        opt.step(&mut model.params, &grads, lr);
        report.train_losses.push(parts.total);
        report.last_step = step + 1;
        write_record(&TrainLogRecord {
            step: step + 1,
            phase: cfg.phase,
            kind: "train".into(),
            loss: parts,
            lr,
            grad_norm,
            encoder_grad_norm,
            wall_time: clock.elapsed().as_secs_f64(),
        })?;

        let done = step + 1 == cfg.steps;
        if (step + 1) % cfg.val_every == 0 || done {
            let v = validation_loss(model, cfg, val)?;
            if !v.total.is_finite() {
                return Err(Error::Numerical(format!("{phase} step {}: non-finite validation loss", step + 1)));
            }
            report.val_history.push((step + 1, v.total));
            write_record(&TrainLogRecord {
                step: step + 1,
                phase: cfg.phase,
                kind: "val".into(),
                loss: v,
                lr,
                grad_norm: 0.0,
                encoder_grad_norm: 0.0,
                wall_time: clock.elapsed().as_secs_f64(),
            })?;
            if v.total < best_val {
                best_val = v.total;
                best_step = step + 1;
                best_params = model.params.clone();
                if let Some(p) = out {
                    model.save(p.best(), phase, stats_hash)?;
                }
            }
        }
        if let Some(p) = out {
            if (step + 1) % cfg.checkpoint_every == 0 || done {
                model.save(p.last(), phase, stats_hash)?;
                let meta = ResumeMeta {
                    step: step + 1,
                    best_step,
                    best_val,
                };
                optimizer_checkpoint(&opt, &model.params, &meta).save(p.optimizer())?;
            }
        }
    }
    model.params = best_params;
    report.best_step = best_step;
    report.best_val = best_val;
    Ok(report)
}

pub fn ensure_checkpoint(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "fine-tuning needs a pretrained checkpoint; {} does not exist",
            path.display()
        )));
    }
    Ok(())
}
