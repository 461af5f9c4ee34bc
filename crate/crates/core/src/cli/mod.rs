//! Command-line front end. `run` parses arguments, dispatches, and maps
//! errors to exit codes: 0 success, 1 usage, 2 data, 3 numerical.

pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{RunConfig, SweepConfig};

use crate::codec::{compress, decompress};
use crate::data::{compute_stats, generate, gridfile, read_split, NormStats, Split};
use crate::error::{Error, Result};
use crate::experiment::{is_monotone_frontier, rd_sweep, rd_table};
use crate::metrics::{evaluate, Coder};
use crate::model::VaeFormer;
use crate::train::{ensure_checkpoint, run_phase, RunPaths, TrainData};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cvc", version, about = "Variational transformer codec for gridded atmospheric fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (or file, for compress/decompress).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed of the model, training and data generator.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the fine-tuning λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Model checkpoint to load.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Normalisation statistics file.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Configuration override, `key.path=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic train/val/test dataset.
    GenData(Common),
    /// Compute normalisation statistics over the training split.
    Stats(Common),
    /// Phase 1: ELBO pretraining of the latent VAE.
    Pretrain(Common),
    /// Phase 2: rate-distortion fine-tuning from a pretrained checkpoint.
    Finetune(Common),
    /// Compress one grid file into a container.
    Compress {
        #[command(flatten)]
        common: Common,
        /// Input grid file.
        input: PathBuf,
    },
    /// Decompress a container into a grid file.
    Decompress {
        #[command(flatten)]
        common: Common,
        /// Input container.
        input: PathBuf,
    },
    /// Evaluate a checkpoint on the test split through the real bitstream.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Also report pretrain-style direct factorized coding of ŷ.
        #[arg(long)]
        baseline: bool,
    },
    /// Fine-tune one model per λ and tabulate (bpsp, MSE).
    RdSweep(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::GenData(c)
            | Command::Stats(c)
            | Command::Pretrain(c)
            | Command::Finetune(c)
            | Command::RdSweep(c) => c,
            Command::Compress { common, .. } | Command::Decompress { common, .. } | Command::Eval { common, .. } => {
                common
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::GenData(_) => "gen-data",
            Command::Stats(_) => "stats",
            Command::Pretrain(_) => "pretrain",
            Command::Finetune(_) => "finetune",
            Command::Compress { .. } => "compress",
            Command::Decompress { .. } => "decompress",
            Command::Eval { .. } => "eval",
            Command::RdSweep(_) => "rd-sweep",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_DATA,
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("cvc {}: error: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}

fn resolve(common: &Common) -> Result<RunConfig> {
    let text = match &common.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let mut cfg = RunConfig::resolve(text.as_deref(), &common.set)?;
    if let Some(seed) = common.seed {
        cfg.synthetic.seed = seed;
        cfg.model.seed = seed;
        cfg.pretrain.seed = seed;
        cfg.finetune.seed = seed;
        cfg.rd_sweep.train.seed = seed;
    }
    if let Some(l) = common.lambda {
        if !(l > 0.0) {
            return Err(Error::Config(format!("lambda must be positive, got {l}")));
        }
        cfg.finetune.lambda = l;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Config(format!("{flag} is required")))
}

fn write_snapshot(dir: &Path, cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("resolved_config.toml"), cfg.to_toml())?;
    Ok(())
}

/// Snapshot for commands whose output is a single file: `<file>.config.toml`.
fn write_file_snapshot(file: &Path, cfg: &RunConfig) -> Result<()> {
    let mut name = file.as_os_str().to_owned();
    name.push(".config.toml");
    write_atomic(Path::new(&name), cfg.to_toml().as_bytes())
}

/// Writes `bytes` next to `path` and renames it into place, so a failed run
/// never leaves a partial file behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn load_stats(common: &Common, cfg: &RunConfig) -> Result<NormStats> {
    match &common.stats {
        Some(p) => NormStats::load(p),
        None => NormStats::load(Path::new(&cfg.data_dir).join("stats.toml")),
    }
}

fn load_model(path: &Path, stats: &NormStats) -> Result<VaeFormer> {
    let (model, info) = VaeFormer::load(path)?;
    if let Some(h) = info.stats_hash {
        if h != stats.hash() {
            return Err(Error::HashMismatch {
                what: "normalisation stats of checkpoint",
                expected: h,
                found: stats.hash(),
            });
        }
    }
    Ok(model)
}

fn split_data(cfg: &RunConfig, stats: &NormStats, split: Split) -> Result<TrainData> {
    TrainData::from_grids(&read_split(&cfg.data_dir, split)?, stats)
}

/// Marks a directory whose command failed part-way.
fn mark_failed(dir: &Path, e: &Error) {
    if dir.exists() {
        let _ = std::fs::write(dir.join("FAILED"), format!("{e}\n"));
    }
}

fn execute(cmd: &Command) -> Result<()> {
    let common = cmd.common();
    let cfg = resolve(common)?;
    match cmd {
        Command::GenData(_) => {
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.data_dir));
            write_snapshot(&dir, &cfg)?;
            let ds = generate(&cfg.synthetic)?;
            ds.write(&dir).inspect_err(|e| mark_failed(&dir, e))?;
            println!(
                "wrote {} / {} / {} instances to {}",
                ds.train.len(),
                ds.val.len(),
                ds.test.len(),
                dir.display()
            );
        }
        Command::Stats(_) => {
            let train = read_split(&cfg.data_dir, Split::Train)?;
            let stats = compute_stats(&train)?;
            let path = common
                .out
                .clone()
                .unwrap_or_else(|| Path::new(&cfg.data_dir).join("stats.toml"));
            write_atomic(&path, stats.to_text().as_bytes())?;
            write_file_snapshot(&path, &cfg)?;
            println!("stats hash {} written to {}", stats.hash_hex(), path.display());
        }
        Command::Pretrain(_) => {
            let dir = out_dir(common, "runs/pretrain");
            write_snapshot(&dir, &cfg)?;
            let stats = load_stats(common, &cfg)?;
            let (train, val) = (split_data(&cfg, &stats, Split::Train)?, split_data(&cfg, &stats, Split::Val)?);
            let mut model = VaeFormer::new(cfg.model.clone())?;
            let paths = RunPaths::new(&dir);
            let report = run_phase(&cfg.pretrain, &mut model, &train, &val, Some(&paths), Some(stats.hash()), false)
                .inspect_err(|e| mark_failed(&dir, e))?;
            println!(
                "pretrain: best validation loss {:.4} at step {}; checkpoint {}",
                report.best_val,
                report.best_step,
                paths.best().display()
            );
        }
        Command::Finetune(_) => {
            let ckpt = need(&common.checkpoint, "--checkpoint (pretrained model)")?;
            ensure_checkpoint(ckpt)?;
            let dir = out_dir(common, "runs/finetune");
            write_snapshot(&dir, &cfg)?;
            let stats = load_stats(common, &cfg)?;
            let mut model = load_model(ckpt, &stats)?;
            let (train, val) = (split_data(&cfg, &stats, Split::Train)?, split_data(&cfg, &stats, Split::Val)?);
            let paths = RunPaths::new(&dir);
            let report = run_phase(&cfg.finetune, &mut model, &train, &val, Some(&paths), Some(stats.hash()), false)
                .inspect_err(|e| mark_failed(&dir, e))?;
            println!(
                "finetune λ={}: best validation loss {:.4} at step {}; checkpoint {}",
                cfg.finetune.lambda,
                report.best_val,
                report.best_step,
                paths.best().display()
            );
        }
        Command::Compress { input, .. } => {
            let stats = load_stats(common, &cfg)?;
            let model = load_model(need(&common.checkpoint, "--checkpoint")?, &stats)?;
            let grid = gridfile::read(input)?;
            let c = compress(&model, &stats, &grid)?;
            let out = common.out.clone().unwrap_or_else(|| input.with_extension("cvc"));
            write_atomic(&out, &c.bytes)?;
            write_file_snapshot(&out, &cfg)?;
            if let Some(w) = &c.report.warning {
                eprintln!("warning: {w}");
            }
            let (bpsp, ratio) = crate::metrics::bpsp_and_ratio(c.bytes.len(), grid.len(), 32)?;
            println!("{} bytes, ratio {ratio:.2}, {bpsp:.4} bpsp -> {}", c.bytes.len(), out.display());
        }
        Command::Decompress { input, .. } => {
            let stats = load_stats(common, &cfg)?;
            let model = load_model(need(&common.checkpoint, "--checkpoint")?, &stats)?;
            let bytes = std::fs::read(input)?;
            let grid = decompress(&model, &stats, &bytes)?;
            let out = common.out.clone().unwrap_or_else(|| input.with_extension("grd"));
            write_atomic(&out, &gridfile::encode(&grid))?;
            write_file_snapshot(&out, &cfg)?;
            println!("reconstruction written to {}", out.display());
        }
        Command::Eval { baseline, .. } => {
            let dir = out_dir(common, "runs/eval");
            write_snapshot(&dir, &cfg)?;
            let stats = load_stats(common, &cfg)?;
            let model = load_model(need(&common.checkpoint, "--checkpoint")?, &stats)?;
            let test = read_split(&cfg.data_dir, Split::Test)?;
            let (report, _) = evaluate(&model, &stats, &test, Coder::Hyperprior)?;
            std::fs::write(dir.join("report.json"), report.to_json())?;
            std::fs::write(dir.join("report.tsv"), report.to_tsv())?;
            std::fs::write(dir.join("sedi_curves.tsv"), report.sedi_plot_data())?;
            print!("{}", report.to_tsv());
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if *baseline {
                let train = read_split(&cfg.data_dir, Split::Train)?;
                let b = crate::experiment::baseline_report(&model, &stats, &train, &test)?;
                std::fs::write(dir.join("baseline_report.json"), b.to_json())?;
                std::fs::write(dir.join("baseline_report.tsv"), b.to_tsv())?;
                print!("{}", b.to_tsv());
            }
        }
        Command::RdSweep(_) => {
            let ckpt = need(&common.checkpoint, "--checkpoint (pretrained model)")?;
            ensure_checkpoint(ckpt)?;
            let dir = out_dir(common, "runs/rd_sweep");
            write_snapshot(&dir, &cfg)?;
            let stats = load_stats(common, &cfg)?;
            let model = load_model(ckpt, &stats)?;
            let (train, val) = (split_data(&cfg, &stats, Split::Train)?, split_data(&cfg, &stats, Split::Val)?);
            let test = read_split(&cfg.data_dir, Split::Test)?;
            let points = rd_sweep(
                &model,
                &stats,
                &train,
                &val,
                &test,
                &cfg.rd_sweep.train,
                &cfg.rd_sweep.lambdas,
                Some(&dir),
            )
            .inspect_err(|e| mark_failed(&dir, e))?;
            let pts: Vec<_> = points.into_iter().map(|(p, _)| p).collect();
            let table = rd_table(&pts);
            std::fs::write(dir.join("rd_curve.tsv"), &table)?;
            print!("{table}");
            if !is_monotone_frontier(&pts) {
                eprintln!("warning: some λ is dominated in both rate and distortion");
            }
        }
    }
    Ok(())
}
