//! Pretrains a small model with the ELBO, then fine-tunes it for rate and
//! distortion, writing checkpoints and logs under the output directory.
//!
//!     cargo run --release --example train_two_phase -- /tmp/cvc-run

use cvc::data::{compute_stats, generate, SyntheticSpec};
use cvc::model::{ModelConfig, VaeFormer};
use cvc::train::{run_phase, RunPaths, TrainConfig, TrainData};

fn main() -> cvc::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("cvc-two-phase-run"));
    let cfg = ModelConfig::tiny();
    let mut spec = SyntheticSpec::desk(cfg.channels, cfg.height, cfg.width, 1);
    spec.train = 32;
    spec.val = 8;
    let ds = generate(&spec)?;
    let stats = compute_stats(&ds.train)?;
    let train = TrainData::from_grids(&ds.train, &stats)?;
    let val = TrainData::from_grids(&ds.val, &stats)?;

    let mut model = VaeFormer::new(cfg)?;
    let mut pre = TrainConfig::pretrain();
    pre.steps = 300;
    pre.warmup = 20;
    pre.lr = 1e-3;
    pre.batch = 8;
    pre.val_every = 50;
    let r = run_phase(&pre, &mut model, &train, &val, Some(&RunPaths::new(out.join("pretrain"))), Some(stats.hash()), false)?;
    println!("pretrain: val loss {:?}", r.val_history);

    let mut ft = TrainConfig::finetune();
    ft.steps = 150;
    ft.warmup = 10;
    ft.lr = 5e-4;
    ft.batch = 8;
    ft.val_every = 50;
    let r = run_phase(&ft, &mut model, &train, &val, Some(&RunPaths::new(out.join("finetune"))), Some(stats.hash()), false)?;
    println!("finetune: val loss {:?}", r.val_history);
    println!("checkpoints and train_log.jsonl under {}", out.display());
    Ok(())
}
