//! Fine-tunes one model per λ from a shared pretrained model and prints the
//! rate-distortion table.

use cvc::data::{compute_stats, generate, SyntheticSpec};
use cvc::experiment::{is_monotone_frontier, rd_sweep, rd_table};
use cvc::model::{ModelConfig, VaeFormer};
use cvc::train::{run_phase, TrainConfig, TrainData};

fn main() -> cvc::Result<()> {
    let cfg = ModelConfig::tiny();
    let mut spec = SyntheticSpec::desk(cfg.channels, cfg.height, cfg.width, 8);
    spec.train = 32;
    spec.val = 4;
    spec.test = 4;
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
    pre.val_every = 100;
    run_phase(&pre, &mut model, &train, &val, None, None, false)?;

    let mut ft = TrainConfig::finetune();
    ft.steps = 150;
    ft.warmup = 10;
    ft.lr = 5e-4;
    ft.batch = 8;
    ft.val_every = 50;
    ft.freeze_encoder = false;
    let points: Vec<_> = rd_sweep(&model, &stats, &train, &val, &ds.test, &ft, &[0.1, 1.0, 10.0], None)?
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    print!("{}", rd_table(&points));
    println!("monotone frontier: {}", is_monotone_frontier(&points));
    Ok(())
}
