//! Compresses one field into a container, decodes it and reports size and
//! error. Uses a briefly trained tiny model so it runs in seconds.

use cvc::codec::{compress, decompress, Container};
use cvc::data::{compute_stats, generate, SyntheticSpec};
use cvc::metrics::{bpsp_and_ratio, overall_mse, weighted_rmse};
use cvc::model::{ModelConfig, VaeFormer};
use cvc::train::{run_phase, TrainConfig, TrainData};

fn main() -> cvc::Result<()> {
    let cfg = ModelConfig::tiny();
    let mut spec = SyntheticSpec::desk(cfg.channels, cfg.height, cfg.width, 5);
    spec.train = 32;
    spec.val = 4;
    spec.test = 1;
    let ds = generate(&spec)?;
    let stats = compute_stats(&ds.train)?;
    let train = TrainData::from_grids(&ds.train, &stats)?;
    let val = TrainData::from_grids(&ds.val, &stats)?;
    let mut model = VaeFormer::new(cfg)?;
    for mut t in [TrainConfig::pretrain(), TrainConfig::finetune()] {
        t.steps = 200;
        t.warmup = 10;
        t.lr = 1e-3;
        t.batch = 8;
        t.val_every = 100;
        run_phase(&t, &mut model, &train, &val, None, None, false)?;
    }

    let x = &ds.test[0];
    let packed = compress(&model, &stats, x)?;
    let container = Container::from_bytes(&packed.bytes)?;
    let xh = decompress(&model, &stats, &packed.bytes)?;
    let (bpsp, ratio) = bpsp_and_ratio(packed.bytes.len(), x.len(), 32)?;
    println!(
        "{} bytes (header {}, z {}, y {}): ratio {ratio:.1}, {bpsp:.3} bpsp",
        packed.bytes.len(),
        container.header_len(),
        container.z_payload.len(),
        container.y_payload.len()
    );
    println!("estimated {:.0} bits for the payloads", packed.report.estimated_bits);
    println!("overall MSE ×100 (normalised): {:.3}", overall_mse(x, &xh, &stats)?);
    for (c, name) in x.channels().iter().enumerate() {
        println!("  {name:<5} weighted RMSE {:.4}", weighted_rmse(x, &xh, c)?);
    }
    Ok(())
}
