//! Scores a damped copy of a field against the original with the extreme-value
//! metrics: SEDI at several quantiles and the relative quantile error.

use cvc::data::{generate, SyntheticSpec};
use cvc::metrics::{rqe, sedi, weighted_rmse, Tail, SEDI_QUANTILES};

fn main() -> cvc::Result<()> {
    let mut spec = SyntheticSpec::desk(2, 32, 64, 3);
    spec.train = 1;
    spec.val = 0;
    spec.test = 0;
    spec.anomaly_rate = 4.0;
    let x = generate(&spec)?.train.remove(0);
    // shrink anomalies towards the channel mean, as a smoothing codec would
    let mut damped = x.clone();
    for c in 0..2 {
        let ch = x.channel(c);
        let mean = ch.iter().map(|&v| v as f64).sum::<f64>() / ch.len() as f64;
        let (_, h, w) = x.dims();
        for i in 0..h * w {
            let v = &mut damped.data_mut()[c * h * w + i];
            *v = (mean + 0.85 * (*v as f64 - mean)) as f32;
        }
    }
    for (c, name) in x.channels().iter().enumerate() {
        println!("{name}: weighted RMSE {:.3}, RQE {:+.4}", weighted_rmse(&x, &damped, c)?, rqe(&x, &damped, c)?);
        for q in SEDI_QUANTILES {
            let hi = sedi(&x, &damped, q, c, Tail::Upper)?;
            let lo = sedi(&x, &damped, q, c, Tail::Lower)?;
            println!("  q={q:<5} SEDI upper {:.3} (H {:.2}, F {:.3})  lower {:.3}", hi.value, hi.hit_rate, hi.false_alarm_rate, lo.value);
        }
    }
    Ok(())
}
