//! Shows how the three window shapes partition a token grid and how many
//! attention scores each needs compared with global attention.

use cvc::attention::{WindowKind, WindowSpec};

fn main() -> cvc::Result<()> {
    let (h, w) = (8, 16);
    let specs = [
        WindowSpec::new(WindowKind::Square, 4, 4)?,
        WindowSpec::new(WindowKind::EastWest, 2, 8)?,
        WindowSpec::new(WindowKind::NorthSouth, 8, 2)?,
    ];
    for spec in specs {
        spec.check_divides(h, w)?;
        let rows = spec.partition_rows(1, h, w);
        // label each grid cell with its window index
        let mut label = vec![0; h * w];
        for (k, win) in rows.chunks(spec.tokens()).enumerate() {
            for &r in win {
                label[r] = k;
            }
        }
        println!("{:?} {}x{}: {} windows", spec.kind, spec.win_h, spec.win_w, spec.count(h, w));
        for r in 0..h {
            let line: String = (0..w).map(|c| char::from_digit(label[r * w + c] as u32 % 36, 36).unwrap()).collect();
            println!("  {line}");
        }
        for scale in [1, 2, 4] {
            let (hh, ww) = (h * scale, w * scale);
            let windowed = spec.count(hh, ww) * spec.tokens().pow(2);
            println!("  {:>5} tokens: {:>8} window scores vs {:>10} global", hh * ww, windowed, (hh * ww).pow(2));
        }
    }
    Ok(())
}
