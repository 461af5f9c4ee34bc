use std::f64::consts::PI;

/// Linear warmup to `peak`, then cosine decay to zero at `total`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrSchedule {
    pub peak: f64,
    pub warmup: usize,
    pub total: usize,
}

impl LrSchedule {
    pub fn rate(&self, step: usize) -> f64 {
        let step = step.min(self.total);
        if step < self.warmup {
            return self.peak * step as f64 / self.warmup as f64;
        }
        let span = (self.total - self.warmup).max(1) as f64;
        let progress = (step - self.warmup) as f64 / span;
        self.peak * 0.5 * (1.0 + (PI * progress).cos())
    }
}
