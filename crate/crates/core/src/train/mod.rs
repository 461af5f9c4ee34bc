//! Two-phase optimisation: ELBO pretraining of the latent VAE, then
//! rate-distortion fine-tuning of the entropy model with the encoder frozen.

pub mod loss;
pub mod optim;
pub mod runner;
pub mod schedule;

pub use loss::{pretrain_loss, rd_loss, LossParts, LossVars, PretrainNoise, RdNoise, DEFAULT_BETA, RATE_FLOOR};
pub use optim::AdamW;
pub use runner::{
    ensure_checkpoint, run_phase, thread_count, validation_loss, Phase, PhaseReport, RunPaths, TrainConfig,
    TrainData, TrainLogRecord,
};
pub use schedule::LrSchedule;
