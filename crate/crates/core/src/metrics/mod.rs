//! Evaluation metrics and reports.

pub mod report;
pub mod scores;

pub use report::{evaluate, ChannelScores, Coder, EvalReport};
pub use scores::{
    bpsp_and_ratio, latitude_weights, mean_weighted_rmse, overall_mse, quantile_sorted, rqe, sedi, weighted_rmse, Sedi,
    Tail, RQE_QUANTILES, SEDI_EPS, SEDI_QUANTILES,
};
