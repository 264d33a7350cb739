//! Synthetic data: the Gaussian toy problem with its network, beta-ratio
//! out-of-control samples, and repeated-run studies.

mod beta;
mod fnn;
mod montecarlo;
mod toy;

pub use beta::{beta_ratio_ooc, fit_beta_moments, BetaRatioSampler};
pub use fnn::{train_fnn, TinyFnn, TrainConfig, LEAKY_SLOPE};
pub use montecarlo::{monte_carlo_study, run_seeds, MetricSummary, MonteCarloSummary};
pub use toy::{
    banded_covariance, gen_toy_data, gen_toy_data_with, run_toy, toy_records, GaussianClassSpec, ToyConfig, ToyData,
    ToyRun,
};
