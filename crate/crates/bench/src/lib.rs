//! Shared fixtures for the criterion benches.

use adpp_core::config::{sensor3, ExperimentConfig};
use adpp_core::sim::Simulator;

/// The sensor3 benchmark with a shorter horizon.
pub fn sensor3_with_horizon(horizon: usize) -> ExperimentConfig {
    let mut cfg = sensor3().expect("sensor3 preset builds");
    cfg.horizon = horizon;
    cfg
}

/// Column-major `r_k^{(m)}` table of sensor3 under its limit distribution.
pub fn limit_columns(cfg: &ExperimentConfig) -> Vec<Vec<f64>> {
    cfg.model
        .r_table(cfg.schedule.limit())
        .expect("limit matches the state space")
        .into_columns()
}

pub fn primary_simulator(cfg: &ExperimentConfig) -> Simulator {
    Simulator::new(cfg.primary_sim()).expect("preset simulator builds")
}
