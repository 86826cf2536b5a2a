//! Deterministic workloads shared by the benchmarks.

use bgnbd_core::simulate::SimulationConfig;
use bgnbd_core::{simulate_cohort, CustomerSummary, ModelParams};

pub fn reference_params() -> ModelParams {
    ModelParams::new(0.5, 6.0, 0.9, 2.5).expect("valid parameters")
}

/// Summaries with a fixed purchase count, spread over two years of history.
pub fn summaries_at_frequency(x: u64, count: usize) -> Vec<CustomerSummary> {
    (0..count)
        .map(|i| {
            let age = x as f64 + 30.0 + (i % 700) as f64;
            let recency = if x == 0 { 0.0 } else { age * (0.2 + 0.8 * ((i * 37) % 100) as f64 / 100.0) };
            CustomerSummary::new(x, recency, age).expect("valid summary")
        })
        .collect()
}

/// Exact summaries of a simulated cohort over 546 days.
pub fn simulated_summaries(customers: usize, seed: u64) -> Vec<CustomerSummary> {
    let config = SimulationConfig {
        params: reference_params(),
        num_customers: customers,
        horizon: 546.0,
        holdout: 0.0,
        seed,
        disable_dropout: false,
    };
    simulate_cohort(&config)
        .expect("valid simulation config")
        .customers
        .iter()
        .map(|c| c.exact_summary())
        .collect()
}
