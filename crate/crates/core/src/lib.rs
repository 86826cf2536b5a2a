//! Churn scoring for the BG/NBD model under the "no purchases within M days"
//! churn definition.
//!
//! The pipeline is: raw transactions ([`ingest`]) → per-customer summaries
//! `(x, t_x, T)` → maximum-likelihood parameters ([`fit`]) → churn
//! probabilities ([`model`]). [`simulate`] runs the generative process and
//! doubles as the oracle for recovery and calibration checks; [`io`] holds
//! the CSV and JSON file formats.

pub mod error;
pub mod fit;
pub mod ingest;
pub mod io;
pub mod model;
pub mod optimize;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use fit::{fit, FitConfig, FitReport};
pub use ingest::{aggregate_daily, summarize, CustomerHistory, TransactionRecord};
pub use model::{
    churn_probability, churn_probability_reference, churn_probability_window,
    dataset_log_likelihood, effective_horizon, log_likelihood, ChurnQuery, ChurnScore,
    CustomerSummary, ModelParams,
};
pub use optimize::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use simulate::{sample_customer, simulate_cohort, SimulatedCohort, SimulatedCustomer, SimulationConfig};
pub use special::{log_beta, log_gamma, log_sum_exp2, CompensatedSum, LogDomainPair};
