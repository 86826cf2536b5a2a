//! Maximum-likelihood estimation of `(r, α, a, b)`.
//!
//! The search runs over `(ln r, ln α, ln a, ln b)` so every point the
//! optimizer visits maps to valid parameters.

use crate::error::{Error, Result};
use crate::model::{dataset_log_likelihood, CustomerSummary, ModelParams};
use crate::optimize::{nelder_mead, NelderMeadOptions};

/// Fewer customers than this cannot support four parameters.
pub const MIN_CUSTOMERS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub initial_params: ModelParams,
    pub max_iterations: usize,
    pub objective_tolerance: f64,
    pub parameter_tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let defaults = NelderMeadOptions::default();
        Self {
            initial_params: ModelParams::new(1.0, 1.0, 1.0, 1.0).expect("unit params are valid"),
            max_iterations: defaults.max_iterations,
            objective_tolerance: defaults.objective_tolerance,
            parameter_tolerance: defaults.parameter_tolerance,
        }
    }
}

impl FitConfig {
    fn optimizer_options(&self) -> NelderMeadOptions {
        NelderMeadOptions {
            max_iterations: self.max_iterations,
            objective_tolerance: self.objective_tolerance,
            parameter_tolerance: self.parameter_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub params: ModelParams,
    pub neg_log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_evaluations: usize,
}

fn params_from_log(theta: &[f64]) -> Result<ModelParams> {
    ModelParams::new(theta[0].exp(), theta[1].exp(), theta[2].exp(), theta[3].exp())
}

/// Negative dataset log-likelihood at log-space point `theta`; +∞ where the
/// exponentiated parameters are not representable.
fn objective(summaries: &[CustomerSummary], theta: &[f64]) -> f64 {
    match params_from_log(theta) {
        Ok(p) => dataset_log_likelihood(&p, summaries).map_or(f64::INFINITY, |ll| -ll),
        Err(_) => f64::INFINITY,
    }
}

/// Fits the model to `summaries`.
///
/// Hitting the iteration cap is not an error: the report comes back with
/// `converged == false` and the best parameters seen.
pub fn fit(summaries: &[CustomerSummary], config: &FitConfig) -> Result<FitReport> {
    let options = config.optimizer_options();
    options.validate()?;
    if summaries.len() < MIN_CUSTOMERS {
        return Err(Error::usage(format!(
            "fitting needs at least {MIN_CUSTOMERS} customers, got {}",
            summaries.len()
        )));
    }
    if summaries.iter().all(|s| s.frequency() == 0) {
        return Err(Error::Unidentifiable(
            "no customer has a repeat purchase (all x = 0)".into(),
        ));
    }

    let start = config.initial_params.to_array().map(f64::ln);
    let result = nelder_mead(|theta| objective(summaries, theta), &start, &options)?;

    Ok(FitReport {
        params: params_from_log(&result.point)?,
        neg_log_likelihood: result.value,
        iterations: result.iterations,
        converged: result.converged,
        objective_evaluations: result.evaluations,
    })
}
