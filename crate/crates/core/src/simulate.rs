//! Synthetic cohorts drawn from the BG/NBD generative process.
//!
//! Each customer gets a purchase rate λ ~ Gamma(r, rate α) and a dropout
//! probability p ~ Beta(a, b). The first purchase is at time 0, waits between
//! purchases are Exponential(λ), and after every repeat purchase the
//! customer leaves for good with probability p.
//!
//! Customer `i` draws from ChaCha stream `i` of the configured seed, so a
//! cohort is identical however the work is scheduled.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::TransactionRecord;
use crate::model::{CustomerSummary, ModelParams};

/// Calendar day that simulated time 0 maps to.
pub const SIMULATION_EPOCH: NaiveDate = match NaiveDate::from_ymd_opt(2024, 1, 1) {
    Some(d) => d,
    None => panic!("valid epoch"),
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub params: ModelParams,
    pub num_customers: usize,
    /// Length of the observation period in days.
    pub horizon: f64,
    /// Extra simulated days after the horizon.
    pub holdout: f64,
    pub seed: u64,
    /// Forces p = 0, leaving a plain Gamma–Poisson purchase process.
    pub disable_dropout: bool,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_customers == 0 {
            return Err(Error::usage("num_customers must be >= 1"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::usage(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if !(self.holdout.is_finite() && self.holdout >= 0.0) {
            return Err(Error::usage(format!("holdout must be >= 0, got {}", self.holdout)));
        }
        Ok(())
    }
}

fn open_unit(rng: &mut impl Rng) -> f64 {
    // (0, 1]
    1.0 - rng.random::<f64>()
}

/// Marsaglia–Tsang for shape ≥ 1.
fn gamma_mt(shape: f64, rng: &mut impl Rng) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_unit(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// ln of a unit-scale Gamma(shape) variate. Shapes below 1 use
/// `G(shape) = G(shape+1) · U^{1/shape}`, kept in logs because `U^{1/shape}`
/// underflows for tiny shapes.
fn ln_gamma_variate(shape: f64, rng: &mut impl Rng) -> f64 {
    if shape >= 1.0 {
        gamma_mt(shape, rng).ln()
    } else {
        let boosted = gamma_mt(shape + 1.0, rng).ln();
        boosted + open_unit(rng).ln() / shape
    }
}

/// Beta(a, b) as X/(X+Y) of two Gammas, written as a logistic of their log
/// ratio.
fn beta_variate(a: f64, b: f64, rng: &mut impl Rng) -> f64 {
    let ln_x = ln_gamma_variate(a, rng);
    let ln_y = ln_gamma_variate(b, rng);
    1.0 / (1.0 + (ln_y - ln_x).exp())
}

/// Purchase times of one customer up to `horizon + holdout`, starting with
/// the time-0 purchase.
pub fn sample_customer(
    params: &ModelParams,
    horizon: f64,
    holdout: f64,
    disable_dropout: bool,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let rate = ln_gamma_variate(params.r(), rng).exp() / params.alpha();
    let dropout = if disable_dropout {
        0.0
    } else {
        beta_variate(params.a(), params.b(), rng)
    };

    let end = horizon + holdout;
    let mut times = vec![0.0];
    let mut now = 0.0;
    loop {
        now += -open_unit(rng).ln() / rate;
        if now > end {
            break;
        }
        times.push(now);
        if dropout > 0.0 && rng.random::<f64>() < dropout {
            break;
        }
    }
    times
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCustomer {
    pub customer_id: String,
    /// Exact purchase times in days, strictly increasing, starting at 0.
    pub purchase_times: Vec<f64>,
    horizon: f64,
}

impl SimulatedCustomer {
    /// Times within the observation period `[0, horizon]`.
    pub fn observed_times(&self) -> &[f64] {
        let n = self.purchase_times.partition_point(|&t| t <= self.horizon);
        &self.purchase_times[..n]
    }

    /// Times in the holdout period `(horizon, horizon + holdout]`.
    pub fn holdout_times(&self) -> &[f64] {
        &self.purchase_times[self.observed_times().len()..]
    }

    /// Continuous-time summary at the horizon: x counts repeat purchases,
    /// t_x is the exact last purchase time and T is the horizon.
    pub fn exact_summary(&self) -> CustomerSummary {
        let observed = self.observed_times();
        let recency = *observed.last().expect("time-0 purchase is always observed");
        CustomerSummary::new((observed.len() - 1) as u64, recency, self.horizon)
            .expect("simulated summary satisfies invariants")
    }

    /// Summary after flooring purchase times to whole days and collapsing
    /// same-day purchases, as ingestion would see it.
    pub fn daily_summary(&self) -> CustomerSummary {
        let mut days: Vec<u64> = self.observed_times().iter().map(|t| t.floor() as u64).collect();
        days.dedup();
        let last = *days.last().expect("time-0 purchase is always observed");
        CustomerSummary::new((days.len() - 1) as u64, last as f64, self.horizon.floor())
            .expect("simulated summary satisfies invariants")
    }

    /// Whether there are no purchases in `(horizon, horizon + window]`.
    /// Only meaningful for windows inside the simulated holdout.
    pub fn no_purchase_within(&self, window: f64) -> bool {
        self.holdout_times()
            .first()
            .is_none_or(|&t| t > self.horizon + window)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCohort {
    pub config: SimulationConfig,
    pub customers: Vec<SimulatedCustomer>,
}

impl SimulatedCohort {
    /// Scoring date matching the end of the observation period.
    pub fn as_of(&self) -> NaiveDate {
        day_of(self.config.horizon)
    }

    /// Zero purchases during the whole holdout; `None` without a holdout.
    pub fn holdout_zero(&self, customer: &SimulatedCustomer) -> Option<bool> {
        (self.config.holdout > 0.0).then(|| customer.no_purchase_within(self.config.holdout))
    }

    /// One record per observed purchase, dated by flooring to whole days.
    /// Same-day purchases produce repeated records.
    pub fn observation_records(&self) -> Vec<TransactionRecord> {
        self.records(|c| c.observed_times())
    }

    pub fn holdout_records(&self) -> Vec<TransactionRecord> {
        self.records(|c| c.holdout_times())
    }

    fn records<'a>(&'a self, pick: impl Fn(&'a SimulatedCustomer) -> &'a [f64]) -> Vec<TransactionRecord> {
        self.customers
            .iter()
            .flat_map(|c| {
                pick(c).iter().map(move |&t| {
                    TransactionRecord::new(&c.customer_id, day_of(t)).expect("non-empty id")
                })
            })
            .collect()
    }
}

fn day_of(t: f64) -> NaiveDate {
    SIMULATION_EPOCH + Days::new(t.floor() as u64)
}

/// Generator for customer `index` of a cohort seeded with `seed`.
pub fn customer_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulates a whole cohort. Customer ids are zero-padded so lexical order
/// equals index order.
pub fn simulate_cohort(config: &SimulationConfig) -> Result<SimulatedCohort> {
    config.validate()?;
    let width = (config.num_customers - 1).max(1).to_string().len();
    let customers = (0..config.num_customers)
        .into_par_iter()
        .map(|i| {
            let mut rng = customer_rng(config.seed, i as u64);
            let purchase_times = sample_customer(
                &config.params,
                config.horizon,
                config.holdout,
                config.disable_dropout,
                &mut rng,
            );
            SimulatedCustomer {
                customer_id: format!("c{i:0width$}"),
                purchase_times,
                horizon: config.horizon,
            }
        })
        .collect();
    Ok(SimulatedCohort {
        config: *config,
        customers,
    })
}
