//! BG/NBD model: parameters, per-customer summaries, the likelihood and the
//! probability of no purchases over a future horizon.
//!
//! Two evaluators exist for the zero-purchase probability. [`churn_probability`]
//! works entirely with logarithms and max-shifts before exponentiating, so
//! the `−(r+x)` powers never leave the representable range. The reference
//! evaluator multiplies the raw powers directly; it only exists to
//! cross-check the stable path where both are representable.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::special::{ln_beta, ln_gamma, log_sum_exp2, CompensatedSum, LogDomainPair};

/// Probabilities may overshoot [0, 1] by at most this much from rounding
/// before it is treated as a bug.
pub const PROBABILITY_CLAMP_SLACK: f64 = 1e-12;

/// Summaries per parallel work item in [`dataset_log_likelihood`]. Fixed so
/// the reduction order never depends on the thread pool.
const LIKELIHOOD_CHUNK: usize = 2048;

/// The four BG/NBD parameters. `r` and `alpha` shape the Gamma-mixed
/// purchase rate (alpha in days); `a` and `b` the Beta-mixed dropout
/// probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    r: f64,
    alpha: f64,
    a: f64,
    b: f64,
}

impl ModelParams {
    pub fn new(r: f64, alpha: f64, a: f64, b: f64) -> Result<Self> {
        for (name, v) in [("r", r), ("alpha", alpha), ("a", a), ("b", b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!(
                    "parameter {name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(Self { r, alpha, a, b })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `[r, alpha, a, b]`
    pub fn to_array(&self) -> [f64; 4] {
        [self.r, self.alpha, self.a, self.b]
    }
}

/// Sufficient statistics of one customer, all in days from the first
/// purchase day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomerSummary {
    frequency: u64,
    recency: f64,
    age: f64,
}

impl CustomerSummary {
    /// `frequency` is x (repeat purchase days), `recency` is t_x and `age`
    /// is T.
    pub fn new(frequency: u64, recency: f64, age: f64) -> Result<Self> {
        if !(recency.is_finite() && age.is_finite()) {
            return Err(Error::domain("recency and age must be finite"));
        }
        if !(0.0 <= recency && recency <= age) {
            return Err(Error::domain(format!(
                "need 0 <= t_x <= T, got t_x={recency}, T={age}"
            )));
        }
        if frequency == 0 && recency != 0.0 {
            return Err(Error::domain(format!(
                "a customer with x=0 must have t_x=0, got t_x={recency}"
            )));
        }
        Ok(Self {
            frequency,
            recency,
            age,
        })
    }

    pub fn frequency(&self) -> u64 {
        self.frequency
    }

    pub fn recency(&self) -> f64 {
        self.recency
    }

    pub fn age(&self) -> f64 {
        self.age
    }

    /// Days since the last purchase, `T − t_x`.
    pub fn inactivity(&self) -> f64 {
        self.age - self.recency
    }
}

/// A churn definition: no purchases within `window` days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChurnQuery {
    window: f64,
}

impl ChurnQuery {
    pub fn new(window: f64) -> Result<Self> {
        if !(window.is_finite() && window > 0.0) {
            return Err(Error::domain(format!(
                "churn window must be finite and > 0, got {window}"
            )));
        }
        Ok(Self { window })
    }

    pub fn window(&self) -> f64 {
        self.window
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChurnScore {
    pub probability: f64,
    /// Future days still needed to complete the inactivity window.
    pub effective_horizon: f64,
    pub already_churned: bool,
}

/// Days after the scoring date until `window` days of inactivity complete:
/// `max(0, M − (T − t_x))`. Zero means the customer has already churned.
pub fn effective_horizon(summary: &CustomerSummary, query: &ChurnQuery) -> f64 {
    (query.window - summary.inactivity()).max(0.0)
}

/// Per-parameter terms shared by every customer's likelihood.
struct LikelihoodConstants {
    params: ModelParams,
    /// ln Γ(r) − r ln α + ln B(a, b)
    offset: f64,
}

impl LikelihoodConstants {
    fn new(params: &ModelParams) -> Self {
        let offset = ln_gamma(params.r) - params.r * params.alpha.ln() + ln_beta(params.a, params.b);
        Self {
            params: *params,
            offset,
        }
    }

    fn log_likelihood(&self, s: &CustomerSummary) -> f64 {
        let ModelParams { r, alpha, a, b } = self.params;
        let x = s.frequency as f64;
        let phi = r + x;
        let k_age = ln_beta(a, b + x) - phi * (alpha + s.age).ln();
        let k_recency = if s.frequency > 0 {
            ln_beta(a + 1.0, b + x - 1.0) - phi * (alpha + s.recency).ln()
        } else {
            f64::NEG_INFINITY
        };
        // k_age is finite, so the pair cannot fail
        let tail = LogDomainPair::new(k_age, k_recency)
            .expect("finite log-likelihood terms")
            .ln();
        ln_gamma(phi) - self.offset + tail
    }
}

/// ln L(r, α, a, b | x, t_x, T), evaluated in log space.
///
/// The recency term `B(a+1, b+x−1)/(α+t_x)^{r+x}` only exists for x > 0; for
/// x = 0 the likelihood collapses to `(α/(α+T))^r`.
pub fn log_likelihood(params: &ModelParams, summary: &CustomerSummary) -> f64 {
    LikelihoodConstants::new(params).log_likelihood(summary)
}

/// Sum of [`log_likelihood`] over a cohort, compensated and chunked so the
/// result does not depend on summary order beyond rounding of the partial
/// sums.
pub fn dataset_log_likelihood(params: &ModelParams, summaries: &[CustomerSummary]) -> Result<f64> {
    if summaries.is_empty() {
        return Err(Error::usage("log-likelihood of an empty dataset"));
    }
    let consts = LikelihoodConstants::new(params);
    let partials: Vec<CompensatedSum> = summaries
        .par_chunks(LIKELIHOOD_CHUNK)
        .map(|chunk| chunk.iter().map(|s| consts.log_likelihood(s)).collect())
        .collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.total())
}

fn check_horizon(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("horizon t must be finite and >= 0, got {t}")))
    }
}

fn clamp_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else if p > 1.0 && p - 1.0 <= PROBABILITY_CLAMP_SLACK {
        Ok(1.0)
    } else if (-PROBABILITY_CLAMP_SLACK..0.0).contains(&p) {
        Ok(0.0)
    } else {
        Err(Error::Consistency(format!("probability {p} outside [0, 1]")))
    }
}

fn representable(name: &str, v: f64) -> Result<f64> {
    if v.is_normal() {
        Ok(v)
    } else {
        Err(Error::NumericRange(format!(
            "{name} = {v} is not a normal binary64 value"
        )))
    }
}

/// Direct binary64 evaluation of
///
/// ```text
///   B(a+1,b+x−1)(α+t_x)^{−(r+x)} + B(a,b+x)(α+T+t)^{−(r+x)}
///   ───────────────────────────────────────────────────────
///   B(a+1,b+x−1)(α+t_x)^{−(r+x)} + B(a,b+x)(α+T)^{−(r+x)}
/// ```
///
/// with the `B(a+1, b+x−1)` terms dropped when x = 0. Any intermediate that
/// overflows, underflows to zero or goes subnormal is reported as
/// [`Error::NumericRange`]; this happens routinely once x reaches the
/// hundreds.
pub fn churn_probability_reference(
    params: &ModelParams,
    summary: &CustomerSummary,
    t: f64,
) -> Result<f64> {
    check_horizon(t)?;
    let ModelParams { r, alpha, a, b } = *params;
    let x = summary.frequency as f64;
    let exponent = -(r + x);

    let recency_term = if summary.frequency > 0 {
        let beta = representable("B(a+1, b+x-1)", ln_beta(a + 1.0, b + x - 1.0).exp())?;
        let power = representable("(alpha+t_x)^-(r+x)", (alpha + summary.recency).powf(exponent))?;
        representable("recency term", beta * power)?
    } else {
        0.0
    };
    let beta = representable("B(a, b+x)", ln_beta(a, b + x).exp())?;
    let base = alpha + summary.age;
    let future = representable("(alpha+T+t)^-(r+x)", (base + t).powf(exponent))?;
    let present = representable("(alpha+T)^-(r+x)", base.powf(exponent))?;

    let numerator = representable("numerator", recency_term + beta * future)?;
    let denominator = representable("denominator", recency_term + beta * present)?;
    clamp_probability(representable("ratio", numerator / denominator)?)
}

/// Probability of zero purchases in `(T, T+t]`, computed in log space.
///
/// With `E = α+t_x`, `F = α+T+t`, `G = α+T`:
///
/// ```text
///   K_E = ln B(a+1, b+x−1) − (r+x) ln E      (−∞ when x = 0)
///   K_F = ln B(a, b+x)     − (r+x) ln F
///   K_G = ln B(a, b+x)     − (r+x) ln G
///   P   = exp( lse(K_E, K_F) − lse(K_E, K_G) )
/// ```
///
/// where `lse` shifts by the larger term before exponentiating. Stays finite
/// for any x that fits in memory.
pub fn churn_probability(params: &ModelParams, summary: &CustomerSummary, t: f64) -> Result<f64> {
    check_horizon(t)?;
    let ModelParams { r, alpha, a, b } = *params;
    let x = summary.frequency as f64;
    let phi = r + x;

    let present = alpha + summary.age;
    let future = present + t;
    let ln_beta_age = ln_beta(a, b + x);

    let k_recency = if summary.frequency > 0 {
        ln_beta(a + 1.0, b + x - 1.0) - phi * (alpha + summary.recency).ln()
    } else {
        f64::NEG_INFINITY
    };
    let k_future = ln_beta_age - phi * future.ln();
    let k_present = ln_beta_age - phi * present.ln();

    let log_numerator = log_sum_exp2(k_recency, k_future)?;
    let log_denominator = log_sum_exp2(k_recency, k_present)?;
    clamp_probability((log_numerator - log_denominator).exp())
}

/// Churn probability under the "no purchases within M days" definition.
///
/// Customers already inactive for at least M days get probability exactly 1
/// without touching the model.
pub fn churn_probability_window(
    params: &ModelParams,
    summary: &CustomerSummary,
    query: &ChurnQuery,
) -> Result<ChurnScore> {
    let horizon = effective_horizon(summary, query);
    if horizon == 0.0 {
        return Ok(ChurnScore {
            probability: 1.0,
            effective_horizon: 0.0,
            already_churned: true,
        });
    }
    Ok(ChurnScore {
        probability: churn_probability(params, summary, horizon)?,
        effective_horizon: horizon,
        already_churned: false,
    })
}
