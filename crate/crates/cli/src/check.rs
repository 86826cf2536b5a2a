//! `bgchurn check`: sweep random summaries at increasing purchase counts and
//! compare the log-domain evaluator with the direct one.

use std::path::Path;

use bgnbd_core::io::{self, ParamsFile};
use bgnbd_core::{
    churn_probability, churn_probability_reference, CustomerSummary, Error, ModelParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Failure;

pub const FREQUENCIES: [u64; 8] = [0, 1, 5, 20, 50, 100, 500, 10_000];
pub const MAX_DISCREPANCY: f64 = 1e-10;

/// Days of history beyond the minimum needed for x distinct repeat days.
const EXTRA_HISTORY: u64 = 730;
const MAX_HORIZON: f64 = 365.0;

#[derive(Debug, Default)]
struct LevelStats {
    cases: usize,
    comparable: usize,
    reference_range_errors: usize,
    max_discrepancy: f64,
    worst: Option<Case>,
}

#[derive(Debug, Clone, Copy)]
struct Case {
    summary: CustomerSummary,
    t: f64,
    stable: f64,
    reference: f64,
}

fn random_case(rng: &mut ChaCha8Rng, x: u64) -> (CustomerSummary, f64) {
    let min_age = x.max(1);
    let age = rng.random_range(min_age..=min_age + EXTRA_HISTORY) as f64;
    let recency = if x == 0 {
        0.0
    } else {
        rng.random_range(x as f64..=age)
    };
    let t = rng.random_range(0.0..=MAX_HORIZON);
    let summary = CustomerSummary::new(x, recency, age).expect("generated summary is valid");
    (summary, t)
}

pub fn run(params_path: &Path, grid_size: usize, seed: u64) -> Result<(), Failure> {
    if grid_size == 0 {
        return Err(Error::Usage("--grid-size must be >= 1".into()).into());
    }
    let params: ModelParams = ParamsFile::read(io::open(params_path)?)?.params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    println!(
        "{:>6} {:>6} {:>10} {:>12} {:>14}",
        "x", "cases", "comparable", "range_errors", "max_abs_diff"
    );
    let mut overall = 0.0f64;
    let mut offending = None;
    for &x in &FREQUENCIES {
        let mut stats = LevelStats::default();
        for _ in 0..grid_size {
            let (summary, t) = random_case(&mut rng, x);
            stats.cases += 1;
            let stable = match churn_probability(&params, &summary, t) {
                Ok(v) if v.is_finite() && (0.0..=1.0).contains(&v) => v,
                other => {
                    return Err(Failure::CheckFailed(format!(
                        "stable evaluator failed at x={x}, t_x={}, T={}, t={t}: {other:?}",
                        summary.recency(),
                        summary.age()
                    )))
                }
            };
            match churn_probability_reference(&params, &summary, t) {
                Ok(reference) => {
                    stats.comparable += 1;
                    let diff = (stable - reference).abs();
                    if diff > stats.max_discrepancy || stats.worst.is_none() {
                        stats.max_discrepancy = stats.max_discrepancy.max(diff);
                        stats.worst = Some(Case {
                            summary,
                            t,
                            stable,
                            reference,
                        });
                    }
                }
                Err(Error::NumericRange(_)) => stats.reference_range_errors += 1,
                Err(e) => return Err(e.into()),
            }
        }
        println!(
            "{:>6} {:>6} {:>10} {:>12} {:>14.3e}",
            x, stats.cases, stats.comparable, stats.reference_range_errors, stats.max_discrepancy
        );
        if stats.max_discrepancy > overall {
            overall = stats.max_discrepancy;
            offending = stats.worst;
        }
    }

    println!("max |stable - reference| = {overall:.3e} (threshold {MAX_DISCREPANCY:e})");
    if overall > MAX_DISCREPANCY {
        let c = offending.expect("a discrepancy comes with its case");
        return Err(Failure::CheckFailed(format!(
            "discrepancy {overall:e} at x={}, t_x={}, T={}, t={}: stable={} reference={}",
            c.summary.frequency(),
            c.summary.recency(),
            c.summary.age(),
            c.t,
            c.stable,
            c.reference
        )));
    }
    println!("result: ok");
    Ok(())
}
