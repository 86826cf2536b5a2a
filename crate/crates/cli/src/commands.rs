use std::io::Write;
use std::path::Path;

use bgnbd_core::io::{self, ParamsFile};
use bgnbd_core::simulate::SimulationConfig;
use bgnbd_core::{
    aggregate_daily, churn_probability_window, simulate_cohort, summarize, ChurnQuery, Error,
    FitConfig, ModelParams,
};
use chrono::NaiveDate;

use crate::Failure;

fn flush(mut w: impl Write, path: &Path) -> Result<(), Failure> {
    w.flush().map_err(|source| {
        Failure::Core(Error::Io {
            path: path.to_owned(),
            source,
        })
    })
}

pub fn ingest(transactions: &Path, as_of: NaiveDate, output: &Path) -> Result<(), Failure> {
    let records = io::read_transactions(io::open(transactions)?)?;
    let rows = aggregate_daily(records)
        .iter()
        .map(|h| Ok((h.customer_id().to_owned(), summarize(h, as_of)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let mut out = io::create(output)?;
    io::write_summaries(&mut out, &rows)?;
    flush(out, output)?;
    println!("customers: {}", rows.len());
    Ok(())
}

pub fn fit(
    input: &Path,
    output: &Path,
    init: Option<[f64; 4]>,
    max_iter: Option<usize>,
    tol: Option<f64>,
) -> Result<(), Failure> {
    let summaries: Vec<_> = io::read_summaries(io::open(input)?)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();

    let mut config = FitConfig::default();
    if let Some([r, alpha, a, b]) = init {
        config.initial_params = ModelParams::new(r, alpha, a, b)?;
    }
    if let Some(n) = max_iter {
        config.max_iterations = n;
    }
    if let Some(t) = tol {
        config.objective_tolerance = t;
    }

    let report = bgnbd_core::fit(&summaries, &config)?;
    let fitted_on = input.file_name().map(|n| n.to_string_lossy().into_owned());
    let mut out = io::create(output)?;
    ParamsFile::new(&report.params, fitted_on).write(&mut out)?;
    flush(out, output)?;

    let p = report.params;
    println!("r: {}", p.r());
    println!("alpha: {}", p.alpha());
    println!("a: {}", p.a());
    println!("b: {}", p.b());
    println!("neg_log_likelihood: {}", report.neg_log_likelihood);
    println!("iterations: {}", report.iterations);
    println!("objective_evaluations: {}", report.objective_evaluations);
    println!("converged: {}", report.converged);
    if !report.converged {
        eprintln!(
            "warning: optimizer stopped at the iteration cap ({}) before converging; parameters written anyway",
            config.max_iterations
        );
    }
    Ok(())
}

pub fn score(params: &Path, input: &Path, window: f64, output: &Path) -> Result<(), Failure> {
    let params = ParamsFile::read(io::open(params)?)?.params()?;
    let query = ChurnQuery::new(window)?;
    let rows = io::read_summaries(io::open(input)?)?
        .into_iter()
        .map(|(id, s)| Ok((id, churn_probability_window(&params, &s, &query)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let mut out = io::create(output)?;
    io::write_scores(&mut out, &rows)?;
    flush(out, output)?;
    let churned = rows.iter().filter(|(_, s)| s.already_churned).count();
    println!("customers: {} (already churned: {churned})", rows.len());
    Ok(())
}

pub fn simulate(
    [r, alpha, a, b]: [f64; 4],
    customers: usize,
    horizon: f64,
    holdout: f64,
    seed: u64,
    prefix: &str,
) -> Result<(), Failure> {
    let config = SimulationConfig {
        params: ModelParams::new(r, alpha, a, b)?,
        num_customers: customers,
        horizon,
        holdout,
        seed,
        disable_dropout: false,
    };
    let cohort = simulate_cohort(&config)?;

    let path = format!("{prefix}_transactions.csv");
    let mut out = io::create(path.as_ref())?;
    io::write_transactions(&mut out, &cohort.observation_records())?;
    flush(out, path.as_ref())?;

    let path = format!("{prefix}_truth.csv");
    let mut out = io::create(path.as_ref())?;
    io::write_ground_truth(&mut out, &cohort)?;
    flush(out, path.as_ref())?;

    if holdout > 0.0 {
        let path = format!("{prefix}_holdout.csv");
        let mut out = io::create(path.as_ref())?;
        io::write_transactions(&mut out, &cohort.holdout_records())?;
        flush(out, path.as_ref())?;
    }

    println!("customers: {customers}");
    println!("as-of: {}", cohort.as_of());
    Ok(())
}
