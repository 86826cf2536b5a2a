//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Run with `cargo test -p bgnbd-cli --test acceptance -- --nocapture` (the
//! lines go to stdout either way; `--nocapture` is accepted and ignored).

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use bgnbd_core::io;
use bgnbd_core::simulate::SimulationConfig;
use bgnbd_core::{
    churn_probability, churn_probability_reference, churn_probability_window, fit,
    log_likelihood, simulate_cohort, ChurnQuery, CustomerSummary, Error, FitConfig, ModelParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE: &str = include_str!("../../core/tests/data/churn_probability.csv");

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn within_budget(outcome: Outcome, elapsed: Duration, budget: Option<Duration>) -> Outcome {
    match budget {
        Some(limit) if elapsed > limit => Outcome::new(
            false,
            format!("{}; over time budget of {limit:?}", outcome.detail),
        ),
        _ => outcome,
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..=hi.ln()).exp()
}

fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams::new(
        log_uniform(rng, 0.05, 5.0),
        log_uniform(rng, 0.5, 100.0),
        log_uniform(rng, 0.1, 5.0),
        log_uniform(rng, 0.1, 10.0),
    )
    .unwrap()
}

fn random_summary(rng: &mut ChaCha8Rng, x: u64) -> CustomerSummary {
    let age = rng.random_range(x as f64..=x as f64 + 730.0);
    let recency = if x == 0 {
        0.0
    } else {
        rng.random_range(0.0..=age)
    };
    CustomerSummary::new(x, recency, age).unwrap()
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

fn stable_vs_reference() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut comparable, mut range_errors) = (0.0f64, 0usize, 0usize);
    for _ in 0..10_000 {
        let params = random_params(&mut rng);
        let x = rng.random_range(0..=50);
        let summary = random_summary(&mut rng, x);
        let t = rng.random_range(0.0..=365.0);
        let stable = churn_probability(&params, &summary, t).unwrap();
        match churn_probability_reference(&params, &summary, t) {
            Ok(reference) => {
                comparable += 1;
                worst = worst.max((stable - reference).abs());
            }
            Err(Error::NumericRange(_)) => range_errors += 1,
            Err(e) => return Outcome::new(false, format!("reference failed: {e}")),
        }
    }
    Outcome::new(
        worst <= 1e-10 && comparable > 0,
        format!("max |diff| {worst:.2e} over {comparable} tuples ({range_errors} reference range errors)"),
    )
}

fn oracle_agreement() -> Outcome {
    let mut worst = 0.0f64;
    let mut rows = 0;
    let mut max_x = 0;
    for line in ORACLE.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let num = |i: usize| f[i].parse::<f64>().unwrap();
        let params = ModelParams::new(num(0), num(1), num(2), num(3)).unwrap();
        let x: u64 = f[4].parse().unwrap();
        let summary = CustomerSummary::new(x, num(5), num(6)).unwrap();
        let got = churn_probability(&params, &summary, num(7)).unwrap();
        worst = worst.max(rel_err(got, num(8)));
        rows += 1;
        max_x = max_x.max(x);
    }
    Outcome::new(
        worst <= 1e-9 && rows == 200,
        format!("max relative error {worst:.2e} over {rows} tuples (x up to {max_x})"),
    )
}

fn overflow_freedom() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut range_errors_at_10000 = 0;
    for x in [100u64, 1_000, 10_000] {
        for _ in 0..1_000 {
            let params = random_params(&mut rng);
            let summary = random_summary(&mut rng, x);
            let t = rng.random_range(0.0..=365.0);
            let p = match churn_probability(&params, &summary, t) {
                Ok(p) => p,
                Err(e) => return Outcome::new(false, format!("x={x}: {e}")),
            };
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Outcome::new(false, format!("x={x}: probability {p}"));
            }
            if x == 10_000 {
                if let Err(Error::NumericRange(_)) = churn_probability_reference(&params, &summary, t) {
                    range_errors_at_10000 += 1;
                }
            }
        }
    }
    Outcome::new(
        range_errors_at_10000 >= 1,
        format!("3000 finite probabilities in [0,1]; reference range errors at x=10000: {range_errors_at_10000}/1000"),
    )
}

fn boundary_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let params = random_params(&mut rng);
        let x = rng.random_range(0..=1_000);
        // inactive for at least the whole window
        let window = rng.random_range(1.0..=120.0);
        let recency = if x == 0 { 0.0 } else { rng.random_range(0.0..=500.0) };
        let age = recency + window + rng.random_range(0.0..=200.0);
        let summary = CustomerSummary::new(x, recency, age).unwrap();
        let score = churn_probability_window(&params, &summary, &ChurnQuery::new(window).unwrap()).unwrap();
        if score.probability != 1.0 || score.effective_horizon != 0.0 || !score.already_churned {
            return Outcome::new(false, format!("t~=0 case gave {score:?}"));
        }
        let summary = random_summary(&mut rng, x);
        let p = churn_probability(&params, &summary, 0.0).unwrap();
        if p != 1.0 {
            return Outcome::new(false, format!("t=0 gave {p}"));
        }
    }
    Outcome::new(true, "10000 tuples each for t~=0 and t=0, all exactly 1.0")
}

fn closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_p, mut worst_ll) = (0.0f64, 0.0f64);
    for _ in 0..1_000 {
        let params = random_params(&mut rng);
        let summary = random_summary(&mut rng, 0);
        let t = rng.random_range(0.0..=365.0);
        let (r, alpha, age) = (params.r(), params.alpha(), summary.age());
        let want = ((alpha + age) / (alpha + age + t)).powf(r);
        worst_p = worst_p.max(rel_err(churn_probability(&params, &summary, t).unwrap(), want));
        let want = r * (alpha / (alpha + age)).ln();
        worst_ll = worst_ll.max((log_likelihood(&params, &summary) - want).abs());
    }
    Outcome::new(
        worst_p <= 1e-12 && worst_ll <= 1e-12,
        format!("x=0 probability max rel err {worst_p:.2e}; log-likelihood max abs err {worst_ll:.2e}"),
    )
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let params = random_params(&mut rng);
        let x = [0u64, 1, 5, 20, 100, 1_000][rng.random_range(0..6)];
        let summary = random_summary(&mut rng, x);
        let mut prev = f64::INFINITY;
        for k in 0..50 {
            let t = 365.0 * k as f64 / 49.0;
            let p = churn_probability(&params, &summary, t).unwrap();
            if p > prev + 1e-12 {
                violations += 1;
                worst = worst.max(p - prev);
            }
            prev = p;
        }
    }
    Outcome::new(
        violations == 0,
        format!("{violations} increases beyond 1e-12 over 1000 tuples x 50 points (worst {worst:.2e})"),
    )
}

fn recovery() -> Outcome {
    let truth = ModelParams::new(0.5, 6.0, 0.9, 2.5).unwrap();
    let cohort = simulate_cohort(&SimulationConfig {
        params: truth,
        num_customers: 10_000,
        horizon: 546.0,
        holdout: 0.0,
        seed: 2024,
        disable_dropout: false,
    })
    .unwrap();
    let data: Vec<_> = cohort.customers.iter().map(|c| c.exact_summary()).collect();
    let report = fit(&data, &FitConfig::default()).unwrap();
    let p = report.params;
    let errs = [
        rel_err(p.r(), 0.5),
        rel_err(p.alpha(), 6.0),
        rel_err(p.a(), 0.9),
        rel_err(p.b(), 2.5),
    ];
    Outcome::new(
        errs[0] <= 0.10 && errs[1] <= 0.10 && errs[2] <= 0.25 && errs[3] <= 0.25,
        format!(
            "r={:.4} ({:.1}%), alpha={:.4} ({:.1}%), a={:.4} ({:.1}%), b={:.4} ({:.1}%), converged={}",
            p.r(),
            errs[0] * 100.0,
            p.alpha(),
            errs[1] * 100.0,
            p.a(),
            errs[2] * 100.0,
            p.b(),
            errs[3] * 100.0,
            report.converged
        ),
    )
}

/// Worst |mean predicted − observed rate| over deciles with at least 500
/// customers, plus the number of such deciles.
fn decile_gap(mut pairs: Vec<(f64, bool)>) -> (f64, usize) {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let mut worst = 0.0f64;
    let mut counted = 0;
    for d in 0..10 {
        let bin = &pairs[d * n / 10..(d + 1) * n / 10];
        if bin.len() < 500 {
            continue;
        }
        counted += 1;
        let predicted = bin.iter().map(|p| p.0).sum::<f64>() / bin.len() as f64;
        let observed = bin.iter().filter(|p| p.1).count() as f64 / bin.len() as f64;
        worst = worst.max((predicted - observed).abs());
    }
    (worst, counted)
}

fn calibration() -> Outcome {
    const WINDOW: f64 = 30.0;
    let params = ModelParams::new(0.5, 6.0, 0.9, 2.5).unwrap();
    let cohort = simulate_cohort(&SimulationConfig {
        params,
        num_customers: 50_000,
        horizon: 546.0,
        holdout: 30.0,
        seed: 8,
        disable_dropout: false,
    })
    .unwrap();
    let query = ChurnQuery::new(WINDOW).unwrap();

    // Window score against the event it predicts: no purchase in (T, T + t~].
    let window_pairs: Vec<(f64, bool)> = cohort
        .customers
        .iter()
        .map(|c| {
            let score = churn_probability_window(&params, &c.exact_summary(), &query).unwrap();
            (score.probability, c.no_purchase_within(score.effective_horizon))
        })
        .collect();
    // Fixed 30-day horizon against the holdout indicator: no purchase in (T, T + 30].
    let holdout_pairs: Vec<(f64, bool)> = cohort
        .customers
        .iter()
        .map(|c| {
            let p = churn_probability(&params, &c.exact_summary(), WINDOW).unwrap();
            (p, cohort.holdout_zero(c).unwrap())
        })
        .collect();

    // Window score against the 30-day holdout indicator; the events differ
    // whenever t~ < 30, so this is reported but not gated.
    let mixed_pairs: Vec<(f64, bool)> = cohort
        .customers
        .iter()
        .zip(&window_pairs)
        .map(|(c, &(p, _))| (p, cohort.holdout_zero(c).unwrap()))
        .collect();

    let (gap_mixed, _) = decile_gap(mixed_pairs);
    let (gap_window, n_window) = decile_gap(window_pairs);
    let (gap_holdout, n_holdout) = decile_gap(holdout_pairs);
    Outcome::new(
        gap_window <= 0.03 && gap_holdout <= 0.03,
        format!(
            "window score max decile gap {gap_window:.4} ({n_window} deciles); 30-day holdout max decile gap {gap_holdout:.4} ({n_holdout} deciles); window score vs 30-day holdout (informational) {gap_mixed:.4}"
        ),
    )
}

fn bgchurn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgchurn"))
        .args(args)
        .output()
        .expect("spawn bgchurn")
}

fn require_ok(out: &Output, what: &str) -> Result<(), String> {
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{what} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

/// Runs the whole command set into `dir`, returning the files produced.
fn pipeline(dir: &Path, seed: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let at = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let prefix = at("sim");
    let out = bgchurn(&[
        "simulate", "--r", "0.5", "--alpha", "6", "--a", "0.9", "--b", "2.5", "--customers", "2000",
        "--horizon", "365", "--holdout", "30", "--seed", seed, "--output", &prefix,
    ]);
    require_ok(&out, "simulate")?;
    let as_of = String::from_utf8_lossy(&out.stdout)
        .lines()
        .find_map(|l| l.strip_prefix("as-of: ").map(str::to_owned))
        .ok_or("simulate did not report the as-of date")?;

    let (summaries, params, scores) = (at("summaries.csv"), at("params.json"), at("scores.csv"));
    let out = bgchurn(&[
        "ingest", "--transactions", &format!("{prefix}_transactions.csv"), "--as-of", &as_of,
        "--output", &summaries,
    ]);
    require_ok(&out, "ingest")?;
    require_ok(&bgchurn(&["fit", "--input", &summaries, "--output", &params]), "fit")?;
    let out = bgchurn(&[
        "score", "--params", &params, "--input", &summaries, "--window", "30", "--output", &scores,
    ]);
    require_ok(&out, "score")?;
    let check = bgchurn(&["check", "--params", &params, "--grid-size", "50", "--seed", seed]);
    require_ok(&check, "check")?;

    let mut files = vec![("check stdout".to_owned(), check.stdout)];
    let mut names: Vec<_> = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        let bytes = fs::read(dir.join(&name)).map_err(|e| e.to_string())?;
        files.push((name, bytes));
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let run = || -> Result<Vec<(String, Vec<u8>)>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        pipeline(dir.path(), "9")
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => {
            let names: Vec<&str> = a.iter().map(|f| f.0.as_str()).collect();
            match a.iter().zip(&b).find(|(x, y)| x != y) {
                None if a.len() == b.len() => {
                    Outcome::new(true, format!("byte-identical across two runs: {}", names.join(", ")))
                }
                None => Outcome::new(false, "runs produced different file sets"),
                Some((x, _)) => Outcome::new(false, format!("{} differs between runs", x.0)),
            }
        }
        (Err(e), _) | (_, Err(e)) => Outcome::new(false, e),
    }
}

fn end_to_end() -> Outcome {
    let result = (|| -> Result<String, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        pipeline(dir.path(), "10")?;
        let open = |name: &str| io::open(&dir.path().join(name)).map_err(|e| e.to_string());
        let ingested = io::read_summaries(open("summaries.csv")?).map_err(|e| e.to_string())?;
        let truth = io::read_ground_truth(open("sim_truth.csv")?).map_err(|e| e.to_string())?;
        if ingested.len() != truth.len() {
            return Err(format!("{} ingested vs {} true customers", ingested.len(), truth.len()));
        }
        for ((id, got), (tid, want, _)) in ingested.iter().zip(&truth) {
            if id != tid || got != want {
                return Err(format!("{id}: ingested {got:?} vs truth {tid} {want:?}"));
            }
        }
        Ok(format!("exit 0 at every stage; {} summaries equal the ground truth", truth.len()))
    })();
    match result {
        Ok(detail) => Outcome::new(true, detail),
        Err(e) => Outcome::new(false, e),
    }
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: [Criterion; 10] = [
        ("stable-reference equivalence", stable_vs_reference, secs(5)),
        ("arbitrary-precision oracle", oracle_agreement, None),
        ("overflow freedom", overflow_freedom, None),
        ("boundary exactness", boundary_exactness, None),
        ("closed forms", closed_forms, None),
        ("monotonicity", monotonicity, None),
        ("parameter recovery", recovery, secs(60)),
        ("end-to-end calibration", calibration, secs(60)),
        ("determinism", determinism, None),
        ("pipeline", end_to_end, None),
    ];

    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = check();
        let elapsed = started.elapsed();
        let outcome = within_budget(outcome, elapsed, *budget);
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.2}s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
