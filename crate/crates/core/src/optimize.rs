//! Derivative-free minimisation with the Nelder–Mead simplex method.

use crate::error::{Error, Result};

const REFLECTION: f64 = 1.0;
const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Relative step used to build the initial simplex from a non-zero
/// coordinate.
const NONZERO_STEP: f64 = 0.05;
/// Absolute step used for coordinates that are exactly zero.
const ZERO_STEP: f64 = 0.00025;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once `max |f(v) − f(best)|` over the simplex falls to or below this.
    pub objective_tolerance: f64,
    /// ... and `max ‖v − best‖∞` over the simplex falls to or below this.
    pub parameter_tolerance: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            objective_tolerance: 1e-9,
            parameter_tolerance: 1e-8,
        }
    }
}

impl NelderMeadOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::usage("max_iterations must be >= 1"));
        }
        for (name, v) in [
            ("objective_tolerance", self.objective_tolerance),
            ("parameter_tolerance", self.parameter_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::usage(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Vertex {
    point: Vec<f64>,
    value: f64,
}

struct Counted<F> {
    objective: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    /// Non-finite values are treated as +∞ so the vertex loses every comparison.
    fn eval(&mut self, point: Vec<f64>) -> Vertex {
        self.evaluations += 1;
        let v = (self.objective)(&point);
        Vertex {
            point,
            value: if v.is_finite() { v } else { f64::INFINITY },
        }
    }
}

fn affine(from: &[f64], to: &[f64], coef: f64) -> Vec<f64> {
    // from + coef * (to - from)
    from.iter().zip(to).map(|(f, t)| f + coef * (t - f)).collect()
}

/// Minimises `objective` starting from `initial_point`.
///
/// Standard coefficients (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5). The initial simplex moves each coordinate by 5% of its value,
/// or by 0.00025 when it is zero.
pub fn nelder_mead<F>(
    objective: F,
    initial_point: &[f64],
    options: &NelderMeadOptions,
) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    options.validate()?;
    let n = initial_point.len();
    if n == 0 {
        return Err(Error::usage("nelder_mead needs at least one dimension"));
    }
    let mut f = Counted {
        objective,
        evaluations: 0,
    };

    let start = f.eval(initial_point.to_vec());
    if !start.value.is_finite() {
        return Err(Error::usage(format!(
            "objective is not finite at the initial point {initial_point:?}"
        )));
    }
    let mut simplex = Vec::with_capacity(n + 1);
    simplex.push(start);
    for i in 0..n {
        let mut p = initial_point.to_vec();
        p[i] = if p[i] != 0.0 {
            p[i] * (1.0 + NONZERO_STEP)
        } else {
            ZERO_STEP
        };
        simplex.push(f.eval(p));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|l, r| l.value.total_cmp(&r.value));
        if has_converged(&simplex, options) {
            converged = true;
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(&v.point) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let best = simplex[0].value;
        let second_worst = simplex[n - 1].value;
        let worst = &simplex[n];

        let reflected = f.eval(affine(&centroid, &worst.point, -REFLECTION));
        if reflected.value < best {
            let expanded = f.eval(affine(&centroid, &worst.point, -EXPANSION));
            simplex[n] = if expanded.value < reflected.value {
                expanded
            } else {
                reflected
            };
            continue;
        }
        if reflected.value < second_worst {
            simplex[n] = reflected;
            continue;
        }
        if reflected.value < worst.value {
            let outside = f.eval(affine(&centroid, &reflected.point, CONTRACTION));
            if outside.value <= reflected.value {
                simplex[n] = outside;
                continue;
            }
        } else {
            let inside = f.eval(affine(&centroid, &worst.point, CONTRACTION));
            if inside.value < worst.value {
                simplex[n] = inside;
                continue;
            }
        }

        let anchor = simplex[0].point.clone();
        for v in simplex.iter_mut().skip(1) {
            *v = f.eval(affine(&anchor, &v.point, SHRINK));
        }
    }

    let best = simplex.swap_remove(0);
    Ok(NelderMeadResult {
        point: best.point,
        value: best.value,
        iterations,
        evaluations: f.evaluations,
        converged,
    })
}

/// Expects `simplex` sorted best-first.
fn has_converged(simplex: &[Vertex], options: &NelderMeadOptions) -> bool {
    let best = &simplex[0];
    let spread = simplex[1..]
        .iter()
        .map(|v| (v.value - best.value).abs())
        .fold(0.0, f64::max);
    if spread.is_nan() || spread > options.objective_tolerance {
        return false;
    }
    let diameter = simplex[1..]
        .iter()
        .flat_map(|v| v.point.iter().zip(&best.point).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    diameter <= options.parameter_tolerance
}
