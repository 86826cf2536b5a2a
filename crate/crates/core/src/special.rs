//! Special functions and log-domain helpers.
//!
//! Every probability in the engine is assembled from `ln Γ`, `ln B` and a
//! max-shifted two-term log-sum-exp, so these are the only places where
//! transcendental accuracy is decided.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
/// ln(sqrt(2π))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Taylor coefficients of ln Γ(1+ε): c₁ = −γ, c_k = (−1)^k ζ(k)/k.
const LN_GAMMA_1P: [f64; 26] = [
    -0.577_215_664_901_532_9,
    0.822_467_033_424_113_2,
    -0.400_685_634_386_531_43,
    0.270_580_808_427_784_54,
    -0.207_385_551_028_673_98,
    0.169_557_176_997_408_2,
    -0.144_049_896_768_846_1,
    0.125_509_669_524_743_04,
    -0.111_334_265_869_564_69,
    0.100_099_457_512_781_8,
    -0.090_954_017_145_829_04,
    0.083_353_840_546_109,
    -0.076_932_516_411_352_2,
    0.071_432_946_295_361_33,
    -0.066_668_705_882_420_46,
    0.062_500_955_141_213_04,
    -0.058_823_978_658_684_585,
    0.055_555_767_627_403_614,
    -0.052_631_679_379_616_66,
    0.050_000_047_698_101_69,
    -0.047_619_070_330_142_226,
    0.045_454_556_293_204_67,
    -0.043_478_266_053_040_26,
    0.041_666_669_150_341_21,
    -0.040_000_001_192_140_14,
    0.038_461_539_034_675_18,
];

/// Width of the neighbourhoods of 1 and 2 (the zeros of ln Γ) where the
/// Taylor series replaces the Lanczos sum.
const ROOT_SERIES_RADIUS: f64 = 0.2;

/// ln Γ(1+ε) for |ε| ≤ [`ROOT_SERIES_RADIUS`].
fn ln_gamma_1p_series(eps: f64) -> f64 {
    let mut acc = 0.0;
    for &c in LN_GAMMA_1P.iter().rev() {
        acc = acc * eps + c;
    }
    acc * eps
}

/// Above this the Stirling series is used; its leading term is evaluated
/// with a fused multiply-add to keep large values within about an ulp.
const STIRLING_THRESHOLD: f64 = 10.0;

/// Stirling correction coefficients B₂ₖ / (2k(2k−1)), k = 1..8.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

fn ln_gamma_stirling(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for &c in STIRLING_COEFFS.iter().rev() {
        series = series * inv2 + c;
    }
    (z - 0.5).mul_add(z.ln(), -z) + (LN_SQRT_2PI + series * inv)
}

fn ln_gamma_lanczos(z: f64) -> f64 {
    let z = z - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + series.ln()
}

/// ln Γ(z) for z > 0 without argument checks.
pub(crate) fn ln_gamma(z: f64) -> f64 {
    if (z - 1.0).abs() <= ROOT_SERIES_RADIUS {
        ln_gamma_1p_series(z - 1.0)
    } else if (z - 2.0).abs() <= ROOT_SERIES_RADIUS {
        let eps = z - 2.0;
        ln_gamma_1p_series(eps) + eps.ln_1p()
    } else if z >= STIRLING_THRESHOLD {
        ln_gamma_stirling(z)
    } else if z < 0.5 {
        // reflection: Γ(z)Γ(1−z) = π / sin(πz)
        (PI / (PI * z).sin()).ln() - ln_gamma_lanczos(1.0 - z)
    } else {
        ln_gamma_lanczos(z)
    }
}

/// ln B(a, b) for a, b > 0 without argument checks.
pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Natural log of the gamma function.
///
/// Lanczos (g = 7, nine terms) with the reflection formula below 0.5; inside
/// ±0.2 of the zeros at 1 and 2 a Taylor series in ζ(k) keeps the error
/// relative instead of absolute, and from 10 upwards the Stirling series
/// takes over.
pub fn log_gamma(z: f64) -> Result<f64> {
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::domain(format!("log_gamma requires finite z > 0, got {z}")));
    }
    Ok(ln_gamma(z))
}

/// Natural log of the beta function, `ln Γ(a) + ln Γ(b) − ln Γ(a+b)`.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a <= 0.0 || b <= 0.0 {
        return Err(Error::domain(format!(
            "log_beta requires finite a, b > 0, got ({a}, {b})"
        )));
    }
    Ok(ln_beta(a, b))
}

/// A two-term sum `e^{k1} + e^{k2}` held as `e^shift · residual_sum`, where
/// `shift = max(k1, k2)` so one term is exactly 1 after shifting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDomainPair {
    shift: f64,
    /// The smaller shifted term, `e^{min − max}` in [0, 1].
    tail: f64,
}

impl LogDomainPair {
    /// Builds the pair. `−∞` is the log of an absent term; if both terms are
    /// absent the shift is `−∞` and the residual is defined as 1.
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if k1.is_nan() || k2.is_nan() {
            return Err(Error::domain("log-sum-exp of NaN"));
        }
        if k1 == f64::INFINITY || k2 == f64::INFINITY {
            return Err(Error::domain("log-sum-exp of +inf"));
        }
        let (hi, lo) = if k1 >= k2 { (k1, k2) } else { (k2, k1) };
        let tail = if lo == f64::NEG_INFINITY {
            0.0
        } else {
            (lo - hi).exp()
        };
        Ok(Self { shift: hi, tail })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Sum of the shifted exponentials, in [1, 2].
    pub fn residual_sum(&self) -> f64 {
        1.0 + self.tail
    }

    /// `ln(e^{k1} + e^{k2})`.
    pub fn ln(&self) -> f64 {
        if self.shift == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.shift + self.tail.ln_1p()
    }
}

/// `ln(e^{k1} + e^{k2})` evaluated as `K + ln(e^{k1−K} + e^{k2−K})`,
/// `K = max(k1, k2)`. Either argument may be `−∞` (an absent term).
pub fn log_sum_exp2(k1: f64, k2: f64) -> Result<f64> {
    LogDomainPair::new(k1, k2).map(|p| p.ln())
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum in, keeping both compensation terms.
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}
