//! Gamma-function layer and the closed-form constants built on it.
//!
//! `ln Γ` is evaluated piecewise: a Taylor series around 1 and 2 (where
//! `ln Γ` vanishes and relative accuracy is hardest), the Stirling series
//! with upward recurrence elsewhere. Negative non-integer arguments only
//! appear through the reflection formula. Products of powers and gamma
//! values are accumulated in log space by [`LogProduct`] and exponentiated
//! once.

use std::f64::consts::{E, PI};

use serde::Serialize;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_1;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_741_780_329_7;

/// `ζ(k) − 1` for `k = 2..=40`.
const ZETA_MINUS_ONE: [f64; 39] = [
    0.644_934_066_848_226_436_47,
    0.202_056_903_159_594_285_4,
    0.082_323_233_711_138_191_516,
    0.036_927_755_143_369_926_331,
    0.017_343_061_984_449_139_715,
    0.008_349_277_381_922_826_839_8,
    0.004_077_356_197_944_339_378_7,
    0.002_008_392_826_082_214_417_9,
    0.000_994_575_127_818_085_337_15,
    0.000_494_188_604_119_464_558_7,
    0.000_246_086_553_308_048_298_64,
    0.000_122_713_347_578_489_146_75,
    6.124_813_505_870_482_925_9e-5,
    3.058_823_630_702_049_355_2e-5,
    1.528_225_940_865_187_173_3e-5,
    7.637_197_637_899_762_273_6e-6,
    3.817_293_264_999_839_856_5e-6,
    1.908_212_716_553_938_925_7e-6,
    9.539_620_338_727_961_131_5e-7,
    4.769_329_867_878_064_631_2e-7,
    2.384_505_027_277_329_9e-7,
    1.192_199_259_653_110_730_7e-7,
    5.960_818_905_125_947_961_2e-8,
    2.980_350_351_465_228_018_6e-8,
    1.490_155_482_836_504_123_5e-8,
    7.450_711_789_835_429_492e-9,
    3.725_334_024_788_457_054_8e-9,
    1.862_659_723_513_049_006_4e-9,
    9.313_274_324_196_681_828_7e-10,
    4.656_629_065_033_784_073e-10,
    2.328_311_833_676_505_492e-10,
    1.164_155_017_270_051_977_6e-10,
    5.820_772_087_902_700_889_2e-11,
    2.910_385_044_497_099_686_9e-11,
    1.455_192_189_104_198_423_6e-11,
    7.275_959_835_057_481_014_5e-12,
    3.637_979_547_378_651_190_2e-12,
    1.818_989_650_307_065_947_6e-12,
    9.094_947_840_263_889_282_5e-13,
];

/// Stirling coefficients `B₂ₖ / (2k(2k−1))`.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

const STIRLING_MIN: f64 = 12.0;

/// `Σ_{k≥2} (−1)ᵏ (ζ(k)−1) zᵏ / k` for `|z| ≤ 1/2`.
fn zeta_tail_series(z: f64) -> f64 {
    let mut acc = 0.0;
    let mut zk = z * z;
    for (i, c) in ZETA_MINUS_ONE.iter().enumerate() {
        let k = (i + 2) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * c * zk / k;
        acc += term;
        if term.abs() < 1e-18 * acc.abs().max(1e-300) {
            break;
        }
        zk *= z;
    }
    acc
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut p = inv;
    for c in STIRLING {
        corr += c * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + corr
}

/// Natural logarithm of `Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // ln Γ(x) = ln Γ(1+x) − ln x
        let z = x;
        return -z.ln_1p() + z * (1.0 - EULER_GAMMA) + zeta_tail_series(z) - x.ln();
    }
    if x <= 1.5 {
        let z = x - 1.0;
        return -z.ln_1p() + z * (1.0 - EULER_GAMMA) + zeta_tail_series(z);
    }
    if x <= 2.5 {
        let z = x - 2.0;
        return z * (1.0 - EULER_GAMMA) + zeta_tail_series(z);
    }
    if x >= STIRLING_MIN {
        return stirling(x);
    }
    let shift = (STIRLING_MIN - x).ceil() as usize;
    let mut prod = 1.0;
    for j in 0..shift {
        prod *= x + j as f64;
    }
    stirling(x + shift as f64) - prod.ln()
}

/// `Γ(x)` for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    log_gamma(x).map(f64::exp)
}

/// `sin(πx)` with exact argument reduction.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    let (a, sign) = if r < 0.0 { (-r, -1.0) } else { (r, 1.0) };
    let v = if a <= 0.25 {
        (PI * a).sin()
    } else if a <= 0.75 {
        (PI * (0.5 - a)).cos()
    } else {
        (PI * (1.0 - a)).sin()
    };
    sign * v
}

/// `cos(πx)` with exact argument reduction.
pub fn cos_pi(x: f64) -> f64 {
    let a = (x - 2.0 * (x / 2.0).round()).abs();
    if a <= 0.25 {
        (PI * a).cos()
    } else if a <= 0.75 {
        (PI * (0.5 - a)).sin()
    } else {
        -(PI * (1.0 - a)).cos()
    }
}

/// Returns `Some(k)` when `q` is exactly the non-negative integer `k`.
pub fn as_nonneg_integer(q: f64) -> Option<u32> {
    if q >= 0.0 && q.fract() == 0.0 && q < u32::MAX as f64 {
        Some(q as u32)
    } else {
        None
    }
}

/// `1/Γ(−q)`; for `q > 0` via `Γ(−q)Γ(1+q) = −π / sin(πq)`.
pub fn reciprocal_gamma_negative(q: f64) -> Result<f64> {
    if !q.is_finite() {
        return Err(Error::domain(format!("order must be finite, got {q}")));
    }
    if as_nonneg_integer(q).is_some() {
        return Err(Error::Pole(-q));
    }
    if q < 0.0 {
        return Ok((-log_gamma(-q)?).exp());
    }
    Ok(-sin_pi(q) * log_gamma(1.0 + q)?.exp() / PI)
}

/// `1 / (Γ(−q) cos(πq/2)) = −(2/π) sin(πq/2) Γ(1+q)`.
///
/// Finite for every `q > −1`, including odd integers where both factors
/// on the left vanish or blow up together.
pub fn normalizing_factor(q: f64) -> Result<f64> {
    if !(q > -1.0) || !q.is_finite() {
        return Err(Error::domain(format!("order must satisfy q > -1, got {q}")));
    }
    Ok(-2.0 / PI * sin_pi(q / 2.0) * log_gamma(1.0 + q)?.exp())
}

/// Signed product accumulated in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogProduct {
    log_abs: f64,
    negative: bool,
    zero: bool,
}

impl Default for LogProduct {
    fn default() -> Self {
        Self::one()
    }
}

impl LogProduct {
    pub fn one() -> Self {
        Self { log_abs: 0.0, negative: false, zero: false }
    }

    /// Multiplies by a real factor (any sign).
    pub fn times(mut self, factor: f64) -> Self {
        if factor == 0.0 {
            self.zero = true;
        } else {
            self.log_abs += factor.abs().ln();
            self.negative ^= factor < 0.0;
        }
        self
    }

    /// Multiplies by `base^exponent` for `base > 0`.
    pub fn times_pow(mut self, base: f64, exponent: f64) -> Self {
        debug_assert!(base > 0.0);
        self.log_abs += exponent * base.ln();
        self
    }

    /// Multiplies by `Γ(x)^power` for `x > 0`.
    pub fn times_gamma_pow(mut self, x: f64, power: f64) -> Result<Self> {
        self.log_abs += power * log_gamma(x)?;
        Ok(self)
    }

    pub fn times_gamma(self, x: f64) -> Result<Self> {
        self.times_gamma_pow(x, 1.0)
    }

    pub fn over_gamma(self, x: f64) -> Result<Self> {
        self.times_gamma_pow(x, -1.0)
    }

    pub fn log_abs(&self) -> f64 {
        self.log_abs
    }

    pub fn value(&self) -> f64 {
        if self.zero {
            return 0.0;
        }
        let v = self.log_abs.exp();
        if self.negative {
            -v
        } else {
            v
        }
    }
}

/// Order `q` of a fractional derivative, kept away from odd integers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionalOrder {
    q: f64,
    guard_radius: f64,
}

impl FractionalOrder {
    pub const DEFAULT_GUARD: f64 = 1e-6;

    pub fn new(q: f64) -> Result<Self> {
        Self::with_guard(q, Self::DEFAULT_GUARD)
    }

    pub fn with_guard(q: f64, guard_radius: f64) -> Result<Self> {
        if !(guard_radius > 0.0) || !guard_radius.is_finite() {
            return Err(Error::domain(format!("guard radius must be positive, got {guard_radius}")));
        }
        if !(q > -1.0) || !q.is_finite() {
            return Err(Error::domain(format!("order must satisfy q > -1, got {q}")));
        }
        if in_odd_guard_band(q, guard_radius) {
            return Err(Error::domain(format!(
                "order {q} lies within {guard_radius} of an odd integer"
            )));
        }
        Ok(Self { q, guard_radius })
    }

    pub fn value(&self) -> f64 {
        self.q
    }

    pub fn guard_radius(&self) -> f64 {
        self.guard_radius
    }
}

/// Distance from `q` to the nearest odd integer `2k+1`, `k ≥ 0`.
pub fn distance_to_odd(q: f64) -> f64 {
    if q <= 1.0 {
        return (1.0 - q).abs();
    }
    let k = ((q - 1.0) / 2.0).round();
    (q - (2.0 * k + 1.0)).abs()
}

pub fn in_odd_guard_band(q: f64, guard_radius: f64) -> bool {
    distance_to_odd(q) <= guard_radius
}

fn check_dimension(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    Ok(n as f64)
}

/// Surface area of the unit sphere `S^{n-1}`: `2π^{n/2}/Γ(n/2)`.
pub fn sphere_surface(n: usize) -> Result<f64> {
    let nf = check_dimension(n)?;
    Ok(LogProduct::one().times(2.0).times_pow(PI, nf / 2.0).over_gamma(nf / 2.0)?.value())
}

/// Volume of the unit Euclidean ball `B_2^n`: `π^{n/2}/Γ(n/2+1)`.
pub fn ball_volume(n: usize) -> Result<f64> {
    let nf = check_dimension(n)?;
    Ok(LogProduct::one().times_pow(PI, nf / 2.0).over_gamma(nf / 2.0 + 1.0)?.value())
}

/// Constant `c` in `(|x|^λ)^∧(ξ) = c |ξ|^{−λ−n}`, valid for `−n < λ < 0`.
pub fn fourier_power_constant(lambda: f64, n: usize) -> Result<f64> {
    let nf = check_dimension(n)?;
    if !(lambda > -nf && lambda < 0.0) {
        return Err(Error::domain(format!("exponent {lambda} outside (-{n}, 0)")));
    }
    Ok(LogProduct::one()
        .times_pow(2.0, lambda + nf)
        .times_pow(PI, nf / 2.0)
        .times_gamma((lambda + nf) / 2.0)?
        .over_gamma(-lambda / 2.0)?
        .value())
}

fn check_order_below(n: usize, q: f64, lower: f64, lower_inclusive: bool) -> Result<f64> {
    let nf = check_dimension(n)?;
    let above = if lower_inclusive { q >= lower } else { q > lower };
    if !above || !(q < nf - 1.0) {
        let open = if lower_inclusive { "[" } else { "(" };
        return Err(Error::domain(format!("order {q} outside {open}{lower}, {}) for n = {n}", nf - 1.0)));
    }
    Ok(nf)
}

/// q-th derivative at zero of the parallel section function of the unit
/// ball, un-normalized (the `cos(πq/2)` factor is included):
/// `2^{q+1} π^{(n−2)/2} Γ((q+1)/2) cos(πq/2) / ((n−q−1) Γ((n−q−1)/2))`.
pub fn ball_frac_deriv_closed_form(n: usize, q: FractionalOrder) -> Result<f64> {
    let q = q.value();
    let nf = check_order_below(n, q, -1.0, false)?;
    Ok(LogProduct::one()
        .times_pow(2.0, q + 1.0)
        .times_pow(PI, (nf - 2.0) / 2.0)
        .times_gamma((q + 1.0) / 2.0)?
        .times(cos_pi(q / 2.0))
        .times(1.0 / (nf - q - 1.0))
        .over_gamma((nf - q - 1.0) / 2.0)?
        .value())
}

/// Normalized derivative `(1/cos(πq/2)) (Rχ_{B_n})^{(q)}(0)` for the
/// Euclidean ball of volume one.
pub fn volume1_ball_value(n: usize, q: FractionalOrder) -> Result<f64> {
    let q = q.value();
    let nf = check_order_below(n, q, 0.0, true)?;
    let s = nf - q - 1.0;
    Ok(LogProduct::one()
        .times_pow(2.0, q)
        .times_pow(PI, (nf - 2.0) / 2.0)
        .times_gamma((q + 1.0) / 2.0)?
        .times_gamma_pow(1.0 + nf / 2.0, s / nf)?
        .over_gamma(s / 2.0 + 1.0)?
        .times_pow(PI, -s / 2.0)
        .value())
}

/// Simplified constant of the slicing inequality,
/// `n / ((n−q−1) 2^q π^{(q−1)/2} Γ((q+1)/2))`.
pub fn slicing_constant(n: usize, q: FractionalOrder) -> Result<f64> {
    let q = q.value();
    let nf = check_order_below(n, q, -1.0, false)?;
    Ok(LogProduct::one()
        .times(nf / (nf - q - 1.0))
        .times_pow(2.0, -q)
        .times_pow(PI, -(q - 1.0) / 2.0)
        .over_gamma((q + 1.0) / 2.0)?
        .value())
}

/// Constant before the log-convexity step:
/// `n Γ((n−q−1)/2+1) / (2^q π^{(q−1)/2} Γ((q+1)/2) (n−q−1) Γ(n/2+1)^{(n−q−1)/n})`.
/// Never exceeds [`slicing_constant`].
pub fn slicing_constant_exact(n: usize, q: FractionalOrder) -> Result<f64> {
    let qv = q.value();
    let nf = check_order_below(n, qv, -1.0, false)?;
    let s = nf - qv - 1.0;
    Ok(LogProduct::one()
        .times(nf / s)
        .times_gamma(s / 2.0 + 1.0)?
        .times_pow(2.0, -qv)
        .times_pow(PI, -(qv - 1.0) / 2.0)
        .over_gamma((qv + 1.0) / 2.0)?
        .times_gamma_pow(nf / 2.0 + 1.0, -s / nf)?
        .value())
}

/// Upper bound `C √(n log³(ne/q) / q)` on the outer volume ratio distance
/// to generalized q-intersection bodies, for `1 ≤ q ≤ n−1`.
pub fn kpz_distance_bound(n: usize, q: f64, c_abs: f64) -> Result<f64> {
    let nf = check_dimension(n)?;
    if !(q >= 1.0 && q <= nf - 1.0) {
        return Err(Error::domain(format!("q = {q} outside [1, {}]", nf - 1.0)));
    }
    if !(c_abs > 0.0) {
        return Err(Error::domain(format!("constant must be positive, got {c_abs}")));
    }
    let l = (nf * E / q).ln();
    Ok(c_abs * (nf * l * l * l / q).sqrt())
}

/// Lower bound `(c (q+1) / √(n log³(ne/(q+1))))^{q+1}` for the maximal
/// normalized derivative, for `0 ≤ q ≤ n−2` and caller-supplied `c`.
pub fn derivative_lower_bound(n: usize, q: f64, c: f64) -> Result<f64> {
    let nf = check_dimension(n)?;
    if !(q >= 0.0 && q <= nf - 2.0) {
        return Err(Error::domain(format!("q = {q} outside [0, {}]", nf - 2.0)));
    }
    if !(c > 0.0) {
        return Err(Error::domain(format!("constant must be positive, got {c}")));
    }
    let l = (nf * E / (q + 1.0)).ln();
    let base = c * (q + 1.0) / (nf * l * l * l).sqrt();
    Ok(base.powf(q + 1.0))
}

/// Largest `c` for which [`derivative_lower_bound`] stays below `value`.
pub fn implied_lower_bound_constant(n: usize, q: f64, value: f64) -> Result<f64> {
    let nf = check_dimension(n)?;
    if !(value > 0.0) {
        return Ok(0.0);
    }
    let l = (nf * E / (q + 1.0)).ln();
    Ok(value.powf(1.0 / (q + 1.0)) * (nf * l * l * l).sqrt() / (q + 1.0))
}
