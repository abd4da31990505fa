//! Fractional derivatives at zero of compactly supported functions on `[0, ∞)`.
//!
//! `h^{(q)}(0)` is the action of `t₊^{-1-q}/Γ(-q)` on `h`, regularized by
//! subtracting Taylor polynomials. Three integral forms are provided: the
//! general one (split at `t = 1`), the single-integral form for even `h`,
//! and the absolutely convergent form for `-1 < q < 0`. Near the origin the
//! subtracted integrand is replaced by its Taylor series, which avoids the
//! cancellation `h(t) − P(t)` at tiny `t`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{fd_weights, integrate, Integral, QuadOptions};
use crate::special::{as_nonneg_integer, normalizing_factor, reciprocal_gamma_negative};

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Oracle = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// Smoothness assumed for functions with an analytic derivative oracle.
pub const ANALYTIC_SMOOTHNESS: usize = 24;
/// Smoothness assumed for purely numeric functions.
pub const NUMERIC_SMOOTHNESS: usize = 4;

/// A function `h` on `[0, ∞)` vanishing beyond `T`.
#[derive(Clone)]
pub struct SectionFunction {
    eval: Eval,
    support: f64,
    smoothness: usize,
    derivatives: Option<Oracle>,
    even: bool,
    label: String,
}

impl fmt::Debug for SectionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectionFunction")
            .field("label", &self.label)
            .field("support", &self.support)
            .field("smoothness", &self.smoothness)
            .field("analytic", &self.derivatives.is_some())
            .field("even", &self.even)
            .finish()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, i| a * i as f64)
}

/// Generalized binomial coefficient `C(α, j)`.
fn binomial(alpha: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (alpha - i as f64) / (i as f64 + 1.0))
}

impl SectionFunction {
    /// Numeric function with `m_max` usable derivatives at zero.
    pub fn new(
        label: impl Into<String>,
        support: f64,
        smoothness: usize,
        even: bool,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(support > 0.0) || !support.is_finite() {
            return Err(Error::domain(format!("support radius must be positive, got {support}")));
        }
        Ok(Self { eval: Arc::new(f), support, smoothness, derivatives: None, even, label: label.into() })
    }

    /// Attaches exact derivatives `k ↦ h^{(k)}(0)`.
    pub fn with_derivatives(mut self, oracle: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        self.derivatives = Some(Arc::new(oracle));
        self
    }

    /// `e^{-t}` cut off at `T`.
    pub fn exp_neg(support: f64) -> Result<Self> {
        Ok(Self::new("exp-neg", support, ANALYTIC_SMOOTHNESS, false, |t: f64| (-t).exp())?
            .with_derivatives(|k| if k % 2 == 0 { 1.0 } else { -1.0 }))
    }

    /// `scale·(1 − t²/ω²)^α` on `[0, ω]`, extended evenly.
    pub fn power_profile(alpha: f64, omega: f64, scale: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::domain(format!("exponent must be non-negative, got {alpha}")));
        }
        let f = move |t: f64| {
            let u = 1.0 - (t / omega) * (t / omega);
            if u <= 0.0 {
                0.0
            } else {
                scale * u.powf(alpha)
            }
        };
        Ok(Self::new(format!("power-profile(alpha={alpha})"), omega, ANALYTIC_SMOOTHNESS, true, f)?.with_derivatives(
            move |k| {
                if k % 2 == 1 {
                    return 0.0;
                }
                let j = k / 2;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                scale * factorial(k) * binomial(alpha, j) * sign / omega.powi(k as i32)
            },
        ))
    }

    /// Indicator of `[0, T]`.
    pub fn indicator(support: f64) -> Result<Self> {
        Ok(Self::new("indicator", support, ANALYTIC_SMOOTHNESS, true, |_| 1.0)?
            .with_derivatives(|k| if k == 0 { 1.0 } else { 0.0 }))
    }

    /// `e^{-t²}` cut off at `T`.
    pub fn gaussian(support: f64) -> Result<Self> {
        Ok(Self::new("gaussian", support, ANALYTIC_SMOOTHNESS, true, |t: f64| (-t * t).exp())?.with_derivatives(
            |k| {
                if k % 2 == 1 {
                    return 0.0;
                }
                let j = k / 2;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * factorial(k) / factorial(j)
            },
        ))
    }

    /// Named test functions: `exp-neg`, `one-minus-t2`, `ball-profile`
    /// (`(1−t²)^{3/2}`), `indicator`, `gaussian`.
    pub fn named(name: &str, support: Option<f64>) -> Result<Self> {
        match name {
            "exp-neg" => Self::exp_neg(support.unwrap_or(40.0)),
            "one-minus-t2" => Self::power_profile(1.0, support.unwrap_or(1.0), 1.0),
            "ball-profile" => Self::power_profile(1.5, support.unwrap_or(1.0), 1.0),
            "indicator" => Self::indicator(support.unwrap_or(1.0)),
            "gaussian" => Self::gaussian(support.unwrap_or(40.0)),
            other => Err(Error::Parse(format!("unknown test function {other:?}"))),
        }
    }

    /// `αh₁ + βh₂`.
    pub fn linear_combination(alpha: f64, h1: &SectionFunction, beta: f64, h2: &SectionFunction) -> SectionFunction {
        let (e1, e2) = (h1.eval.clone(), h2.eval.clone());
        let (t1, t2) = (h1.support, h2.support);
        let derivatives = match (&h1.derivatives, &h2.derivatives) {
            (Some(d1), Some(d2)) => {
                let (d1, d2) = (d1.clone(), d2.clone());
                Some(Arc::new(move |k| alpha * d1(k) + beta * d2(k)) as Oracle)
            }
            _ => None,
        };
        SectionFunction {
            eval: Arc::new(move |t| {
                let a = if t > t1 { 0.0 } else { e1(t) };
                let b = if t > t2 { 0.0 } else { e2(t) };
                alpha * a + beta * b
            }),
            support: t1.max(t2),
            smoothness: h1.smoothness.min(h2.smoothness),
            derivatives,
            even: h1.even && h2.even,
            label: format!("{alpha}*{}+{beta}*{}", h1.label, h2.label),
        }
    }

    /// Value at `t`; zero beyond the support, mirrored for even functions.
    pub fn eval(&self, t: f64) -> f64 {
        let t = if self.even { t.abs() } else { t };
        if t > self.support {
            0.0
        } else {
            (self.eval)(t)
        }
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn is_analytic(&self) -> bool {
        self.derivatives.is_some()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn derivative(&self, k: usize) -> f64 {
        if self.even && k % 2 == 1 {
            return 0.0;
        }
        match &self.derivatives {
            Some(d) => d(k),
            None => self.fd_derivative(k),
        }
    }

    // Finite differences with Richardson extrapolation over three step sizes.
    fn fd_derivative(&self, k: usize) -> f64 {
        let base = 1e-2 * self.support.min(1.0);
        let (points, order): (Vec<f64>, usize) = if self.even {
            let half = k / 2 + 1;
            let pts = (-(half as i64)..=half as i64).map(|j| j as f64).collect();
            (pts, 2 * half + 2 - k)
        } else {
            ((0..k + 3).map(|j| j as f64).collect(), 3)
        };
        let weights = fd_weights(0.0, &points, k);
        let stencil = |s: f64| -> f64 {
            let acc: f64 = points.iter().zip(&weights).map(|(x, w)| w * self.eval(x * s)).sum();
            acc / s.powi(k as i32)
        };
        let mut table: Vec<f64> = (0..3).map(|i| stencil(base / 2f64.powi(i))).collect();
        let step = if self.even { 2 } else { 1 };
        let mut p = order as i32;
        for _ in 0..2 {
            let f = 2f64.powi(p);
            table = table.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
            p += step;
        }
        table[0]
    }
}

/// `[h(0), h'(0), …, h^{(m−1)}(0)]`.
pub fn taylor_coeffs_at_zero(h: &SectionFunction, m: usize) -> Result<Vec<f64>> {
    if m > h.smoothness + 1 {
        return Err(Error::domain(format!("{m} derivatives requested, only {} available", h.smoothness + 1)));
    }
    Ok((0..m).map(|k| h.derivative(k)).collect())
}

/// `h^{(k)}(0)` in the fractional convention, i.e. `(−1)^k d^k h/dt^k (0)`.
pub fn classical_deriv_at_zero(h: &SectionFunction, k: usize) -> Result<f64> {
    if k > h.smoothness {
        return Err(Error::domain(format!("derivative of order {k} exceeds smoothness {}", h.smoothness)));
    }
    let d = h.derivative(k);
    Ok(if k.is_multiple_of(2) { d } else { -d })
}

/// Which integral form produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Classical,
    SplitAtOne,
    EvenSingleIntegral,
    NegativeOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracDerivOptions {
    pub tol: f64,
    pub max_intervals: usize,
    /// Width of the series region `[0, t_c]`; `None` picks a default.
    pub series_split: Option<f64>,
}

impl Default for FracDerivOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_intervals: 400, series_split: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracDiagnostics {
    pub evaluations: usize,
    pub intervals: usize,
    pub split_point: f64,
    pub series_terms: usize,
    pub error_estimate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracDerivResult {
    /// `h^{(q)}(0)`.
    pub value: f64,
    /// Integral part, i.e. `Γ(−q)·h^{(q)}(0)`.
    pub bracket: f64,
    /// `h^{(q)}(0) / cos(πq/2)`, continuous through odd `q`.
    pub normalized: f64,
    pub q: f64,
    pub m_used: usize,
    pub route: Route,
    pub diagnostics: FracDiagnostics,
}

fn check_order(q: f64) -> Result<()> {
    if !(q > -1.0) || !q.is_finite() {
        return Err(Error::domain(format!("order must satisfy q > -1, got {q}")));
    }
    Ok(())
}

fn finish(q: f64, m: usize, route: Route, bracket: f64, integral: Integral, split: f64, terms: usize) -> Result<FracDerivResult> {
    // At odd q only even functions reach here, and their odd derivatives vanish.
    let inv = if as_nonneg_integer(q).is_some() { 0.0 } else { reciprocal_gamma_negative(q)? };
    Ok(FracDerivResult {
        value: bracket * inv,
        bracket,
        normalized: bracket * normalizing_factor(q)?,
        q,
        m_used: m,
        route,
        diagnostics: FracDiagnostics {
            evaluations: integral.evaluations,
            intervals: integral.intervals,
            split_point: split,
            series_terms: terms,
            error_estimate: integral.error * inv.abs(),
            converged: integral.converged,
        },
    })
}

fn quad_options(opts: &FracDerivOptions, scale: f64) -> QuadOptions {
    QuadOptions { abs_tol: opts.tol * scale.max(1e-300), rel_tol: opts.tol, max_intervals: opts.max_intervals }
}

fn split_point(h: &SectionFunction, opts: &FracDerivOptions) -> f64 {
    let t = opts.series_split.unwrap_or(if h.is_analytic() { 0.05 } else { 0.02 });
    t * h.support.min(1.0)
}

// ∫₀^{t_c} t^{-1-q} Σ_{k≥m} d_k t^k/k! dt, with the series cut at the
// smoothness limit.
fn inner_series(h: &SectionFunction, q: f64, m: usize, tc: f64) -> (f64, usize) {
    let top = h.smoothness.min(m + 12);
    let mut acc = 0.0;
    let mut terms = 0;
    for k in m..=top {
        let d = h.derivative(k);
        if d == 0.0 {
            continue;
        }
        let kf = k as f64;
        acc += d * ((kf - q) * tc.ln() - log_factorial(k)).exp() / (kf - q);
        terms += 1;
    }
    (acc, terms)
}

fn log_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

fn taylor_poly(coeffs: &[(usize, f64)], t: f64) -> f64 {
    coeffs.iter().map(|(k, c)| c * t.powi(*k as i32)).sum()
}

/// General regularized form, split at `t = 1`, with `q < m ≤ m_max`.
pub fn frac_deriv_at_zero(h: &SectionFunction, q: f64, m: usize, opts: &FracDerivOptions) -> Result<FracDerivResult> {
    check_order(q)?;
    if as_nonneg_integer(q).is_some() {
        return Err(Error::domain(format!("integer order {q} has no regularized form; use the classical derivative")));
    }
    if !(q < m as f64) || m > h.smoothness {
        return Err(Error::domain(format!("need q < m ≤ {}, got q = {q}, m = {m}", h.smoothness)));
    }
    let coeffs: Vec<(usize, f64)> =
        (0..m).map(|k| (k, h.derivative(k) / factorial(k))).filter(|(_, c)| *c != 0.0).collect();
    let t_end = h.support.min(1.0);
    let tc = split_point(h, opts).min(0.5 * t_end);
    let (series, terms) = inner_series(h, q, m, tc);
    let scale = h.eval(0.0).abs().max(coeffs.iter().map(|c| c.1.abs()).fold(0.0, f64::max));
    let qo = quad_options(opts, scale);
    let mut integral = integrate(|t| (h.eval(t) - taylor_poly(&coeffs, t)) * t.powf(-1.0 - q), tc, t_end, &qo);
    let mut bracket = series + integral.value;
    if h.support < 1.0 {
        let t = h.support;
        for (k, c) in &coeffs {
            let e = *k as f64 - q;
            bracket -= c * (1.0 - t.powf(e)) / e;
        }
    } else if h.support > 1.0 {
        let tail = integrate(|t| h.eval(t) * t.powf(-1.0 - q), 1.0, h.support, &qo);
        bracket += tail.value;
        integral = integral.plus(tail);
    }
    for (k, c) in &coeffs {
        bracket += c / (*k as f64 - q);
    }
    finish(q, m, Route::SplitAtOne, bracket, integral, tc, terms)
}

/// Single-integral form for even `h`, with even `m` and `m − 2 < q < m`.
pub fn frac_deriv_even(h: &SectionFunction, q: f64, m: usize, opts: &FracDerivOptions) -> Result<FracDerivResult> {
    check_order(q)?;
    if !h.even {
        return Err(Error::domain("even-function form needs an even function"));
    }
    if m % 2 == 1 {
        return Err(Error::domain(format!("m must be even, got {m}")));
    }
    let mf = m as f64;
    if !(mf - 2.0 < q && q < mf) {
        return Err(Error::domain(format!("need m − 2 < q < m, got q = {q}, m = {m}")));
    }
    if m > h.smoothness {
        return Err(Error::domain(format!("m = {m} exceeds smoothness {}", h.smoothness)));
    }
    let coeffs: Vec<(usize, f64)> = (0..m.saturating_sub(1))
        .step_by(2)
        .map(|k| (k, h.derivative(k) / factorial(k)))
        .filter(|(_, c)| *c != 0.0)
        .collect();
    let t_end = h.support;
    let tc = split_point(h, opts).min(0.5 * t_end);
    let (series, terms) = if m == 0 { (0.0, 0) } else { inner_series(h, q, m, tc) };
    let scale = h.eval(0.0).abs().max(coeffs.iter().map(|c| c.1.abs()).fold(0.0, f64::max));
    let qo = quad_options(opts, scale);
    let integral = if m == 0 {
        negative_order_integral(h, q, &qo)
    } else {
        integrate(|t| (h.eval(t) - taylor_poly(&coeffs, t)) * t.powf(-1.0 - q), tc, t_end, &qo)
    };
    let mut bracket = series + integral.value;
    for (k, c) in &coeffs {
        let e = *k as f64 - q;
        bracket += c * t_end.powf(e) / e;
    }
    let split = if m == 0 { 0.0 } else { tc };
    finish(q, m, Route::EvenSingleIntegral, bracket, integral, split, terms)
}

// ∫₀^T t^{-1-q} h for −1 < q < 0; on [0, min(1,T)] substitute t = u^{1/s}, s = −q.
fn negative_order_integral(h: &SectionFunction, q: f64, qo: &QuadOptions) -> Integral {
    let s = -q;
    let a = h.support.min(1.0);
    let head = integrate(|u| h.eval(u.powf(1.0 / s)) / s, 0.0, a.powf(s), qo);
    if h.support > 1.0 {
        head.plus(integrate(|t| h.eval(t) * t.powf(-1.0 - q), 1.0, h.support, qo))
    } else {
        head
    }
}

/// Absolutely convergent form for `−1 < q < 0`.
pub fn frac_deriv_neg(h: &SectionFunction, q: f64, opts: &FracDerivOptions) -> Result<FracDerivResult> {
    check_order(q)?;
    if !(q < 0.0) {
        return Err(Error::domain(format!("negative-order form needs −1 < q < 0, got {q}")));
    }
    let qo = quad_options(opts, h.eval(0.0).abs());
    let integral = negative_order_integral(h, q, &qo);
    finish(q, 0, Route::NegativeOrder, integral.value, integral, 0.0, 0)
}

/// Smallest even integer strictly greater than `q`.
pub fn default_even_order(q: f64) -> usize {
    let m = (q.floor() as i64 + 1).max(0) as usize;
    if m % 2 == 1 {
        m + 1
    } else {
        m
    }
}

/// Picks the form by the order and the parity of `h`.
pub fn frac_deriv(h: &SectionFunction, q: f64, opts: &FracDerivOptions) -> Result<FracDerivResult> {
    check_order(q)?;
    if let Some(k) = as_nonneg_integer(q) {
        if k % 2 == 1 {
            if h.even {
                return frac_deriv_even(h, q, default_even_order(q), opts);
            }
            return Err(Error::domain(format!("normalized derivative at odd order {k} needs an even function")));
        }
        let v = classical_deriv_at_zero(h, k as usize)?;
        let normalized = if k % 4 == 0 { v } else { -v };
        return Ok(FracDerivResult {
            value: v,
            bracket: f64::NAN,
            normalized,
            q,
            m_used: k as usize,
            route: Route::Classical,
            diagnostics: FracDiagnostics {
                evaluations: 0,
                intervals: 0,
                split_point: 0.0,
                series_terms: 0,
                error_estimate: 0.0,
                converged: true,
            },
        });
    }
    if q < 0.0 {
        return frac_deriv_neg(h, q, opts);
    }
    if h.even {
        return frac_deriv_even(h, q, default_even_order(q), opts);
    }
    frac_deriv_at_zero(h, q, q.floor() as usize + 1, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{ball_frac_deriv_closed_form, ball_volume, log_gamma, FractionalOrder};
    use std::f64::consts::PI;

    fn opts() -> FracDerivOptions {
        FracDerivOptions::default()
    }

    #[test]
    fn taylor_examples() {
        let h = SectionFunction::named("one-minus-t2", None).unwrap();
        assert_eq!(taylor_coeffs_at_zero(&h, 4).unwrap(), vec![1.0, 0.0, -2.0, 0.0]);
        let e = SectionFunction::exp_neg(40.0).unwrap();
        assert_eq!(taylor_coeffs_at_zero(&e, 4).unwrap(), vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn finite_differences_match_oracle() {
        let analytic = SectionFunction::power_profile(1.0, 1.0, 1.0).unwrap();
        let numeric = SectionFunction::new("n", 1.0, 4, true, |t| 1.0 - t * t).unwrap();
        let a = taylor_coeffs_at_zero(&analytic, 5).unwrap();
        let b = taylor_coeffs_at_zero(&numeric, 5).unwrap();
        for (x, y) in a.iter().zip(&b).take(4) {
            assert!((x - y).abs() < 1e-9, "{a:?} vs {b:?}");
        }
        assert!((a[4] - b[4]).abs() < 1e-4);
        let ball = SectionFunction::power_profile(1.5, 1.0, 1.0).unwrap();
        let nb = SectionFunction::new("n", 1.0, 4, true, |t: f64| (1.0 - t * t).max(0.0).powf(1.5)).unwrap();
        let a = taylor_coeffs_at_zero(&ball, 5).unwrap();
        let b = taylor_coeffs_at_zero(&nb, 5).unwrap();
        for (k, (x, y)) in a.iter().zip(&b).enumerate() {
            let tol = if k < 4 { 1e-8 } else { 1e-5 };
            assert!((x - y).abs() < tol * x.abs().max(1.0), "{a:?} vs {b:?}");
        }
        let ne = SectionFunction::new("n", 40.0, 4, false, |t: f64| (-t).exp()).unwrap();
        let b = taylor_coeffs_at_zero(&ne, 4).unwrap();
        for (k, y) in b.iter().enumerate() {
            let x = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((x - y).abs() < 1e-6, "{b:?}");
        }
    }

    #[test]
    fn classical_examples() {
        let h = SectionFunction::named("one-minus-t2", None).unwrap();
        assert_eq!(classical_deriv_at_zero(&h, 2).unwrap(), -2.0);
        assert_eq!(classical_deriv_at_zero(&h, 3).unwrap(), 0.0);
        let e = SectionFunction::exp_neg(40.0).unwrap();
        assert_eq!(classical_deriv_at_zero(&e, 3).unwrap(), 1.0);
        assert!(classical_deriv_at_zero(&e, 30).is_err());
    }

    #[test]
    fn exponential_is_an_eigenfunction() {
        let e = SectionFunction::exp_neg(40.0).unwrap();
        for &q in &[0.5f64, 2.4, 1.2, 3.6, 0.3] {
            let m = q.floor() as usize + 1;
            for extra in 0..3 {
                let r = frac_deriv_at_zero(&e, q, m + extra, &opts()).unwrap();
                assert!((r.value - 1.0).abs() < 1e-9, "q = {q}, m = {}: {}", m + extra, r.value);
            }
        }
        for &q in &[-0.5, -0.1] {
            let r = frac_deriv_neg(&e, q, &opts()).unwrap();
            assert!((r.value - 1.0).abs() < 1e-9, "q = {q}: {}", r.value);
        }
    }

    #[test]
    fn gaussian_half_line_oracle() {
        // ∫₀^∞ t^{-1-q} e^{-t²} dt = Γ(−q/2)/2, continued analytically.
        let g = SectionFunction::gaussian(40.0).unwrap();
        for &q in &[0.5, 1.5, 2.5, 3.2] {
            let r = frac_deriv_even(&g, q, default_even_order(q), &opts()).unwrap();
            let half = -q / 2.0;
            let gamma_half = if half > 0.0 {
                log_gamma(half).unwrap().exp()
            } else {
                // Γ(x) = Γ(x+k)/(x(x+1)…(x+k−1)) for negative non-integer x.
                let mut x = half;
                let mut prod = 1.0;
                while x < 0.0 {
                    prod *= x;
                    x += 1.0;
                }
                log_gamma(x).unwrap().exp() / prod
            };
            let expect = gamma_half / 2.0 * reciprocal_gamma_negative(q).unwrap();
            assert!((r.value / expect - 1.0).abs() < 1e-9, "q = {q}: {} vs {expect}", r.value);
        }
    }

    #[test]
    fn routes_agree_on_even_inputs() {
        for h in [
            SectionFunction::power_profile(1.0, 1.0, 1.0).unwrap(),
            SectionFunction::power_profile(1.5, 1.0, 1.0).unwrap(),
        ] {
            for &q in &[0.5f64, 1.5, 2.5, 3.5, 0.2] {
                let m = default_even_order(q);
                let even = frac_deriv_even(&h, q, m, &opts()).unwrap();
                for mm in [q.floor() as usize + 1, m, m + 1, m + 2] {
                    let gen = frac_deriv_at_zero(&h, q, mm, &opts()).unwrap();
                    assert!(
                        (gen.value / even.value - 1.0).abs() < 1e-9,
                        "{}, q = {q}, m = {mm}: {} vs {}",
                        h.label(),
                        gen.value,
                        even.value
                    );
                }
            }
            let neg = frac_deriv_neg(&h, -0.3, &opts()).unwrap();
            let gen = frac_deriv_at_zero(&h, -0.3, 1, &opts()).unwrap();
            assert!((neg.value - gen.value).abs() < 1e-10);
        }
    }

    #[test]
    fn indicator_closed_forms() {
        let h = SectionFunction::indicator(1.0).unwrap();
        let r = frac_deriv_neg(&h, -0.5, &opts()).unwrap();
        assert!((r.value - 2.0 / PI.sqrt()).abs() < 1e-10);
        // With m = 2: ∫₁^∞ t^{-1.5}(−1) dt = −2, so the value is −2/Γ(−0.5) = 1/√π.
        let e = frac_deriv_even(&h, 0.5, 2, &opts()).unwrap();
        let g = frac_deriv_at_zero(&h, 0.5, 1, &opts()).unwrap();
        assert!((e.value - 1.0 / PI.sqrt()).abs() < 1e-12);
        assert!((g.value - e.value).abs() < 1e-12);
    }

    #[test]
    fn ball_profile_matches_closed_form() {
        for (n, q) in [(4usize, 1.5f64), (4, 0.5), (6, 2.5), (5, 3.5), (3, 0.7)] {
            let alpha = (n as f64 - 1.0) / 2.0;
            let h = SectionFunction::power_profile(alpha, 1.0, ball_volume(n - 1).unwrap()).unwrap();
            let r = frac_deriv(&h, q, &opts()).unwrap();
            let cf = ball_frac_deriv_closed_form(n, FractionalOrder::new(q).unwrap()).unwrap();
            assert!((r.value / cf - 1.0).abs() < 1e-9, "n = {n}, q = {q}: {} vs {cf}", r.value);
            let g = frac_deriv_at_zero(&h, q, q.floor() as usize + 1, &opts()).unwrap();
            assert!((g.value / cf - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn integer_limit() {
        let h = SectionFunction::power_profile(1.5, 1.0, 1.0).unwrap();
        let exact = classical_deriv_at_zero(&h, 2).unwrap();
        for q in [2.0 - 1e-4, 2.0 + 1e-4] {
            let r = frac_deriv(&h, q, &opts()).unwrap();
            assert!((r.value / exact - 1.0).abs() < 1e-3, "q = {q}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn normalized_is_continuous_at_one() {
        let h = SectionFunction::power_profile(1.5, 1.0, 1.0).unwrap();
        let a = frac_deriv(&h, 1.0 - 1e-6, &opts()).unwrap().normalized;
        let b = frac_deriv_even(&h, 1.0 + 1e-6, 2, &opts()).unwrap().normalized;
        assert!((a - b).abs() < 1e-4 * a.abs());
    }

    #[test]
    fn linearity() {
        let h1 = SectionFunction::power_profile(1.5, 1.0, 1.0).unwrap();
        let h2 = SectionFunction::gaussian(10.0).unwrap();
        let c = SectionFunction::linear_combination(2.0, &h1, -0.5, &h2);
        for &q in &[0.5, 1.5, -0.4] {
            let a = frac_deriv(&h1, q, &opts()).unwrap().value;
            let b = frac_deriv(&h2, q, &opts()).unwrap().value;
            let v = frac_deriv(&c, q, &opts()).unwrap().value;
            assert!((v - (2.0 * a - 0.5 * b)).abs() < 1e-9 * v.abs().max(1.0), "q = {q}");
        }
    }

    #[test]
    fn domain_errors() {
        let h = SectionFunction::power_profile(1.0, 1.0, 1.0).unwrap();
        assert!(frac_deriv_even(&h, 2.5, 3, &opts()).is_err());
        assert!(frac_deriv_even(&h, 0.5, 4, &opts()).is_err());
        assert!(frac_deriv_at_zero(&h, 2.0, 3, &opts()).is_err());
        assert!(frac_deriv_at_zero(&h, 2.5, 2, &opts()).is_err());
        assert!(frac_deriv_neg(&h, 0.5, &opts()).is_err());
        assert!(frac_deriv(&h, -1.0, &opts()).is_err());
        let e = SectionFunction::exp_neg(40.0).unwrap();
        assert!(frac_deriv_even(&e, 0.5, 2, &opts()).is_err());
        assert!(SectionFunction::named("nope", None).is_err());
    }

    #[test]
    fn default_orders() {
        assert_eq!(default_even_order(-0.5), 0);
        assert_eq!(default_even_order(0.0), 2);
        assert_eq!(default_even_order(0.5), 2);
        assert_eq!(default_even_order(1.5), 2);
        assert_eq!(default_even_order(2.0), 4);
        assert_eq!(default_even_order(3.9), 4);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn routes_agree_and_dilations_scale(
            alpha in 0.5f64..3.0,
            omega in 0.5f64..2.0,
            q in -0.9f64..3.9,
        ) {
            proptest::prop_assume!((q - q.round()).abs() > 0.05);
            let h = SectionFunction::power_profile(alpha, omega, 1.0).unwrap();
            let unit = SectionFunction::power_profile(alpha, 1.0, 1.0).unwrap();
            let reference = frac_deriv(&h, q, &opts()).unwrap().value;
            let lo = if q < 0.0 { 0 } else { q.floor() as usize + 1 };
            for m in lo..lo + 2 {
                let v = frac_deriv_at_zero(&h, q, m, &opts()).unwrap().value;
                proptest::prop_assert!((v / reference - 1.0).abs() < 1e-8, "m = {}: {} vs {}", m, v, reference);
            }
            let scaled = frac_deriv(&unit, q, &opts()).unwrap().value * omega.powf(-q);
            proptest::prop_assert!((scaled / reference - 1.0).abs() < 1e-8, "{} vs {}", scaled, reference);
        }
    }
}
