//! Checkers for the identities and inequalities satisfied by fractional
//! derivatives of sections, each producing an [`InequalityReport`].

mod suite;

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use serde::Serialize;

use crate::bodies::{enclosing_ellipsoid_dovr, BodyKind, SphereGrid, StarBody};
use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, try_map_indexed};
use crate::radon::{
    frac_radon_at_zero, frac_radon_extended, max_over_directions_multi, moment_integral, Density, DirectionMax,
    QuadratureSpec,
};
use crate::special::{
    ball_frac_deriv_closed_form, ball_volume, cos_pi, derivative_lower_bound, distance_to_odd, fourier_power_constant,
    implied_lower_bound_constant, kpz_distance_bound, slicing_constant, slicing_constant_exact, sphere_surface,
    FractionalOrder, LogProduct,
};

pub use suite::{run_all, run_check, to_csv, Summary, SuiteConfig, CHECKS, CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Equality,
    Inequality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// A hypothesis could not be confirmed; the conclusion was not tested.
    Inapplicable,
}

/// Named constant and the formula it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub source: String,
}

fn constant(name: &str, value: f64, source: &str) -> Constant {
    Constant { name: name.into(), value, source: source.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub check: String,
    pub kind: ReportKind,
    pub n: usize,
    pub q: Option<f64>,
    pub body: String,
    pub density: String,
    pub dovr_source: String,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub status: Status,
    pub tight: bool,
    pub applicability: Vec<String>,
    pub constants: Vec<Constant>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl InequalityReport {
    fn new(check: &str, kind: ReportKind, n: usize, quad: &QuadratureSpec) -> Self {
        Self {
            check: check.into(),
            kind,
            n,
            q: None,
            body: String::new(),
            density: String::new(),
            dovr_source: String::new(),
            seed: quad.seed,
            inputs: BTreeMap::new(),
            lhs: 0.0,
            rhs: 0.0,
            margin: 0.0,
            tolerance: 0.0,
            pass: false,
            status: Status::Fail,
            tight: false,
            applicability: Vec::new(),
            constants: Vec::new(),
            diagnostics: BTreeMap::new(),
        }
    }

    fn input(mut self, key: &str, value: impl ToString) -> Self {
        self.inputs.insert(key.into(), value.to_string());
        self
    }

    fn diag(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.diagnostics.insert(key.into(), value);
        }
    }

    /// `lhs ≤ rhs` up to `tolerance`.
    fn finish_inequality(mut self, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        self.lhs = lhs;
        self.rhs = rhs;
        self.margin = rhs - lhs;
        self.tolerance = tolerance;
        self.pass = self.margin >= -tolerance && self.margin.is_finite();
        self.status = if self.pass { Status::Pass } else { Status::Fail };
        self.tight = self.margin.abs() <= tolerance.max(1e-9 * lhs.abs().max(rhs.abs()));
        self
    }

    /// `lhs = rhs` to relative tolerance `rel_tol`.
    fn finish_equality(mut self, lhs: f64, rhs: f64, rel_tol: f64) -> Self {
        self.lhs = lhs;
        self.rhs = rhs;
        self.margin = rhs - lhs;
        self.tolerance = rel_tol * lhs.abs().max(rhs.abs());
        let gap = rel_gap(lhs, rhs);
        self.diag("relative_gap", gap);
        self.pass = gap <= rel_tol;
        self.status = if self.pass { Status::Pass } else { Status::Fail };
        self.tight = true;
        self
    }

    fn inapplicable(mut self, reason: String) -> Self {
        self.applicability.push(reason);
        self.pass = false;
        self.status = Status::Inapplicable;
        self
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Where an outer volume ratio distance bound comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum DovrSource {
    /// The body is itself in the class (ellipsoids, `ℓ_p` balls with `p ≤ 2`).
    IntersectionBody,
    /// Unconditional convex bodies are within `e`.
    Unconditional,
    /// Unit balls of subspaces of `L_p`, `c√p`.
    LpSubspace { p: f64, c: f64 },
    /// Distance to generalized intersection bodies of the given order.
    Kpz { order: f64, c_abs: f64 },
    EnclosingEllipsoid { samples: usize, seed: u64 },
    Given,
}

impl DovrSource {
    pub fn tag(&self) -> &'static str {
        match self {
            DovrSource::IntersectionBody => "intersection-body",
            DovrSource::Unconditional => "unconditional",
            DovrSource::LpSubspace { .. } => "lp-subspace",
            DovrSource::Kpz { .. } => "kpz",
            DovrSource::EnclosingEllipsoid { .. } => "enclosing-ellipsoid",
            DovrSource::Given => "given",
        }
    }
}

/// Upper bound on an outer volume ratio distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DovrBound {
    pub value: f64,
    pub source: DovrSource,
}

impl DovrBound {
    pub fn new(value: f64, source: DovrSource) -> Result<Self> {
        if !(value >= 1.0) || !value.is_finite() {
            return Err(Error::domain(format!("distance bound must be at least 1, got {value}")));
        }
        Ok(Self { value, source })
    }

    pub fn given(value: f64) -> Result<Self> {
        Self::new(value, DovrSource::Given)
    }

    pub fn kpz(n: usize, order: f64, c_abs: f64) -> Result<Self> {
        let v = kpz_distance_bound(n, order, c_abs)?.max(1.0);
        Self::new(v, DovrSource::Kpz { order, c_abs })
    }

    /// Default bound by body kind; `c_lp` is the constant of the `c√p` bound.
    pub fn for_body(k: &StarBody, c_lp: f64, samples: usize, seed: u64) -> Result<Self> {
        match k.kind() {
            BodyKind::Ball { .. } | BodyKind::Ellipsoid { .. } => Self::new(1.0, DovrSource::IntersectionBody),
            BodyKind::LpBall { p, .. } if *p <= 2.0 => Self::new(1.0, DovrSource::IntersectionBody),
            BodyKind::LpBall { p, .. } if p.is_infinite() => Self::new(E, DovrSource::Unconditional),
            BodyKind::LpBall { p, .. } => Self::new((c_lp * p.sqrt()).max(1.0), DovrSource::LpSubspace { p: *p, c: c_lp }),
            // The classes are invariant under dilations and linear maps.
            BodyKind::Scaled { base, .. } | BodyKind::Linear { base, .. } => Self::for_body(base, c_lp, samples, seed),
            BodyKind::RadialQSum { .. } => {
                let r = enclosing_ellipsoid_dovr(k, samples, seed)?;
                Self::new(r.ratio, DovrSource::EnclosingEllipsoid { samples, seed })
            }
        }
    }
}

fn polar_grid(n: usize, quad: &QuadratureSpec) -> SphereGrid {
    SphereGrid::new(n, quad.polar_nodes, quad.seed)
}

/// Volume in closed form when known, else by the polar formula; the second
/// value is an error estimate.
fn body_volume(k: &StarBody, quad: &QuadratureSpec) -> Result<(f64, f64)> {
    if let Some(v) = k.closed_form_volume() {
        return Ok((v, 0.0));
    }
    let m = moment_integral(k, k, &Density::uniform(), 0.0, quad)?;
    Ok((m.value, m.error_estimate))
}

// n / ((n−q−1) 2^q π^{(q−1)/2} Γ((q+1)/2)), continuous through odd q.
fn slicing_constant_any(n: usize, q: f64) -> Result<f64> {
    let nf = n as f64;
    Ok(LogProduct::one()
        .times(nf / (nf - q - 1.0))
        .times_pow(2.0, -q)
        .times_pow(PI, -(q - 1.0) / 2.0)
        .over_gamma((q + 1.0) / 2.0)?
        .value())
}

fn below_top(n: usize, q: f64) -> Result<()> {
    if !(q > -1.0 && q < n as f64 - 1.0) {
        return Err(Error::domain(format!("order {q} outside (-1, {}) for n = {n}", n - 1)));
    }
    Ok(())
}

fn unit_vector(n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    e
}

/// Ball value computed from the closed form, from the 1-D derivative of the
/// closed-form section function, from the Fourier constant of a power of
/// the norm, and from the full section quadrature.
pub fn check_ball_identity(n: usize, q: FractionalOrder, quad: &QuadratureSpec) -> Result<InequalityReport> {
    let qv = q.value();
    below_top(n, qv)?;
    let ball = StarBody::unit_ball(n)?;
    let xi = unit_vector(n);
    let closed = ball_frac_deriv_closed_form(n, q)?;
    let analytic = QuadratureSpec { prefer_analytic: true, ..quad.clone() };
    let one_d = frac_radon_at_zero(&ball, &Density::uniform(), &xi, q, &analytic)?;
    let fourier_c = fourier_power_constant(-(n as f64) + qv + 1.0, n)?;
    let fourier = cos_pi(qv / 2.0) / (PI * (n as f64 - qv - 1.0)) * fourier_c;
    let numeric = QuadratureSpec { prefer_analytic: false, ..quad.clone() };
    let pipeline = frac_radon_at_zero(&ball, &Density::uniform(), &xi, q, &numeric)?;

    let mut r = InequalityReport::new("corollary1", ReportKind::Equality, n, quad).input("n", n).input("q", qv);
    r.q = Some(qv);
    r.body = ball.to_string();
    r.density = "uniform".into();
    r.constants.push(constant(
        "closed_form",
        closed,
        "2^{q+1} pi^{(n-2)/2} Gamma((q+1)/2) cos(pi q/2) / ((n-q-1) Gamma((n-q-1)/2))",
    ));
    r.constants.push(constant(
        "fourier_power_constant",
        fourier_c,
        "2^{lambda+n} pi^{n/2} Gamma((lambda+n)/2) / Gamma(-lambda/2), lambda = -n+q+1",
    ));
    let g_1d = rel_gap(closed, one_d.raw);
    let g_fourier = rel_gap(closed, fourier);
    let g_pipe = rel_gap(closed, pipeline.raw);
    r.diag("one_d", one_d.raw);
    r.diag("fourier", fourier);
    r.diag("pipeline", pipeline.raw);
    r.diag("gap_closed_one_d", g_1d);
    r.diag("gap_closed_fourier", g_fourier);
    r.diag("gap_closed_pipeline", g_pipe);
    r.diag("one_d_error_estimate", one_d.detail.diagnostics.error_estimate);
    r.diag("pipeline_error_estimate", pipeline.detail.diagnostics.error_estimate);
    let mut r = r.finish_equality(closed, one_d.raw, 1e-6);
    r.pass = r.pass && g_fourier <= 1e-6 && g_pipe <= quad.equality_tol;
    r.status = if r.pass { Status::Pass } else { Status::Fail };
    Ok(r)
}

/// Spherical Parseval formula for a ball or an ellipsoid, using the
/// Fourier transform of powers of the Euclidean norm and the linear change
/// of variables.
pub fn check_parseval(k: &StarBody, p: f64, quad: &QuadratureSpec) -> Result<InequalityReport> {
    let n = k.dim();
    let nf = n as f64;
    if !(p > 0.0 && p < nf) {
        return Err(Error::domain(format!("exponent {p} outside (0, {n})")));
    }
    let l = k
        .ellipsoid_map()
        .ok_or_else(|| Error::domain(format!("no Fourier formula for {k}")))?;
    let det = l.determinant().abs();
    let c1 = fourier_power_constant(-p, n)?;
    let c2 = fourier_power_constant(p - nf, n)?;
    let grid = polar_grid(n, quad);
    let two_pi_n = (2.0 * PI).powf(nf);
    let (lhs_terms, rhs_terms): (Vec<f64>, Vec<f64>) = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .map(|(th, w)| {
            let lt = l.transpose() * nalgebra::DVector::from_column_slice(th);
            let a = det * c1 * lt.norm().powf(p - nf);
            let b = det * c2 * lt.norm().powf(-p);
            let norm = k.minkowski(th).unwrap_or(f64::NAN);
            (w * a * b, w * norm.powf(-nf))
        })
        .unzip();
    let lhs = pairwise_sum(&lhs_terms);
    let rhs = two_pi_n * pairwise_sum(&rhs_terms);
    let mut r = InequalityReport::new("parseval", ReportKind::Equality, n, quad).input("p", p);
    r.body = k.to_string();
    r.constants.push(constant("fourier_constant_p", c1, "Fourier constant of |x|^{-p}"));
    r.constants.push(constant("fourier_constant_n_minus_p", c2, "Fourier constant of |x|^{-n+p}"));
    r.constants.push(constant("two_pi_n", two_pi_n, "(2 pi)^n"));
    r.diag("product_of_constants_over_two_pi_n", c1 * c2 / two_pi_n);
    let tol = if matches!(k.kind(), BodyKind::Ball { .. }) { 1e-12 } else { quad.equality_tol };
    Ok(r.finish_equality(lhs, rhs, tol))
}

/// `∫_D ‖x‖_D^{−1−q} dx = n|D|/(n−q−1)`.
pub fn check_mp_moment_identity(d: &StarBody, q: FractionalOrder, quad: &QuadratureSpec) -> Result<InequalityReport> {
    let n = d.dim();
    let qv = q.value();
    below_top(n, qv)?;
    let m = moment_integral(d, d, &Density::uniform(), 1.0 + qv, quad)?;
    let (vol, vol_err) = body_volume(d, quad)?;
    let rhs = n as f64 * vol / (n as f64 - qv - 1.0);
    let mut r = InequalityReport::new("mp-identity", ReportKind::Equality, n, quad).input("q", qv);
    r.q = Some(qv);
    r.body = d.to_string();
    r.density = "uniform".into();
    r.constants.push(constant("volume", vol, if vol_err == 0.0 { "closed form" } else { "polar formula" }));
    r.diag("moment_error_estimate", m.error_estimate);
    r.diag("volume_error_estimate", vol_err);
    Ok(r.finish_equality(m.value, rhs, quad.equality_tol))
}

/// Checks `g(0) = 1 = ‖g‖_∞` on `L`; returns a reason when it fails.
fn unit_peak(g: &Density, l: &StarBody, quad: &QuadratureSpec) -> Option<String> {
    let at0 = g.at_origin();
    let sup = g.sup_on(l, &SphereGrid::new(l.dim(), 200, quad.seed), 32);
    if (at0 - 1.0).abs() > 1e-12 || sup > 1.0 + 1e-12 {
        Some(format!("density needs g(0) = 1 = sup g; found g(0) = {at0}, sup = {sup}"))
    } else {
        None
    }
}

/// `(∫_L ‖x‖_D^{−1−q} g / ∫_D ‖x‖_D^{−1−q})^{1/(n−q−1)} ≤ (∫_L g / |D|)^{1/n}`.
pub fn check_mp_lemma(l: &StarBody, g: &Density, d: &StarBody, q: FractionalOrder, quad: &QuadratureSpec) -> Result<InequalityReport> {
    let n = l.dim();
    let nf = n as f64;
    let qv = q.value();
    below_top(n, qv)?;
    let mut r = InequalityReport::new("mp-lemma", ReportKind::Inequality, n, quad)
        .input("q", qv)
        .input("outer", d);
    r.q = Some(qv);
    r.body = l.to_string();
    r.density = g.to_string();
    if let Some(reason) = unit_peak(g, l, quad) {
        return Ok(r.inapplicable(reason));
    }
    r.applicability.push("g(0) = 1 = sup g checked on 200 rays".into());
    let num = moment_integral(d, l, g, 1.0 + qv, quad)?;
    let den = moment_integral(d, d, &Density::uniform(), 1.0 + qv, quad)?;
    let mass = moment_integral(l, l, g, 0.0, quad)?;
    let (vol, vol_err) = body_volume(d, quad)?;
    let s = nf - qv - 1.0;
    let lhs = (num.value / den.value).powf(1.0 / s);
    let rhs = (mass.value / vol).powf(1.0 / nf);
    let rel_err = num.error_estimate / num.value.abs()
        + den.error_estimate / den.value.abs()
        + mass.error_estimate / mass.value.abs()
        + vol_err / vol;
    r.diag("numerator", num.value);
    r.diag("denominator", den.value);
    r.diag("mass", mass.value);
    r.diag("volume", vol);
    Ok(r.finish_inequality(lhs, rhs, 10.0 * rel_err * lhs.max(rhs)))
}

/// `∫_{S^{n−1}} ‖θ‖_D^{−1−q} dθ ≤ |S^{n−1}|^{(n−q−1)/n} n^{(q+1)/n} |D|^{(q+1)/n}`,
/// with `|D|` from the same spherical rule.
pub fn check_holder_step(d: &StarBody, q: FractionalOrder, quad: &QuadratureSpec) -> Result<InequalityReport> {
    let n = d.dim();
    let nf = n as f64;
    let qv = q.value();
    below_top(n, qv)?;
    let grid = polar_grid(n, quad);
    let terms: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .map(|(th, w)| w * d.minkowski(th).unwrap_or(f64::NAN).powf(-1.0 - qv))
        .collect();
    let lhs = pairwise_sum(&terms);
    let vol = d.volume_polar(&grid)?;
    let surface = sphere_surface(n)?;
    let rhs = surface.powf((nf - qv - 1.0) / nf) * nf.powf((qv + 1.0) / nf) * vol.powf((qv + 1.0) / nf);
    let mut r = InequalityReport::new("holder", ReportKind::Inequality, n, quad).input("q", qv);
    r.q = Some(qv);
    r.body = d.to_string();
    r.constants.push(constant("sphere_surface", surface, "2 pi^{n/2} / Gamma(n/2)"));
    r.diag("volume_polar", vol);
    Ok(r.finish_inequality(lhs, rhs, 1e-12 * rhs))
}

fn sign_note(m: &DirectionMax) -> String {
    let sign = if m.value > 0.0 {
        "positive"
    } else if m.value < 0.0 {
        "negative"
    } else {
        "zero"
    };
    format!("maximal normalized derivative is {sign}; grid minimum {:e}", m.grid_min)
}

fn smoothness_note(k: &StarBody, q: f64) -> Option<String> {
    (!k.is_smooth()).then(|| {
        format!("body is not infinitely smooth; at q = {q} the maximum over directions may be unbounded, which only raises the right side")
    })
}

/// `∫_K f ≤ c(n,q) |K|^{(q+1)/n} d^{q+1} max_ξ (1/cos(πq/2)) (Rf(ξ,·))^{(q)}(0)`
/// for several orders sharing one direction sweep.
pub fn check_slicing_multi(
    k: &StarBody,
    f: &Density,
    qs: &[FractionalOrder],
    dovr: &DovrBound,
    quad: &QuadratureSpec,
) -> Result<Vec<InequalityReport>> {
    let n = k.dim();
    for q in qs {
        below_top(n, q.value())?;
    }
    if !(dovr.value >= 1.0) {
        return Err(Error::domain(format!("distance bound must be at least 1, got {}", dovr.value)));
    }
    let values: Vec<f64> = qs.iter().map(|q| q.value()).collect();
    let maxima = max_over_directions_multi(k, f, &values, quad)?;
    let mass = if f.is_uniform() {
        match k.closed_form_volume() {
            Some(v) => crate::radon::MomentValue { value: f.scale * v, error_estimate: 0.0 },
            None => moment_integral(k, k, f, 0.0, quad)?,
        }
    } else {
        moment_integral(k, k, f, 0.0, quad)?
    };
    let (vol, vol_err) = body_volume(k, quad)?;
    qs.iter()
        .zip(maxima)
        .map(|(q, m)| {
            let qv = q.value();
            let c = slicing_constant(n, *q)?;
            let c_exact = slicing_constant_exact(n, *q)?;
            let power = (qv + 1.0) / n as f64;
            let factor = vol.powf(power) * dovr.value.powf(qv + 1.0);
            let rhs = c * factor * m.value;
            let rhs_exact = c_exact * factor * m.value;
            let err = mass.error_estimate + (c * factor * m.error_estimate).abs() + (rhs * power * vol_err / vol).abs();
            let mut r = InequalityReport::new("thm2", ReportKind::Inequality, n, quad)
                .input("q", qv)
                .input("dovr", dovr.value);
            r.q = Some(qv);
            r.body = k.to_string();
            r.density = f.to_string();
            r.dovr_source = dovr.source.tag().into();
            r.constants.push(constant(
                "c_nq",
                c,
                "n / ((n-q-1) 2^q pi^{(q-1)/2} Gamma((q+1)/2))",
            ));
            r.constants.push(constant(
                "c_nq_exact",
                c_exact,
                "n Gamma((n-q-1)/2+1) / (2^q pi^{(q-1)/2} Gamma((q+1)/2) (n-q-1) Gamma(n/2+1)^{(n-q-1)/n})",
            ));
            r.constants.push(constant("dovr", dovr.value, dovr.source.tag()));
            r.constants.push(constant("volume", vol, if vol_err == 0.0 { "closed form" } else { "polar formula" }));
            r.applicability.push(sign_note(&m));
            if let Some(note) = smoothness_note(k, qv) {
                r.applicability.push(note);
            }
            r.diag("max_value", m.value);
            r.diag("max_grid_value", m.grid_value);
            r.diag("max_grid_mean", m.grid_mean);
            r.diag("max_error_estimate", m.error_estimate);
            r.diag("direction_grid_size", m.grid_size as f64);
            r.diag("rhs_exact_constant", rhs_exact);
            r.diag("margin_exact_constant", rhs_exact - mass.value);
            r.diag("mass_error_estimate", mass.error_estimate);
            Ok(r.finish_inequality(mass.value, rhs, 10.0 * err))
        })
        .collect()
}

pub fn check_slicing(k: &StarBody, f: &Density, q: FractionalOrder, dovr: &DovrBound, quad: &QuadratureSpec) -> Result<InequalityReport> {
    Ok(check_slicing_multi(k, f, &[q], dovr, quad)?.remove(0))
}

/// Compares sections of `f` on `K` and `g` on `L` over a direction grid and,
/// when the hypothesis holds on every node, checks
/// `∫_K f ≤ (n/(n−q−1)) d^{q+1} (∫_L g)^{(n−q−1)/n} |K|^{(q+1)/n}`.
#[allow(clippy::too_many_arguments)]
pub fn check_comparison(
    k: &StarBody,
    f: &Density,
    l: &StarBody,
    g: &Density,
    q: FractionalOrder,
    dovr: &DovrBound,
    quad: &QuadratureSpec,
    hypothesis_directions: usize,
) -> Result<InequalityReport> {
    let n = k.dim();
    let nf = n as f64;
    let qv = q.value();
    below_top(n, qv)?;
    if l.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: l.dim() });
    }
    let mut r = InequalityReport::new("thm3", ReportKind::Inequality, n, quad)
        .input("q", qv)
        .input("dovr", dovr.value)
        .input("comparison_body", l)
        .input("comparison_density", g);
    r.q = Some(qv);
    r.body = k.to_string();
    r.density = f.to_string();
    r.dovr_source = dovr.source.tag().into();
    if let Some(reason) = unit_peak(g, l, quad) {
        return Ok(r.inapplicable(reason));
    }
    let grid = SphereGrid::new(n, 2 * hypothesis_directions, quad.seed);
    let half = grid.half();
    let pairs = try_map_indexed(quad.execution, half.len(), |i| -> Result<(f64, f64, f64)> {
        let a = frac_radon_at_zero(k, f, &half[i], q, quad)?;
        let b = frac_radon_at_zero(l, g, &half[i], q, quad)?;
        let err = a.detail.diagnostics.error_estimate.abs() + b.detail.diagnostics.error_estimate.abs();
        Ok((a.normalized, b.normalized, err))
    })?;
    let mut worst = f64::INFINITY;
    for (i, (a, b, err)) in pairs.iter().enumerate() {
        let slack = b - a;
        worst = worst.min(slack);
        if slack < -(10.0 * err + 1e-12 * a.abs().max(b.abs())) {
            r.diag("witness_lhs", *a);
            r.diag("witness_rhs", *b);
            let reason = format!("hypothesis fails at direction {:?}: {a:e} > {b:e}", half[i]);
            return Ok(r.inapplicable(reason));
        }
    }
    r.applicability.push(format!(
        "hypothesis verified on {} grid directions, not on the whole sphere",
        half.len()
    ));
    r.diag("hypothesis_min_slack", worst);
    r.diag("hypothesis_directions", half.len() as f64);
    let f_mass = moment_integral(k, k, f, 0.0, quad)?;
    let g_mass = moment_integral(l, l, g, 0.0, quad)?;
    let (vol, vol_err) = body_volume(k, quad)?;
    let lead = nf / (nf - qv - 1.0);
    let rhs = lead * dovr.value.powf(qv + 1.0) * g_mass.value.powf((nf - qv - 1.0) / nf) * vol.powf((qv + 1.0) / nf);
    let err = f_mass.error_estimate + rhs * (g_mass.error_estimate / g_mass.value + vol_err / vol);
    r.constants.push(constant("lead", lead, "n / (n-q-1)"));
    r.constants.push(constant("dovr", dovr.value, dovr.source.tag()));
    r.constants.push(constant("volume", vol, if vol_err == 0.0 { "closed form" } else { "polar formula" }));
    r.diag("comparison_mass", g_mass.value);
    Ok(r.finish_inequality(f_mass.value, rhs, 10.0 * err))
}

/// Checks the lower bound `(c(q+1)/√(n log³(ne/(q+1))))^{q+1}` on the
/// maximal normalized derivative of a volume-one body with a probability
/// density, and reports the largest `c` for which it holds.  Odd integer
/// orders use the continuous extension and are flagged.
pub fn check_lower_bound(
    k: &StarBody,
    f: &Density,
    q: f64,
    c: f64,
    c_kpz: f64,
    quad: &QuadratureSpec,
) -> Result<InequalityReport> {
    let n = k.dim();
    let nf = n as f64;
    if !(q >= 0.0 && q <= nf - 2.0) {
        return Err(Error::domain(format!("order {q} outside [0, {}] for n = {n}", n - 2)));
    }
    let mut r = InequalityReport::new("thm1", ReportKind::Inequality, n, quad)
        .input("q", q)
        .input("c", c)
        .input("c_kpz", c_kpz);
    r.q = Some(q);
    r.body = k.to_string();
    r.density = f.to_string();
    if distance_to_odd(q) <= FractionalOrder::DEFAULT_GUARD {
        r.applicability.push(format!(
            "order {q} is an odd integer, outside the stated range; the normalized derivative is its continuous extension"
        ));
    }
    let (vol, _) = body_volume(k, quad)?;
    if (vol - 1.0).abs() > quad.equality_tol {
        r.applicability.push(format!("body volume is {vol}, not 1"));
    }
    let mass = moment_integral(k, k, f, 0.0, quad)?.value;
    if (mass - 1.0).abs() > quad.equality_tol {
        r.applicability.push(format!("density has mass {mass}, not 1"));
    }
    let m = max_over_directions_multi(k, f, &[q], quad)?.remove(0);
    let bound = derivative_lower_bound(n, q, c)?;
    let implied = implied_lower_bound_constant(n, q, m.value)?;
    // Route through the slicing inequality with the distance bound to
    // generalized intersection bodies of order q+1.
    let kpz = DovrBound::kpz(n, q + 1.0, c_kpz)?;
    let c_nq = slicing_constant_any(n, q)?;
    let via_slicing = 1.0 / (c_nq * kpz.value.powf(q + 1.0));
    r.dovr_source = kpz.source.tag().into();
    r.constants.push(constant("lower_bound", bound, "(c (q+1) / sqrt(n log^3(n e/(q+1))))^{q+1}"));
    r.constants.push(constant("kpz_bound", kpz.value, "C sqrt(n log^3(n e/(q+1)) / (q+1))"));
    r.constants.push(constant("c_nq", c_nq, "n / ((n-q-1) 2^q pi^{(q-1)/2} Gamma((q+1)/2))"));
    r.constants.push(constant("slack_bound", (q + 1.0).exp(), "n/(n-q-1) <= e^{q+1}"));
    r.applicability.push(sign_note(&m));
    r.diag("implied_c", implied);
    r.diag("max_value", m.value);
    r.diag("max_grid_value", m.grid_value);
    r.diag("max_error_estimate", m.error_estimate);
    r.diag("via_slicing_lower_bound", via_slicing);
    r.diag("via_slicing_margin", m.value - via_slicing);
    Ok(r.finish_inequality(bound, m.value, 10.0 * m.error_estimate))
}

/// Normalized derivatives of `f` on `K` at the nodes of a half grid.
pub fn direction_profile(k: &StarBody, f: &Density, q: f64, grid: &SphereGrid, quad: &QuadratureSpec) -> Result<Vec<f64>> {
    let half = grid.half();
    try_map_indexed(quad.execution, half.len(), |i| frac_radon_extended(k, f, &half[i], q, quad).map(|v| v.normalized))
}

/// Volume-one Euclidean ball in dimension `n`.
pub fn volume_one_ball(n: usize) -> Result<StarBody> {
    StarBody::ball(n, ball_volume(n)?.powf(-1.0 / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::volume1_ball_value;

    fn fo(q: f64) -> FractionalOrder {
        FractionalOrder::new(q).unwrap()
    }

    fn quick() -> QuadratureSpec {
        QuadratureSpec { direction_nodes: 60, polar_nodes: 4000, ..QuadratureSpec::default() }
    }

    #[test]
    fn ball_identity_examples() {
        for (n, q) in [(3, 0.0), (4, 0.5), (5, 2.5)] {
            let r = check_ball_identity(n, fo(q), &quick()).unwrap();
            assert!(r.pass, "{r:?}");
        }
        let r = check_ball_identity(3, fo(0.0), &quick()).unwrap();
        assert!((r.lhs - PI).abs() < 1e-12);
        assert!(check_ball_identity(3, fo(2.5), &quick()).is_err());
    }

    #[test]
    fn parseval_examples() {
        let b = StarBody::unit_ball(3).unwrap();
        let r = check_parseval(&b, 1.5, &quick()).unwrap();
        assert!(r.pass && r.diagnostics["relative_gap"] < 1e-12);
        let e = StarBody::ellipsoid(&[2.0, 1.0, 1.0]).unwrap();
        let a = check_parseval(&e, 1.5, &quick()).unwrap();
        let b2 = check_parseval(&e, 1.5, &quick()).unwrap();
        assert!(a.pass, "{a:?}");
        assert_eq!(a, b2);
        let swapped = check_parseval(&e, 3.0 - 1.5, &quick()).unwrap();
        assert!((swapped.lhs / a.lhs - 1.0).abs() < 1e-12);
        assert!(check_parseval(&StarBody::cube(3, 1.0).unwrap(), 1.0, &quick()).is_err());
    }

    #[test]
    fn moment_identity_examples() {
        let r = check_mp_moment_identity(&StarBody::unit_ball(3).unwrap(), fo(0.5), &quick()).unwrap();
        assert!((r.rhs - 8.0 * PI / 3.0).abs() < 1e-12 && r.pass);
        let r = check_mp_moment_identity(&StarBody::lp_ball(2, 1.0, 1.0).unwrap(), fo(0.3), &quick()).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn mp_lemma_examples() {
        let b = StarBody::unit_ball(3).unwrap();
        let r = check_mp_lemma(&b, &Density::uniform(), &b, fo(0.5), &quick()).unwrap();
        assert!(r.pass && r.margin.abs() < 1e-12);
        let half = StarBody::ball(3, 0.5).unwrap();
        let r = check_mp_lemma(&half, &Density::uniform(), &b, fo(0.5), &quick()).unwrap();
        assert!(r.pass && r.tight, "{r:?}");
        let g = Density::gaussian(1.0).unwrap();
        let r = check_mp_lemma(&b, &g, &b, fo(0.5), &quick()).unwrap();
        assert!(r.pass && r.margin > 0.0, "{r:?}");
        let r = check_mp_lemma(&b, &g.scaled(2.0), &b, fo(0.5), &quick()).unwrap();
        assert_eq!(r.status, Status::Inapplicable);
    }

    #[test]
    fn holder_examples() {
        let r = check_holder_step(&StarBody::unit_ball(3).unwrap(), fo(0.5), &quick()).unwrap();
        assert!(r.pass && r.tight);
        let r = check_holder_step(&StarBody::ellipsoid(&[2.0, 1.0, 1.0]).unwrap(), fo(0.5), &quick()).unwrap();
        assert!(r.pass && r.margin > 1e-3);
        let r = check_holder_step(&StarBody::lp_ball(3, 1.0, 1.0).unwrap(), fo(1.2), &quick()).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn slicing_worked_cell() {
        let k = volume_one_ball(3).unwrap();
        let f = Density::uniform().normalized_on(&k, &quick()).unwrap();
        let d = DovrBound::for_body(&k, 1.0, 500, 0).unwrap();
        let r = check_slicing(&k, &f, fo(0.0), &d, &quick()).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12);
        assert!((r.rhs - 1.5 * volume1_ball_value(3, fo(0.0)).unwrap()).abs() < 1e-9);
        assert!((r.rhs - 1.8135).abs() < 1e-3 && r.pass);
        assert!(DovrBound::given(0.5).is_err());
    }

    #[test]
    fn slicing_is_scale_invariant_for_uniform() {
        let q = fo(0.5);
        let base = StarBody::ellipsoid(&[2.0, 1.0, 0.5]).unwrap();
        let d = DovrBound::given(1.0).unwrap();
        let r0 = check_slicing(&base, &Density::uniform(), q, &d, &quick()).unwrap();
        for lambda in [0.5, 2.0] {
            let k = base.dilate(lambda).unwrap();
            let r = check_slicing(&k, &Density::uniform(), q, &d, &quick()).unwrap();
            let s = lambda.powi(3);
            assert_eq!(r.pass, r0.pass);
            assert!((r.lhs / (s * r0.lhs) - 1.0).abs() < 1e-9);
            assert!((r.rhs / (s * r0.rhs) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn slicing_with_computed_ellipsoid_distance() {
        let k = StarBody::lp_ball(3, 1.0, 1.0).unwrap();
        let spec = QuadratureSpec { direction_nodes: 40, ..quick() };
        let d = DovrBound::new(enclosing_ellipsoid_dovr(&k, 400, 0).unwrap().ratio, DovrSource::EnclosingEllipsoid { samples: 400, seed: 0 }).unwrap();
        let r = check_slicing(&k, &Density::uniform(), fo(0.5), &d, &spec).unwrap();
        assert!(r.pass && d.value > 1.0);
    }

    #[test]
    fn comparison_examples() {
        let b = StarBody::unit_ball(3).unwrap();
        let g = Density::uniform();
        let spec = quick();
        let d = DovrBound::given(1.0).unwrap();
        for q in [0.0, 0.5] {
            let r = check_comparison(&b, &g.scaled(0.5), &b, &g, fo(q), &d, &spec, 200).unwrap();
            assert_eq!(r.status, Status::Pass, "{r:?}");
            assert!(r.applicability.iter().any(|a| a.contains("200 grid directions")));
        }
        let small = StarBody::ball(3, 0.8).unwrap();
        let r = check_comparison(&small, &g, &b, &g, fo(0.5), &d, &spec, 200).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert!(r.margin > 0.0);
        let r = check_comparison(&b, &g, &small, &g, fo(0.5), &d, &spec, 200).unwrap();
        assert_eq!(r.status, Status::Inapplicable);
        let r = check_comparison(&b, &g, &b, &g.scaled(2.0), fo(0.5), &d, &spec, 200).unwrap();
        assert_eq!(r.status, Status::Inapplicable);
    }

    #[test]
    fn lower_bound_ball() {
        let k = volume_one_ball(3).unwrap();
        let spec = quick();
        let f = Density::uniform().normalized_on(&k, &spec).unwrap();
        let r = check_lower_bound(&k, &f, 0.0, 0.05, 1.0, &spec).unwrap();
        assert!(r.pass);
        let expect = volume1_ball_value(3, fo(0.0)).unwrap();
        assert!((r.rhs - expect).abs() < 1e-9);
        let l: f64 = (3.0 * E).ln();
        assert!((r.diagnostics["implied_c"] - expect * (3.0 * l * l * l).sqrt()).abs() < 1e-8);
        let odd = check_lower_bound(&k, &f, 1.0, 0.05, 1.0, &spec).unwrap();
        assert!(odd.pass && odd.applicability.iter().any(|a| a.contains("odd integer")));
        let strict = check_lower_bound(&k, &f, 0.0, r.diagnostics["implied_c"] * 1.01, 1.0, &spec).unwrap();
        assert!(!strict.pass);
        assert!(check_lower_bound(&k, &f, 1.5, 0.05, 1.0, &spec).is_err());
    }

    #[test]
    fn dovr_defaults() {
        let tag = |k: StarBody| DovrBound::for_body(&k, 1.0, 300, 0).unwrap();
        assert_eq!(tag(StarBody::unit_ball(3).unwrap()).value, 1.0);
        assert_eq!(tag(StarBody::lp_ball(3, 1.5, 1.0).unwrap()).value, 1.0);
        assert_eq!(tag(StarBody::cube(3, 1.0).unwrap()).value, E);
        assert_eq!(tag(StarBody::lp_ball(3, 4.0, 1.0).unwrap()).value, 2.0);
        assert_eq!(tag(StarBody::cube(3, 1.0).unwrap().dilate(0.5).unwrap()).source, DovrSource::Unconditional);
        let q = StarBody::unit_ball(3).unwrap().radial_q_sum(&StarBody::ellipsoid(&[2.0, 1.0, 1.0]).unwrap(), 2.0).unwrap();
        let d = tag(q);
        assert_eq!(d.source.tag(), "enclosing-ellipsoid");
        assert!(d.value >= 1.0);
    }
}
