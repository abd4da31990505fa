//! Hyperplane sections of bodies, their fractional derivatives at the
//! origin and maximization over directions.

use std::f64::consts::PI;
use std::fmt;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::bodies::{dot, norm2, BodyKind, SphereGrid, StarBody};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, pairwise_sum, try_map_indexed, Execution};
use crate::fracderiv::{
    default_even_order, frac_deriv, FracDerivOptions, FracDerivResult, SectionFunction, NUMERIC_SMOOTHNESS,
};
use crate::quad::{integrate, GaussRule, QuadOptions};
use crate::special::{ball_volume, in_odd_guard_band, sphere_surface, FractionalOrder};

/// Radial profile of a density; the density itself is `scale·profile(|x|)`
/// restricted to the body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensityKind {
    Uniform,
    GaussianRestricted { sigma: f64 },
    /// `Σ cₖ |x|^{2k}`.
    PolynomialEven { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub kind: DensityKind,
    pub scale: f64,
}

impl Density {
    pub fn uniform() -> Self {
        Self { kind: DensityKind::Uniform, scale: 1.0 }
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { kind: DensityKind::GaussianRestricted { sigma }, scale: 1.0 })
    }

    pub fn polynomial_even(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("polynomial density needs finite coefficients"));
        }
        Ok(Self { kind: DensityKind::PolynomialEven { coeffs: coeffs.to_vec() }, scale: 1.0 })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { kind: self.kind.clone(), scale: self.scale * factor }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, DensityKind::Uniform)
    }

    pub(crate) fn profile_sq(&self, r2: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform => 1.0,
            DensityKind::GaussianRestricted { sigma } => (-r2 / (2.0 * sigma * sigma)).exp(),
            DensityKind::PolynomialEven { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * r2 + c),
        }
    }

    /// Density at `x` (the restriction to the body is implicit).
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.scale * self.profile_sq(dot(x, x))
    }

    /// `f(0)`.
    pub fn at_origin(&self) -> f64 {
        self.scale * self.profile_sq(0.0)
    }

    /// Copy rescaled so that `∫_K f = 1`.
    pub fn normalized_on(&self, body: &StarBody, spec: &QuadratureSpec) -> Result<Density> {
        let mass = match body.closed_form_volume() {
            Some(v) if self.is_uniform() => self.scale * v,
            _ => moment_integral(body, body, self, 0.0, spec)?.value,
        };
        if !(mass > 0.0) {
            return Err(Error::Degenerate(format!("density has mass {mass} on the body")));
        }
        Ok(self.scaled(1.0 / mass))
    }

    /// Largest value of `f` on `K`, sampled along rays of `grid`.
    pub fn sup_on(&self, body: &StarBody, grid: &SphereGrid, per_ray: usize) -> f64 {
        let mut best = self.at_origin();
        for th in grid.nodes() {
            let r = body.radial_unchecked(th);
            for i in 1..=per_ray {
                let s = r * i as f64 / per_ray as f64;
                let x: Vec<f64> = th.iter().map(|v| v * s).collect();
                best = best.max(self.eval(&x));
            }
        }
        best
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DensityKind::Uniform => write!(f, "uniform"),
            DensityKind::GaussianRestricted { sigma } => write!(f, "gaussian:sigma={sigma}"),
            DensityKind::PolynomialEven { coeffs } => {
                let c: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                write!(f, "poly:c={}", c.join(","))
            }
        }?;
        if self.scale != 1.0 {
            write!(f, ",scale={}", self.scale)?;
        }
        Ok(())
    }
}

/// Parses `uniform`, `gaussian:sigma=1`, `poly:c=1,-0.5`, optionally
/// followed by `,scale=…`.
pub fn parse_density(spec: &str) -> Result<Density> {
    let spec = spec.trim();
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut scale = 1.0;
    let mut sigma = None;
    let mut coeffs: Vec<f64> = Vec::new();
    let mut current = "";
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {s:?}")));
    for tok in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match tok.split_once('=') {
            Some(("scale", v)) => {
                scale = num(v)?;
                current = "scale";
            }
            Some(("sigma", v)) => {
                sigma = Some(num(v)?);
                current = "sigma";
            }
            Some(("c", v)) => {
                coeffs.push(num(v)?);
                current = "c";
            }
            Some((k, _)) => return Err(Error::Parse(format!("unknown density parameter {k:?}"))),
            None if current == "c" => coeffs.push(num(tok)?),
            None => return Err(Error::Parse(format!("stray value {tok:?} in density"))),
        }
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Parse(format!("density scale must be positive, got {scale}")));
    }
    let d = match kind.trim() {
        "uniform" => Density::uniform(),
        "gaussian" => Density::gaussian(sigma.unwrap_or(1.0))?,
        "poly" => Density::polynomial_even(&coeffs)?,
        other => return Err(Error::Parse(format!("unknown density {other:?}"))),
    };
    Ok(d.scaled(scale))
}

/// Every grid size and tolerance of the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes along each ray.
    pub radial_nodes: usize,
    /// Directions on `S^{n-1}` for maximization.
    pub direction_nodes: usize,
    /// Directions on `S^{n-2}` inside a section; `None` picks by dimension.
    pub section_nodes: Option<usize>,
    /// Directions on `S^{n-1}` for polar integrals.
    pub polar_nodes: usize,
    /// Tolerance of the singular integrals for analytic section functions.
    pub singular_tol: f64,
    /// Tolerance of the singular integrals for numeric section functions.
    pub numeric_tol: f64,
    pub bisection_tol: f64,
    /// Relative tolerance of equality checks.
    pub equality_tol: f64,
    pub refine_rounds: usize,
    pub seed: u64,
    /// Use closed-form section functions where they exist.
    pub prefer_analytic: bool,
    pub execution: Execution,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            radial_nodes: 16,
            direction_nodes: 500,
            section_nodes: None,
            polar_nodes: 4000,
            singular_tol: 1e-11,
            numeric_tol: 1e-8,
            bisection_tol: 1e-12,
            equality_tol: 1e-3,
            refine_rounds: 2,
            seed: 0,
            prefer_analytic: true,
            execution: Execution::Parallel,
        }
    }
}

impl QuadratureSpec {
    pub fn section_nodes_for(&self, n: usize) -> usize {
        self.section_nodes.unwrap_or(match n {
            0..=2 => 2,
            3 => 512,
            4 => 1500,
            _ => 2000,
        })
    }

    fn frac_options(&self, analytic: bool) -> FracDerivOptions {
        if analytic {
            FracDerivOptions { tol: self.singular_tol, ..FracDerivOptions::default() }
        } else {
            FracDerivOptions { tol: self.numeric_tol, max_intervals: 200, series_split: None }
        }
    }
}

/// Orthonormal basis of `ξ^⊥` from the Householder reflection that swaps
/// `e₁` and `ξ` (up to sign).
pub fn orthogonal_basis(xi: &[f64]) -> Vec<Vec<f64>> {
    let n = xi.len();
    let mut v = xi.to_vec();
    let sign = if xi[0] > 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vv = dot(&v, &v);
    (1..n)
        .map(|j| {
            // H e_j = e_j − 2 v v_j / |v|²
            let mut col: Vec<f64> = v.iter().map(|vi| -2.0 * vi * v[j] / vv).collect();
            col[j] += 1.0;
            col
        })
        .collect()
}

fn unit(xi: &[f64]) -> Result<Vec<f64>> {
    let s = norm2(xi);
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain("direction must be non-zero"));
    }
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("direction must be a unit vector, norm is {s}")));
    }
    Ok(xi.to_vec())
}

const SECTION_REL_TOL: f64 = 1e-11;

#[derive(Clone)]
struct SectionQuadrature {
    grid: SphereGrid,
    rule: GaussRule,
}

impl SectionQuadrature {
    fn new(n: usize, spec: &QuadratureSpec) -> Self {
        Self {
            grid: SphereGrid::new(n - 1, if n == 3 { 2 } else { spec.section_nodes_for(n) }, spec.seed),
            rule: GaussRule::new(spec.radial_nodes),
        }
    }

    fn integrate(&self, body: &StarBody, f: &Density, basis: &[Vec<f64>], support: (f64, &[f64]), t: f64) -> f64 {
        let n = body.dim();
        let (h, xs) = support;
        if t.abs() >= h * (1.0 - 1e-12) {
            return 0.0;
        }
        let c: Vec<f64> = xs.iter().map(|v| v * t / h).collect();
        let cc = dot(&c, &c);
        let power = (n - 1) as i32;
        let ray = |d: &[f64]| -> f64 {
            let rho = body.ray_exit(&c, d);
            if f.is_uniform() {
                f.scale * rho.powi(power) / power as f64
            } else {
                let cd = dot(&c, d);
                f.scale
                    * self
                        .rule
                        .on(0.0, rho)
                        .map(|(s, ws)| ws * s.powi(power - 1) * f.profile_sq(cc + s * (2.0 * cd + s)))
                        .sum::<f64>()
            }
        };
        if n == 3 {
            let dir = |phi: f64| -> [f64; 3] {
                let (s, co) = phi.sin_cos();
                std::array::from_fn(|i| co * basis[0][i] + s * basis[1][i])
            };
            let cuts = face_breaks(body, &c, &dir);
            let opts = QuadOptions { abs_tol: 1e-15, rel_tol: SECTION_REL_TOL, max_intervals: 300 };
            let parts: Vec<f64> = cuts
                .windows(2)
                .map(|w| integrate(|phi| ray(&dir(phi)), w[0], w[1], &opts).value)
                .collect();
            return pairwise_sum(&parts);
        }
        let terms: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .zip(self.grid.weights())
            .map(|(theta, w)| {
                let mut d = vec![0.0; n];
                for (coef, u) in theta.iter().zip(basis) {
                    for (di, ui) in d.iter_mut().zip(u) {
                        *di += coef * ui;
                    }
                }
                w * ray(&d)
            })
            .collect();
        pairwise_sum(&terms)
    }
}

// Angles in [0, 2π] splitting the section boundary into smooth arcs: facet
// changes for polytopes, eight equal arcs otherwise.
fn face_breaks(body: &StarBody, c: &[f64], dir: &impl Fn(f64) -> [f64; 3]) -> Vec<f64> {
    const SCAN: usize = 64;
    let step = 2.0 * PI / SCAN as f64;
    let face = |phi: f64| body.exit_face(c, &dir(phi));
    if face(0.0).is_none() {
        return (0..=8).map(|k| 2.0 * PI * k as f64 / 8.0).collect();
    }
    let mut cuts = vec![0.0];
    let mut prev = face(0.0);
    for k in 1..=SCAN {
        let b = step * k as f64;
        let fb = face(b);
        if fb != prev {
            let (mut lo, mut hi) = (b - step, b);
            while hi - lo > 1e-11 {
                let mid = 0.5 * (lo + hi);
                if face(mid) == prev {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        prev = fb;
        if k % 8 == 0 && *cuts.last().expect("non-empty") < b {
            cuts.push(b);
        }
    }
    cuts.dedup();
    cuts
}

/// `Rf(ξ,t)`, the integral of `f` over `K ∩ {⟨x,ξ⟩ = t}`.
pub fn section_integral(body: &StarBody, f: &Density, xi: &[f64], t: f64, spec: &QuadratureSpec) -> Result<f64> {
    if xi.len() != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: xi.len() });
    }
    if body.dim() < 2 {
        return Err(Error::domain("sections need dimension at least 2"));
    }
    let xi = unit(xi)?;
    if !t.is_finite() {
        return Err(Error::domain("offset must be finite"));
    }
    let sq = SectionQuadrature::new(body.dim(), spec);
    let basis = orthogonal_basis(&xi);
    let (h, xs) = body.support_unchecked(&xi);
    Ok(sq.integrate(body, f, &basis, (h, &xs), t))
}

/// Closed-form section function for ellipsoids with uniform density.
fn analytic_section(body: &StarBody, f: &Density, xi: &[f64]) -> Option<SectionFunction> {
    if !f.is_uniform() {
        return None;
    }
    let l = body.ellipsoid_map()?;
    let n = body.dim();
    let ltx = l.transpose() * nalgebra::DVector::from_column_slice(xi);
    let omega = ltx.norm();
    let det = l.determinant().abs();
    let scale = f.scale * det / omega * ball_volume(n - 1).ok()?;
    SectionFunction::power_profile((n as f64 - 1.0) / 2.0, omega, scale).ok()
}

// Euclidean ball with a radial density: the section at height t is an
// (n−1)-ball of radius √(r²−t²), so one radial integral suffices.
fn ball_radial_section(n: usize, r: f64, f: &Density) -> Result<SectionFunction> {
    let rule = GaussRule::new(32);
    let surface = sphere_surface(n - 1)?;
    let f = f.clone();
    let label = format!("section(ball:r={r}, {f})");
    SectionFunction::new(label, r, NUMERIC_SMOOTHNESS, true, move |t| {
        let w = (r * r - t * t).max(0.0).sqrt();
        if w == 0.0 {
            return 0.0;
        }
        surface * f.scale * rule.on(0.0, w).map(|(s, ws)| ws * s.powi(n as i32 - 2) * f.profile_sq(t * t + s * s)).sum::<f64>()
    })
}

/// `t ↦ A_{K,ξ}(t)` weighted by `f`, closed-form when available.
pub fn parallel_section_function(body: &StarBody, xi: &[f64], f: &Density, spec: &QuadratureSpec) -> Result<SectionFunction> {
    if xi.len() != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: xi.len() });
    }
    if body.dim() < 2 {
        return Err(Error::domain("sections need dimension at least 2"));
    }
    let xi = unit(xi)?;
    if spec.prefer_analytic {
        if let Some(h) = analytic_section(body, f, &xi) {
            return Ok(h);
        }
        if let BodyKind::Ball { r } = body.kind() {
            return ball_radial_section(body.dim(), *r, f);
        }
    }
    numeric_section(body, &xi, f, spec)
}

fn numeric_section(body: &StarBody, xi: &[f64], f: &Density, spec: &QuadratureSpec) -> Result<SectionFunction> {
    let sq = Arc::new(SectionQuadrature::new(body.dim(), spec));
    let basis = Arc::new(orthogonal_basis(xi));
    let (h, xs) = body.support_unchecked(xi);
    if !(h > 0.0) {
        return Err(Error::Degenerate("body has zero width in this direction".into()));
    }
    let xs = Arc::new(xs);
    let body = Arc::new(body.clone());
    let f = Arc::new(f.clone());
    let label = format!("section({body}, {f})");
    let memo: Mutex<HashMap<u64, f64>> = Mutex::new(HashMap::new());
    SectionFunction::new(label, h, NUMERIC_SMOOTHNESS, true, move |t| {
        let key = t.to_bits();
        if let Some(v) = memo.lock().expect("memo lock").get(&key) {
            return *v;
        }
        let v = sq.integrate(&body, &f, &basis, (h, &xs), t);
        memo.lock().expect("memo lock").insert(key, v);
        v
    })
}

/// Fractional derivative at zero of the section function in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracRadonValue {
    /// `(Rf(ξ,·))^{(q)}(0)`.
    pub raw: f64,
    /// `raw / cos(πq/2)`, extended continuously through odd `q`.
    pub normalized: f64,
    pub analytic: bool,
    pub detail: FracDerivResult,
}

fn check_order(h: &SectionFunction, q: f64) -> Result<()> {
    if !h.is_analytic() && q >= 0.0 && default_even_order(q) > NUMERIC_SMOOTHNESS {
        return Err(Error::domain(format!(
            "order {q} needs more than {NUMERIC_SMOOTHNESS} derivatives of a numeric section function"
        )));
    }
    Ok(())
}

fn frac_of(h: &SectionFunction, q: f64, spec: &QuadratureSpec) -> Result<FracRadonValue> {
    check_order(h, q)?;
    let analytic = h.is_analytic();
    let detail = frac_deriv(h, q, &spec.frac_options(analytic))?;
    Ok(FracRadonValue { raw: detail.value, normalized: detail.normalized, analytic, detail })
}

fn frac_radon_inner(body: &StarBody, f: &Density, xi: &[f64], q: f64, spec: &QuadratureSpec) -> Result<FracRadonValue> {
    let h = parallel_section_function(body, xi, f, spec)?;
    frac_of(&h, q, spec)
}

/// `(1/cos(πq/2))·(Rf(ξ,·))^{(q)}(0)`; orders in an odd-integer guard band
/// are rejected.
pub fn frac_radon_at_zero(body: &StarBody, f: &Density, xi: &[f64], q: FractionalOrder, spec: &QuadratureSpec) -> Result<FracRadonValue> {
    frac_radon_inner(body, f, xi, q.value(), spec)
}

/// Like [`frac_radon_at_zero`] but accepts odd orders, where the normalized
/// value is the continuous extension.
pub fn frac_radon_extended(body: &StarBody, f: &Density, xi: &[f64], q: f64, spec: &QuadratureSpec) -> Result<FracRadonValue> {
    frac_radon_inner(body, f, xi, q, spec)
}

/// Result of a direction sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionMax {
    pub direction: Vec<f64>,
    pub value: f64,
    pub grid_value: f64,
    pub grid_mean: f64,
    pub grid_min: f64,
    pub grid_size: usize,
    /// Largest quadrature error estimate seen.
    pub error_estimate: f64,
    pub analytic: bool,
}

/// Maximizes the normalized derivative over `S^{n-1}`: a sweep over the
/// direction grid (one node per antipodal pair) and golden-section
/// refinement in a chart around the best node.
pub fn max_over_directions(body: &StarBody, f: &Density, q: f64, spec: &QuadratureSpec) -> Result<DirectionMax> {
    Ok(max_over_directions_multi(body, f, &[q], spec)?.remove(0))
}

/// [`max_over_directions`] for several orders, sharing the section
/// function of each grid direction.
pub fn max_over_directions_multi(body: &StarBody, f: &Density, qs: &[f64], spec: &QuadratureSpec) -> Result<Vec<DirectionMax>> {
    let n = body.dim();
    if n < 2 {
        return Err(Error::domain("sections need dimension at least 2"));
    }
    for &q in qs {
        if in_odd_guard_band(q, FractionalOrder::DEFAULT_GUARD) && q.fract() != 0.0 {
            return Err(Error::domain(format!("order {q} lies in an odd-integer guard band")));
        }
    }
    let grid = SphereGrid::new(n, spec.direction_nodes, spec.seed);
    let half = grid.half();
    let table = try_map_indexed(spec.execution, half.len(), |i| {
        let h = parallel_section_function(body, &half[i], f, spec)?;
        qs.iter().map(|&q| frac_of(&h, q, spec)).collect::<Result<Vec<_>>>()
    })?;
    let spacing = grid.weights()[0].powf(1.0 / (n as f64 - 1.0));
    qs.iter()
        .enumerate()
        .map(|(k, &q)| {
            let values: Vec<&FracRadonValue> = table.iter().map(|row| &row[k]).collect();
            let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
            for (i, v) in values.iter().enumerate() {
                if v.normalized > best {
                    best = v.normalized;
                    best_i = i;
                }
            }
            let norms: Vec<f64> = values.iter().map(|v| v.normalized).collect();
            let grid_mean = pairwise_sum(&norms) / norms.len() as f64;
            let grid_min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
            let err = values.iter().map(|v| v.detail.diagnostics.error_estimate.abs()).fold(0.0, f64::max);
            let analytic = values.iter().all(|v| v.analytic);
            let (direction, value, err) = refine(body, f, q, spec, &half[best_i], best, spacing, err)?;
            Ok(DirectionMax {
                direction,
                value,
                grid_value: best,
                grid_mean,
                grid_min,
                grid_size: half.len(),
                error_estimate: err,
                analytic,
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn refine(
    body: &StarBody,
    f: &Density,
    q: f64,
    spec: &QuadratureSpec,
    start: &[f64],
    start_value: f64,
    spacing: f64,
    mut err: f64,
) -> Result<(Vec<f64>, f64, f64)> {
    let n = body.dim();
    let mut dir = start.to_vec();
    let mut value = start_value;
    let mut radius = 2.0 * spacing;
    let eval = |d: &[f64]| -> Result<(f64, f64)> {
        let s = norm2(d);
        let u: Vec<f64> = d.iter().map(|v| v / s).collect();
        let r = frac_radon_extended(body, f, &u, q, spec)?;
        Ok((r.normalized, r.detail.diagnostics.error_estimate.abs()))
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..spec.refine_rounds {
        for j in 0..n - 1 {
            let basis = orthogonal_basis(&dir);
            let point = |a: f64| -> Vec<f64> { dir.iter().zip(&basis[j]).map(|(x, u)| x + a * u).collect() };
            let (mut lo, mut hi) = (-radius, radius);
            let mut x1 = hi - inv_phi * (hi - lo);
            let mut x2 = lo + inv_phi * (hi - lo);
            let (mut f1, e1) = eval(&point(x1))?;
            let (mut f2, e2) = eval(&point(x2))?;
            err = err.max(e1).max(e2);
            for _ in 0..GOLDEN_STEPS {
                if f1 >= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - inv_phi * (hi - lo);
                    let (v, e) = eval(&point(x1))?;
                    f1 = v;
                    err = err.max(e);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + inv_phi * (hi - lo);
                    let (v, e) = eval(&point(x2))?;
                    f2 = v;
                    err = err.max(e);
                }
            }
            let (a, v) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
            if v > value {
                value = v;
                let p = point(a);
                let s = norm2(&p);
                dir = p.into_iter().map(|x| x / s).collect();
            }
        }
        radius *= 0.5;
    }
    Ok((dir, value, err))
}

const GOLDEN_STEPS: usize = 6;

/// Normalized derivative on every node of the half grid, in grid order.
pub fn sweep_directions(body: &StarBody, f: &Density, q: f64, grid: &SphereGrid, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    let half = grid.half();
    try_map_indexed(spec.execution, half.len(), |i| {
        frac_radon_extended(body, f, &half[i], q, spec).map(|v| v.normalized)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentValue {
    pub value: f64,
    /// Difference from the same rule on a grid of half the size.
    pub error_estimate: f64,
}

/// `∫_K ‖x‖_D^{-p} f(x) dx` in polar coordinates, for `p < n`.
pub fn moment_integral(d: &StarBody, k: &StarBody, f: &Density, p: f64, spec: &QuadratureSpec) -> Result<MomentValue> {
    let n = k.dim();
    if d.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d.dim() });
    }
    let nf = n as f64;
    if !(p < nf) || !p.is_finite() {
        return Err(Error::domain(format!("moment of order {p} diverges in dimension {n}")));
    }
    let rule = GaussRule::new(spec.radial_nodes);
    let on_grid = |grid: &SphereGrid| -> f64 {
        let e = nf - p;
        let terms = map_indexed(spec.execution, grid.len(), |i| {
            let th = &grid.nodes()[i];
            let r = k.radial_unchecked(th);
            let weight = if p == 0.0 { 1.0 } else { d.minkowski_unchecked(th).powf(-p) };
            // s = r·u^{1/(n−p)} turns ∫₀^r s^{n−1−p} f(sθ) ds into r^{n−p}/(n−p) ∫₀¹ f du.
            let radial = if f.is_uniform() {
                f.scale
            } else {
                rule.on(0.0, 1.0)
                    .map(|(u, w)| {
                        let s = r * u.powf(1.0 / e);
                        let x: Vec<f64> = th.iter().map(|v| v * s).collect();
                        w * f.eval(&x)
                    })
                    .sum()
            };
            grid.weights()[i] * weight * r.powf(e) / e * radial
        });
        pairwise_sum(&terms)
    };
    let full = on_grid(&SphereGrid::new(n, spec.polar_nodes, spec.seed));
    let coarse = on_grid(&SphereGrid::new(n, spec.polar_nodes / 2, spec.seed));
    Ok(MomentValue { value: full, error_estimate: (full - coarse).abs() })
}

/// Shortcut for `Execution` choices in tests and benches.
pub fn with_execution(spec: &QuadratureSpec, execution: Execution) -> QuadratureSpec {
    QuadratureSpec { execution, ..spec.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{ball_frac_deriv_closed_form, volume1_ball_value};
    use nalgebra::DMatrix;

    fn numeric() -> QuadratureSpec {
        QuadratureSpec { prefer_analytic: false, ..QuadratureSpec::default() }
    }

    #[test]
    fn ball_section_examples() {
        let b = StarBody::unit_ball(3).unwrap();
        let u = Density::uniform();
        let v = section_integral(&b, &u, &[0.0, 0.0, 1.0], 0.5, &numeric()).unwrap();
        assert!((v - 0.75 * PI).abs() < 1e-12, "{v}");
        assert_eq!(section_integral(&b, &u, &[0.0, 0.0, 1.0], 1.0, &numeric()).unwrap(), 0.0);
        assert_eq!(section_integral(&b, &u, &[0.6, 0.8, 0.0], -1.5, &numeric()).unwrap(), 0.0);
        assert!(section_integral(&b, &u, &[0.0, 0.0, 2.0], 0.0, &numeric()).is_err());
    }

    #[test]
    fn ellipsoid_section_matches_affine_formula() {
        let e = StarBody::ellipsoid(&[2.0, 1.0, 0.5]).unwrap();
        let u = Density::uniform();
        let xi = [0.48, 0.6, 0.64];
        let analytic = parallel_section_function(&e, &xi, &u, &QuadratureSpec::default()).unwrap();
        assert!(analytic.is_analytic());
        for t in [0.0, 0.3, 0.8, 1.1] {
            let num = section_integral(&e, &u, &xi, t, &numeric()).unwrap();
            let exact = analytic.eval(t);
            assert!((num - exact).abs() < 1e-10 * exact.max(1.0), "t = {t}: {num} vs {exact}");
        }
    }

    #[test]
    fn sections_are_even_and_integrate_to_mass() {
        let spec = QuadratureSpec { polar_nodes: 20000, ..numeric() };
        let bodies = [
            StarBody::ellipsoid(&[2.0, 1.0, 0.5]).unwrap(),
            StarBody::lp_ball(3, 1.0, 1.0).unwrap(),
            StarBody::cube(3, 1.0).unwrap(),
        ];
        let dens = [Density::uniform(), Density::gaussian(1.0).unwrap()];
        for k in &bodies {
            for f in &dens {
                for xi in [[0.48, 0.6, 0.64], [1.0, 0.0, 0.0]] {
                    let h = parallel_section_function(k, &xi, f, &spec).unwrap();
                    for t in [0.1, 0.35] {
                        let a = section_integral(k, f, &xi, t, &spec).unwrap();
                        let b = section_integral(k, f, &xi, -t, &spec).unwrap();
                        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
                    }
                    let o = QuadOptions { abs_tol: 1e-9, rel_tol: 1e-7, max_intervals: 200 };
                    let mass = 2.0 * integrate(|t| h.eval(t), 0.0, h.support(), &o).value;
                    let expect = moment_integral(k, k, f, 0.0, &spec).unwrap().value;
                    assert!((mass / expect - 1.0).abs() < 1e-4, "{k} {f}: {mass} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn ball_frac_radon_matches_closed_form() {
        for (n, q) in [(3usize, 0.5f64), (4, 1.5), (5, 2.5), (3, 0.0), (4, -0.5)] {
            let b = StarBody::unit_ball(n).unwrap();
            let fo = FractionalOrder::new(q).unwrap();
            let cf = ball_frac_deriv_closed_form(n, fo).unwrap() / crate::special::cos_pi(q / 2.0);
            let xi: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
            let a = frac_radon_at_zero(&b, &Density::uniform(), &xi, fo, &QuadratureSpec::default()).unwrap();
            assert!((a.normalized / cf - 1.0).abs() < 1e-9, "n = {n}, q = {q}");
            let nspec = numeric();
            let v = frac_radon_at_zero(&b, &Density::uniform(), &xi, fo, &nspec).unwrap();
            assert!(!v.analytic);
            assert!((v.normalized / cf - 1.0).abs() < 1e-3, "n = {n}, q = {q}: {} vs {cf}", v.normalized);
        }
    }

    #[test]
    fn volume_one_ball_value() {
        let g = SphereGrid::new(3, 100, 0);
        let (b, _) = StarBody::unit_ball(3).unwrap().scale_to_volume_one(&g).unwrap();
        let fo = FractionalOrder::new(0.5).unwrap();
        let v = frac_radon_at_zero(&b, &Density::uniform(), &[0.0, 1.0, 0.0], fo, &QuadratureSpec::default()).unwrap();
        assert!((v.normalized / volume1_ball_value(3, fo).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn guard_band_and_pipeline_limits() {
        let b = StarBody::unit_ball(6).unwrap();
        let xi = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let r = frac_radon_extended(&b, &Density::uniform(), &xi, 4.5, &numeric());
        assert!(matches!(r, Err(Error::Domain(_))));
        assert!(frac_radon_extended(&b, &Density::uniform(), &xi, 4.5, &QuadratureSpec::default()).is_ok());
        assert!(max_over_directions(&b, &Density::uniform(), 1.0 + 1e-8, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn ball_maximum_is_flat() {
        let b = StarBody::unit_ball(3).unwrap();
        let spec = QuadratureSpec { direction_nodes: 60, ..QuadratureSpec::default() };
        let m = max_over_directions(&b, &Density::uniform(), 0.5, &spec).unwrap();
        assert!((m.value - m.grid_value).abs() < 1e-9);
        assert!((m.grid_value - m.grid_min).abs() < 1e-9);
        assert!(m.value >= m.grid_mean);
    }

    #[test]
    fn ellipsoid_central_section_maximizer() {
        let e = StarBody::ellipsoid(&[2.0, 1.0, 1.0]).unwrap();
        let spec = QuadratureSpec { direction_nodes: 200, ..QuadratureSpec::default() };
        let m = max_over_directions(&e, &Density::uniform(), 0.0, &spec).unwrap();
        // The largest central section of this ellipsoid is orthogonal to a short axis.
        let dense = SphereGrid::new(3, 20000, 0);
        let brute = dense
            .half()
            .iter()
            .map(|xi| section_integral(&e, &Density::uniform(), xi, 0.0, &spec).unwrap())
            .fold(f64::MIN, f64::max);
        assert!((m.value - 2.0 * PI).abs() < 1e-6, "{}", m.value);
        assert!(m.value >= brute - 1e-6);
        assert!(m.direction[0].abs() < 1e-3);
    }

    #[test]
    fn rotation_equivariance() {
        let angle: f64 = 0.7;
        let mut u = DMatrix::identity(3, 3);
        u[(0, 0)] = angle.cos();
        u[(0, 1)] = -angle.sin();
        u[(1, 0)] = angle.sin();
        u[(1, 1)] = angle.cos();
        let k = StarBody::cube(3, 1.0).unwrap();
        let uk = StarBody::linear_image(k.clone(), u.clone()).unwrap();
        let xi = [0.48, 0.6, 0.64];
        let uxi: Vec<f64> = (&u * nalgebra::DVector::from_column_slice(&xi)).as_slice().to_vec();
        let fo = FractionalOrder::new(0.5).unwrap();
        let g = Density::gaussian(1.0).unwrap();
        let a = frac_radon_at_zero(&k, &g, &xi, fo, &numeric()).unwrap().normalized;
        let b = frac_radon_at_zero(&uk, &g, &uxi, fo, &numeric()).unwrap().normalized;
        assert!((a / b - 1.0).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn moment_examples() {
        let spec = QuadratureSpec::default();
        for n in [2usize, 3, 4] {
            let b = StarBody::unit_ball(n).unwrap();
            let q = 0.5;
            let m = moment_integral(&b, &b, &Density::uniform(), 1.0 + q, &spec).unwrap();
            let expect = n as f64 * ball_volume(n).unwrap() / (n as f64 - 1.0 - q);
            assert!((m.value / expect - 1.0).abs() < 1e-12);
            let p0 = moment_integral(&b, &b, &Density::uniform(), 0.0, &spec).unwrap();
            assert!((p0.value / ball_volume(n).unwrap() - 1.0).abs() < 1e-12);
        }
        let k = StarBody::lp_ball(3, 1.0, 0.8).unwrap();
        let d = StarBody::unit_ball(3).unwrap();
        let g = Density::gaussian(0.7).unwrap();
        let mass = moment_integral(&k, &k, &g, 0.0, &spec).unwrap().value;
        let m = moment_integral(&d, &k, &g, 1.5, &spec).unwrap().value;
        assert!(m >= mass);
        assert!(moment_integral(&d, &k, &g, 3.0, &spec).is_err());
        // p ∈ (n−1, n) uses the same substitution.
        let m = moment_integral(&d, &d, &g, 2.7, &spec).unwrap().value;
        let o = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 200 };
        let radial = integrate(|s| s.powf(-0.7) * (-s * s / (2.0 * 0.49)).exp(), 0.0, 1.0, &o).value;
        assert!((m / (4.0 * PI * radial) - 1.0).abs() < 1e-6, "{m}");
    }

    #[test]
    fn density_parsing() {
        assert_eq!(parse_density("uniform").unwrap(), Density::uniform());
        assert_eq!(parse_density("gaussian:sigma=2").unwrap(), Density::gaussian(2.0).unwrap());
        assert_eq!(parse_density("poly:c=1,-0.5").unwrap(), Density::polynomial_even(&[1.0, -0.5]).unwrap());
        assert_eq!(parse_density("uniform:scale=0.5").unwrap().scale, 0.5);
        for s in ["uniform", "gaussian:sigma=2", "poly:c=1,-0.5", "gaussian:sigma=1,scale=0.25"] {
            let d = parse_density(s).unwrap();
            assert_eq!(parse_density(&d.to_string()).unwrap(), d);
        }
        assert!(parse_density("cauchy").is_err());
        assert!(parse_density("gaussian:sigma=-1").is_err());
        assert!(parse_density("gaussian:tau=1").is_err());
    }

    #[test]
    fn parallel_and_sequential_sweeps_agree() {
        let k = StarBody::lp_ball(3, 1.0, 1.0).unwrap();
        let spec = QuadratureSpec { direction_nodes: 16, section_nodes: Some(64), ..QuadratureSpec::default() };
        let a = max_over_directions(&k, &Density::uniform(), 0.5, &with_execution(&spec, Execution::Parallel)).unwrap();
        let b = max_over_directions(&k, &Density::uniform(), 0.5, &with_execution(&spec, Execution::Sequential)).unwrap();
        assert_eq!(a, b);
    }
}
