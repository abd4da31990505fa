//! Origin-symmetric star bodies given by Minkowski functional oracles.

mod ellipsoid;
mod sphere;
mod spec;

use std::f64::consts::E;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec::pairwise_sum;
use crate::special::{ball_volume, log_gamma};

pub use ellipsoid::{enclosing_ellipsoid_dovr, EnclosingEllipsoid};
pub use sphere::SphereGrid;
pub use spec::parse_body;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    let m = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * a.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if p.is_infinite() || m == 0.0 {
        return m;
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn mat_vec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(x)).as_slice().to_vec()
}

fn mat_t_vec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (a.transpose() * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// Concrete shape of a [`StarBody`].
#[derive(Debug, Clone, PartialEq)]
pub enum BodyKind {
    Ball { r: f64 },
    Ellipsoid { axes: Vec<f64> },
    /// Unit ball of the ℓ_p norm times `scale`; `p = ∞` is the cube.
    LpBall { p: f64, scale: f64 },
    /// Body whose radial function satisfies `r^q = Σ r_i^q`.
    RadialQSum { q: f64, parts: Vec<StarBody> },
    Scaled { base: Box<StarBody>, factor: f64 },
    /// Image `A·base` under an invertible linear map.
    Linear { base: Box<StarBody>, map: DMatrix<f64>, inverse: DMatrix<f64>, det: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarBody {
    dim: usize,
    kind: BodyKind,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    Ok(())
}

impl StarBody {
    pub fn ball(n: usize, r: f64) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { dim: n, kind: BodyKind::Ball { r: positive("radius", r)? } })
    }

    pub fn unit_ball(n: usize) -> Result<Self> {
        Self::ball(n, 1.0)
    }

    pub fn ellipsoid(axes: &[f64]) -> Result<Self> {
        check_dim(axes.len())?;
        for &a in axes {
            positive("semi-axis", a)?;
        }
        Ok(Self { dim: axes.len(), kind: BodyKind::Ellipsoid { axes: axes.to_vec() } })
    }

    pub fn lp_ball(n: usize, p: f64, scale: f64) -> Result<Self> {
        check_dim(n)?;
        if !(p >= 1.0) {
            return Err(Error::domain(format!("p must be at least 1, got {p}")));
        }
        Ok(Self { dim: n, kind: BodyKind::LpBall { p, scale: positive("scale", scale)? } })
    }

    pub fn cube(n: usize, half_side: f64) -> Result<Self> {
        Self::lp_ball(n, f64::INFINITY, half_side)
    }

    pub fn scaled(base: StarBody, factor: f64) -> Result<Self> {
        let factor = positive("scale factor", factor)?;
        Ok(Self { dim: base.dim, kind: BodyKind::Scaled { base: Box::new(base), factor } })
    }

    /// `A·base` for an invertible `A`.
    pub fn linear_image(base: StarBody, map: DMatrix<f64>) -> Result<Self> {
        let n = base.dim;
        if map.nrows() != n || map.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: map.nrows() });
        }
        let det = map.determinant();
        let inverse = map
            .clone()
            .try_inverse()
            .filter(|_| det.abs() > 0.0 && det.is_finite())
            .ok_or_else(|| Error::Degenerate("linear map is singular".into()))?;
        Ok(Self { dim: n, kind: BodyKind::Linear { base: Box::new(base), map, inverse, det } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// `‖x‖_K = min{a ≥ 0 : x ∈ aK}`.
    pub fn minkowski(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.minkowski_unchecked(x))
    }

    pub(crate) fn minkowski_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Ball { r } => norm2(x) / r,
            BodyKind::Ellipsoid { axes } => {
                let y: Vec<f64> = x.iter().zip(axes).map(|(v, a)| v / a).collect();
                norm2(&y)
            }
            BodyKind::LpBall { p, scale } => lp_norm(x, *p) / scale,
            BodyKind::RadialQSum { q, parts } => {
                let mut acc = 0.0;
                for part in parts {
                    let m = part.minkowski_unchecked(x);
                    if m == 0.0 {
                        return 0.0;
                    }
                    acc += m.powf(-q);
                }
                acc.powf(-1.0 / q)
            }
            BodyKind::Scaled { base, factor } => base.minkowski_unchecked(x) / factor,
            BodyKind::Linear { base, inverse, .. } => base.minkowski_unchecked(&mat_vec(inverse, x)),
        }
    }

    /// Radius of the body in direction `θ`.
    pub fn radial(&self, theta: &[f64]) -> Result<f64> {
        Ok(1.0 / self.minkowski(theta)?)
    }

    pub(crate) fn radial_unchecked(&self, theta: &[f64]) -> f64 {
        1.0 / self.minkowski_unchecked(theta)
    }

    /// Support function `h_K(ξ) = max_{x∈K} ⟨x,ξ⟩` and a maximizing point.
    pub fn support(&self, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_point(xi)?;
        Ok(self.support_unchecked(xi))
    }

    pub(crate) fn support_unchecked(&self, xi: &[f64]) -> (f64, Vec<f64>) {
        let n = self.dim;
        match &self.kind {
            BodyKind::Ball { r } => {
                let s = norm2(xi);
                if s == 0.0 {
                    return (0.0, vec![0.0; n]);
                }
                (r * s, xi.iter().map(|v| r * v / s).collect())
            }
            BodyKind::Ellipsoid { axes } => {
                let ax: Vec<f64> = xi.iter().zip(axes).map(|(v, a)| v * a).collect();
                let h = norm2(&ax);
                if h == 0.0 {
                    return (0.0, vec![0.0; n]);
                }
                (h, ax.iter().zip(axes).map(|(v, a)| v * a / h).collect())
            }
            BodyKind::LpBall { p, scale } => lp_support(xi, *p, *scale),
            BodyKind::RadialQSum { .. } => self.numeric_support(xi),
            BodyKind::Scaled { base, factor } => {
                let (h, x) = base.support_unchecked(xi);
                (h * factor, x.into_iter().map(|v| v * factor).collect())
            }
            BodyKind::Linear { base, map, .. } => {
                let (h, x) = base.support_unchecked(&mat_t_vec(map, xi));
                (h, mat_vec(map, &x))
            }
        }
    }

    // Compass search for max_θ r(θ)⟨θ,ξ⟩ on the sphere.
    fn numeric_support(&self, xi: &[f64]) -> (f64, Vec<f64>) {
        let n = self.dim;
        let s = norm2(xi);
        if s == 0.0 {
            return (0.0, vec![0.0; n]);
        }
        let value = |th: &[f64]| {
            let nt = norm2(th);
            let u: Vec<f64> = th.iter().map(|v| v / nt).collect();
            self.radial_unchecked(&u) * dot(&u, xi)
        };
        let grid = SphereGrid::new(n, 400.max(40 * n), 7);
        let mut best = xi.iter().map(|v| v / s).collect::<Vec<_>>();
        let mut best_v = value(&best);
        for node in grid.nodes() {
            let v = value(node);
            if v > best_v {
                best_v = v;
                best = node.clone();
            }
        }
        let mut step = 0.1;
        while step > 1e-10 {
            let mut improved = false;
            for i in 0..n {
                for sign in [1.0, -1.0] {
                    let mut cand = best.clone();
                    cand[i] += sign * step;
                    let nc = norm2(&cand);
                    cand.iter_mut().for_each(|v| *v /= nc);
                    let v = value(&cand);
                    if v > best_v {
                        best_v = v;
                        best = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        let r = self.radial_unchecked(&best);
        (best_v, best.iter().map(|v| v * r).collect())
    }

    /// Largest `s ≥ 0` with `c + sθ ∈ K`, for `c` inside `K` and `θ ≠ 0`.
    pub(crate) fn ray_exit(&self, c: &[f64], theta: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Ball { r } => quadratic_exit(c, theta, |_| 1.0 / (r * r), self.dim),
            BodyKind::Ellipsoid { axes } => quadratic_exit(c, theta, |i| 1.0 / (axes[i] * axes[i]), self.dim),
            BodyKind::LpBall { p, scale } if p.is_infinite() => {
                let mut s = f64::INFINITY;
                for (ci, ti) in c.iter().zip(theta) {
                    if *ti != 0.0 {
                        s = s.min(((scale - ci * ti.signum()) / ti.abs()).max(0.0));
                    }
                }
                s
            }
            BodyKind::LpBall { p, scale } if *p == 1.0 => l1_exit(c, theta, *scale),
            BodyKind::LpBall { p, scale } if *p == 2.0 => quadratic_exit(c, theta, |_| 1.0 / (scale * scale), self.dim),
            BodyKind::Scaled { base, factor } => {
                let cb: Vec<f64> = c.iter().map(|v| v / factor).collect();
                base.ray_exit(&cb, theta) * factor
            }
            BodyKind::Linear { base, inverse, .. } => base.ray_exit(&mat_vec(inverse, c), &mat_vec(inverse, theta)),
            _ => self.bisect_exit(c, theta),
        }
    }

    /// Label of the facet through which the ray from `c` along `θ` leaves a
    /// polytope; `None` for bodies without facets.
    pub(crate) fn exit_face(&self, c: &[f64], theta: &[f64]) -> Option<u64> {
        match &self.kind {
            BodyKind::LpBall { p, scale } if p.is_infinite() => {
                let (mut best, mut id) = (f64::INFINITY, 0);
                for (i, (ci, ti)) in c.iter().zip(theta).enumerate() {
                    if *ti != 0.0 {
                        let s = (scale - ci * ti.signum()) / ti.abs();
                        if s < best {
                            best = s;
                            id = 2 * i as u64 + u64::from(*ti > 0.0);
                        }
                    }
                }
                Some(id)
            }
            BodyKind::LpBall { p, scale } if *p == 1.0 => {
                let s = l1_exit(c, theta, *scale);
                Some(
                    c.iter()
                        .zip(theta)
                        .enumerate()
                        .map(|(i, (a, b))| u64::from(a + s * b > 0.0) << i)
                        .sum(),
                )
            }
            BodyKind::Scaled { base, factor } => {
                let cb: Vec<f64> = c.iter().map(|v| v / factor).collect();
                base.exit_face(&cb, theta)
            }
            BodyKind::Linear { base, inverse, .. } => base.exit_face(&mat_vec(inverse, c), &mat_vec(inverse, theta)),
            _ => None,
        }
    }

    fn bisect_exit(&self, c: &[f64], theta: &[f64]) -> f64 {
        let point = |s: f64| -> Vec<f64> { c.iter().zip(theta).map(|(a, b)| a + s * b).collect() };
        let g = |s: f64| self.minkowski_unchecked(&point(s)) - 1.0;
        if g(0.0) >= 0.0 {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = (1.0 + norm2(c)) / norm2(theta);
        let mut ghi = g(hi);
        let mut guard = 0;
        while ghi < 0.0 && guard < 200 {
            lo = hi;
            hi *= 2.0;
            ghi = g(hi);
            guard += 1;
        }
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid);
            if gm < 0.0 {
                lo = mid;
            } else {
                hi = mid;
                ghi = gm;
            }
        }
        let glo = g(lo);
        if ghi > glo {
            lo - glo * (hi - lo) / (ghi - glo)
        } else {
            0.5 * (lo + hi)
        }
    }

    /// Closed-form volume where one is known.
    pub fn closed_form_volume(&self) -> Option<f64> {
        let n = self.dim;
        let nf = n as f64;
        match &self.kind {
            BodyKind::Ball { r } => Some(ball_volume(n).ok()? * r.powi(n as i32)),
            BodyKind::Ellipsoid { axes } => Some(ball_volume(n).ok()? * axes.iter().product::<f64>()),
            BodyKind::LpBall { p, scale } => {
                if p.is_infinite() {
                    Some((2.0 * scale).powi(n as i32))
                } else {
                    let lg = nf * (2.0f64.ln() + log_gamma(1.0 + 1.0 / p).ok()?) - log_gamma(1.0 + nf / p).ok()?;
                    Some(lg.exp() * scale.powi(n as i32))
                }
            }
            BodyKind::RadialQSum { .. } => None,
            BodyKind::Scaled { base, factor } => Some(base.closed_form_volume()? * factor.powi(n as i32)),
            BodyKind::Linear { base, det, .. } => Some(base.closed_form_volume()? * det.abs()),
        }
    }

    /// Volume by the polar formula `(1/n)∫ ‖θ‖^{-n} dθ` on `grid`.
    pub fn volume_polar(&self, grid: &SphereGrid) -> Result<f64> {
        self.check_grid(grid)?;
        let n = self.dim as i32;
        let terms: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .map(|(th, w)| w * self.radial_unchecked(th).powi(n))
            .collect();
        Ok(pairwise_sum(&terms) / self.dim as f64)
    }

    /// Closed-form volume when available, otherwise the polar quadrature.
    pub fn volume(&self, grid: &SphereGrid) -> Result<f64> {
        match self.closed_form_volume() {
            Some(v) => Ok(v),
            None => self.volume_polar(grid),
        }
    }

    fn check_grid(&self, grid: &SphereGrid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: grid.dim() });
        }
        Ok(())
    }

    /// Copy of the body scaled by `λ`, folding into the parameters when possible.
    pub fn dilate(&self, lambda: f64) -> Result<StarBody> {
        positive("scale factor", lambda)?;
        Ok(match &self.kind {
            BodyKind::Ball { r } => StarBody::ball(self.dim, r * lambda)?,
            BodyKind::Ellipsoid { axes } => {
                StarBody::ellipsoid(&axes.iter().map(|a| a * lambda).collect::<Vec<_>>())?
            }
            BodyKind::LpBall { p, scale } => StarBody::lp_ball(self.dim, *p, scale * lambda)?,
            BodyKind::Scaled { base, factor } => StarBody::scaled((**base).clone(), factor * lambda)?,
            _ => StarBody::scaled(self.clone(), lambda)?,
        })
    }

    /// Scaled copy of volume one and the factor used.
    pub fn scale_to_volume_one(&self, grid: &SphereGrid) -> Result<(StarBody, f64)> {
        let v = self.volume(grid)?;
        let lambda = v.powf(-1.0 / self.dim as f64);
        if (lambda - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok((self.clone(), 1.0));
        }
        Ok((self.dilate(lambda)?, lambda))
    }

    /// Radial q-sum `r^q = r_K^q + r_L^q`.
    pub fn radial_q_sum(&self, other: &StarBody, q: f64) -> Result<StarBody> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let q = positive("q", q)?;
        let mut parts = Vec::new();
        for body in [self, other] {
            match &body.kind {
                BodyKind::RadialQSum { q: q2, parts: p2 } if *q2 == q => parts.extend(p2.iter().cloned()),
                _ => parts.push(body.clone()),
            }
        }
        Ok(StarBody { dim: self.dim, kind: BodyKind::RadialQSum { q, parts } })
    }

    /// `max` over grid nodes of `|r_K − r_L|`.
    pub fn radial_metric(&self, other: &StarBody, grid: &SphereGrid) -> Result<f64> {
        self.check_grid(grid)?;
        other.check_grid(grid)?;
        Ok(grid
            .nodes()
            .iter()
            .map(|th| (self.radial_unchecked(th) - other.radial_unchecked(th)).abs())
            .fold(0.0, f64::max))
    }

    /// Whether `self ⊇ inner` at every grid node, with the worst ratio
    /// `r_self / r_inner`.
    pub fn contains(&self, inner: &StarBody, grid: &SphereGrid) -> Result<(bool, f64)> {
        self.check_grid(grid)?;
        inner.check_grid(grid)?;
        let mut worst = f64::INFINITY;
        for th in grid.nodes() {
            worst = worst.min(self.radial_unchecked(th) / inner.radial_unchecked(th));
        }
        Ok((worst >= 1.0 - 1e-10, worst))
    }

    /// `L` with `K = L·B_2^n` when the body is an ellipsoid.
    pub fn ellipsoid_map(&self) -> Option<DMatrix<f64>> {
        let n = self.dim;
        match &self.kind {
            BodyKind::Ball { r } => Some(DMatrix::identity(n, n) * *r),
            BodyKind::Ellipsoid { axes } => Some(DMatrix::from_diagonal(&DVector::from_column_slice(axes))),
            BodyKind::LpBall { p, scale } if *p == 2.0 => Some(DMatrix::identity(n, n) * *scale),
            BodyKind::Scaled { base, factor } => base.ellipsoid_map().map(|l| l * *factor),
            BodyKind::Linear { base, map, .. } => base.ellipsoid_map().map(|l| map * l),
            _ => None,
        }
    }

    /// Whether every coordinate reflection maps the body to itself.
    pub fn is_unconditional(&self) -> bool {
        match &self.kind {
            BodyKind::Ball { .. } | BodyKind::Ellipsoid { .. } | BodyKind::LpBall { .. } => true,
            BodyKind::RadialQSum { parts, .. } => parts.iter().all(StarBody::is_unconditional),
            BodyKind::Scaled { base, .. } => base.is_unconditional(),
            BodyKind::Linear { .. } => false,
        }
    }

    /// True when the Minkowski functional is smooth away from the origin.
    pub fn is_smooth(&self) -> bool {
        match &self.kind {
            BodyKind::Ball { .. } | BodyKind::Ellipsoid { .. } => true,
            BodyKind::LpBall { p, .. } => p.is_finite() && *p >= 2.0 && (*p == 2.0 || p.fract() == 0.0 && (*p as u64).is_multiple_of(2)),
            BodyKind::RadialQSum { parts, .. } => parts.iter().all(StarBody::is_smooth),
            BodyKind::Scaled { base, .. } | BodyKind::Linear { base, .. } => base.is_smooth(),
        }
    }
}

fn quadratic_exit(c: &[f64], theta: &[f64], m: impl Fn(usize) -> f64, n: usize) -> f64 {
    let (mut a, mut b, mut cc) = (0.0, 0.0, -1.0);
    for i in 0..n {
        let w = m(i);
        a += w * theta[i] * theta[i];
        b += w * c[i] * theta[i];
        cc += w * c[i] * c[i];
    }
    let disc = (b * b - a * cc).max(0.0);
    let root = disc.sqrt();
    let s = if b > 0.0 { -cc / (b + root) } else { (root - b) / a };
    s.max(0.0)
}

fn l1_exit(c: &[f64], theta: &[f64], scale: f64) -> f64 {
    // Σ|cᵢ + sθᵢ| is convex piecewise linear in s; walk its breakpoints.
    let f = |s: f64| c.iter().zip(theta).map(|(a, b)| (a + s * b).abs()).sum::<f64>();
    let mut bps: Vec<f64> = c
        .iter()
        .zip(theta)
        .filter(|(_, t)| **t != 0.0)
        .map(|(a, t)| -a / t)
        .filter(|s| *s > 0.0)
        .collect();
    bps.sort_by(f64::total_cmp);
    let mut lo = 0.0;
    let mut flo = f(0.0);
    if flo >= scale {
        return 0.0;
    }
    for s in bps.into_iter().chain(std::iter::once(f64::INFINITY)) {
        let hi = if s.is_finite() { s } else { lo + 1.0 };
        let fhi = f(hi);
        if fhi >= scale || !s.is_finite() {
            let slope = (fhi - flo) / (hi - lo);
            if slope <= 0.0 {
                return f64::INFINITY;
            }
            return lo + (scale - flo) / slope;
        }
        lo = hi;
        flo = fhi;
    }
    unreachable!()
}

fn lp_support(xi: &[f64], p: f64, scale: f64) -> (f64, Vec<f64>) {
    let n = xi.len();
    if p.is_infinite() {
        let h: f64 = xi.iter().map(|v| v.abs()).sum();
        let x = xi.iter().map(|v| if *v == 0.0 { 0.0 } else { scale * v.signum() }).collect();
        return (scale * h, x);
    }
    if p == 1.0 {
        let (mut k, mut best) = (0, -1.0);
        for (i, v) in xi.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                k = i;
            }
        }
        let mut x = vec![0.0; n];
        if best > 0.0 {
            x[k] = scale * xi[k].signum();
        }
        return (scale * best, x);
    }
    let pd = p / (p - 1.0);
    let dn = lp_norm(xi, pd);
    if dn == 0.0 {
        return (0.0, vec![0.0; n]);
    }
    let x = xi.iter().map(|v| scale * v.signum() * (v.abs() / dn).powf(pd - 1.0)).collect();
    (scale * dn, x)
}

impl fmt::Display for StarBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|a| format!("{a}")).collect::<Vec<_>>().join(",");
        match &self.kind {
            BodyKind::Ball { r } => write!(f, "ball:r={r}"),
            BodyKind::Ellipsoid { axes } => write!(f, "ellipsoid:a={}", list(axes)),
            BodyKind::LpBall { p, scale } if p.is_infinite() => write!(f, "cube:scale={scale}"),
            BodyKind::LpBall { p, scale } => write!(f, "lp:p={p},scale={scale}"),
            BodyKind::RadialQSum { q, parts } => {
                write!(f, "qsum:q={q}")?;
                for part in parts {
                    write!(f, ";{part}")?;
                }
                Ok(())
            }
            BodyKind::Scaled { base, factor } => write!(f, "scaled:f={factor};{base}"),
            BodyKind::Linear { base, map, .. } => {
                write!(f, "linear:m={};{base}", list(map.transpose().as_slice()))
            }
        }
    }
}

/// `e`, the outer volume ratio bound for unconditional bodies.
pub const UNCONDITIONAL_DOVR: f64 = E;
