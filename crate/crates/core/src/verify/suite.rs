use serde::{Deserialize, Serialize};

use super::{
    check_ball_identity, check_holder_step, check_mp_lemma, check_mp_moment_identity, check_parseval, check_lower_bound,
    check_slicing_multi, check_comparison, volume_one_ball, DovrBound, InequalityReport, Status,
};
use crate::bodies::{SphereGrid, StarBody};
use crate::error::{Error, Result};
use crate::radon::{Density, QuadratureSpec};
use crate::special::FractionalOrder;

pub const CHECKS: [&str; 8] = ["corollary1", "parseval", "mp-identity", "mp-lemma", "holder", "thm1", "thm2", "thm3"];

pub const CSV_HEADER: [&str; 11] = ["check", "n", "q", "body", "density", "lhs", "rhs", "margin", "pass", "dovr_source", "seed"];

/// Settings of the built-in suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub quad: QuadratureSpec,
    /// Constant of the lower bound on the maximal derivative.
    pub c: f64,
    /// Constant of the distance bound to generalized intersection bodies.
    pub c_kpz: f64,
    /// Constant of the `c√p` distance bound for `ℓ_p` balls.
    pub c_lp: f64,
    pub hypothesis_directions: usize,
    pub ellipsoid_samples: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            quad: QuadratureSpec::default(),
            c: 0.05,
            c_kpz: 1.0,
            c_lp: 1.0,
            hypothesis_directions: 200,
            ellipsoid_samples: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inapplicable: usize,
}

impl Summary {
    pub fn of(reports: &[InequalityReport]) -> Self {
        let mut s = Summary::default();
        for r in reports {
            match r.status {
                Status::Pass => s.pass += 1,
                Status::Fail => s.fail += 1,
                Status::Inapplicable => s.inapplicable += 1,
            }
        }
        s
    }
}

fn fo(q: f64) -> Result<FractionalOrder> {
    FractionalOrder::new(q)
}

fn orders_below(n: usize, qs: &[f64]) -> Result<Vec<FractionalOrder>> {
    qs.iter().filter(|q| **q < n as f64 - 1.0).map(|q| fo(*q)).collect()
}

fn volume_one(k: StarBody, quad: &QuadratureSpec) -> Result<StarBody> {
    let grid = SphereGrid::new(k.dim(), quad.polar_nodes, quad.seed);
    Ok(k.scale_to_volume_one(&grid)?.0)
}

fn ball_identity(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    for n in [3, 4, 5] {
        for q in orders_below(n, &[0.0, 0.5, 1.5, 2.5])? {
            out.push(check_ball_identity(n, q, &cfg.quad)?);
        }
    }
    Ok(out)
}

fn parseval(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let e = StarBody::ellipsoid(&[2.0, 1.0, 1.0])?;
    Ok(vec![
        check_parseval(&StarBody::unit_ball(3)?, 1.5, &cfg.quad)?,
        check_parseval(&e, 1.0, &cfg.quad)?,
        check_parseval(&e, 1.5, &cfg.quad)?,
    ])
}

fn mp_identity(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let bodies = [
        StarBody::unit_ball(3)?,
        StarBody::lp_ball(3, 1.0, 1.0)?,
        StarBody::ellipsoid(&[2.0, 1.0, 1.0])?,
        StarBody::cube(3, 1.0)?,
    ];
    let mut out = Vec::new();
    for d in &bodies {
        for q in [0.5, 1.5] {
            out.push(check_mp_moment_identity(d, fo(q)?, &cfg.quad)?);
        }
    }
    out.push(check_mp_moment_identity(&StarBody::lp_ball(2, 1.0, 1.0)?, fo(0.3)?, &cfg.quad)?);
    Ok(out)
}

fn mp_lemma(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let b = StarBody::unit_ball(3)?;
    let u = Density::uniform();
    let q = fo(0.5)?;
    Ok(vec![
        check_mp_lemma(&b, &u, &b, q, &cfg.quad)?,
        check_mp_lemma(&StarBody::ball(3, 0.5)?, &u, &b, q, &cfg.quad)?,
        check_mp_lemma(&b, &Density::gaussian(1.0)?, &b, q, &cfg.quad)?,
    ])
}

fn holder(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    Ok(vec![
        check_holder_step(&StarBody::unit_ball(3)?, fo(0.5)?, &cfg.quad)?,
        check_holder_step(&StarBody::ellipsoid(&[2.0, 1.0, 1.0])?, fo(0.5)?, &cfg.quad)?,
        check_holder_step(&StarBody::lp_ball(3, 1.0, 1.0)?, fo(1.2)?, &cfg.quad)?,
    ])
}

fn lower_bound(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    for n in [3, 4] {
        let k = volume_one_ball(n)?;
        let f = Density::uniform().normalized_on(&k, &cfg.quad)?;
        for q in [0.0, 0.5, 1.0] {
            out.push(check_lower_bound(&k, &f, q, cfg.c, cfg.c_kpz, &cfg.quad)?);
        }
    }
    let cube = volume_one(StarBody::cube(3, 1.0)?, &cfg.quad)?;
    let f = Density::uniform().normalized_on(&cube, &cfg.quad)?;
    out.push(check_lower_bound(&cube, &f, 0.5, cfg.c, cfg.c_kpz, &cfg.quad)?);
    Ok(out)
}

/// Bodies of the slicing suite with their distance bounds.
pub(crate) fn slicing_bodies(cfg: &SuiteConfig) -> Result<Vec<StarBody>> {
    let q = &cfg.quad;
    Ok(vec![
        volume_one_ball(3)?,
        volume_one(StarBody::ellipsoid(&[2.0, 1.0, 1.0])?, q)?,
        volume_one(StarBody::ellipsoid(&[2.0, 1.0, 0.5])?, q)?,
        volume_one(StarBody::lp_ball(3, 1.0, 1.0)?, q)?,
        volume_one(StarBody::cube(3, 1.0)?, q)?,
        volume_one_ball(4)?,
        volume_one_ball(5)?,
    ])
}

fn slicing(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    for k in slicing_bodies(cfg)? {
        let dovr = DovrBound::for_body(&k, cfg.c_lp, cfg.ellipsoid_samples, cfg.quad.seed)?;
        let qs = orders_below(k.dim(), &[0.0, 0.5, 1.5, 2.5])?;
        for f in [Density::uniform(), Density::gaussian(1.0)?] {
            let f = f.normalized_on(&k, &cfg.quad)?;
            out.extend(check_slicing_multi(&k, &f, &qs, &dovr, &cfg.quad)?);
        }
    }
    Ok(out)
}

fn comparison(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let b = StarBody::unit_ball(3)?;
    let g = Density::uniform();
    let dovr = DovrBound::given(1.0)?;
    let h = cfg.hypothesis_directions;
    let mut out = Vec::new();
    for q in [0.0, 0.5, 1.5] {
        out.push(check_comparison(&b, &g.scaled(0.5), &b, &g, fo(q)?, &dovr, &cfg.quad, h)?);
    }
    let inner = StarBody::ball(3, 0.8)?;
    for q in [0.0, 0.5] {
        out.push(check_comparison(&inner, &g, &b, &g, fo(q)?, &dovr, &cfg.quad, h)?);
    }
    Ok(out)
}

/// Runs one named suite.
pub fn run_check(name: &str, cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    match name {
        "corollary1" => ball_identity(cfg),
        "parseval" => parseval(cfg),
        "mp-identity" => mp_identity(cfg),
        "mp-lemma" => mp_lemma(cfg),
        "holder" => holder(cfg),
        "thm1" => lower_bound(cfg),
        "thm2" => slicing(cfg),
        "thm3" => comparison(cfg),
        "all" => run_all(cfg),
        other => Err(Error::Parse(format!("unknown check {other:?}"))),
    }
}

/// Every suite in [`CHECKS`] order.
pub fn run_all(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    for name in CHECKS {
        out.extend(run_check(name, cfg)?);
    }
    Ok(out)
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV row per report under [`CSV_HEADER`].
pub fn to_csv(reports: &[InequalityReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Parse(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        w.write_record([
            r.check.clone(),
            r.n.to_string(),
            r.q.map(float).unwrap_or_default(),
            r.body.clone(),
            r.density.clone(),
            float(r.lhs),
            float(r.rhs),
            float(r.margin),
            r.pass.to_string(),
            r.dovr_source.clone(),
            r.seed.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(format!("csv: {e}")))
}
