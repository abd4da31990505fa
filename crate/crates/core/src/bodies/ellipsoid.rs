use nalgebra::{DMatrix, DVector};

use super::{SphereGrid, StarBody};
use crate::error::{Error, Result};
use crate::special::ball_volume;

/// Origin-centred enclosing ellipsoid and its outer volume ratio.
#[derive(Debug, Clone)]
pub struct EnclosingEllipsoid {
    pub body: StarBody,
    pub map: DMatrix<f64>,
    /// `(|E|/|K|)^{1/n}`, never below one.
    pub ratio: f64,
    pub iterations: usize,
    pub converged: bool,
}

const TOL: f64 = 1e-8;
const MAX_ITER: usize = 100_000;

fn boundary_points(k: &StarBody, grid: &SphereGrid) -> Vec<DVector<f64>> {
    grid.nodes()
        .iter()
        .map(|th| DVector::from_column_slice(th) * k.radial_unchecked(th))
        .collect()
}

struct Solve {
    xinv: DMatrix<f64>,
    iterations: usize,
    converged: bool,
}

// Khachiyan iteration with Todd–Yildirim away steps on the dual weights.
fn khachiyan(pts: &[DVector<f64>]) -> Result<Solve> {
    let n = pts[0].len();
    let m = pts.len();
    let nf = n as f64;
    let scatter = |u: &[f64]| {
        let mut x = DMatrix::<f64>::zeros(n, n);
        for (p, w) in pts.iter().zip(u) {
            if *w > 0.0 {
                x += p * p.transpose() * *w;
            }
        }
        x
    };
    let mut u = vec![1.0 / m as f64; m];
    let x = scatter(&u);
    let eig = x.clone().symmetric_eigen();
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(lo > 1e-12 * hi) {
        return Err(Error::Degenerate(format!("boundary samples span rank < {n}")));
    }
    let singular = || Error::Degenerate("singular scatter matrix".into());
    let mut xinv = x.try_inverse().ok_or_else(singular)?;
    let quad = |xinv: &DMatrix<f64>, p: &DVector<f64>| (p.transpose() * xinv * p)[(0, 0)];
    let mut g: Vec<f64> = pts.iter().map(|p| quad(&xinv, p)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let (j, gj) = g.iter().enumerate().fold((0, f64::MIN), |b, (i, v)| if *v > b.1 { (i, *v) } else { b });
        let (kk, gk) = g
            .iter()
            .enumerate()
            .filter(|(i, _)| u[*i] > 0.0)
            .fold((0, f64::MAX), |b, (i, v)| if *v < b.1 { (i, *v) } else { b });
        if gj <= nf * (1.0 + TOL) && gk >= nf * (1.0 - TOL) {
            converged = true;
            break;
        }
        let (idx, gi, mut alpha) = if gj - nf >= nf - gk {
            (j, gj, (gj - nf) / (nf * (gj - 1.0)))
        } else {
            (kk, gk, (gk - nf) / (nf * (gk - 1.0)))
        };
        if alpha < 0.0 {
            alpha = alpha.max(-u[idx] / (1.0 - u[idx]));
        }
        if alpha == 0.0 || !alpha.is_finite() {
            break;
        }
        // Sherman–Morrison for X ← (1−α)X + α p pᵀ.
        let p = &pts[idx];
        let y = &xinv * p;
        let denom = (1.0 - alpha) + alpha * gi;
        xinv = (&xinv - (&y * y.transpose()) * (alpha / denom)) / (1.0 - alpha);
        u.iter_mut().for_each(|w| *w *= 1.0 - alpha);
        u[idx] += alpha;
        if u[idx] < 1e-300 {
            u[idx] = 0.0;
        }
        if iterations % 200 == 0 {
            xinv = scatter(&u).try_inverse().ok_or_else(singular)?;
        }
        for (gv, p) in g.iter_mut().zip(pts) {
            *gv = quad(&xinv, p);
        }
    }
    Ok(Solve { xinv, iterations, converged })
}

/// Minimum-volume centred ellipsoid around sampled boundary points of `K`,
/// refined by adding the worst-covered boundary points until a dense
/// boundary sample fits, then inflated to cover it exactly. Its volume ratio
/// bounds the outer volume ratio distance from `K` to any class containing
/// all centred ellipsoids.
pub fn enclosing_ellipsoid_dovr(k: &StarBody, samples: usize, seed: u64) -> Result<EnclosingEllipsoid> {
    let n = k.dim();
    let nf = n as f64;
    let grid = SphereGrid::new(n, samples.max(2 * n), seed);
    // Symmetric set: the half grid carries all the information.
    let mut pts: Vec<DVector<f64>> = boundary_points(k, &grid).into_iter().take(grid.len() / 2).collect();
    let dense = SphereGrid::new(n, (4 * samples).max(2000), seed.wrapping_add(1));

    let mut iterations = 0;
    let mut rounds = 0;
    let (shape, inflate, converged) = loop {
        rounds += 1;
        let solve = khachiyan(&pts)?;
        iterations += solve.iterations;
        let shape = &solve.xinv / nf;
        let gauge = |th: &[f64]| {
            let p = DVector::from_column_slice(th) * k.radial_unchecked(th);
            (p.transpose() * &shape * &p)[(0, 0)].sqrt()
        };
        let mut scored: Vec<(f64, &Vec<f64>)> = dense.half().iter().map(|th| (gauge(th), th)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut inflate = pts.iter().map(|p| (p.transpose() * &shape * p)[(0, 0)].sqrt()).fold(1.0f64, f64::max);
        let mut added = 0;
        for (v, th) in scored.iter().take(4 * n) {
            let (lv, arg) = local_max(&gauge, th);
            inflate = inflate.max(*v).max(lv);
            if lv > 1.0 + 1e-7 {
                pts.push(DVector::from_column_slice(&arg) * k.radial_unchecked(&arg));
                added += 1;
            }
        }
        if added == 0 || rounds >= 8 {
            break (shape, inflate, solve.converged);
        }
    };

    let eig = shape.symmetric_eigen();
    let radii = eig.eigenvalues.map(|v| inflate / v.sqrt());
    let map = &eig.eigenvectors * DMatrix::from_diagonal(&radii) * eig.eigenvectors.transpose();
    let det: f64 = radii.iter().product();
    let body = StarBody::linear_image(StarBody::unit_ball(n)?, map.clone())?;
    let vol_k = k.volume(&dense)?;
    let ratio = ((ball_volume(n)? * det) / vol_k).powf(1.0 / nf).max(1.0);
    Ok(EnclosingEllipsoid { body, map, ratio, iterations, converged })
}

// Compass search on the sphere starting at `start`.
fn local_max(f: &impl Fn(&[f64]) -> f64, start: &[f64]) -> (f64, Vec<f64>) {
    let n = start.len();
    let mut best = start.to_vec();
    let mut best_v = f(&best);
    let mut step = 0.05;
    while step > 1e-9 {
        let mut improved = false;
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut cand = best.clone();
                cand[i] += sign * step;
                let nc = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
                cand.iter_mut().for_each(|v| *v /= nc);
                let v = f(&cand);
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
    (best_v, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ball_volume;

    #[test]
    fn ball_is_its_own_ellipsoid() {
        let r = enclosing_ellipsoid_dovr(&StarBody::unit_ball(3).unwrap(), 500, 0).unwrap();
        assert!(r.converged);
        assert!((r.ratio - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ellipsoid_is_its_own_ellipsoid() {
        let e = StarBody::ellipsoid(&[2.0, 1.0, 0.5]).unwrap();
        let r = enclosing_ellipsoid_dovr(&e, 800, 1).unwrap();
        assert!(r.ratio <= 1.0 + 1e-6, "{}", r.ratio);
    }

    #[test]
    fn cube_matches_loewner_ellipsoid() {
        for n in [2, 3] {
            let c = StarBody::cube(n, 1.0).unwrap();
            let r = enclosing_ellipsoid_dovr(&c, 1500, 2).unwrap();
            let nf = n as f64;
            let expect = (ball_volume(n).unwrap() * nf.powf(nf / 2.0) / 2f64.powf(nf)).powf(1.0 / nf);
            assert!(r.ratio >= 1.0);
            assert!((r.ratio / expect - 1.0).abs() < 0.02, "n = {n}: {} vs {expect}", r.ratio);
        }
    }

    #[test]
    fn result_contains_body() {
        let k = StarBody::lp_ball(3, 1.0, 1.0).unwrap();
        let r = enclosing_ellipsoid_dovr(&k, 600, 3).unwrap();
        let g = SphereGrid::new(3, 3000, 77);
        assert!(r.body.contains(&k, &g).unwrap().0);
    }
}
