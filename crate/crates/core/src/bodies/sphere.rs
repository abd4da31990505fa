use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::special::sphere_surface;

/// Equal-weight quadrature on `S^{n-1}`, closed under negation.
///
/// The second half of the nodes is the antipodal image of the first half,
/// so sweeps over even integrands only need [`SphereGrid::half`].
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    dim: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    seed: u64,
}

impl SphereGrid {
    /// About `count` nodes (rounded up to an even number); `seed` only
    /// matters for `n ≥ 4`.
    pub fn new(n: usize, count: usize, seed: u64) -> Self {
        assert!(n >= 1, "sphere dimension must be positive");
        let half = if n == 1 { 1 } else { count.div_ceil(2).max(1) };
        let mut nodes: Vec<Vec<f64>> = match n {
            1 => vec![vec![1.0]],
            2 => (0..half)
                .map(|k| {
                    let a = PI * (k as f64 + 0.5) / half as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect(),
            3 => {
                let golden = PI * (3.0 - 5f64.sqrt());
                let m = half as f64;
                (0..half)
                    .map(|i| {
                        let z = 1.0 - (2.0 * i as f64 + 1.0) / m;
                        let r = (1.0 - z * z).max(0.0).sqrt();
                        let phi = golden * i as f64;
                        vec![r * phi.cos(), r * phi.sin(), z]
                    })
                    .collect()
            }
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..half)
                    .map(|_| loop {
                        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if s > 1e-8 {
                            break v.into_iter().map(|x| x / s).collect();
                        }
                    })
                    .collect()
            }
        };
        let antipodes: Vec<Vec<f64>> = nodes.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
        nodes.extend(antipodes);
        let total = sphere_surface(n).expect("n >= 1");
        let w = total / nodes.len() as f64;
        let weights = vec![w; nodes.len()];
        Self { dim: n, nodes, weights, seed }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// One representative of each antipodal pair.
    pub fn half(&self) -> &[Vec<f64>] {
        &self.nodes[..self.nodes.len() / 2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_surface_area() {
        for n in 1..7 {
            let g = SphereGrid::new(n, 101, 9);
            let s: f64 = g.weights().iter().sum();
            assert!((s / sphere_surface(n).unwrap() - 1.0).abs() < 1e-13);
            assert!(g.weights().iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn nodes_are_unit_and_symmetric() {
        for n in 1..7 {
            let g = SphereGrid::new(n, 50, 4);
            let h = g.len() / 2;
            for (i, v) in g.nodes().iter().enumerate() {
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
                if i < h {
                    let w = &g.nodes()[i + h];
                    assert!(v.iter().zip(w).all(|(a, b)| *a == -*b));
                }
            }
        }
    }

    #[test]
    fn seeded_grid_is_reproducible() {
        assert_eq!(SphereGrid::new(5, 40, 3), SphereGrid::new(5, 40, 3));
        assert_ne!(SphereGrid::new(5, 40, 3), SphereGrid::new(5, 40, 4));
    }

    #[test]
    fn second_moment_on_s2() {
        // ∫ z² over S² is 4π/3.
        let g = SphereGrid::new(3, 4000, 0);
        let m: f64 = g.nodes().iter().zip(g.weights()).map(|(v, w)| w * v[2] * v[2]).sum();
        assert!((m / (4.0 * PI / 3.0) - 1.0).abs() < 1e-3);
    }
}
