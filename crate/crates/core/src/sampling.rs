//! Random sampling helpers for property checks: points of the cone `C0`,
//! vectors in `n` and orthonormal frames normal to a geodesic.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::Manifold;
use crate::geometry::{GroupPoint, TangentData};
use crate::structure::Structure;

fn gaussian<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `H ∈ C0` with `0 < |H| <= max_norm`, by rejection from the ball.
pub fn sample_in_cone<R: Rng>(m: &Manifold, s: &Structure, rng: &mut R, max_norm: f64) -> Vec<f64> {
    loop {
        let dir = gaussian(rng, m.dim_a());
        let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-12 {
            continue;
        }
        let r = max_norm * rng.random_range(1e-3..=1.0);
        let y: Vec<f64> = dir.iter().map(|v| r * v / n).collect();
        let h = m.from_ortho_a(&y);
        if s.cone.contains(&h) {
            return h;
        }
    }
}

/// Gaussian vector in `n`-coordinates.
pub fn sample_n<R: Rng>(m: &Manifold, rng: &mut R) -> Vec<f64> {
    m.from_ortho_n(&gaussian(rng, m.dim_n()))
}

/// Random orthonormal `k`-frame at `x`, orthogonal to the geodesic
/// direction `x.h`.
pub fn normal_frame<R: Rng>(m: &Manifold, rng: &mut R, x: &GroupPoint, k: usize) -> Vec<TangentData> {
    let (d0, dn) = (m.dim_m0(), m.dim_n());
    let dim = m.dim_m();
    assert!(k < dim, "a frame normal to the geodesic has at most dim - 1 vectors");
    // orthonormal coordinates (m0 | n | a); the geodesic direction first
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    let mut axis = vec![0.0; dim];
    axis[d0 + dn..].copy_from_slice(&m.ortho_a(&x.h));
    let an = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    axis.iter_mut().for_each(|v| *v /= an);
    basis.push(axis);
    while basis.len() < k + 1 {
        let mut v = gaussian(rng, dim);
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = b.iter().zip(&v).map(|(p, q)| p * q).sum();
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= dot * bi);
            }
        }
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(v.iter().map(|c| c / n).collect());
        }
    }
    basis[1..]
        .iter()
        .map(|v| TangentData {
            base: x.clone(),
            m0_vel: v[..d0].to_vec(),
            w: m.from_ortho_n(&v[d0..d0 + dn]),
            xi: m.from_ortho_a(&v[d0 + dn..]),
        })
        .collect()
}
