//! Generators for test cycles.

use std::f64::consts::PI;

use rand::Rng;

use crate::algebra::Manifold;
use crate::format::CycleFile;
use crate::geometry::GroupPoint;

/// Chart point `(u, h)` of the hyperbolic plane at distance `r` from the
/// base point `i` in direction `theta` (upper half plane `u + i e^h`).
pub fn h2_circle_point(r: f64, theta: f64) -> (f64, f64) {
    // disk model point tanh(r/2) e^{iθ}, mapped by w ↦ i(1+w)/(1-w)
    let rho = (r / 2.0).tanh();
    let (wr, wi) = (rho * theta.cos(), rho * theta.sin());
    let (dr, di) = (1.0 - wr, -wi);
    let den = dr * dr + di * di;
    let (nr, ni) = (-wi, 1.0 + wr); // i(1 + w)
    let zr = (nr * dr + ni * di) / den;
    let zi = (ni * dr - nr * di) / den;
    (zr, zi.ln())
}

/// Closed polygon through the given points.
pub fn polygon(name: &str, vertices: Vec<GroupPoint>) -> CycleFile {
    let n = vertices.len();
    CycleFile {
        name: name.to_string(),
        dim: 1,
        cycle: true,
        vertices,
        cells: (0..n).map(|i| (vec![i, (i + 1) % n], 1)).collect(),
    }
}

/// Geodesic circle of radius `r` about `i` in the hyperbolic plane, as an
/// inscribed polygon with `n` vertices equally spaced in angle.
pub fn h2_circle(r: f64, n: usize) -> CycleFile {
    let vertices = (0..n)
        .map(|i| {
            let (u, h) = h2_circle_point(r, 2.0 * PI * i as f64 / n as f64);
            GroupPoint {
                m0: vec![],
                u: vec![u],
                h: vec![h],
            }
        })
        .collect();
    polygon(&format!("hyperbolic circle r={r} n={n}"), vertices)
}

/// Product of two hyperbolic circles in `H2 × H2` (chart `(u1, u2, h1,
/// h2)`), triangulated on an `n × n` grid.
pub fn h2xh2_torus(r1: f64, r2: f64, n: usize) -> CycleFile {
    let mut vertices = Vec::with_capacity(n * n);
    for i in 0..n {
        let (u1, h1) = h2_circle_point(r1, 2.0 * PI * i as f64 / n as f64);
        for j in 0..n {
            let (u2, h2) = h2_circle_point(r2, 2.0 * PI * j as f64 / n as f64);
            vertices.push(GroupPoint {
                m0: vec![],
                u: vec![u1, u2],
                h: vec![h1, h2],
            });
        }
    }
    let id = |i: usize, j: usize| (i % n) * n + (j % n);
    let mut cells = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push((vec![a, b, c], 1));
            cells.push((vec![a, c, d], 1));
        }
    }
    CycleFile {
        name: format!("torus r=({r1}, {r2}) n={n}"),
        dim: 2,
        cycle: true,
        vertices,
        cells,
    }
}

/// Smooth loop in the complex hyperbolic plane chart `(x, y, z, h)`.
pub fn ch2_loop(n: usize) -> CycleFile {
    let vertices = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            GroupPoint {
                m0: vec![],
                u: vec![t.cos(), t.sin(), 0.3 * (2.0 * t).sin()],
                h: vec![0.5 * t.cos()],
            }
        })
        .collect();
    polygon(&format!("ch2 loop n={n}"), vertices)
}

fn random_point<R: Rng>(m: &Manifold, rng: &mut R, spread: f64) -> GroupPoint {
    let mut draw = |len: usize| (0..len).map(|_| rng.random_range(-spread..spread)).collect::<Vec<f64>>();
    GroupPoint {
        m0: draw(m.dim_m0()),
        u: draw(m.dim_n()),
        h: draw(m.dim_a()),
    }
}

/// Random closed polygon with chart coordinates in `[-spread, spread]`.
pub fn random_polygon<R: Rng>(m: &Manifold, rng: &mut R, vertices: usize, spread: f64) -> CycleFile {
    let pts = (0..vertices).map(|_| random_point(m, rng, spread)).collect();
    polygon("random polygon", pts)
}

/// Boundary of a random `(k+1)`-simplex in the chart: a `k`-sphere made of
/// `k + 2` simplices.
pub fn random_sphere<R: Rng>(m: &Manifold, rng: &mut R, k: usize, spread: f64) -> CycleFile {
    let vertices: Vec<GroupPoint> = (0..k + 2).map(|_| random_point(m, rng, spread)).collect();
    let cells = (0..k + 2)
        .map(|skip| {
            let face: Vec<usize> = (0..k + 2).filter(|&i| i != skip).collect();
            (face, if skip % 2 == 0 { 1 } else { -1 })
        })
        .collect();
    CycleFile {
        name: format!("random {k}-sphere"),
        dim: k,
        cycle: true,
        vertices,
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn circle_points_are_at_distance_r() {
        for theta in [0.0, 0.7, 2.0, 4.5] {
            let (u, h) = h2_circle_point(1.3, theta);
            let y = h.exp();
            // d(i, u + iy) = acosh(1 + (u^2 + (y - 1)^2) / (2y))
            let d = (1.0 + (u * u + (y - 1.0) * (y - 1.0)) / (2.0 * y)).acosh();
            assert_relative_eq!(d, 1.3, epsilon = 1e-12);
        }
    }

    #[test]
    fn generated_cycles_are_cycles() {
        let h2 = bundled::manifold("h2").unwrap();
        assert!(h2_circle(1.0, 16).to_chain(&h2).unwrap().is_cycle(&h2));
        let prod = bundled::manifold("h2xh2").unwrap();
        let torus = h2xh2_torus(1.0, 0.5, 4).to_chain(&prod).unwrap();
        assert_eq!(torus.len(), 32);
        assert!(torus.is_cycle(&prod));
        let ch2 = bundled::manifold("ch2").unwrap();
        assert!(ch2_loop(12).to_chain(&ch2).unwrap().is_cycle(&ch2));
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let s = random_sphere(&ch2, &mut rng, 2, 1.0).to_chain(&ch2).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.is_cycle(&ch2));
    }
}
