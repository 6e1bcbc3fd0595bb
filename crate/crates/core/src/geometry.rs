//! Points, left-trivialized tangents, the projection `π`, the cylinder map
//! `φ` and the closed-form `N`-Jacobi fields on `M = M0 × N ⋊ A`.
//!
//! A [`GroupPoint`] `(m0, u, h)` stands for `(m0, exp_N(u) exp_A(h))`. Its
//! flat chart vector is the concatenation `m0 | u | h`.

use nalgebra::DVector;

use crate::algebra::Manifold;
use crate::error::{Error, Result};
use crate::linalg;
use crate::structure::HeberDecomposition;

/// Below this `|H|` a point counts as lying on `M0 × N`.
pub const DEGENERATE_H: f64 = 1e-12;
/// Residual allowed in frame orthonormality and normality checks.
pub const FRAME_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    pub m0: Vec<f64>,
    pub u: Vec<f64>,
    pub h: Vec<f64>,
}

impl GroupPoint {
    pub fn identity(m: &Manifold) -> Self {
        Self {
            m0: vec![0.0; m.dim_m0()],
            u: vec![0.0; m.dim_n()],
            h: vec![0.0; m.dim_a()],
        }
    }

    /// Pure `A` element `exp_A(h)`.
    pub fn from_a(m: &Manifold, h: &[f64]) -> Self {
        Self {
            h: h.to_vec(),
            ..Self::identity(m)
        }
    }

    pub fn from_chart(m: &Manifold, x: &[f64]) -> Result<Self> {
        if x.len() != m.chart_len() {
            return Err(Error::DimensionMismatch {
                expected: m.chart_len(),
                found: x.len(),
            });
        }
        let (d0, dn) = (m.dim_m0(), m.dim_n());
        Ok(Self {
            m0: x[..d0].to_vec(),
            u: x[d0..d0 + dn].to_vec(),
            h: x[d0 + dn..].to_vec(),
        })
    }

    pub fn to_chart(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.m0.len() + self.u.len() + self.h.len());
        v.extend_from_slice(&self.m0);
        v.extend_from_slice(&self.u);
        v.extend_from_slice(&self.h);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.to_chart().iter().all(|v| v.is_finite())
    }
}

/// Tangent vector at `base`, stored left-trivialized: `xi` is the `a` part
/// and `w` the `n` part of `g⁻¹ dg`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentData {
    pub base: GroupPoint,
    pub m0_vel: Vec<f64>,
    pub xi: Vec<f64>,
    pub w: Vec<f64>,
}

impl TangentData {
    pub fn norm_sq(&self, m: &Manifold) -> f64 {
        self.m0_vel.iter().map(|v| v * v).sum::<f64>() + m.inner_a(&self.xi, &self.xi)
            + m.inner_n(&self.w, &self.w)
    }

    pub fn norm(&self, m: &Manifold) -> f64 {
        self.norm_sq(m).max(0.0).sqrt()
    }

    pub fn inner(&self, m: &Manifold, other: &TangentData) -> f64 {
        self.m0_vel
            .iter()
            .zip(&other.m0_vel)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + m.inner_a(&self.xi, &other.xi)
            + m.inner_n(&self.w, &other.w)
    }

    /// The `g` part as one vector in the algebra's basis ordering.
    pub fn g_vel(&self, m: &Manifold) -> Vec<f64> {
        let alg = m.algebra();
        let mut v = alg.embed_a(&self.xi);
        for (c, &i) in self.w.iter().zip(alg.n_idx()) {
            v[i] = *c;
        }
        v
    }
}

/// Group law `(m0, u1, h1)(m0', u2, h2) = (m0 + m0', BCH(u1, Ad(exp h1) u2), h1 + h2)`.
pub fn multiply(m: &Manifold, g1: &GroupPoint, g2: &GroupPoint) -> GroupPoint {
    let moved = m.apply_ad_exp(&g1.h, 1.0, &g2.u);
    GroupPoint {
        m0: add(&g1.m0, &g2.m0),
        u: m.bch(&g1.u, &moved),
        h: add(&g1.h, &g2.h),
    }
}

pub fn inverse(m: &Manifold, g: &GroupPoint) -> GroupPoint {
    let neg_u: Vec<f64> = g.u.iter().map(|v| -v).collect();
    GroupPoint {
        m0: g.m0.iter().map(|v| -v).collect(),
        u: m.apply_ad_exp(&g.h, -1.0, &neg_u),
        h: g.h.iter().map(|v| -v).collect(),
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Left-trivializes a chart velocity `(dm0 | du | dh)` at `p`:
/// `g⁻¹dg = Ad(exp(-h)) dexp_u(du) + dh`.
pub fn maurer_cartan(m: &Manifold, p: &GroupPoint, coord_vel: &[f64]) -> Result<TangentData> {
    if coord_vel.len() != m.chart_len() {
        return Err(Error::DimensionMismatch {
            expected: m.chart_len(),
            found: coord_vel.len(),
        });
    }
    let (d0, dn) = (m.dim_m0(), m.dim_n());
    let du = &coord_vel[d0..d0 + dn];
    let lifted = if m.n_is_abelian() {
        du.to_vec()
    } else {
        crate::algebra::mat_vec(&m.dexp_left(&p.u), du)
    };
    Ok(TangentData {
        base: p.clone(),
        m0_vel: coord_vel[..d0].to_vec(),
        xi: coord_vel[d0 + dn..].to_vec(),
        w: m.apply_ad_exp(&p.h, -1.0, &lifted),
    })
}

/// `π(m0, u, h) = (m0, u, 0)`.
pub fn project(p: &GroupPoint) -> GroupPoint {
    GroupPoint {
        m0: p.m0.clone(),
        u: p.u.clone(),
        h: vec![0.0; p.h.len()],
    }
}

/// `φ(t, (m0, u, h)) = (m0, u, t h)`, the unit-interval geodesic from
/// `π(x)` to `x`.
pub fn phi(t: f64, p: &GroupPoint) -> GroupPoint {
    GroupPoint {
        m0: p.m0.clone(),
        u: p.u.clone(),
        h: p.h.iter().map(|v| t * v).collect(),
    }
}

/// Left-trivialized derivative of `φ(t, ·)` at `x`, applied to a
/// left-trivialized tangent at `x`: `ξ + W ↦ tξ + exp((1-t) ad h) W`;
/// the `M0` part passes through.
pub fn dphi(m: &Manifold, t: f64, v: &TangentData) -> TangentData {
    TangentData {
        base: phi(t, &v.base),
        m0_vel: v.m0_vel.clone(),
        xi: v.xi.iter().map(|c| t * c).collect(),
        w: m.apply_ad_exp(&v.base.h, 1.0 - t, &v.w),
    }
}

/// `N`-Jacobi field `y(t) = tξ + Ad(exp(-tH)) X` along `t ↦ n exp(tH)`,
/// left-trivialized. The flat `M0` component is carried unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiField {
    pub h: Vec<f64>,
    pub xi: Vec<f64>,
    pub x: Vec<f64>,
    pub m0_vel: Vec<f64>,
}

impl JacobiField {
    /// Field with `n` part `y(0) = x`, no flat part.
    pub fn pure_n(h: &[f64], x: &[f64]) -> Self {
        Self {
            h: h.to_vec(),
            xi: vec![0.0; h.len()],
            x: x.to_vec(),
            m0_vel: Vec::new(),
        }
    }

    /// `(m0 part, a part, n part)` of `y(t)`.
    pub fn eval(&self, m: &Manifold, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            self.m0_vel.clone(),
            self.xi.iter().map(|c| t * c).collect(),
            m.apply_ad_exp(&self.h, -t, &self.x),
        )
    }

    pub fn norm_at(&self, m: &Manifold, t: f64) -> f64 {
        let (p, a, n) = self.eval(m, t);
        (p.iter().map(|v| v * v).sum::<f64>() + m.inner_a(&a, &a) + m.inner_n(&n, &n))
            .max(0.0)
            .sqrt()
    }
}

/// The Jacobi field along the geodesic from `π(x)` to `x` whose value at
/// `t = 1` is `v`.
pub fn n_jacobi_from_boundary(m: &Manifold, x: &GroupPoint, v: &TangentData) -> Result<JacobiField> {
    let norm = m.norm_a(&x.h);
    if norm < DEGENERATE_H {
        return Err(Error::DegenerateGeodesic { norm });
    }
    Ok(JacobiField {
        h: x.h.clone(),
        xi: v.xi.clone(),
        x: m.apply_ad_exp(&x.h, 1.0, &v.w),
        m0_vel: v.m0_vel.clone(),
    })
}

/// `½ d/dt |y(t)|²` in closed form:
/// `t|ξ|² - Σ_j μ_j(H) <y_j, D_j y_j>` with `y_j` the block components of
/// `Ad(exp(-tH)) X`.
pub fn jacobi_norm_sq_derivative(
    m: &Manifold,
    dec: &HeberDecomposition,
    field: &JacobiField,
    t: f64,
) -> f64 {
    let (_, _, n) = field.eval(m, t);
    let y = m.ortho_n(&n);
    let parts = dec.block_components(&y);
    let mut s = t * m.inner_a(&field.xi, &field.xi);
    for (b, yj) in dec.blocks.iter().zip(&parts) {
        let dy = crate::algebra::mat_vec(&b.d, yj);
        let q: f64 = yj.iter().zip(&dy).map(|(a, c)| a * c).sum();
        s -= b.mu_at(&field.h) * q;
    }
    s
}

/// `sqrt det <Y_i(t), Y_j(t)>` for the Jacobi fields that a frame at `x`
/// spans.
///
/// The frame must be orthonormal, orthogonal to the geodesic velocity
/// `H` at `x`, and of size at least `rank`.
pub fn volume_distortion(m: &Manifold, x: &GroupPoint, frame: &[TangentData], t: f64) -> Result<f64> {
    if frame.len() < m.rank() {
        return Err(Error::FrameTooSmall {
            size: frame.len(),
            rank: m.rank(),
        });
    }
    let hn = m.norm_a(&x.h);
    if hn < DEGENERATE_H {
        return Err(Error::DegenerateGeodesic { norm: hn });
    }
    let mut ortho = 0.0f64;
    for (i, a) in frame.iter().enumerate() {
        for (j, b) in frame.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((a.inner(m, b) - target).abs());
        }
    }
    if ortho > FRAME_TOL {
        return Err(Error::FrameNotOrthonormal { residual: ortho });
    }
    let normal = frame
        .iter()
        .map(|v| (m.inner_a(&v.xi, &x.h) / hn).abs())
        .fold(0.0, f64::max);
    if normal > FRAME_TOL {
        return Err(Error::FrameNotNormalToGeodesic { residual: normal });
    }
    let rows = m.dim_m();
    let mut cols = Vec::with_capacity(rows * frame.len());
    for v in frame {
        let pushed = dphi(m, t, &TangentData { base: x.clone(), ..v.clone() });
        cols.extend_from_slice(&pushed.m0_vel);
        cols.extend(m.ortho_n(&pushed.w));
        cols.extend(m.ortho_a(&pushed.xi));
    }
    Ok(linalg::parallelotope_volume(rows, &mut cols, frame.len()))
}

/// Right-hand side `e^{-λ(1-t)|H|}` of the volume contraction estimate.
pub fn distortion_bound(lambda: f64, h_norm: f64, t: f64) -> f64 {
    (-lambda * (1.0 - t) * h_norm).exp()
}

/// Left-trivialized tangent vectors of a curve or map: converts chart
/// columns at `p` in bulk.
pub fn left_trivialize_columns(m: &Manifold, p: &GroupPoint, chart_cols: &[Vec<f64>]) -> Result<Vec<TangentData>> {
    chart_cols.iter().map(|c| maurer_cartan(m, p, c)).collect()
}

/// Gram norm of the velocity of `t ↦ phi(t, x)`, which is `|h|` for all t.
pub fn geodesic_speed(m: &Manifold, x: &GroupPoint) -> f64 {
    m.norm_a(&x.h)
}

/// Applies a left-trivialized tangent as a dense `DVector` in orthonormal
/// coordinates `(m0 | n | a)`.
pub fn ortho_coords(m: &Manifold, v: &TangentData) -> DVector<f64> {
    let mut out = Vec::with_capacity(m.dim_m());
    out.extend_from_slice(&v.m0_vel);
    out.extend(m.ortho_n(&v.w));
    out.extend(m.ortho_a(&v.xi));
    DVector::from_vec(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::structure::Structure;
    use approx::assert_relative_eq;

    fn pt(m0: &[f64], u: &[f64], h: &[f64]) -> GroupPoint {
        GroupPoint {
            m0: m0.to_vec(),
            u: u.to_vec(),
            h: h.to_vec(),
        }
    }

    #[test]
    fn identity_is_neutral_and_inverse_works() {
        let m = bundled::manifold("ch2").unwrap();
        let x = pt(&[], &[0.3, -1.0, 2.0], &[0.7]);
        let e = GroupPoint::identity(&m);
        assert_eq!(multiply(&m, &x, &e), x);
        assert_eq!(multiply(&m, &e, &x), x);
        let back = multiply(&m, &x, &inverse(&m, &x));
        for v in back.to_chart() {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn heisenberg_product() {
        let m = bundled::manifold("ch2").unwrap();
        let x = pt(&[], &[1.0, 0.0, 0.0], &[0.0]);
        let y = pt(&[], &[0.0, 1.0, 0.0], &[0.0]);
        assert_eq!(multiply(&m, &x, &y).u, vec![1.0, 1.0, 0.5]);
    }

    #[test]
    fn a_translate_acts_by_ad_exp() {
        let m = bundled::manifold("ch2").unwrap();
        let h0 = [-0.8];
        let g = GroupPoint::from_a(&m, &h0);
        let x = pt(&[], &[1.0, 2.0, -1.0], &[0.4]);
        let y = multiply(&m, &g, &x);
        let expected = m.spec().algebra.ad_exp(&m.spec().algebra.embed_a(&h0), 1.0).unwrap();
        let moved = crate::algebra::mat_vec(&expected, &x.u);
        for (a, b) in y.u.iter().zip(&moved) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
        assert_relative_eq!(y.h[0], -0.4, epsilon = 1e-15);
    }

    #[test]
    fn maurer_cartan_examples() {
        let m = bundled::manifold("ch2").unwrap();
        let e = GroupPoint::identity(&m);
        let v = maurer_cartan(&m, &e, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(v.w, vec![0.1, 0.2, 0.3]);
        assert_eq!(v.xi, vec![0.4]);
        let at_x = pt(&[], &[1.0, 0.0, 0.0], &[0.0]);
        let v = maurer_cartan(&m, &at_x, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(v.w, vec![0.0, 1.0, -0.5]);
        let moving_a = pt(&[], &[0.5, -0.2, 0.1], &[1.3]);
        let v = maurer_cartan(&m, &moving_a, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(v.xi, vec![1.0]);
        assert_eq!(v.w, vec![0.0; 3]);
    }

    #[test]
    fn projection_and_phi() {
        let x = pt(&[2.0], &[1.0], &[-3.0]);
        let p = project(&x);
        assert_eq!(p, pt(&[2.0], &[1.0], &[0.0]));
        assert_eq!(project(&p), p);
        assert_eq!(phi(0.0, &x), p);
        assert_eq!(phi(1.0, &x), x);
        assert_eq!(phi(0.5, &x).h, vec![-1.5]);
    }

    #[test]
    fn jacobi_examples() {
        let m = bundled::manifold("h2").unwrap();
        let s = Structure::new(&m, 0.5, 0).unwrap();
        let x = pt(&[], &[0.0], &[-1.0]);
        let v = TangentData {
            base: x.clone(),
            m0_vel: vec![],
            xi: vec![0.0],
            w: vec![1.0],
        };
        let f = n_jacobi_from_boundary(&m, &x, &v).unwrap();
        assert_relative_eq!(f.norm_at(&m, 0.0), (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(f.norm_at(&m, 1.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(jacobi_norm_sq_derivative(&m, &s.dec, &f, 1.0), 1.0, epsilon = 1e-14);

        let flat = TangentData {
            xi: vec![2.0],
            w: vec![0.0],
            ..v.clone()
        };
        let g = n_jacobi_from_boundary(&m, &x, &flat).unwrap();
        assert_relative_eq!(g.norm_at(&m, 0.25), 0.5, epsilon = 1e-15);
        assert_relative_eq!(jacobi_norm_sq_derivative(&m, &s.dec, &g, 0.25), 0.25 * 4.0);

        let on_n = pt(&[], &[0.0], &[0.0]);
        assert!(matches!(
            n_jacobi_from_boundary(&m, &on_n, &v),
            Err(Error::DegenerateGeodesic { .. })
        ));
    }

    #[test]
    fn volume_distortion_examples() {
        let m = bundled::manifold("h2").unwrap();
        let x = pt(&[], &[0.0], &[-2.0]);
        let frame = vec![TangentData {
            base: x.clone(),
            m0_vel: vec![],
            xi: vec![0.0],
            w: vec![1.0],
        }];
        assert_relative_eq!(volume_distortion(&m, &x, &frame, 1.0).unwrap(), 1.0);
        let v = volume_distortion(&m, &x, &frame, 0.0).unwrap();
        assert_relative_eq!(v, (-2.0f64).exp(), max_relative = 1e-14);
        assert!(v <= distortion_bound(0.5, 2.0, 0.0));

        let bad = vec![TangentData {
            w: vec![2.0],
            ..frame[0].clone()
        }];
        assert!(matches!(
            volume_distortion(&m, &x, &bad, 0.0),
            Err(Error::FrameNotOrthonormal { .. })
        ));
        let along = vec![TangentData {
            xi: vec![1.0],
            w: vec![0.0],
            ..frame[0].clone()
        }];
        assert!(matches!(
            volume_distortion(&m, &x, &along, 0.0),
            Err(Error::FrameNotNormalToGeodesic { .. })
        ));

        let h2r = bundled::manifold("h2xr").unwrap();
        let y = pt(&[0.0], &[0.0], &[-1.0]);
        let mixed = vec![
            TangentData {
                base: y.clone(),
                m0_vel: vec![1.0],
                xi: vec![0.0],
                w: vec![0.0],
            },
            TangentData {
                base: y.clone(),
                m0_vel: vec![0.0],
                xi: vec![0.0],
                w: vec![1.0],
            },
        ];
        let d = volume_distortion(&h2r, &y, &mixed, 0.0).unwrap();
        assert_relative_eq!(d, (-1.0f64).exp(), max_relative = 1e-14);
    }
}
