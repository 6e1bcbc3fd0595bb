//! Small dense linear algebra kernels shared by the rest of the crate.
//!
//! Everything here works on `nalgebra::DMatrix` / plain slices. The matrices
//! involved are tiny (the Lie algebras at hand have dimension well below 20),
//! so the routines favour robustness and reproducibility over raw speed.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Padé(13) numerator/denominator coefficients for scaling and squaring.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the unscaled Padé(13) approximant is accurate to
/// double precision.
const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a fixed Padé(13)
/// approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-squarings);
    let b = &PADE13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];

    let numer = &v + &u;
    let denom = &v - &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Exponential of a nilpotent matrix by its terminating power series.
///
/// `max_terms` bounds the number of powers; for an `n x n` nilpotent matrix
/// `n` terms always suffice.
pub fn expm_nilpotent(a: &DMatrix<f64>, max_terms: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=max_terms {
        term = &term * a / k as f64;
        if term.iter().all(|v| *v == 0.0) {
            break;
        }
        result += &term;
    }
    result
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky_lower(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    g.clone().cholesky().map(|c| c.l())
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// ascending. Eigenvectors are the matching columns.
pub fn sym_eigen_sorted(s: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = s.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Smallest eigenvalue of a symmetric matrix together with a unit eigenvector.
pub fn min_eigenpair(s: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let (values, vectors) = sym_eigen_sorted(s);
    (values[0], vectors.column(0).into_owned())
}

/// `k`-dimensional volume spanned by the columns of `m` (rows are
/// orthonormal coordinates), i.e. `sqrt(det(m^T m))`.
///
/// Computed with modified Gram-Schmidt as the product of the successive
/// residual norms, which stays accurate when the columns are nearly
/// dependent.
pub fn parallelotope_volume(rows: usize, cols: &mut [f64], k: usize) -> f64 {
    debug_assert_eq!(cols.len(), rows * k);
    let mut volume = 1.0;
    for j in 0..k {
        let (done, rest) = cols.split_at_mut(j * rows);
        let col = &mut rest[..rows];
        for i in 0..j {
            let q = &done[i * rows..(i + 1) * rows];
            let dot: f64 = q.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            for (c, qv) in col.iter_mut().zip(q) {
                *c -= dot * qv;
            }
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        volume *= norm;
        if norm == 0.0 {
            return 0.0;
        }
        for c in col.iter_mut() {
            *c /= norm;
        }
    }
    volume
}

/// Oriented volume of `n` vectors in `R^n` (determinant, columns given
/// contiguously).
pub fn determinant(n: usize, cols: &[f64]) -> f64 {
    DMatrix::from_column_slice(n, n, cols).determinant()
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Euclidean distance from the origin to the convex hull of `points`.
///
/// Enumerates the faces of the hull simplex and keeps the best affine
/// least-squares minimizer with non-negative barycentric weights. Intended
/// for a handful of points.
pub fn min_norm_in_hull(points: &[Vec<f64>]) -> f64 {
    let m = points.len();
    assert!(m > 0 && m < 20, "min_norm_in_hull is for small point sets");
    let dim = points[0].len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << m) {
        let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let base = &points[idx[0]];
        if idx.len() == 1 {
            best = best.min(base.iter().map(|v| v * v).sum::<f64>().sqrt());
            continue;
        }
        // Minimize |base + E c| over c, E = [p_i - base].
        let cols = idx.len() - 1;
        let mut e = DMatrix::zeros(dim, cols);
        for (c, &i) in idx[1..].iter().enumerate() {
            for r in 0..dim {
                e[(r, c)] = points[i][r] - base[r];
            }
        }
        let rhs = -DVector::from_column_slice(base);
        let ete = e.transpose() * &e;
        let Some(sol) = ete.clone().lu().solve(&(e.transpose() * rhs)) else {
            continue;
        };
        if !sol.iter().all(|v| v.is_finite()) {
            continue;
        }
        let lead = 1.0 - sol.sum();
        if lead < -1e-12 || sol.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let p = DVector::from_column_slice(base) + &e * &sol;
        best = best.min(p.norm());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expm_scalar_and_diagonal() {
        let a = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert_relative_eq!(expm(&a)[(0, 0)], (-1.0f64).exp(), max_relative = 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -3.0, 12.0]));
        let e = expm(&d);
        for (i, x) in [0.5f64, -3.0, 12.0].iter().enumerate() {
            assert_relative_eq!(e[(i, i)], x.exp(), max_relative = 1e-13);
        }
    }

    #[test]
    fn expm_matches_nilpotent_series() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.3, -0.2, 4.0, //
                0.0, 0.0, 2.5, 0.7, //
                0.0, 0.0, 0.0, -1.1, //
                0.0, 0.0, 0.0, 0.0,
            ],
        );
        let pade = expm(&a);
        let series = expm_nilpotent(&a, 4);
        assert!((pade - series).amax() < 1e-12);
    }

    #[test]
    fn expm_rotation_generator() {
        let t = 2.0;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a);
        assert_relative_eq!(e[(0, 0)], t.cos(), epsilon = 1e-14);
        assert_relative_eq!(e[(1, 0)], t.sin(), epsilon = 1e-14);
    }

    #[test]
    fn volume_of_orthogonal_and_dependent_columns() {
        let mut cols = vec![2.0, 0.0, 0.0, 0.0, 3.0, 0.0];
        assert_relative_eq!(parallelotope_volume(3, &mut cols, 2), 6.0);
        let mut dep = vec![1.0, 2.0, 3.0, 2.0, 4.0, 6.0];
        assert!(parallelotope_volume(3, &mut dep, 2) < 1e-14);
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s: NeumaierSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn min_norm_segment_and_triangle() {
        let seg = vec![vec![-1.0, 1.0], vec![1.0, 1.0]];
        assert_relative_eq!(min_norm_in_hull(&seg), 1.0, epsilon = 1e-14);
        let tri = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_relative_eq!(min_norm_in_hull(&tri), 1.0 / 3f64.sqrt(), epsilon = 1e-14);
        let vertex = vec![vec![3.0, 4.0], vec![6.0, 8.0]];
        assert_relative_eq!(min_norm_in_hull(&vertex), 5.0, epsilon = 1e-14);
    }
}
