//! Metric solvable Lie algebras `g = a ⊕ n` and the manifolds `M0 × G` they
//! present.
//!
//! [`MetricLieAlgebra`] and [`ManifoldSpec`] are plain input data. Running
//! [`ManifoldSpec::validate`] checks the structural hypotheses; only a spec
//! that passes becomes a [`Manifold`], which is what every downstream module
//! consumes. `Manifold` caches the restricted adjoint matrices, Cholesky
//! factors of the metric and the nilpotency step used by the group law.

use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::report::TextReport;

/// Tolerance for algebraic residuals (scaled by the size of the structure
/// constants).
pub const ALGEBRA_TOL: f64 = 1e-10;

/// Lie algebra with a fixed basis, structure constants and left-invariant
/// inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricLieAlgebra {
    labels: Vec<String>,
    a_idx: Vec<usize>,
    n_idx: Vec<usize>,
    entries: Vec<(usize, usize, usize, f64)>,
    /// Dense `c[i][j][k]`, `[e_i, e_j] = sum_k c[i][j][k] e_k`.
    dense: Vec<f64>,
    gram: DMatrix<f64>,
}

impl MetricLieAlgebra {
    /// Builds the algebra from sparse structure constants `(i, j, k, c)`
    /// meaning `[e_i, e_j] ∋ c e_k`. Entries whose transposed partner
    /// `(j, i, k)` is absent are filled antisymmetrically.
    pub fn new(
        labels: Vec<String>,
        a_idx: Vec<usize>,
        n_idx: Vec<usize>,
        entries: Vec<(usize, usize, usize, f64)>,
        gram: DMatrix<f64>,
    ) -> Result<Self> {
        let dim = labels.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("algebra has no basis".into()));
        }
        if gram.nrows() != dim || gram.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: gram.nrows().max(gram.ncols()),
            });
        }
        let mut seen = vec![false; dim];
        for &i in a_idx.iter().chain(&n_idx) {
            if i >= dim {
                return Err(Error::InvalidArgument(format!(
                    "basis index {i} out of range 0..{dim}"
                )));
            }
            if seen[i] {
                return Err(Error::InvalidArgument(format!(
                    "basis index {i} listed twice in a_idx/n_idx"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument(
                "a_idx and n_idx must partition the basis".into(),
            ));
        }
        if a_idx.is_empty() || n_idx.is_empty() {
            return Err(Error::InvalidArgument(
                "both a and n must be nonzero".into(),
            ));
        }
        let given: HashSet<(usize, usize, usize)> =
            entries.iter().map(|&(i, j, k, _)| (i, j, k)).collect();
        let mut dense = vec![0.0; dim * dim * dim];
        for &(i, j, k, c) in &entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::InvalidArgument(format!(
                    "structure constant index ({i}, {j}, {k}) out of range"
                )));
            }
            dense[(i * dim + j) * dim + k] = c;
            if !given.contains(&(j, i, k)) {
                dense[(j * dim + i) * dim + k] = -c;
            }
        }
        Ok(Self {
            labels,
            a_idx,
            n_idx,
            entries,
            dense,
            gram,
        })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn dim_a(&self) -> usize {
        self.a_idx.len()
    }

    pub fn dim_n(&self) -> usize {
        self.n_idx.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn a_idx(&self) -> &[usize] {
        &self.a_idx
    }

    pub fn n_idx(&self) -> &[usize] {
        &self.n_idx
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn entries(&self) -> &[(usize, usize, usize, f64)] {
        &self.entries
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim();
        self.dense[(i * d + j) * d + k]
    }

    fn max_abs_constant(&self) -> f64 {
        self.dense.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Lie bracket by contraction with the structure constants.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(self.bracket_unchecked(x, y))
    }

    fn bracket_unchecked(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                if yj == 0.0 {
                    continue;
                }
                let base = (i * d + j) * d;
                for (k, o) in out.iter_mut().enumerate() {
                    *o += xi * yj * self.dense[base + k];
                }
            }
        }
        out
    }

    /// Matrix of `ad(h)` on `g`, or on `n` when `restrict_to_n` is set
    /// (rows and columns ordered by `n_idx`).
    pub fn ad_matrix(&self, h: &[f64], restrict_to_n: bool) -> Result<DMatrix<f64>> {
        self.check_dim(h)?;
        let d = self.dim();
        let mut full = DMatrix::zeros(d, d);
        for j in 0..d {
            for k in 0..d {
                let mut s = 0.0;
                for (i, &hi) in h.iter().enumerate() {
                    s += hi * self.c(i, j, k);
                }
                full[(k, j)] = s;
            }
        }
        if !restrict_to_n {
            return Ok(full);
        }
        let tol = ALGEBRA_TOL * (1.0 + self.max_abs_constant()) * (1.0 + norm(h));
        for &j in &self.n_idx {
            for &k in &self.a_idx {
                if full[(k, j)].abs() > tol {
                    return Err(Error::Validation(Box::new(ValidationReport::single(
                        "n_ideal",
                        full[(k, j)].abs(),
                    ))));
                }
            }
        }
        Ok(full.select_rows(&self.n_idx).select_columns(&self.n_idx))
    }

    /// `exp(t ad(h)|n)` for `h ∈ a`; this is `Ad(exp(t h))` on `n`.
    pub fn ad_exp(&self, h: &[f64], t: f64) -> Result<DMatrix<f64>> {
        self.check_dim(h)?;
        let tol = ALGEBRA_TOL * (1.0 + norm(h));
        if let Some(&i) = self.n_idx.iter().find(|&&i| h[i].abs() > tol) {
            return Err(Error::InvalidArgument(format!(
                "ad_exp expects h in a, but component {} ({}) is nonzero",
                i, self.labels[i]
            )));
        }
        let ad = self.ad_matrix(h, true)?;
        Ok(linalg::expm(&(ad * t)))
    }

    /// `exp(t ad(x))` on all of `g` for an arbitrary `x`.
    pub fn exp_ad(&self, x: &[f64], t: f64) -> Result<DMatrix<f64>> {
        let ad = self.ad_matrix(x, false)?;
        Ok(linalg::expm(&(ad * t)))
    }

    /// Embeds `a`-coordinates (ordered by `a_idx`) into `g`.
    pub fn embed_a(&self, h: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for (c, &i) in h.iter().zip(&self.a_idx) {
            v[i] = *c;
        }
        v
    }

    /// Embeds `n`-coordinates (ordered by `n_idx`) into `g`.
    pub fn embed_n(&self, u: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for (c, &i) in u.iter().zip(&self.n_idx) {
            v[i] = *c;
        }
        v
    }

    /// Splits a `g` vector into its `a` and `n` coordinates.
    pub fn split(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (
            self.a_idx.iter().map(|&i| v[i]).collect(),
            self.n_idx.iter().map(|&i| v[i]).collect(),
        )
    }

    /// Nilpotency degree of `n` (length of the lower central series), or the
    /// residual size if the series has not vanished after `dim_n` steps.
    fn nilpotency(&self) -> std::result::Result<usize, f64> {
        let dn = self.dim_n();
        let tol = ALGEBRA_TOL * (1.0 + self.max_abs_constant());
        let mut current: Vec<Vec<f64>> =
            (0..dn).map(|i| self.embed_n(&unit(dn, i))).collect();
        let gens = current.clone();
        for step in 1..=dn + 1 {
            let mut next = Vec::new();
            for g in &gens {
                for v in &current {
                    next.push(self.bracket_unchecked(g, v));
                }
            }
            let basis = orthonormal_span(&next, tol);
            if basis.is_empty() {
                return Ok(step);
            }
            if step > dn {
                let size = next.iter().map(|v| norm(v)).fold(0.0, f64::max);
                return Err(size);
            }
            current = basis;
        }
        unreachable!()
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Orthonormal basis (euclidean) of the span of `vectors`, dropping
/// directions below `tol`.
fn orthonormal_span(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = b.iter().zip(&w).map(|(x, y)| x * y).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= dot * bi;
                }
            }
        }
        let n = norm(&w);
        if n > tol {
            basis.push(w.iter().map(|x| x / n).collect());
        }
    }
    basis
}

/// The manifold `M = M0 × G` with `M0` flat of dimension `dim_m0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSpec {
    pub name: String,
    pub algebra: MetricLieAlgebra,
    pub dim_m0: usize,
}

impl ManifoldSpec {
    pub fn new(name: impl Into<String>, algebra: MetricLieAlgebra, dim_m0: usize) -> Self {
        Self {
            name: name.into(),
            algebra,
            dim_m0,
        }
    }

    /// Euclidean rank `dim M0 + dim a`.
    pub fn rank(&self) -> usize {
        self.dim_m0 + self.algebra.dim_a()
    }

    /// Total dimension `dim M0 + dim G`.
    pub fn dim_m(&self) -> usize {
        self.dim_m0 + self.algebra.dim()
    }

    /// Checks every structural hypothesis and reports residuals.
    pub fn validate(&self) -> ValidationReport {
        let alg = &self.algebra;
        let d = alg.dim();
        let cmax = alg.max_abs_constant();
        let tol_lin = ALGEBRA_TOL * (1.0 + cmax);
        let tol_quad = ALGEBRA_TOL * (1.0 + cmax) * (1.0 + cmax);
        let mut checks = Vec::new();

        let mut anti = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    anti = anti.max((alg.c(i, j, k) + alg.c(j, i, k)).abs());
                }
            }
        }
        checks.push(Check::new("antisymmetry", anti, tol_lin));

        let mut jac = 0.0f64;
        let basis: Vec<Vec<f64>> = (0..d).map(|i| unit(d, i)).collect();
        for x in &basis {
            for y in &basis {
                for z in &basis {
                    let t1 = alg.bracket_unchecked(x, &alg.bracket_unchecked(y, z));
                    let t2 = alg.bracket_unchecked(y, &alg.bracket_unchecked(z, x));
                    let t3 = alg.bracket_unchecked(z, &alg.bracket_unchecked(x, y));
                    let r: Vec<f64> = (0..d).map(|k| t1[k] + t2[k] + t3[k]).collect();
                    jac = jac.max(norm(&r));
                }
            }
        }
        checks.push(Check::new("jacobi_identity", jac, tol_quad));

        let mut ideal = 0.0f64;
        for i in 0..d {
            for &j in alg.n_idx() {
                for &k in alg.a_idx() {
                    ideal = ideal.max(alg.c(i, j, k).abs());
                }
            }
        }
        checks.push(Check::new("n_ideal", ideal, tol_lin));

        let mut abelian = 0.0f64;
        for &i in alg.a_idx() {
            for &j in alg.a_idx() {
                abelian = abelian.max(norm(&alg.bracket_unchecked(&basis[i], &basis[j])));
            }
        }
        checks.push(Check::new("a_abelian", abelian, tol_lin));

        let nilpotency_degree = match alg.nilpotency() {
            Ok(deg) => {
                checks.push(Check::new("n_nilpotent", 0.0, tol_lin));
                Some(deg)
            }
            Err(res) => {
                checks.push(Check::failed("n_nilpotent", res));
                None
            }
        };

        let g = alg.gram();
        let asym = (g - g.transpose()).amax();
        checks.push(Check::new("gram_symmetric", asym, ALGEBRA_TOL * (1.0 + g.amax())));
        let (eigs, _) = linalg::sym_eigen_sorted(g);
        let min_eig = eigs[0];
        checks.push(Check {
            name: "gram_positive_definite",
            passed: min_eig > 0.0,
            residual: min_eig,
        });

        let mut perp = 0.0f64;
        for &i in alg.a_idx() {
            for &j in alg.n_idx() {
                perp = perp.max(g[(i, j)].abs());
            }
        }
        checks.push(Check::new("a_perp_n", perp, ALGEBRA_TOL * (1.0 + g.amax())));

        checks.push(Check {
            name: "rank_positive",
            passed: self.rank() >= 1,
            residual: self.rank() as f64,
        });
        checks.push(Check {
            name: "dim_exceeds_rank",
            passed: self.dim_m() > self.rank(),
            residual: (self.dim_m() as f64) - (self.rank() as f64),
        });

        ValidationReport {
            spec_name: self.name.clone(),
            checks,
            nilpotency_degree,
        }
    }
}

/// One validation predicate with its measured residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
}

impl Check {
    fn new(name: &'static str, residual: f64, tol: f64) -> Self {
        Self {
            name,
            passed: residual <= tol,
            residual,
        }
    }

    fn failed(name: &'static str, residual: f64) -> Self {
        Self {
            name,
            passed: false,
            residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub spec_name: String,
    pub checks: Vec<Check>,
    pub nilpotency_degree: Option<usize>,
}

impl ValidationReport {
    fn single(name: &'static str, residual: f64) -> Self {
        Self {
            spec_name: String::new(),
            checks: vec![Check::failed(name, residual)],
            nilpotency_degree: None,
        }
    }

    pub fn accepted(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut r = TextReport::new("hadamard-validation/1");
        r.str("spec", &self.spec_name);
        r.bool("accepted", self.accepted());
        match self.nilpotency_degree {
            Some(d) => r.int("nilpotency_degree", d as i64),
            None => r.int("nilpotency_degree", -1),
        };
        for c in &self.checks {
            r.array_section("check");
            r.str("name", c.name);
            r.bool("passed", c.passed);
            r.f64("residual", c.residual);
        }
        r.finish()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A validated manifold with cached linear-algebra data.
///
/// Vectors in `a` and `n` are handled in their own coordinates, ordered by
/// `a_idx` and `n_idx` respectively.
#[derive(Debug, Clone)]
pub struct Manifold {
    spec: ManifoldSpec,
    step: usize,
    /// `ad(H_i)|n` for the basis vectors of `a`.
    ad_a: Vec<DMatrix<f64>>,
    /// Diagonals of `ad_a` when all of them are diagonal.
    ad_a_diag: Option<Vec<Vec<f64>>>,
    /// `ad(e_i)|n` for the basis vectors of `n`.
    ad_n: Vec<DMatrix<f64>>,
    n_abelian: bool,
    gram_a: DMatrix<f64>,
    gram_n: DMatrix<f64>,
    /// Transposed Cholesky factors: orthonormal coordinates are `chol_t * x`.
    chol_a_t: DMatrix<f64>,
    chol_n_t: DMatrix<f64>,
}

impl Manifold {
    /// Validates `spec`; fails with the full report if any check fails.
    pub fn new(spec: ManifoldSpec) -> Result<Self> {
        let report = spec.validate();
        if !report.accepted() {
            return Err(Error::Validation(Box::new(report)));
        }
        let alg = &spec.algebra;
        let step = report.nilpotency_degree.unwrap_or(alg.dim_n());
        let ad_a: Vec<DMatrix<f64>> = alg
            .a_idx()
            .iter()
            .map(|&i| alg.ad_matrix(&unit(alg.dim(), i), true))
            .collect::<Result<_>>()?;
        let ad_n: Vec<DMatrix<f64>> = alg
            .n_idx()
            .iter()
            .map(|&i| alg.ad_matrix(&unit(alg.dim(), i), true))
            .collect::<Result<_>>()?;
        let is_diag = |m: &DMatrix<f64>| {
            (0..m.nrows()).all(|r| (0..m.ncols()).all(|c| r == c || m[(r, c)] == 0.0))
        };
        let ad_a_diag = ad_a
            .iter()
            .all(is_diag)
            .then(|| ad_a.iter().map(|m| m.diagonal().iter().copied().collect()).collect());
        let n_abelian = ad_n.iter().all(|m| m.iter().all(|v| *v == 0.0));
        let gram_a = alg.gram().select_rows(alg.a_idx()).select_columns(alg.a_idx());
        let gram_n = alg.gram().select_rows(alg.n_idx()).select_columns(alg.n_idx());
        let chol_a_t = linalg::cholesky_lower(&gram_a)
            .expect("validated gram is positive definite")
            .transpose();
        let chol_n_t = linalg::cholesky_lower(&gram_n)
            .expect("validated gram is positive definite")
            .transpose();
        Ok(Self {
            spec,
            step,
            ad_a,
            ad_a_diag,
            ad_n,
            n_abelian,
            gram_a,
            gram_n,
            chol_a_t,
            chol_n_t,
        })
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn algebra(&self) -> &MetricLieAlgebra {
        &self.spec.algebra
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn dim_m0(&self) -> usize {
        self.spec.dim_m0
    }

    pub fn dim_a(&self) -> usize {
        self.spec.algebra.dim_a()
    }

    pub fn dim_n(&self) -> usize {
        self.spec.algebra.dim_n()
    }

    pub fn rank(&self) -> usize {
        self.spec.rank()
    }

    pub fn dim_m(&self) -> usize {
        self.spec.dim_m()
    }

    /// Length of a chart vector `(m0 | u | h)`.
    pub fn chart_len(&self) -> usize {
        self.dim_m()
    }

    pub fn nilpotency_step(&self) -> usize {
        self.step
    }

    pub fn n_is_abelian(&self) -> bool {
        self.n_abelian
    }

    pub fn gram_a(&self) -> &DMatrix<f64> {
        &self.gram_a
    }

    pub fn gram_n(&self) -> &DMatrix<f64> {
        &self.gram_n
    }

    /// `ad(H_i)|n` for the `i`-th basis vector of `a`.
    pub fn ad_a_basis(&self) -> &[DMatrix<f64>] {
        &self.ad_a
    }

    /// `ad(h)|n` for `h` in `a`-coordinates.
    pub fn ad_n_of_a(&self, h: &[f64]) -> DMatrix<f64> {
        let dn = self.dim_n();
        let mut m = DMatrix::zeros(dn, dn);
        for (hi, a) in h.iter().zip(&self.ad_a) {
            if *hi != 0.0 {
                m += a * *hi;
            }
        }
        m
    }

    /// `ad(u)|n` for `u` in `n`-coordinates.
    pub fn ad_n_of_n(&self, u: &[f64]) -> DMatrix<f64> {
        let dn = self.dim_n();
        let mut m = DMatrix::zeros(dn, dn);
        for (ui, a) in u.iter().zip(&self.ad_n) {
            if *ui != 0.0 {
                m += a * *ui;
            }
        }
        m
    }

    /// `exp(t ad(h)|n) = Ad(exp(t h))|n` for `h` in `a`-coordinates.
    pub fn ad_exp(&self, h: &[f64], t: f64) -> DMatrix<f64> {
        if let Some(diags) = &self.ad_a_diag {
            let dn = self.dim_n();
            let mut d = vec![0.0; dn];
            for (hi, diag) in h.iter().zip(diags) {
                for (dk, ak) in d.iter_mut().zip(diag) {
                    *dk += hi * ak;
                }
            }
            return DMatrix::from_diagonal(&DVector::from_iterator(
                dn,
                d.iter().map(|x| (t * x).exp()),
            ));
        }
        linalg::expm(&(self.ad_n_of_a(h) * t))
    }

    /// Applies `exp(t ad(h)|n)` to `w` without forming the matrix when the
    /// action of `a` is diagonal.
    pub fn apply_ad_exp(&self, h: &[f64], t: f64, w: &[f64]) -> Vec<f64> {
        if let Some(diags) = &self.ad_a_diag {
            let mut out = w.to_vec();
            for (k, o) in out.iter_mut().enumerate() {
                let mut rate = 0.0;
                for (hi, diag) in h.iter().zip(diags) {
                    rate += hi * diag[k];
                }
                *o *= (t * rate).exp();
            }
            return out;
        }
        let m = self.ad_exp(h, t);
        (m * DVector::from_column_slice(w)).iter().copied().collect()
    }

    /// Lie bracket on `n`-coordinates.
    pub fn bracket_n(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        if self.n_abelian {
            return vec![0.0; self.dim_n()];
        }
        let m = self.ad_n_of_n(x);
        (m * DVector::from_column_slice(y)).iter().copied().collect()
    }

    /// Left logarithmic derivative of `exp` on `N`:
    /// `exp(-u) d exp(u) = sum_k (-ad u)^k / (k+1)!`, a finite sum.
    pub fn dexp_left(&self, u: &[f64]) -> DMatrix<f64> {
        let dn = self.dim_n();
        let ident = DMatrix::identity(dn, dn);
        if self.n_abelian {
            return ident;
        }
        let minus_ad = -self.ad_n_of_n(u);
        let mut result = ident.clone();
        let mut power = ident;
        let mut fact = 1.0;
        for k in 1..self.step.max(1) + 1 {
            power = &power * &minus_ad;
            fact *= (k + 1) as f64;
            result += &power / fact;
        }
        result
    }

    /// `log(exp(x) exp(y))` on `n` via the homogeneous recursion for the
    /// Baker-Campbell-Hausdorff series, which terminates at the nilpotency
    /// step.
    pub fn bch(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let dn = self.dim_n();
        let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        if self.n_abelian {
            return sum;
        }
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let step = self.step;
        // z[n] is the degree-n homogeneous part, n = 1..=step
        let mut z: Vec<Vec<f64>> = vec![vec![0.0; dn], sum.clone()];
        for n in 1..step {
            let mut next: Vec<f64> = self
                .bracket_n(&diff, &z[n])
                .into_iter()
                .map(|v| 0.5 * v)
                .collect();
            let mut p = 1;
            while 2 * p <= n {
                let k2p = BERNOULLI_EVEN[p - 1] / factorial(2 * p);
                let mut parts = vec![0usize; 2 * p];
                let mut acc = vec![0.0; dn];
                compositions(n, 2 * p, &mut parts, 0, &mut |parts| {
                    let mut v = sum.clone();
                    for &k in parts.iter().rev() {
                        v = self.bracket_n(&z[k], &v);
                    }
                    for (a, b) in acc.iter_mut().zip(&v) {
                        *a += b;
                    }
                });
                for (a, b) in next.iter_mut().zip(&acc) {
                    *a += k2p * b;
                }
                p += 1;
            }
            let inv = 1.0 / (n + 1) as f64;
            z.push(next.into_iter().map(|v| v * inv).collect());
        }
        let mut out = vec![0.0; dn];
        for part in &z[1..] {
            for (o, v) in out.iter_mut().zip(part) {
                *o += v;
            }
        }
        out
    }

    /// Orthonormal coordinates of an `a` vector.
    pub fn ortho_a(&self, h: &[f64]) -> Vec<f64> {
        mat_vec(&self.chol_a_t, h)
    }

    /// Orthonormal coordinates of an `n` vector.
    pub fn ortho_n(&self, u: &[f64]) -> Vec<f64> {
        mat_vec(&self.chol_n_t, u)
    }

    /// Inverse of [`Manifold::ortho_a`].
    pub fn from_ortho_a(&self, y: &[f64]) -> Vec<f64> {
        let sol = self
            .chol_a_t
            .solve_upper_triangular(&DVector::from_column_slice(y))
            .expect("cholesky factor is invertible");
        sol.iter().copied().collect()
    }

    /// Inverse of [`Manifold::ortho_n`].
    pub fn from_ortho_n(&self, y: &[f64]) -> Vec<f64> {
        let sol = self
            .chol_n_t
            .solve_upper_triangular(&DVector::from_column_slice(y))
            .expect("cholesky factor is invertible");
        sol.iter().copied().collect()
    }

    /// Columns are a gram-orthonormal basis of `n`, in `n`-coordinates.
    pub fn ortho_basis_n(&self) -> DMatrix<f64> {
        let dn = self.dim_n();
        self.chol_n_t
            .clone()
            .solve_upper_triangular(&DMatrix::identity(dn, dn))
            .expect("cholesky factor is invertible")
    }

    /// Columns are a gram-orthonormal basis of `a`, in `a`-coordinates.
    pub fn ortho_basis_a(&self) -> DMatrix<f64> {
        let da = self.dim_a();
        self.chol_a_t
            .clone()
            .solve_upper_triangular(&DMatrix::identity(da, da))
            .expect("cholesky factor is invertible")
    }

    pub fn inner_a(&self, x: &[f64], y: &[f64]) -> f64 {
        bilinear(&self.gram_a, x, y)
    }

    pub fn inner_n(&self, x: &[f64], y: &[f64]) -> f64 {
        bilinear(&self.gram_n, x, y)
    }

    pub fn norm_a(&self, h: &[f64]) -> f64 {
        self.inner_a(h, h).max(0.0).sqrt()
    }

    pub fn norm_n(&self, u: &[f64]) -> f64 {
        self.inner_n(u, u).max(0.0).sqrt()
    }
}

/// Even Bernoulli numbers `B_2, B_4, ..., B_16`.
const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Calls `f` on every composition of `n` into `parts.len()` positive parts.
fn compositions(n: usize, k: usize, parts: &mut [usize], pos: usize, f: &mut impl FnMut(&[usize])) {
    if pos + 1 == k {
        if n >= 1 {
            parts[pos] = n;
            f(parts);
        }
        return;
    }
    let remaining = k - pos - 1;
    for first in 1..=n.saturating_sub(remaining) {
        parts[pos] = first;
        compositions(n - first, k, parts, pos + 1, f);
    }
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)] * v[c]).sum())
        .collect()
}

fn bilinear(g: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            s += xi * g[(i, j)] * yj;
        }
    }
    s
}
