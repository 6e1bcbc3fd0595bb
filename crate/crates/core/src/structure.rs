//! Block decomposition of `n` under the symmetrized action of `a`, the
//! positive direction `H+`, the cone `C0` and the growth rate `λ`.
//!
//! All matrices on `n` in this module are expressed in gram-orthonormal
//! coordinates of `n`, so "transpose" is the metric adjoint.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{mat_vec, Manifold};
use crate::error::{Error, Result};
use crate::linalg;
use crate::report::TextReport;

pub const DEFAULT_MARGIN: f64 = 0.5;
/// Relative eigenvalue gap separating clusters when splitting `n` into blocks.
pub const CLUSTER_GAP: f64 = 1e-6;
/// Relative Frobenius residual allowed in the block reconstruction.
pub const PROPORTIONALITY_TOL: f64 = 1e-8;
pub const H_PLUS_STARTS: usize = 32;
pub const H_PLUS_ITERS: usize = 500;
/// `find_h_plus` fails when the best value of `λ_min(S(H))` is at or below
/// this threshold.
pub const H_PLUS_FLOOR: f64 = 1e-8;

/// `S(h) = ½(ad(h)|n + ad(h)|nᵀ)` in orthonormal coordinates of `n`, for
/// `h` in `a`-coordinates.
pub fn symmetrized_ad(m: &Manifold, h: &[f64]) -> DMatrix<f64> {
    let ad = m.ad_n_of_a(h);
    let r = m.ortho_basis_n();
    let r_inv_t = r.clone().try_inverse().expect("orthonormal basis is invertible");
    let on = &r_inv_t * ad * &r;
    (&on + on.transpose()) * 0.5
}

/// `S` evaluated on the gram-orthonormal basis of `a`.
fn ortho_family(m: &Manifold) -> Vec<DMatrix<f64>> {
    let basis = m.ortho_basis_a();
    (0..m.dim_a())
        .map(|k| {
            let col: Vec<f64> = basis.column(k).iter().copied().collect();
            symmetrized_ad(m, &col)
        })
        .collect()
}

fn combine(family: &[DMatrix<f64>], y: &[f64]) -> DMatrix<f64> {
    let n = family[0].nrows();
    let mut s = DMatrix::zeros(n, n);
    for (c, f) in y.iter().zip(family) {
        s += f * *c;
    }
    s
}

fn unit_or_none(y: &[f64]) -> Option<Vec<f64>> {
    let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    (n > 1e-12).then(|| y.iter().map(|v| v / n).collect())
}

/// Result of maximizing `λ_min(S(H))` over the unit sphere of `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPlus {
    /// Unit vector in `a`-coordinates.
    pub h: Vec<f64>,
    pub value: f64,
    /// Index of the start that produced the subgradient candidate.
    pub start: usize,
}

/// Maximizes the concave function `f(H) = λ_min(S(H))` over the unit sphere
/// of `a` by multi-start projected subgradient ascent, followed by a smoothed
/// polish that sharpens the kink at eigenvalue crossings.
pub fn find_h_plus(m: &Manifold, seed: u64) -> Result<HPlus> {
    let family = ortho_family(m);
    let da = family.len();
    let f = |y: &[f64]| linalg::min_eigenpair(&combine(&family, y));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best_val = f64::NEG_INFINITY;
    let mut best_y = vec![0.0; da];
    let mut best_start = 0;
    for start in 0..H_PLUS_STARTS {
        let raw: Vec<f64> = (0..da).map(|_| rng.sample(StandardNormal)).collect();
        let mut y = unit_or_none(&raw).unwrap_or_else(|| {
            let mut e = vec![0.0; da];
            e[0] = 1.0;
            e
        });
        for k in 1..=H_PLUS_ITERS {
            if let Some(hat) = unit_or_none(&y) {
                let (val, _) = f(&hat);
                if val > best_val {
                    best_val = val;
                    best_y = hat;
                    best_start = start;
                }
            }
            let (_, v) = f(&y);
            let step = 1.0 / k as f64;
            for (yi, s) in y.iter_mut().zip(&family) {
                *yi += step * (v.transpose() * s * &v)[(0, 0)];
            }
            let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1.0 {
                y.iter_mut().for_each(|x| *x /= norm);
            }
        }
        if let Some(hat) = unit_or_none(&y) {
            let (val, _) = f(&hat);
            if val > best_val {
                best_val = val;
                best_y = hat;
                best_start = start;
            }
        }
    }

    let polished = polish(&family, &best_y);
    let (pval, _) = f(&polished);
    if pval > best_val {
        best_val = pval;
        best_y = polished;
    }
    if best_val <= H_PLUS_FLOOR {
        return Err(Error::MaxNonpositive { best: best_val });
    }
    Ok(HPlus {
        h: m.from_ortho_a(&best_y),
        value: best_val,
        start: best_start,
    })
}

/// Soft-min `-(1/β) log Σ exp(-β λ_i)` and its euclidean gradient.
fn soft_min(family: &[DMatrix<f64>], y: &[f64], beta: f64) -> (f64, Vec<f64>) {
    let (vals, vecs) = linalg::sym_eigen_sorted(&combine(family, y));
    let lo = vals[0];
    let weights: Vec<f64> = vals.iter().map(|l| (-beta * (l - lo)).exp()).collect();
    let total: f64 = weights.iter().sum();
    let value = lo - total.ln() / beta;
    let grad = family
        .iter()
        .map(|s| {
            weights
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let v = vecs.column(i);
                    w * (v.transpose() * s * v)[(0, 0)]
                })
                .sum::<f64>()
                / total
        })
        .collect();
    (value, grad)
}

fn polish(family: &[DMatrix<f64>], start: &[f64]) -> Vec<f64> {
    let mut y = start.to_vec();
    let mut beta: f64 = 10.0;
    while beta <= 1e8 {
        let mut step = 1.0 / beta.sqrt();
        for _ in 0..200 {
            let (val, grad) = soft_min(family, &y, beta);
            let radial: f64 = grad.iter().zip(&y).map(|(g, x)| g * x).sum();
            let tangent: Vec<f64> = grad.iter().zip(&y).map(|(g, x)| g - radial * x).collect();
            if tangent.iter().map(|t| t * t).sum::<f64>().sqrt() < 1e-15 {
                break;
            }
            let mut improved = false;
            while step > 1e-16 {
                let trial: Vec<f64> = y.iter().zip(&tangent).map(|(x, t)| x + step * t).collect();
                let Some(trial) = unit_or_none(&trial) else { break };
                if soft_min(family, &trial, beta).0 > val {
                    y = trial;
                    improved = true;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        beta *= 10.0;
    }
    y
}

/// One block `n_j` of the decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Orthonormal basis of the block as columns, in orthonormal coordinates
    /// of `n`.
    pub basis: DMatrix<f64>,
    /// Unit-norm functional `μ_j` as its values on the basis of `a`.
    pub mu: Vec<f64>,
    /// Gram dual of `μ_j` (`μ_j(H) = <mu_dual, H>`), in `a`-coordinates.
    pub mu_dual: Vec<f64>,
    /// `D_j` in the block basis.
    pub d: DMatrix<f64>,
    pub d_min: f64,
    pub d_max: f64,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn mu_at(&self, h: &[f64]) -> f64 {
        self.mu.iter().zip(h).map(|(a, b)| a * b).sum()
    }

    /// Mean eigenvalue of `S(h)` on the block, i.e. `μ_j(h) tr(D_j)/dim`.
    pub fn weight(&self, h: &[f64]) -> f64 {
        self.mu_at(h) * self.d.trace() / self.dim() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeberDecomposition {
    /// Blocks sorted by increasing weight along `h_plus`.
    pub blocks: Vec<Block>,
    pub h_plus: Vec<f64>,
    pub h_plus_value: f64,
    /// Smallest eigenvalue over all `D_j`.
    pub a_min: f64,
    /// Largest relative reconstruction residual over the basis of `a`.
    pub residual: f64,
    pub cluster_gap: f64,
}

impl HeberDecomposition {
    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Block::dim).collect()
    }

    /// Weights of the blocks along `h_plus` relative to the first block.
    pub fn mu_ratios(&self) -> Vec<f64> {
        let base = self.blocks[0].weight(&self.h_plus);
        self.blocks.iter().map(|b| b.weight(&self.h_plus) / base).collect()
    }

    /// `⊕_j μ_j(h) D_j` assembled in orthonormal coordinates of `n`.
    pub fn reconstruct(&self, h: &[f64]) -> DMatrix<f64> {
        let n = self.blocks[0].basis.nrows();
        let mut out = DMatrix::zeros(n, n);
        for b in &self.blocks {
            out += &b.basis * (&b.d * b.mu_at(h)) * b.basis.transpose();
        }
        out
    }

    /// Splits an `n` vector given in orthonormal coordinates into its block
    /// components (coordinates in each block basis).
    pub fn block_components(&self, y: &[f64]) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .map(|b| {
                (0..b.dim())
                    .map(|c| b.basis.column(c).iter().zip(y).map(|(p, q)| p * q).sum())
                    .collect()
            })
            .collect()
    }
}

/// Splits `n` into the joint eigenspaces of `{S(H_i)}` and extracts
/// `μ_j`, `D_j` on each.
pub fn compute_blocks(m: &Manifold, h_plus: &HPlus) -> Result<HeberDecomposition> {
    let dn = m.dim_n();
    let da = m.dim_a();
    let family: Vec<DMatrix<f64>> = (0..da)
        .map(|i| {
            let mut e = vec![0.0; da];
            e[i] = 1.0;
            symmetrized_ad(m, &e)
        })
        .collect();

    let mut groups: Vec<DMatrix<f64>> = vec![DMatrix::identity(dn, dn)];
    for s in &family {
        let scale = s.amax().max(f64::MIN_POSITIVE);
        let mut next = Vec::new();
        for q in &groups {
            let restricted = q.transpose() * s * q;
            let (vals, vecs) = linalg::sym_eigen_sorted(&restricted);
            let mut start = 0;
            for i in 1..=vals.len() {
                if i == vals.len() || vals[i] - vals[i - 1] > CLUSTER_GAP * scale {
                    let cols: Vec<usize> = (start..i).collect();
                    next.push(q * vecs.select_columns(&cols));
                    start = i;
                }
            }
        }
        groups = next;
    }

    let gram_a_inv = m
        .gram_a()
        .clone()
        .try_inverse()
        .expect("validated gram is invertible");
    let s_plus = symmetrized_ad(m, &h_plus.h);
    let mut blocks = Vec::with_capacity(groups.len());
    for q in groups {
        let k = q.ncols() as f64;
        let c: Vec<f64> = family
            .iter()
            .map(|s| (q.transpose() * s * &q).trace() / k)
            .collect();
        let dual = mat_vec(&gram_a_inv, &c);
        let dual_norm = c.iter().zip(&dual).map(|(a, b)| a * b).sum::<f64>().sqrt();
        if !(dual_norm > 0.0) {
            return Err(Error::MaxNonpositive { best: 0.0 });
        }
        let mu: Vec<f64> = c.iter().map(|v| v / dual_norm).collect();
        let mu_dual: Vec<f64> = dual.iter().map(|v| v / dual_norm).collect();
        let mu_plus: f64 = mu.iter().zip(&h_plus.h).map(|(a, b)| a * b).sum();
        if mu_plus <= 0.0 {
            return Err(Error::MaxNonpositive { best: mu_plus });
        }
        let d = q.transpose() * &s_plus * &q / mu_plus;
        let d = (&d + d.transpose()) * 0.5;
        let (eigs, _) = linalg::sym_eigen_sorted(&d);
        blocks.push(Block {
            basis: q,
            mu,
            mu_dual,
            d,
            d_min: eigs[0],
            d_max: *eigs.last().unwrap(),
        });
    }
    blocks.sort_by(|a, b| a.weight(&h_plus.h).total_cmp(&b.weight(&h_plus.h)));

    let mut dec = HeberDecomposition {
        blocks,
        h_plus: h_plus.h.clone(),
        h_plus_value: h_plus.value,
        a_min: 0.0,
        residual: 0.0,
        cluster_gap: CLUSTER_GAP,
    };
    dec.a_min = dec.blocks.iter().map(|b| b.d_min).fold(f64::INFINITY, f64::min);
    for (i, s) in family.iter().enumerate() {
        let mut e = vec![0.0; da];
        e[i] = 1.0;
        let r = (s - dec.reconstruct(&e)).norm();
        let scale = s.norm();
        let rel = if scale > 0.0 { r / scale } else { r };
        dec.residual = dec.residual.max(rel);
    }
    if !(dec.residual <= PROPORTIONALITY_TOL) || !(dec.a_min > 0.0) {
        return Err(Error::ProportionalityViolation {
            residual: dec.residual,
        });
    }
    Ok(dec)
}

/// The cone `C0 = {H : μ_j(H) <= -ε|H| for all j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    pub epsilon: f64,
    pub margin: f64,
    mus: Vec<Vec<f64>>,
    gram_a: DMatrix<f64>,
    h_plus: Vec<f64>,
}

impl Cone {
    fn norm(&self, h: &[f64]) -> f64 {
        let g = mat_vec(&self.gram_a, h);
        g.iter().zip(h).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    /// `max_j μ_j(H) + ε|H|`; non-positive exactly on the cone.
    pub fn slack(&self, h: &[f64]) -> f64 {
        let worst = self
            .mus
            .iter()
            .map(|mu| mu.iter().zip(h).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        worst + self.epsilon * self.norm(h)
    }

    pub fn contains(&self, h: &[f64]) -> bool {
        self.slack(h) <= 0.0
    }

    /// `-h_plus`, an interior point.
    pub fn interior_point(&self) -> Vec<f64> {
        self.h_plus.iter().map(|v| -v).collect()
    }

    pub fn mus(&self) -> &[Vec<f64>] {
        &self.mus
    }
}

pub fn build_cone(m: &Manifold, dec: &HeberDecomposition, margin: f64) -> Result<Cone> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidMargin(margin));
    }
    let min_mu = dec
        .blocks
        .iter()
        .map(|b| b.mu_at(&dec.h_plus))
        .fold(f64::INFINITY, f64::min);
    Ok(Cone {
        epsilon: margin * min_mu,
        margin,
        mus: dec.blocks.iter().map(|b| b.mu.clone()).collect(),
        gram_a: m.gram_a().clone(),
        h_plus: dec.h_plus.clone(),
    })
}

/// `λ = a_min ε`.
pub fn growth_rate(dec: &HeberDecomposition, cone: &Cone) -> f64 {
    dec.a_min * cone.epsilon
}

/// Decomposition, cone and growth rate computed together.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub dec: HeberDecomposition,
    pub cone: Cone,
    pub lambda: f64,
    pub seed: u64,
}

impl Structure {
    pub fn new(m: &Manifold, margin: f64, seed: u64) -> Result<Self> {
        if !(margin > 0.0 && margin < 1.0) {
            return Err(Error::InvalidMargin(margin));
        }
        let hp = find_h_plus(m, seed)?;
        let dec = compute_blocks(m, &hp)?;
        let cone = build_cone(m, &dec, margin)?;
        let lambda = growth_rate(&dec, &cone);
        Ok(Self {
            dec,
            cone,
            lambda,
            seed,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.cone.epsilon
    }

    pub fn to_text(&self, m: &Manifold) -> String {
        let dec = &self.dec;
        let mut r = TextReport::new("hadamard-decomposition/1");
        r.str("spec", m.name());
        r.f64("margin", self.cone.margin);
        r.int("seed", self.seed as i64);
        r.f64("cluster_gap", dec.cluster_gap);
        r.f64_list("h_plus", &dec.h_plus);
        r.f64("h_plus_value", dec.h_plus_value);
        r.f64("epsilon", self.cone.epsilon);
        r.f64("a_min", dec.a_min);
        r.f64("lambda", self.lambda);
        r.f64("residual", dec.residual);
        r.int_list("block_dims", &dec.block_dims());
        r.f64_list("mu_ratios", &dec.mu_ratios());
        for b in &dec.blocks {
            r.array_section("block");
            r.int("dim", b.dim() as i64);
            r.f64_list("mu", &b.mu);
            r.f64("mu_at_h_plus", b.mu_at(&dec.h_plus));
            r.f64("d_min", b.d_min);
            r.f64("d_max", b.d_max);
        }
        r.finish()
    }
}
