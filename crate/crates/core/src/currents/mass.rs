//! Mass of parametrized chains: `Σ |θ| ∫ J_k` by simplex quadrature with
//! adaptive dyadic refinement.
//!
//! The Jacobian `J_k` is the `k`-volume of the cell's partial derivatives
//! after left trivialization, measured in orthonormal coordinates, so every
//! length is a gram evaluation at the identity. Cells are integrated in
//! parallel and reduced in canonical cell order with compensated
//! summation, which makes results independent of the thread count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::quadrature::{freudenthal_children, SimplexRule, SubSimplex};
use super::{Cell, Chain, PostMap};
use crate::algebra::Manifold;
use crate::error::{Error, Result};
use crate::geometry::{self, GroupPoint};
use crate::linalg::{self, NeumaierSum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassOptions {
    /// Relative tolerance on the chain's total.
    pub tol: f64,
    /// Maximal subdivision depth.
    pub depth_cap: u32,
    /// Polynomial degree of the simplex rule (odd).
    pub degree: usize,
    /// Maximal number of region splits per cell.
    pub max_splits: usize,
}

impl Default for MassOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            depth_cap: 8,
            degree: 7,
            max_splits: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MassResult {
    pub value: f64,
    pub error_bound: f64,
    pub cells_evaluated: usize,
    pub nodes: u64,
    /// Some cell stopped refining at the depth cap or the split budget
    /// before meeting the tolerance; `error_bound` still accounts for it.
    pub depth_cap_reached: bool,
}

/// Evaluates the Jacobian of one cell at reference barycentric points.
struct CellMap<'a> {
    m: &'a Manifold,
    corners: Vec<&'a [f64]>,
    levels: Vec<f64>,
    post: Vec<Post>,
}

enum Post {
    Translate(GroupPoint),
    Phi(f64),
}

impl<'a> CellMap<'a> {
    fn new(m: &'a Manifold, cell: &'a Cell) -> Self {
        let post = cell
            .post
            .iter()
            .map(|p| match p {
                PostMap::LeftTranslate(g) => Post::Translate(GroupPoint::from_chart(m, g).expect("chart length")),
                PostMap::PhiAt(t) => Post::Phi(*t),
            })
            .collect();
        Self {
            m,
            corners: cell.corners.iter().map(|c| &c.point[..]).collect(),
            levels: cell.corners.iter().map(|c| c.level).collect(),
            post,
        }
    }

    fn k(&self) -> usize {
        self.corners.len() - 1
    }

    /// `J_k` at `beta`; the oriented volume when `signed` (top dimension).
    fn jacobian(&self, beta: &[f64], signed: bool) -> f64 {
        let m = self.m;
        let (d0, dn) = (m.dim_m0(), m.dim_n());
        let h0 = d0 + dn;
        let len = m.chart_len();
        let k = self.k();
        let mut x = vec![0.0; len];
        let mut level = 0.0;
        for ((b, p), l) in beta.iter().zip(&self.corners).zip(&self.levels) {
            for (xi, pi) in x.iter_mut().zip(p.iter()) {
                *xi += b * pi;
            }
            level += b * l;
        }
        let mut point = GroupPoint {
            m0: x[..d0].to_vec(),
            u: x[d0..h0].to_vec(),
            h: x[h0..].iter().map(|v| level * v).collect(),
        };
        let dexp = (!m.n_is_abelian()).then(|| m.dexp_left(&point.u));
        let mut vectors: Vec<geometry::TangentData> = (1..=k)
            .map(|a| {
                let (pa, p0) = (self.corners[a], self.corners[0]);
                let dl = self.levels[a] - self.levels[0];
                let m0_vel: Vec<f64> = (0..d0).map(|i| pa[i] - p0[i]).collect();
                let du: Vec<f64> = (d0..h0).map(|i| pa[i] - p0[i]).collect();
                let xi: Vec<f64> = (h0..len).map(|i| dl * x[i] + level * (pa[i] - p0[i])).collect();
                let lifted = match &dexp {
                    Some(d) => crate::algebra::mat_vec(d, &du),
                    None => du,
                };
                geometry::TangentData {
                    base: GroupPoint {
                        m0: Vec::new(),
                        u: Vec::new(),
                        h: Vec::new(),
                    },
                    m0_vel,
                    xi,
                    w: m.apply_ad_exp(&point.h, -1.0, &lifted),
                }
            })
            .collect();
        for post in &self.post {
            match post {
                Post::Translate(g) => point = geometry::multiply(m, g, &point),
                Post::Phi(t) => {
                    for v in vectors.iter_mut() {
                        v.xi.iter_mut().for_each(|c| *c *= t);
                        v.w = m.apply_ad_exp(&point.h, 1.0 - t, &v.w);
                    }
                    point = geometry::phi(*t, &point);
                }
            }
        }
        let rows = m.dim_m();
        let mut cols = Vec::with_capacity(rows * k);
        for v in &vectors {
            cols.extend_from_slice(&v.m0_vel);
            cols.extend(m.ortho_n(&v.w));
            cols.extend(m.ortho_a(&v.xi));
        }
        if signed {
            linalg::determinant(rows, &cols)
        } else {
            linalg::parallelotope_volume(rows, &mut cols, k)
        }
    }
}

struct Integrator<'a> {
    map: CellMap<'a>,
    rule: &'a SimplexRule,
    template: &'a [Vec<Vec<f64>>],
    signed: bool,
    depth_cap: u32,
    max_splits: usize,
}

/// A sub-simplex with its children's quadrature values and the discrepancy
/// between their sum and the sub-simplex's own single-rule value.
struct Region {
    sub: SubSimplex,
    fine: f64,
    children: Vec<(SubSimplex, f64)>,
    err: f64,
    seq: u64,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Region {}

impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Region {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct CellState {
    heap: BinaryHeap<Region>,
    frozen_value: NeumaierSum,
    frozen_err: f64,
    nodes: u64,
    seq: u64,
    capped: bool,
}

impl CellState {
    fn totals(&self) -> (f64, f64) {
        let mut v = self.frozen_value;
        let mut e = self.frozen_err;
        let mut open: Vec<&Region> = self.heap.iter().collect();
        open.sort_by_key(|r| r.seq);
        for r in open {
            v.add(r.fine);
            e += r.err;
        }
        (v.value(), e)
    }
}

impl Integrator<'_> {
    fn quad(&self, sub: &SubSimplex, nodes: &mut u64) -> f64 {
        let k = self.map.k();
        let mut buf = vec![0.0; k + 1];
        let mut acc = NeumaierSum::new();
        for (node, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            sub.map_node(node, &mut buf);
            acc.add(w * self.map.jacobian(&buf, self.signed));
        }
        *nodes += self.rule.nodes.len() as u64;
        acc.value() * sub.volume_fraction(k)
    }

    fn region(&self, sub: SubSimplex, coarse: f64, st: &mut CellState) -> Region {
        let children: Vec<(SubSimplex, f64)> = sub
            .children(self.template)
            .into_iter()
            .map(|c| {
                let v = self.quad(&c, &mut st.nodes);
                (c, v)
            })
            .collect();
        let fine = children.iter().map(|(_, v)| *v).collect::<NeumaierSum>().value();
        st.seq += 1;
        Region {
            sub,
            fine,
            err: (fine - coarse).abs(),
            children,
            seq: st.seq,
        }
    }

    fn start(&self) -> CellState {
        let mut st = CellState {
            heap: BinaryHeap::new(),
            frozen_value: NeumaierSum::new(),
            frozen_err: 0.0,
            nodes: 0,
            seq: 0,
            capped: false,
        };
        let root = SubSimplex::root(self.map.k());
        let coarse = self.quad(&root, &mut st.nodes);
        let r = self.region(root, coarse, &mut st);
        st.heap.push(r);
        st
    }

    /// Splits the region with the largest discrepancy until the summed
    /// discrepancy drops to `tol`, every open region sits at the depth cap,
    /// or the split budget is used up.
    fn refine(&self, st: &mut CellState, tol: f64) {
        let mut err = st.totals().1;
        let mut splits = 0;
        while err > tol {
            if splits == self.max_splits {
                st.capped = true;
                break;
            }
            splits += 1;
            let Some(worst) = st.heap.pop() else { break };
            if worst.sub.depth + 1 >= self.depth_cap {
                st.frozen_value.add(worst.fine);
                st.frozen_err += worst.err;
                st.capped = true;
                continue;
            }
            err -= worst.err;
            for (c, v) in worst.children {
                let r = self.region(c, v, st);
                err += r.err;
                st.heap.push(r);
            }
        }
    }
}

struct Prepared {
    rules: Vec<SimplexRule>,
    templates: Vec<Vec<Vec<Vec<f64>>>>,
}

impl Prepared {
    fn new(max_dim: usize, degree: usize) -> Self {
        Self {
            rules: (0..=max_dim).map(|d| SimplexRule::grundmann_moller(d, degree)).collect(),
            templates: (0..=max_dim).map(freudenthal_children).collect(),
        }
    }
}

fn check_options(opts: &MassOptions) -> Result<()> {
    if !(opts.tol > 0.0) || opts.degree.is_multiple_of(2) || opts.depth_cap == 0 {
        return Err(Error::InvalidArgument(format!(
            "mass options need tol > 0, odd degree and depth cap >= 1, got {opts:?}"
        )));
    }
    Ok(())
}

fn integrate(m: &Manifold, c: &Chain, opts: &MassOptions, signed: bool) -> Result<MassResult> {
    check_options(opts)?;
    let k = c.dim();
    if k == 0 {
        let value = c
            .cells()
            .map(|(_, mult)| if signed { mult as f64 } else { mult.unsigned_abs() as f64 })
            .collect::<NeumaierSum>()
            .value();
        return Ok(MassResult {
            value,
            error_bound: 0.0,
            cells_evaluated: c.len(),
            nodes: c.len() as u64,
            depth_cap_reached: false,
        });
    }
    let prep = Prepared::new(k, opts.degree);
    let cells: Vec<(&Cell, i64)> = c.cells().collect();
    let integrator = |cell| Integrator {
        map: CellMap::new(m, cell),
        rule: &prep.rules[k],
        template: &prep.templates[k],
        signed,
        depth_cap: opts.depth_cap,
        max_splits: opts.max_splits,
    };
    // first pass: one refinement level per cell gives the size of the total
    let mut states: Vec<CellState> = cells.par_iter().map(|(cell, _)| integrator(cell).start()).collect();
    let total: f64 = cells
        .iter()
        .zip(&states)
        .map(|((_, mult), st)| mult.unsigned_abs() as f64 * st.totals().0.abs())
        .collect::<NeumaierSum>()
        .value();
    // each cell gets half its own relative share plus half an equal share
    let n = cells.len() as f64;
    states
        .par_iter_mut()
        .zip(cells.par_iter())
        .for_each(|(st, (cell, mult))| {
            let w = mult.unsigned_abs() as f64;
            let own = w * st.totals().0.abs();
            let tol = 0.5 * opts.tol * (own + total / n) / w;
            integrator(cell).refine(st, tol);
        });
    let mut value = NeumaierSum::new();
    let mut error = NeumaierSum::new();
    let mut nodes = 0;
    let mut capped = false;
    for ((_, mult), st) in cells.iter().zip(&states) {
        let (v, e) = st.totals();
        let w = if signed { *mult as f64 } else { mult.unsigned_abs() as f64 };
        value.add(w * if signed { v } else { v.abs() });
        error.add(mult.unsigned_abs() as f64 * e);
        nodes += st.nodes;
        capped |= st.capped;
    }
    Ok(MassResult {
        value: value.value(),
        error_bound: error.value(),
        cells_evaluated: cells.len(),
        nodes,
        depth_cap_reached: capped,
    })
}

/// `Σ |θ| ∫ J_k` over all cells.
pub fn mass(m: &Manifold, c: &Chain, opts: &MassOptions) -> Result<MassResult> {
    integrate(m, c, opts, false)
}

/// Oriented volume `Σ θ ∫ det` of a top-dimensional chain; cancellation
/// between overlapping cells is taken into account.
pub fn signed_volume(m: &Manifold, c: &Chain, opts: &MassOptions) -> Result<MassResult> {
    if c.dim() != m.dim_m() {
        return Err(Error::ChainDimension {
            left: c.dim(),
            right: m.dim_m(),
        });
    }
    integrate(m, c, opts, true)
}

/// Mass with every cell subdivided uniformly `level` times.
pub fn mass_at_level(m: &Manifold, c: &Chain, level: u32, degree: usize) -> f64 {
    let k = c.dim();
    if k == 0 {
        return c.cells().map(|(_, mult)| mult.unsigned_abs() as f64).sum();
    }
    let prep = Prepared::new(k, degree);
    let cells: Vec<(&Cell, i64)> = c.cells().collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|(cell, mult)| {
            let integ = Integrator {
                map: CellMap::new(m, cell),
                rule: &prep.rules[k],
                template: &prep.templates[k],
                signed: false,
                depth_cap: u32::MAX,
                max_splits: 0,
            };
            let mut subs = vec![SubSimplex::root(k)];
            for _ in 0..level {
                subs = subs.iter().flat_map(|s| s.children(integ.template)).collect();
            }
            let mut nodes = 0;
            let v: NeumaierSum = subs.iter().map(|s| integ.quad(s, &mut nodes)).collect();
            mult.unsigned_abs() as f64 * v.value()
        })
        .collect();
    values.into_iter().collect::<NeumaierSum>().value()
}
