//! Integral polyhedral chains whose cells carry explicit parametrizations.
//!
//! A cell is a list of *corners*; each corner is a chart point `x_a` with a
//! level `ℓ_a ∈ [0, 1]`. On barycentric coordinates `β` the cell is the map
//!
//! ```text
//! β ↦ P(φ(Σ β_a ℓ_a, Σ β_a x_a))
//! ```
//!
//! where `φ` is the cylinder map and `P` the composition of the cell's
//! post maps (left translations and `φ(t, ·)`). With all levels equal to one
//! and no post maps this is an affine simplex in the chart; cylinder cells
//! mix levels 0 and 1. Cells are kept in a canonical form (sorted corners,
//! folded maps) so that equal cells compare equal and boundaries cancel
//! exactly over the integers.

pub mod mass;
pub mod quadrature;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::algebra::Manifold;
use crate::error::{Error, Result};
use crate::geometry::{self, GroupPoint};

pub use mass::{mass, mass_at_level, signed_volume, MassOptions, MassResult};

fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn cmp_slices(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

#[derive(Debug, Clone)]
pub struct Corner {
    pub point: Box<[f64]>,
    pub level: f64,
}

impl Corner {
    pub fn new(point: &[f64], level: f64) -> Self {
        Self {
            point: point.iter().map(|&v| clean(v)).collect(),
            level: clean(level),
        }
    }
}

impl PartialEq for Corner {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Corner {}

impl PartialOrd for Corner {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Corner {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level
            .total_cmp(&other.level)
            .then_with(|| cmp_slices(&self.point, &other.point))
    }
}

/// Maps applied after the corner parametrization.
#[derive(Debug, Clone)]
pub enum PostMap {
    /// Left translation by the group element with this chart vector.
    LeftTranslate(Box<[f64]>),
    /// `φ(t, ·)`; `t = 0` is the projection `π`.
    PhiAt(f64),
}

impl PostMap {
    fn rank(&self) -> u8 {
        match self {
            PostMap::LeftTranslate(_) => 0,
            PostMap::PhiAt(_) => 1,
        }
    }
}

impl PartialEq for PostMap {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for PostMap {}

impl PartialOrd for PostMap {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PostMap {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (PostMap::LeftTranslate(a), PostMap::LeftTranslate(b)) => cmp_slices(a, b),
            (PostMap::PhiAt(a), PostMap::PhiAt(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

/// Geometric kind of a canonical cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// Affine simplex in the chart (all levels one, no post maps).
    Affine,
    /// Piece of a cylinder `φ#([0,1] × σ)` (mixed levels, no post maps).
    Cylinder,
    /// Any cell carrying post maps that could not be folded.
    Mapped,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cell {
    pub corners: Vec<Corner>,
    pub post: Vec<PostMap>,
}

impl Cell {
    pub fn dim(&self) -> usize {
        self.corners.len() - 1
    }

    pub fn kind(&self) -> CellKind {
        if !self.post.is_empty() {
            CellKind::Mapped
        } else if self.corners.iter().all(|c| c.level == 1.0) {
            CellKind::Affine
        } else {
            CellKind::Cylinder
        }
    }
}

/// Chart coordinates of a left translate, if it is affine in the chart: `g`
/// with no `N` part, or an abelian `N`.
fn affine_translate(m: &Manifold, g: &[f64], x: &mut [f64]) -> bool {
    let (d0, dn) = (m.dim_m0(), m.dim_n());
    let gu = &g[d0..d0 + dn];
    if !(m.n_is_abelian() || gu.iter().all(|v| *v == 0.0)) {
        return false;
    }
    let gp = GroupPoint::from_chart(m, g).expect("chart length checked");
    let xp = GroupPoint::from_chart(m, x).expect("chart length checked");
    let y = geometry::multiply(m, &gp, &xp);
    x.copy_from_slice(&y.to_chart());
    true
}

/// Brings a cell to canonical form. Returns `None` for degenerate cells
/// (a repeated corner) and otherwise the cell with the sign of the sorting
/// permutation.
pub fn canonicalize(m: &Manifold, mut corners: Vec<Corner>, mut post: Vec<PostMap>) -> Option<(Cell, i64)> {
    let h0 = m.dim_m0() + m.dim_n();
    loop {
        match post.first() {
            Some(PostMap::PhiAt(t)) => {
                let t = *t;
                for c in corners.iter_mut() {
                    c.level = clean(c.level * t);
                }
                post.remove(0);
                continue;
            }
            Some(PostMap::LeftTranslate(g)) if corners.iter().all(|c| c.level == 1.0) => {
                let g = g.clone();
                let mut moved = corners.clone();
                if moved.iter_mut().all(|c| affine_translate(m, &g, &mut c.point)) {
                    corners = moved.into_iter().map(|c| Corner::new(&c.point, 1.0)).collect();
                    post.remove(0);
                    continue;
                }
            }
            _ => {}
        }
        let level = corners[0].level;
        if level != 1.0 && corners.iter().all(|c| c.level == level) {
            for c in corners.iter_mut() {
                for v in c.point[h0..].iter_mut() {
                    *v = clean(*v * level);
                }
                c.level = 1.0;
            }
            continue;
        }
        break;
    }
    // insertion sort tracking the permutation parity
    let mut sign = 1i64;
    for i in 1..corners.len() {
        let mut j = i;
        while j > 0 {
            match corners[j - 1].cmp(&corners[j]) {
                Ordering::Greater => {
                    corners.swap(j - 1, j);
                    sign = -sign;
                    j -= 1;
                }
                Ordering::Equal => return None,
                Ordering::Less => break,
            }
        }
    }
    Some((Cell { corners, post }, sign))
}

/// Map accepted by [`pushforward`].
#[derive(Debug, Clone, PartialEq)]
pub enum ChainMap {
    Project,
    LeftTranslate(GroupPoint),
    PhiAt(f64),
}

/// Integral chain: canonical cells with nonzero integer multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    dim: usize,
    cells: BTreeMap<Cell, i64>,
}

impl Chain {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            cells: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = (&Cell, i64)> {
        self.cells.iter().map(|(c, m)| (c, *m))
    }

    /// Adds `mult` copies of a (not necessarily canonical) cell.
    pub fn add_cell(&mut self, m: &Manifold, corners: Vec<Corner>, post: Vec<PostMap>, mult: i64) {
        debug_assert_eq!(corners.len(), self.dim + 1);
        if mult == 0 {
            return;
        }
        if let Some((cell, sign)) = canonicalize(m, corners, post) {
            self.add_canonical(cell, sign * mult);
        }
    }

    fn add_canonical(&mut self, cell: Cell, mult: i64) {
        if mult == 0 {
            return;
        }
        let entry = self.cells.entry(cell);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += mult;
                if *o.get() == 0 {
                    o.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(mult);
            }
        }
    }

    /// Chain of affine simplices given by chart vertices.
    pub fn from_simplices<I>(m: &Manifold, dim: usize, simplices: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<Vec<f64>>, i64)>,
    {
        let mut chain = Chain::zero(dim);
        for (verts, mult) in simplices {
            if verts.len() != dim + 1 {
                return Err(Error::DimensionMismatch {
                    expected: dim + 1,
                    found: verts.len(),
                });
            }
            if let Some(v) = verts.iter().find(|v| v.len() != m.chart_len()) {
                return Err(Error::DimensionMismatch {
                    expected: m.chart_len(),
                    found: v.len(),
                });
            }
            let corners = verts.iter().map(|v| Corner::new(v, 1.0)).collect();
            chain.add_cell(m, corners, Vec::new(), mult);
        }
        Ok(chain)
    }

    fn check_same_dim(&self, other: &Chain) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::ChainDimension {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Chain) -> Result<Chain> {
        self.check_same_dim(other)?;
        let mut out = self.clone();
        for (c, m) in &other.cells {
            out.add_canonical(c.clone(), *m);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Chain) -> Result<Chain> {
        self.add(&other.scaled(-1))
    }

    pub fn scaled(&self, k: i64) -> Chain {
        if k == 0 {
            return Chain::zero(self.dim);
        }
        Chain {
            dim: self.dim,
            cells: self.cells.iter().map(|(c, m)| (c.clone(), m * k)).collect(),
        }
    }

    /// Sum of multiplicities, the augmentation of a 0-chain.
    pub fn augmentation(&self) -> i64 {
        self.cells.values().sum()
    }

    /// Whether the chain is a cycle: zero boundary, or zero augmentation
    /// in dimension 0.
    pub fn is_cycle(&self, m: &Manifold) -> bool {
        if self.dim == 0 {
            self.augmentation() == 0
        } else {
            self.boundary(m).map(|b| b.is_zero()).unwrap_or(false)
        }
    }

    /// Alternating face sum. Faces are canonicalized, so `∂∂ = 0` holds
    /// exactly.
    pub fn boundary(&self, m: &Manifold) -> Result<Chain> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("boundary of a 0-chain".into()));
        }
        let mut out = Chain::zero(self.dim - 1);
        for (cell, mult) in &self.cells {
            for i in 0..cell.corners.len() {
                let mut corners = cell.corners.clone();
                corners.remove(i);
                let sign = if i % 2 == 0 { 1 } else { -1 };
                out.add_cell(m, corners, cell.post.clone(), sign * mult);
            }
        }
        Ok(out)
    }

    /// Distinct corner points of all cells.
    pub fn vertex_points(&self) -> BTreeSet<Corner> {
        self.cells
            .keys()
            .flat_map(|c| c.corners.iter().cloned())
            .collect()
    }
}

/// Applies a map cell-wise; commutes with [`Chain::boundary`].
pub fn pushforward(m: &Manifold, map: &ChainMap, c: &Chain) -> Result<Chain> {
    let post = match map {
        ChainMap::Project => PostMap::PhiAt(0.0),
        ChainMap::PhiAt(t) => PostMap::PhiAt(*t),
        ChainMap::LeftTranslate(g) => {
            if g.to_chart().len() != m.chart_len() {
                return Err(Error::DimensionMismatch {
                    expected: m.chart_len(),
                    found: g.to_chart().len(),
                });
            }
            PostMap::LeftTranslate(g.to_chart().into_iter().map(clean).collect())
        }
    };
    let mut out = Chain::zero(c.dim);
    for (cell, mult) in c.cells() {
        let mut p = cell.post.clone();
        p.push(post.clone());
        out.add_cell(m, cell.corners.clone(), p, mult);
    }
    Ok(out)
}

fn require_cycle(m: &Manifold, z: &Chain) -> Result<()> {
    if !z.is_cycle(m) {
        return Err(Error::NotACycle { dim: z.dim });
    }
    Ok(())
}

/// `φ#([0,1] × z)` triangulated by the staircase rule: over a cell
/// `[x_0..x_k]` the prism cells `(-1)^j [b_0..b_j, c_j..c_k]` with
/// `b_i = (x_i, level 0)` and `c_i = (x_i, level 1)`. The boundary is
/// `z - π#z` exactly.
pub fn cylinder(m: &Manifold, z: &Chain) -> Result<Chain> {
    cylinder_graded(m, z, &[0.0, 1.0])
}

/// Cylinder split into layers at the given increasing levels (from 0 to
/// 1). Interior layer interfaces cancel exactly.
pub fn cylinder_graded(m: &Manifold, z: &Chain, levels: &[f64]) -> Result<Chain> {
    require_cycle(m, z)?;
    let ok = levels.len() >= 2
        && levels[0] == 0.0
        && *levels.last().unwrap() == 1.0
        && levels.windows(2).all(|w| w[0] < w[1]);
    if !ok {
        return Err(Error::InvalidArgument(
            "cylinder levels must increase from 0 to 1".into(),
        ));
    }
    let mut out = Chain::zero(z.dim + 1);
    for (cell, mult) in z.cells() {
        if cell.kind() != CellKind::Affine {
            return Err(Error::UnsupportedCell(format!(
                "cylinder needs affine cells, found {:?}",
                cell.kind()
            )));
        }
        let k = cell.dim();
        for layer in levels.windows(2) {
            for j in 0..=k {
                let mut corners = Vec::with_capacity(k + 2);
                for c in &cell.corners[..=j] {
                    corners.push(Corner::new(&c.point, layer[0]));
                }
                for c in &cell.corners[j..] {
                    corners.push(Corner::new(&c.point, layer[1]));
                }
                let sign = if j % 2 == 0 { 1 } else { -1 };
                out.add_cell(m, corners, Vec::new(), sign * mult);
            }
        }
    }
    Ok(out)
}

/// Chart barycenter of the distinct corner points of `z`.
pub fn barycenter(m: &Manifold, z: &Chain) -> GroupPoint {
    let pts = z.vertex_points();
    let mut acc = vec![0.0; m.chart_len()];
    for p in &pts {
        for (a, v) in acc.iter_mut().zip(p.point.iter()) {
            *a += v;
        }
    }
    let n = pts.len().max(1) as f64;
    let acc: Vec<f64> = acc.iter().map(|v| v / n).collect();
    GroupPoint::from_chart(m, &acc).expect("chart length")
}

/// Straight-line cone in the chart from `apex` over a cycle lying in
/// `M0 × N`: cells `[apex, x_0..x_k]`. The boundary is `z` exactly.
pub fn cone(m: &Manifold, z: &Chain, apex: &GroupPoint) -> Result<Chain> {
    require_cycle(m, z)?;
    let h0 = m.dim_m0() + m.dim_n();
    if apex.h.iter().any(|v| *v != 0.0) {
        return Err(Error::ApexOffSlice(format!("apex has A-part {:?}", apex.h)));
    }
    let apex_corner = Corner::new(&apex.to_chart(), 1.0);
    let mut out = Chain::zero(z.dim + 1);
    for (cell, mult) in z.cells() {
        if cell.kind() != CellKind::Affine || cell.corners.iter().any(|c| c.point[h0..].iter().any(|v| *v != 0.0)) {
            return Err(Error::ApexOffSlice(
                "cone base must consist of affine cells in M0 x N".into(),
            ));
        }
        let mut corners = Vec::with_capacity(cell.corners.len() + 1);
        corners.push(apex_corner.clone());
        corners.extend(cell.corners.iter().cloned());
        out.add_cell(m, corners, Vec::new(), mult);
    }
    Ok(out)
}
