//! The filling pipeline: translate a cycle deep into the cone region,
//! fill it by the cylinder `V1 = φ#([0,1] × Z)` plus a chart cone `V2`
//! over `π#Z`, and certify `M(V) <= c M(Z)`.

use crate::algebra::Manifold;
use crate::currents::{self, Chain, ChainMap, MassOptions, MassResult};
use crate::error::{Error, Result};
use crate::format::CycleFile;
use crate::geometry::GroupPoint;
use crate::linalg::min_norm_in_hull;
use crate::report::TextReport;
use crate::structure::Structure;

/// Strict slack demanded of translated vertices.
pub const CONE_SLACK: f64 = 1e-9;
/// Largest admissible translation distance.
pub const MAX_TRANSLATION: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    /// Unit direction `-h_plus` in `a`.
    pub direction: Vec<f64>,
    pub distance: f64,
}

impl Translation {
    pub fn group_element(&self, m: &Manifold) -> GroupPoint {
        let h: Vec<f64> = self.direction.iter().map(|v| v * self.distance).collect();
        GroupPoint::from_a(m, &h)
    }
}

fn vertex_ok(s: &Structure, m: &Manifold, h: &[f64], rho: f64) -> bool {
    s.cone.slack(h) <= -CONE_SLACK && m.norm_a(h) >= rho
}

/// Smallest `τ` (up to bisection precision) such that `exp_A(-τ h_plus)`
/// moves every vertex of `z` into the cone with clearance `rho`.
pub fn translation_distance(m: &Manifold, s: &Structure, hs: &[Vec<f64>], rho: f64) -> Result<f64> {
    let dir = s.cone.interior_point();
    let feasible = |tau: f64| {
        hs.iter().all(|h| {
            let moved: Vec<f64> = h.iter().zip(&dir).map(|(a, d)| a + tau * d).collect();
            vertex_ok(s, m, &moved, rho)
        })
    };
    if feasible(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while !feasible(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > MAX_TRANSLATION {
            return Err(Error::InvalidArgument(format!(
                "no translation up to {MAX_TRANSLATION:e} moves the cycle into the cone"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Left translate of `z` into the cone region `C0` at distance at least
/// `rho` from `M0 × N`.
pub fn ensure_in_cone(m: &Manifold, s: &Structure, z: &Chain, rho: f64) -> Result<(Chain, Translation)> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be non-negative, got {rho}")));
    }
    let off = m.dim_m0() + m.dim_n();
    let hs: Vec<Vec<f64>> = z.vertex_points().iter().map(|c| c.point[off..].to_vec()).collect();
    let distance = translation_distance(m, s, &hs, rho)?;
    let tr = Translation {
        direction: s.cone.interior_point(),
        distance,
    };
    if distance == 0.0 {
        return Ok((z.clone(), tr));
    }
    let moved = currents::pushforward(m, &ChainMap::LeftTranslate(tr.group_element(m)), z)?;
    Ok((moved, tr))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillConfig {
    pub rho: f64,
    pub mass: MassOptions,
    /// Number of equal layers the cylinder is split into; more layers help
    /// the quadrature when the cycle sits far out in the cone.
    pub layers: usize,
}

impl Default for FillConfig {
    fn default() -> Self {
        Self {
            rho: 10.0,
            mass: MassOptions::default(),
            layers: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillingReport {
    pub spec: String,
    pub dim: usize,
    pub cells_z: usize,
    pub cells_v: usize,
    pub mass_z_input: MassResult,
    pub mass_z: MassResult,
    pub mass_v1: MassResult,
    pub mass_pi_z: MassResult,
    pub mass_v2: MassResult,
    pub lambda: f64,
    pub epsilon: f64,
    pub margin: f64,
    pub translation: Translation,
    pub rho: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub ratio: f64,
    pub ratio_upper: f64,
    pub bound_v1: f64,
    pub sharp_bound_v1: f64,
    pub projection_factor: f64,
    pub measured_cone_constant: f64,
    pub boundary_verified: bool,
    pub config: FillConfig,
}

impl FillingReport {
    pub fn mass_v(&self) -> f64 {
        self.mass_v1.value + self.mass_v2.value
    }

    pub fn depth_cap_reached(&self) -> bool {
        [&self.mass_z, &self.mass_v1, &self.mass_pi_z, &self.mass_v2]
            .iter()
            .any(|r| r.depth_cap_reached)
    }

    /// `M(V1) <= (1 - e^{-λ d_max})/λ · M(Z)` within the quadrature error.
    pub fn v1_within_bound(&self) -> bool {
        self.mass_v1.value - self.mass_v1.error_bound
            <= self.sharp_bound_v1 * (self.mass_z.value + self.mass_z.error_bound)
    }

    /// `M(π#Z) <= e^{-λ d_min} M(Z)` within the quadrature error.
    pub fn projection_within_bound(&self) -> bool {
        self.mass_pi_z.value - self.mass_pi_z.error_bound
            <= self.projection_factor * (self.mass_z.value + self.mass_z.error_bound)
    }

    pub fn to_text(&self) -> String {
        let mut r = TextReport::new("hadamard-fill/1");
        r.str("spec", &self.spec);
        r.int("dim", self.dim as i64);
        r.int("cells_z", self.cells_z as i64);
        r.int("cells_v", self.cells_v as i64);
        r.bool("boundary_verified", self.boundary_verified);
        r.f64("ratio", self.ratio);
        r.f64("ratio_upper", self.ratio_upper);
        r.f64("bound_v1", self.bound_v1);
        r.f64("sharp_bound_v1", self.sharp_bound_v1);
        r.f64("projection_factor", self.projection_factor);
        r.f64("measured_cone_constant", self.measured_cone_constant);
        r.bool("v1_within_bound", self.v1_within_bound());
        r.bool("projection_within_bound", self.projection_within_bound());
        r.bool("depth_cap_reached", self.depth_cap_reached());
        r.section("constants");
        r.f64("lambda", self.lambda);
        r.f64("epsilon", self.epsilon);
        r.f64("margin", self.margin);
        r.f64("rho", self.rho);
        r.f64("d_min", self.d_min);
        r.f64("d_max", self.d_max);
        r.section("translation");
        r.f64_list("direction", &self.translation.direction);
        r.f64("distance", self.translation.distance);
        r.section("quadrature");
        r.f64("tol", self.config.mass.tol);
        r.int("depth_cap", self.config.mass.depth_cap as i64);
        r.int("degree", self.config.mass.degree as i64);
        r.int("max_splits", self.config.mass.max_splits as i64);
        r.int("layers", self.config.layers as i64);
        for (name, m) in [
            ("mass_z_input", &self.mass_z_input),
            ("mass_z", &self.mass_z),
            ("mass_v1", &self.mass_v1),
            ("mass_pi_z", &self.mass_pi_z),
            ("mass_v2", &self.mass_v2),
        ] {
            r.section(name);
            r.f64("value", m.value);
            r.f64("error_bound", m.error_bound);
            r.int("cells", m.cells_evaluated as i64);
            r.int("nodes", m.nodes as i64);
            r.bool("depth_cap_reached", m.depth_cap_reached);
        }
        r.finish()
    }
}

#[derive(Debug, Clone)]
pub struct Filling {
    /// Filling of the translated cycle.
    pub v: Chain,
    pub v1: Chain,
    pub v2: Chain,
    /// The translated cycle `z'`, with `∂V = z'`.
    pub translated: Chain,
    pub report: FillingReport,
}

fn zero_mass() -> MassResult {
    MassResult {
        value: 0.0,
        error_bound: 0.0,
        cells_evaluated: 0,
        nodes: 0,
        depth_cap_reached: false,
    }
}

/// Minimum and maximum `a`-norm over the support of `z`.
fn a_distances(m: &Manifold, z: &Chain) -> (f64, f64) {
    let off = m.dim_m0() + m.dim_n();
    let mut d_min = f64::INFINITY;
    let mut d_max: f64 = 0.0;
    for (cell, _) in z.cells() {
        let pts: Vec<Vec<f64>> = cell.corners.iter().map(|c| m.ortho_a(&c.point[off..])).collect();
        for p in &pts {
            d_max = d_max.max(p.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        d_min = d_min.min(min_norm_in_hull(&pts));
    }
    (if d_min.is_finite() { d_min } else { 0.0 }, d_max)
}

/// Fills the cycle `z` of dimension `k` with `rank <= k < dim M`.
pub fn fill(m: &Manifold, s: &Structure, z: &Chain, cfg: &FillConfig) -> Result<Filling> {
    let k = z.dim();
    if k < m.rank() || k >= m.dim_m() {
        return Err(Error::RankRange {
            k,
            rank: m.rank(),
            dim: m.dim_m(),
        });
    }
    if cfg.layers == 0 {
        return Err(Error::InvalidArgument("at least one cylinder layer is needed".into()));
    }
    if !z.is_cycle(m) {
        return Err(Error::NotACycle { dim: k });
    }
    let mass_z_input = currents::mass(m, z, &cfg.mass)?;
    let (zt, translation) = ensure_in_cone(m, s, z, cfg.rho)?;

    let levels: Vec<f64> = (0..=cfg.layers).map(|i| i as f64 / cfg.layers as f64).collect();
    let v1 = currents::cylinder_graded(m, &zt, &levels)?;
    let pz = currents::pushforward(m, &ChainMap::Project, &zt)?;
    let apex = currents::barycenter(m, &pz);
    let v2 = if pz.is_zero() { Chain::zero(k + 1) } else { currents::cone(m, &pz, &apex)? };
    let v = v1.add(&v2)?;
    let boundary_verified = v.boundary(m)? == zt;
    if !boundary_verified {
        return Err(Error::InvalidArgument(
            "constructed filling does not bound the translated cycle".into(),
        ));
    }

    let (mass_z, mass_v1, mass_pi_z, mass_v2) = if zt.is_zero() {
        (zero_mass(), zero_mass(), zero_mass(), zero_mass())
    } else {
        (
            currents::mass(m, &zt, &cfg.mass)?,
            currents::mass(m, &v1, &cfg.mass)?,
            currents::mass(m, &pz, &cfg.mass)?,
            currents::mass(m, &v2, &cfg.mass)?,
        )
    };
    let (d_min, d_max) = a_distances(m, &zt);
    let lambda = s.lambda;
    let (ratio, ratio_upper) = if mass_z.value > 0.0 {
        (
            (mass_v1.value + mass_v2.value) / mass_z.value,
            (mass_v1.value + mass_v1.error_bound + mass_v2.value + mass_v2.error_bound)
                / (mass_z.value - mass_z.error_bound).max(f64::MIN_POSITIVE),
        )
    } else {
        (0.0, 0.0)
    };
    let report = FillingReport {
        spec: m.name().to_string(),
        dim: k,
        cells_z: zt.len(),
        cells_v: v.len(),
        mass_z_input,
        lambda,
        epsilon: s.epsilon(),
        margin: s.cone.margin,
        translation,
        rho: cfg.rho,
        d_min,
        d_max,
        ratio,
        ratio_upper,
        bound_v1: 1.0 / lambda,
        sharp_bound_v1: -(-lambda * d_max).exp_m1() / lambda,
        projection_factor: (-lambda * d_min).exp(),
        measured_cone_constant: if mass_pi_z.value > 0.0 { mass_v2.value / mass_pi_z.value } else { 0.0 },
        boundary_verified,
        config: cfg.clone(),
        mass_z,
        mass_v1,
        mass_pi_z,
        mass_v2,
    };
    Ok(Filling {
        v,
        v1,
        v2,
        translated: zt,
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scale: f64,
    pub report: FillingReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Largest ratio over all scales.
    pub empirical_constant: f64,
    /// Ratio at the top scale exceeds the ratio a decade below by more
    /// than 5%.
    pub drift: bool,
}

impl Sweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scale,mass_Z,mass_V1,mass_piZ,mass_V2,ratio\n");
        for row in &self.rows {
            let r = &row.report;
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                crate::report::fmt_f64(row.scale),
                crate::report::fmt_f64(r.mass_z.value),
                crate::report::fmt_f64(r.mass_v1.value),
                crate::report::fmt_f64(r.mass_pi_z.value),
                crate::report::fmt_f64(r.mass_v2.value),
                crate::report::fmt_f64(r.ratio),
            ));
        }
        out
    }
}

/// Fills chart dilations of `cycle` (about its vertex barycenter) at each
/// scale and tabulates the ratios.
pub fn verify_theorem(m: &Manifold, s: &Structure, cycle: &CycleFile, scales: &[f64], cfg: &FillConfig) -> Result<Sweep> {
    let mut sorted = scales.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(sorted.len());
    for &scale in &sorted {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
        }
        let z = cycle.dilate(scale).to_chain(m)?;
        let f = fill(m, s, &z, cfg)?;
        rows.push(SweepRow { scale, report: f.report });
    }
    let empirical_constant = rows.iter().map(|r| r.report.ratio).fold(0.0, f64::max);
    let drift = match rows.last() {
        Some(top) if rows.len() > 1 => {
            let base = rows
                .iter()
                .rev()
                .find(|r| r.scale <= top.scale / 10.0)
                .unwrap_or(&rows[0]);
            top.report.ratio > 1.05 * base.report.ratio
        }
        _ => false,
    };
    Ok(Sweep {
        rows,
        empirical_constant,
        drift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricConeCheck {
    pub factor: f64,
    pub bound: f64,
    pub within: bool,
}

/// Volume factor `Π sinh(λ_i t)/sinh(λ_i)` of a `k`-frame along a geodesic
/// of a symmetric space with root values `λ_i` (zero entries are flat
/// directions contributing `t`), compared with `e^{-λ(1-t)|H|}`.
pub fn symmetric_cone_check(eigenvalues: &[f64], h_norm: f64, k: usize, t: f64, lambda: f64) -> Result<SymmetricConeCheck> {
    if k > eigenvalues.len() {
        return Err(Error::InvalidArgument(format!(
            "frame of size {k} needs {k} eigenvalues, got {}",
            eigenvalues.len()
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t must lie in [0, 1], got {t}")));
    }
    let threshold = lambda * h_norm;
    let mut factor = 1.0;
    for &l in &eigenvalues[..k] {
        if l == 0.0 {
            factor *= t;
            continue;
        }
        if l < threshold {
            return Err(Error::EigenvalueBelowThreshold { value: l, threshold });
        }
        factor *= (l * t).sinh() / l.sinh();
    }
    let bound = (-lambda * (1.0 - t) * h_norm).exp();
    Ok(SymmetricConeCheck {
        factor,
        bound,
        within: factor <= bound * (1.0 + 1e-12),
    })
}

/// Mass of the geodesic cone over a round circle of radius `radius` and
/// length `boundary_mass` in a space of constant curvature `-1`, by
/// integrating the symmetric-space volume factor along the radii.
pub fn symmetric_cone_mass(boundary_mass: f64, radius: f64, lambda: f64) -> Result<f64> {
    // composite Simpson in t
    let n = 2000;
    let h = 1.0 / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let t = i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * symmetric_cone_check(&[radius], radius, 1, t, lambda)?.factor;
    }
    Ok(boundary_mass * radius * acc * h / 3.0)
}
