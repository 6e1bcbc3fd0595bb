//! Reading and writing manifold spec and cycle files (TOML).
//!
//! Spec files (`schema = "hadamard-spec/1"`):
//!
//! ```toml
//! schema = "hadamard-spec/1"
//! name = "H2"
//! labels = ["H", "W"]
//! dim_m0 = 0
//! a_idx = [0]
//! n_idx = [1]
//! structure_constants = [[0, 1, 1, 1.0]]   # [e_0, e_1] = 1.0 e_1
//! gram = [[1.0, 0.0], [0.0, 1.0]]
//! ```
//!
//! Cycle files (`schema = "hadamard-cycle/1"`) list chart vertices and
//! oriented simplices with integer multiplicities:
//!
//! ```toml
//! schema = "hadamard-cycle/1"
//! name = "segment loop"
//! dim = 1
//! cycle = true
//! vertices = [{ m0 = [], u = [0.0], h = [0.0] }, { m0 = [], u = [1.0], h = [0.0] }]
//! cells = [{ v = [0, 1], m = 1 }, { v = [1, 0], m = 1 }]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::algebra::{Manifold, ManifoldSpec, MetricLieAlgebra};
use crate::currents::Chain;
use crate::error::{Error, Result};
use crate::geometry::GroupPoint;
use crate::report::fmt_f64;

pub const SPEC_SCHEMA: &str = "hadamard-spec/1";
pub const CYCLE_SCHEMA: &str = "hadamard-cycle/1";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    schema: String,
    name: String,
    labels: Vec<String>,
    dim_m0: usize,
    a_idx: Vec<usize>,
    n_idx: Vec<usize>,
    #[serde(default)]
    structure_constants: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
}

fn parse_err(source: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        message: message.into(),
    }
}

fn check_schema(found: &str, expected: &str, source: &str) -> Result<()> {
    if found != expected {
        return Err(parse_err(
            source,
            format!("field `schema`: expected \"{expected}\", found \"{found}\""),
        ));
    }
    Ok(())
}

fn as_index(v: f64, what: &str, source: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(parse_err(source, format!("{what}: {v} is not a valid index")))
    }
}

pub fn parse_spec(text: &str, source: &str) -> Result<ManifoldSpec> {
    let file: SpecFile = toml::from_str(text).map_err(|e| parse_err(source, e.to_string()))?;
    check_schema(&file.schema, SPEC_SCHEMA, source)?;
    let dim = file.labels.len();
    let mut entries = Vec::with_capacity(file.structure_constants.len());
    for (row, q) in file.structure_constants.iter().enumerate() {
        if q.len() != 4 {
            return Err(parse_err(
                source,
                format!("structure_constants[{row}]: expected [i, j, k, value], found {} entries", q.len()),
            ));
        }
        let what = format!("structure_constants[{row}]");
        entries.push((
            as_index(q[0], &what, source)?,
            as_index(q[1], &what, source)?,
            as_index(q[2], &what, source)?,
            q[3],
        ));
    }
    if file.gram.len() != dim || file.gram.iter().any(|r| r.len() != dim) {
        return Err(parse_err(
            source,
            format!("gram: expected a {dim}x{dim} matrix matching `labels`"),
        ));
    }
    let gram = DMatrix::from_fn(dim, dim, |i, j| file.gram[i][j]);
    let algebra = MetricLieAlgebra::new(file.labels, file.a_idx, file.n_idx, entries, gram)
        .map_err(|e| parse_err(source, e.to_string()))?;
    Ok(ManifoldSpec::new(file.name, algebra, file.dim_m0))
}

fn quoted(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn float_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
    format!("[{}]", items.join(", "))
}

fn index_list(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

/// Canonical text of a spec; parses back to an equal value.
pub fn emit_spec(spec: &ManifoldSpec) -> String {
    let alg = &spec.algebra;
    let mut out = String::new();
    let _ = writeln!(out, "schema = {}", quoted(SPEC_SCHEMA));
    let _ = writeln!(out, "name = {}", quoted(&spec.name));
    let labels: Vec<String> = alg.labels().iter().map(|l| quoted(l)).collect();
    let _ = writeln!(out, "labels = [{}]", labels.join(", "));
    let _ = writeln!(out, "dim_m0 = {}", spec.dim_m0);
    let _ = writeln!(out, "a_idx = {}", index_list(alg.a_idx()));
    let _ = writeln!(out, "n_idx = {}", index_list(alg.n_idx()));
    let _ = writeln!(out, "structure_constants = [");
    for &(i, j, k, c) in alg.entries() {
        let _ = writeln!(out, "  [{i}, {j}, {k}, {}],", fmt_f64(c));
    }
    let _ = writeln!(out, "]");
    let _ = writeln!(out, "gram = [");
    for r in 0..alg.dim() {
        let row: Vec<f64> = (0..alg.dim()).map(|c| alg.gram()[(r, c)]).collect();
        let _ = writeln!(out, "  {},", float_list(&row));
    }
    let _ = writeln!(out, "]");
    out
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_spec(path: &Path) -> Result<ManifoldSpec> {
    let text = read(path)?;
    parse_spec(&text, &path.display().to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexEntry {
    #[serde(default)]
    m0: Vec<f64>,
    u: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CellEntry {
    v: Vec<usize>,
    #[serde(default = "one")]
    m: i64,
}

fn one() -> i64 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CycleFileRaw {
    schema: String,
    #[serde(default)]
    name: String,
    dim: usize,
    #[serde(default)]
    cycle: bool,
    vertices: Vec<VertexEntry>,
    cells: Vec<CellEntry>,
}

/// A polyhedral chain given by chart vertices and oriented simplices.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleFile {
    pub name: String,
    pub dim: usize,
    pub cycle: bool,
    pub vertices: Vec<GroupPoint>,
    pub cells: Vec<(Vec<usize>, i64)>,
}

impl CycleFile {
    /// Builds the chain of affine cells. A declared cycle with nonzero
    /// boundary is rejected.
    pub fn to_chain(&self, m: &Manifold) -> Result<Chain> {
        let charts: Vec<Vec<f64>> = self.vertices.iter().map(GroupPoint::to_chart).collect();
        let cells = self
            .cells
            .iter()
            .map(|(idx, mult)| (idx.iter().map(|&i| charts[i].clone()).collect::<Vec<_>>(), *mult));
        let chain = Chain::from_simplices(m, self.dim, cells)?;
        if self.cycle && !chain.is_cycle(m) {
            return Err(Error::NotACycle { dim: self.dim });
        }
        Ok(chain)
    }

    /// Scales all chart coordinates about the vertex barycenter.
    pub fn dilate(&self, factor: f64) -> CycleFile {
        let n = self.vertices.len().max(1) as f64;
        let len = self.vertices.first().map_or(0, |v| v.to_chart().len());
        let mut center = vec![0.0; len];
        for v in &self.vertices {
            for (c, x) in center.iter_mut().zip(v.to_chart()) {
                *c += x / n;
            }
        }
        let split = |v: &GroupPoint, chart: Vec<f64>| {
            let (d0, dn) = (v.m0.len(), v.u.len());
            GroupPoint {
                m0: chart[..d0].to_vec(),
                u: chart[d0..d0 + dn].to_vec(),
                h: chart[d0 + dn..].to_vec(),
            }
        };
        let vertices = self
            .vertices
            .iter()
            .map(|v| {
                let chart: Vec<f64> = v
                    .to_chart()
                    .iter()
                    .zip(&center)
                    .map(|(x, c)| c + factor * (x - c))
                    .collect();
                split(v, chart)
            })
            .collect();
        CycleFile {
            vertices,
            ..self.clone()
        }
    }
}

pub fn parse_cycle(text: &str, source: &str, m: &Manifold) -> Result<CycleFile> {
    let raw: CycleFileRaw = toml::from_str(text).map_err(|e| parse_err(source, e.to_string()))?;
    check_schema(&raw.schema, CYCLE_SCHEMA, source)?;
    let mut vertices = Vec::with_capacity(raw.vertices.len());
    for (i, v) in raw.vertices.into_iter().enumerate() {
        let sizes = [(v.m0.len(), m.dim_m0(), "m0"), (v.u.len(), m.dim_n(), "u"), (v.h.len(), m.dim_a(), "h")];
        for (found, expected, field) in sizes {
            if found != expected {
                return Err(parse_err(
                    source,
                    format!("vertices[{i}].{field}: expected {expected} entries, found {found}"),
                ));
            }
        }
        vertices.push(GroupPoint {
            m0: v.m0,
            u: v.u,
            h: v.h,
        });
    }
    let mut cells = Vec::with_capacity(raw.cells.len());
    for (i, c) in raw.cells.into_iter().enumerate() {
        if c.v.len() != raw.dim + 1 {
            return Err(parse_err(
                source,
                format!("cells[{i}].v: a {}-cell needs {} vertices, found {}", raw.dim, raw.dim + 1, c.v.len()),
            ));
        }
        if let Some(&bad) = c.v.iter().find(|&&j| j >= vertices.len()) {
            return Err(parse_err(
                source,
                format!("cells[{i}].v: vertex index {bad} out of range (have {})", vertices.len()),
            ));
        }
        cells.push((c.v, c.m));
    }
    Ok(CycleFile {
        name: raw.name,
        dim: raw.dim,
        cycle: raw.cycle,
        vertices,
        cells,
    })
}

pub fn emit_cycle(c: &CycleFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema = {}", quoted(CYCLE_SCHEMA));
    let _ = writeln!(out, "name = {}", quoted(&c.name));
    let _ = writeln!(out, "dim = {}", c.dim);
    let _ = writeln!(out, "cycle = {}", c.cycle);
    let _ = writeln!(out, "vertices = [");
    for v in &c.vertices {
        let _ = writeln!(
            out,
            "  {{ m0 = {}, u = {}, h = {} }},",
            float_list(&v.m0),
            float_list(&v.u),
            float_list(&v.h)
        );
    }
    let _ = writeln!(out, "]");
    let _ = writeln!(out, "cells = [");
    for (v, mult) in &c.cells {
        let _ = writeln!(out, "  {{ v = {}, m = {mult} }},", index_list(v));
    }
    let _ = writeln!(out, "]");
    out
}

pub fn load_cycle(path: &Path, m: &Manifold) -> Result<CycleFile> {
    let text = read(path)?;
    parse_cycle(&text, &path.display().to_string(), m)
}
