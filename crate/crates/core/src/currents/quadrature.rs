//! Symmetric simplex quadrature (Grundmann-Möller) and the dyadic
//! Freudenthal subdivision of a simplex into `2^d` congruent children.

/// A quadrature rule on the standard `d`-simplex. Nodes are barycentric
/// (`d + 1` entries) and weights sum to the simplex volume `1/d!`.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub dim: usize,
    pub degree: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// All `β ∈ N^{parts}` with `|β| = total`, in lexicographic order.
fn weak_compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn go(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            go(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(total, parts, &mut Vec::new(), &mut out);
    out
}

impl SimplexRule {
    /// Grundmann-Möller rule exact for polynomials of degree `2s + 1`;
    /// `degree` must be odd.
    pub fn grundmann_moller(dim: usize, degree: usize) -> Self {
        assert!(degree % 2 == 1, "Grundmann-Moller degree must be odd");
        let s = (degree - 1) / 2;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for i in 0..=s {
            let m = (dim + 2 * (s - i) + 1) as f64;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let w = sign * 2f64.powi(-2 * s as i32) * m.powi(2 * s as i32 + 1)
                / (factorial(i) * factorial(dim + 2 * s - i + 1));
            for beta in weak_compositions(s - i, dim + 1) {
                nodes.push(beta.iter().map(|&b| (2 * b + 1) as f64 / m).collect());
                weights.push(w);
            }
        }
        Self {
            dim,
            degree,
            nodes,
            weights,
        }
    }
}

/// Barycentric coordinates (rows) of the vertices of each child in the
/// dyadic Freudenthal subdivision, relative to the parent's vertices.
pub fn freudenthal_children(dim: usize) -> Vec<Vec<Vec<f64>>> {
    if dim == 0 {
        return vec![vec![vec![1.0]]];
    }
    // The parent is the Kuhn simplex {1 >= x_1 >= ... >= x_d >= 0} with
    // vertices p_j = (1,..,1,0,..,0) (j ones); children are the Kuhn
    // simplices of the unit cubes of 2K that lie inside 2K.
    let mut children = Vec::new();
    let mut perm: Vec<usize> = (0..dim).collect();
    let mut perms = Vec::new();
    permutations(&mut perm, 0, &mut perms);
    for cube in 0..(1usize << dim) {
        let base: Vec<i32> = (0..dim).map(|i| ((cube >> i) & 1) as i32).collect();
        for p in &perms {
            let mut verts = vec![base.clone()];
            let mut cur = base.clone();
            for &axis in p {
                cur[axis] += 1;
                verts.push(cur.clone());
            }
            let inside = verts.iter().all(|v| {
                v[0] <= 2 && v[dim - 1] >= 0 && v.windows(2).all(|w| w[0] >= w[1])
            });
            if inside {
                children.push(
                    verts
                        .iter()
                        .map(|v| {
                            let y: Vec<f64> = v.iter().map(|&c| c as f64 / 2.0).collect();
                            let mut b = vec![0.0; dim + 1];
                            b[0] = 1.0 - y[0];
                            for j in 1..dim {
                                b[j] = y[j - 1] - y[j];
                            }
                            b[dim] = y[dim - 1];
                            b
                        })
                        .collect(),
                );
            }
        }
    }
    children
}

fn permutations(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, out);
        v.swap(k, i);
    }
}

/// A sub-simplex of the reference simplex, stored as the barycentric
/// coordinates of its vertices (rows).
#[derive(Debug, Clone)]
pub struct SubSimplex {
    pub vertices: Vec<Vec<f64>>,
    pub depth: u32,
}

impl SubSimplex {
    pub fn root(dim: usize) -> Self {
        let vertices = (0..=dim)
            .map(|i| {
                let mut b = vec![0.0; dim + 1];
                b[i] = 1.0;
                b
            })
            .collect();
        Self { vertices, depth: 0 }
    }

    pub fn children(&self, template: &[Vec<Vec<f64>>]) -> Vec<SubSimplex> {
        template
            .iter()
            .map(|rows| SubSimplex {
                vertices: rows
                    .iter()
                    .map(|coef| {
                        let mut b = vec![0.0; self.vertices[0].len()];
                        for (c, v) in coef.iter().zip(&self.vertices) {
                            if *c != 0.0 {
                                for (bi, vi) in b.iter_mut().zip(v) {
                                    *bi += c * vi;
                                }
                            }
                        }
                        b
                    })
                    .collect(),
                depth: self.depth + 1,
            })
            .collect()
    }

    /// Maps a local barycentric node to reference barycentric coordinates.
    pub fn map_node(&self, local: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (l, v) in local.iter().zip(&self.vertices) {
            for (o, vi) in out.iter_mut().zip(v) {
                *o += l * vi;
            }
        }
    }

    /// Volume of the sub-simplex relative to the reference simplex.
    pub fn volume_fraction(&self, dim: usize) -> f64 {
        2f64.powi(-((dim as u32 * self.depth) as i32))
    }
}
