//! Finite element spaces on a [`Mesh`]: P0, P1, P2 (scalar or 2-vector)
//! and lowest-order Raviart-Thomas.
//!
//! Dof layout: P1 dofs are vertices; P2 dofs are vertices followed by one
//! dof per facet (`num_vertices + facet`); P0 dofs are cells; RT0 dofs are
//! facets. Vector spaces interleave components, `2 * scalar + comp`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{FacetTag, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    P0,
    P1,
    P2,
    RT0,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueRank {
    Scalar,
    Vector2,
}

/// Affine data of one triangle.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub verts: [[f64; 2]; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_bary: [[f64; 2]; 3],
}

impl CellGeometry {
    pub fn new(verts: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = verts;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let mut grad_bary = [[0.0; 2]; 3];
        for (i, g) in grad_bary.iter_mut().enumerate() {
            let a = verts[(i + 1) % 3];
            let b = verts[(i + 2) % 3];
            *g = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
        }
        Self {
            verts,
            area: 0.5 * det.abs(),
            grad_bary,
        }
    }

    pub fn point(&self, bary: &[f64; 3]) -> [f64; 2] {
        let mut x = [0.0; 2];
        for i in 0..3 {
            x[0] += bary[i] * self.verts[i][0];
            x[1] += bary[i] * self.verts[i][1];
        }
        x
    }

    pub fn barycentric(&self, x: [f64; 2]) -> [f64; 3] {
        let p0 = self.verts[0];
        let l1 = self.grad_bary[1][0] * (x[0] - p0[0]) + self.grad_bary[1][1] * (x[1] - p0[1]);
        let l2 = self.grad_bary[2][0] * (x[0] - p0[0]) + self.grad_bary[2][1] * (x[1] - p0[1]);
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Barycentric coordinates of the point at parameter `t` along local facet
/// `k` (which runs from vertex `k+1` to vertex `k+2`).
pub fn facet_point(k: usize, t: f64) -> [f64; 3] {
    let mut b = [0.0; 3];
    b[(k + 1) % 3] = 1.0 - t;
    b[(k + 2) % 3] = t;
    b
}

/// Basis functions of one cell evaluated at one point. Scalar spaces use
/// component 0 only.
#[derive(Clone, Debug, Default)]
pub struct LocalBasis {
    pub dofs: Vec<usize>,
    pub values: Vec<[f64; 2]>,
    /// `grads[i][comp][dir]`
    pub grads: Vec<[[f64; 2]; 2]>,
    pub divs: Vec<f64>,
}

impl LocalBasis {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    fn resize(&mut self, n: usize) {
        self.dofs.resize(n, 0);
        self.values.resize(n, [0.0; 2]);
        self.grads.resize(n, [[0.0; 2]; 2]);
        self.divs.resize(n, 0.0);
    }

    /// Value of the finite element function with coefficients `u`.
    pub fn value(&self, u: &[f64]) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (i, &d) in self.dofs.iter().enumerate() {
            v[0] += u[d] * self.values[i][0];
            v[1] += u[d] * self.values[i][1];
        }
        v
    }

    pub fn gradient(&self, u: &[f64]) -> [[f64; 2]; 2] {
        let mut g = [[0.0; 2]; 2];
        for (i, &d) in self.dofs.iter().enumerate() {
            for c in 0..2 {
                for k in 0..2 {
                    g[c][k] += u[d] * self.grads[i][c][k];
                }
            }
        }
        g
    }

    pub fn divergence(&self, u: &[f64]) -> f64 {
        self.dofs.iter().zip(&self.divs).map(|(&d, dv)| u[d] * dv).sum()
    }
}

#[derive(Clone, Debug)]
pub struct DofMap {
    pub num_dofs: usize,
    pub dofs_per_cell: usize,
    cell_dofs: Vec<usize>,
    /// RT0 orientation of each local facet (+1 when the global facet normal
    /// is the cell's outward normal).
    signs: Vec<[f64; 3]>,
}

#[derive(Clone, Debug)]
pub struct FunctionSpace {
    pub mesh: Arc<Mesh>,
    pub family: Family,
    pub rank: ValueRank,
    pub dofmap: DofMap,
    dirichlet: Vec<usize>,
}

impl FunctionSpace {
    /// Builds a space; RT0 is vector valued by definition and must be
    /// requested with `ValueRank::Vector2`.
    pub fn new(
        mesh: Arc<Mesh>,
        family: Family,
        rank: ValueRank,
        dirichlet_tags: &[FacetTag],
    ) -> Result<Self> {
        if family == Family::RT0 && rank != ValueRank::Vector2 {
            return Err(Error::UnsupportedSpace(
                "RT0 is vector valued; use ValueRank::Vector2".into(),
            ));
        }
        let nv = mesh.num_vertices();
        let nc = mesh.num_cells();
        let nf = mesh.num_facets();
        let (nscalar, per_cell) = match family {
            Family::P0 => (nc, 1),
            Family::P1 => (nv, 3),
            Family::P2 => (nv + nf, 6),
            Family::RT0 => (nf, 3),
        };
        let vs = if rank == ValueRank::Vector2 && family != Family::RT0 { 2 } else { 1 };
        let mut cell_dofs = Vec::with_capacity(nc * per_cell * vs);
        let mut signs = Vec::new();
        for c in 0..nc {
            let scalar: Vec<usize> = match family {
                Family::P0 => vec![c],
                Family::P1 => mesh.cells[c].to_vec(),
                Family::P2 => {
                    let mut d = mesh.cells[c].to_vec();
                    d.extend(mesh.cell_facets[c].iter().map(|&f| nv + f));
                    d
                }
                Family::RT0 => mesh.cell_facets[c].to_vec(),
            };
            for s in scalar {
                for comp in 0..vs {
                    cell_dofs.push(vs * s + comp);
                }
            }
            if family == Family::RT0 {
                let mut sg = [0.0; 3];
                for (k, &f) in mesh.cell_facets[c].iter().enumerate() {
                    sg[k] = if mesh.facets[f].cells[0] == c { 1.0 } else { -1.0 };
                }
                signs.push(sg);
            }
        }

        let mut mask = vec![false; nscalar * vs];
        for (f, facet) in mesh.facets.iter().enumerate() {
            let tagged = matches!(mesh.facet_tags[f], Some(t) if dirichlet_tags.contains(&t));
            if !tagged {
                continue;
            }
            let scalar: Vec<usize> = match family {
                Family::P0 => vec![],
                Family::P1 => facet.vertices.to_vec(),
                Family::P2 => vec![facet.vertices[0], facet.vertices[1], nv + f],
                Family::RT0 => vec![f],
            };
            for s in scalar {
                for comp in 0..vs {
                    mask[vs * s + comp] = true;
                }
            }
        }
        let dirichlet = (0..mask.len()).filter(|&i| mask[i]).collect();

        Ok(Self {
            mesh,
            family,
            rank,
            dofmap: DofMap {
                num_dofs: nscalar * vs,
                dofs_per_cell: per_cell * vs,
                cell_dofs,
                signs,
            },
            dirichlet,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.dofmap.num_dofs
    }

    /// Components per scalar node (RT0 counts as one).
    pub fn value_size(&self) -> usize {
        if self.rank == ValueRank::Vector2 && self.family != Family::RT0 {
            2
        } else {
            1
        }
    }

    pub fn is_vector(&self) -> bool {
        self.rank == ValueRank::Vector2
    }

    pub fn polynomial_degree(&self) -> usize {
        match self.family {
            Family::P0 => 0,
            Family::P1 | Family::RT0 => 1,
            Family::P2 => 2,
        }
    }

    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        let n = self.dofmap.dofs_per_cell;
        &self.dofmap.cell_dofs[c * n..(c + 1) * n]
    }

    /// Sorted constrained dofs.
    pub fn dirichlet_dofs(&self) -> &[usize] {
        &self.dirichlet
    }

    pub fn dirichlet_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.num_dofs()];
        for &d in &self.dirichlet {
            m[d] = true;
        }
        m
    }

    pub fn cell_geometry(&self, c: usize) -> CellGeometry {
        CellGeometry::new(self.mesh.cell_coords(c))
    }

    /// Evaluates all local basis functions of cell `c` at `bary`.
    pub fn eval(&self, c: usize, geom: &CellGeometry, bary: &[f64; 3], out: &mut LocalBasis) {
        let vs = self.value_size();
        out.resize(self.dofmap.dofs_per_cell);
        out.dofs.copy_from_slice(self.cell_dofs(c));
        let g = &geom.grad_bary;
        let l = bary;
        let mut sv = [0.0; 6];
        let mut sg = [[0.0; 2]; 6];
        let nscalar = match self.family {
            Family::P0 => {
                sv[0] = 1.0;
                1
            }
            Family::P1 => {
                for i in 0..3 {
                    sv[i] = l[i];
                    sg[i] = g[i];
                }
                3
            }
            Family::P2 => {
                for i in 0..3 {
                    sv[i] = l[i] * (2.0 * l[i] - 1.0);
                    let s = 4.0 * l[i] - 1.0;
                    sg[i] = [s * g[i][0], s * g[i][1]];
                }
                for k in 0..3 {
                    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                    sv[3 + k] = 4.0 * l[i] * l[j];
                    sg[3 + k] = [
                        4.0 * (l[i] * g[j][0] + l[j] * g[i][0]),
                        4.0 * (l[i] * g[j][1] + l[j] * g[i][1]),
                    ];
                }
                6
            }
            Family::RT0 => {
                let x = geom.point(bary);
                let signs = self.dofmap.signs[c];
                for k in 0..3 {
                    let a = geom.verts[(k + 1) % 3];
                    let b = geom.verts[(k + 2) % 3];
                    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    let s = signs[k] * len / (2.0 * geom.area);
                    let p = geom.verts[k];
                    out.values[k] = [s * (x[0] - p[0]), s * (x[1] - p[1])];
                    out.grads[k] = [[s, 0.0], [0.0, s]];
                    out.divs[k] = 2.0 * s;
                }
                return;
            }
        };
        for a in 0..nscalar {
            for comp in 0..vs {
                let i = vs * a + comp;
                let mut v = [0.0; 2];
                v[comp] = sv[a];
                let mut gr = [[0.0; 2]; 2];
                gr[comp] = sg[a];
                out.values[i] = v;
                out.grads[i] = gr;
                out.divs[i] = if vs == 2 { sg[a][comp] } else { 0.0 };
            }
        }
    }

    /// Scalar dof index of every vertex, or `None` for spaces without
    /// vertex dofs.
    pub fn vertex_dof(&self, v: usize, comp: usize) -> Option<usize> {
        match self.family {
            Family::P1 | Family::P2 => Some(self.value_size() * v + comp),
            _ => None,
        }
    }

    /// Global unit normal used to orient the RT0 dof of facet `f`.
    pub fn facet_normal(&self, f: usize) -> [f64; 2] {
        let facet = &self.mesh.facets[f];
        self.mesh.outward_normal(facet.cells[0], facet.local[0])
    }

    /// Coordinates of the nodal points of the P1/P2 scalar dofs.
    pub fn scalar_nodes(&self) -> Result<Vec<[f64; 2]>> {
        let m = &self.mesh;
        match self.family {
            Family::P1 => Ok(m.vertices.clone()),
            Family::P2 => {
                let mut pts = m.vertices.clone();
                pts.extend((0..m.num_facets()).map(|f| m.facet_midpoint(f)));
                Ok(pts)
            }
            _ => Err(Error::UnsupportedSpace(format!(
                "{:?} has no nodal points",
                self.family
            ))),
        }
    }
}

/// Interpolates a vector field (scalar spaces use component 0): nodal values
/// for P1/P2, cell means for P0, facet mean normal fluxes for RT0.
pub fn interpolate<F>(space: &FunctionSpace, f: F) -> Vec<f64>
where
    F: Fn([f64; 2]) -> [f64; 2],
{
    use super::quadrature::{gauss_legendre, TriangleRule};
    let vs = space.value_size();
    let mut u = vec![0.0; space.num_dofs()];
    let m = &space.mesh;
    match space.family {
        Family::P1 | Family::P2 => {
            for (s, x) in space.scalar_nodes().unwrap().into_iter().enumerate() {
                let v = f(x);
                for comp in 0..vs {
                    u[vs * s + comp] = v[comp];
                }
            }
        }
        Family::P0 => {
            let rule = TriangleRule::new(6);
            for c in 0..m.num_cells() {
                let geom = space.cell_geometry(c);
                let mut mean = [0.0; 2];
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    let v = f(geom.point(p));
                    mean[0] += w * v[0];
                    mean[1] += w * v[1];
                }
                for comp in 0..vs {
                    u[vs * c + comp] = mean[comp];
                }
            }
        }
        Family::RT0 => {
            let (tq, wq) = gauss_legendre(4);
            for fct in 0..m.num_facets() {
                let n = space.facet_normal(fct);
                let [a, b] = m.facets[fct].vertices;
                let (pa, pb) = (m.vertices[a], m.vertices[b]);
                u[fct] = tq
                    .iter()
                    .zip(&wq)
                    .map(|(t, w)| {
                        let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
                        let v = f(x);
                        w * (v[0] * n[0] + v[1] * n[1])
                    })
                    .sum();
            }
        }
    }
    u
}
