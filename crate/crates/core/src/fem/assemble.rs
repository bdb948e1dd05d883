//! Cell and boundary assembly of the bilinear and linear forms used by the
//! coupled problems.

use std::sync::Arc;

use super::quadrature::{gauss_legendre, TriangleRule};
use super::space::{facet_point, Family, FunctionSpace, LocalBasis};
use super::sparse::{SparseMatrix, TripletBuilder};
use crate::error::{Error, Result};
use crate::mesh::FacetTag;

fn same_mesh(a: &FunctionSpace, b: &FunctionSpace) -> Result<()> {
    if Arc::ptr_eq(&a.mesh, &b.mesh) || a.mesh.cells == b.mesh.cells && a.mesh.vertices == b.mesh.vertices {
        Ok(())
    } else {
        Err(Error::DimensionMismatch("spaces live on different meshes".into()))
    }
}

/// Generic cell loop. `kernel(test, i, trial, j)` is the integrand at the
/// current quadrature point; rows of the result are test dofs.
pub fn assemble_cells<K>(
    test: &FunctionSpace,
    trial: &FunctionSpace,
    degree: usize,
    kernel: K,
) -> Result<SparseMatrix>
where
    K: Fn(&LocalBasis, usize, &LocalBasis, usize) -> f64,
{
    same_mesh(test, trial)?;
    let rule = TriangleRule::new(degree);
    let nt = test.dofmap.dofs_per_cell;
    let nu = trial.dofmap.dofs_per_cell;
    let ncells = test.mesh.num_cells();
    let mut tb = TripletBuilder::with_capacity(test.num_dofs(), trial.num_dofs(), ncells * nt * nu);
    let (mut bt, mut bu) = (LocalBasis::default(), LocalBasis::default());
    let mut local = vec![0.0; nt * nu];
    for c in 0..ncells {
        let geom = test.cell_geometry(c);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            test.eval(c, &geom, p, &mut bt);
            trial.eval(c, &geom, p, &mut bu);
            let wa = w * geom.area;
            for i in 0..nt {
                for j in 0..nu {
                    local[i * nu + j] += wa * kernel(&bt, i, &bu, j);
                }
            }
        }
        for i in 0..nt {
            for j in 0..nu {
                let v = local[i * nu + j];
                if v != 0.0 {
                    tb.add(bt.dofs[i], bu.dofs[j], v);
                }
            }
        }
    }
    Ok(tb.build())
}

fn quad_degree(a: &FunctionSpace, b: &FunctionSpace) -> usize {
    (a.polynomial_degree() + b.polynomial_degree()).max(1)
}

/// `coef * (grad u, grad v)`, componentwise for vector spaces.
pub fn assemble_stiffness(space: &FunctionSpace, coef: f64) -> Result<SparseMatrix> {
    if matches!(space.family, Family::P0 | Family::RT0) {
        return Err(Error::UnsupportedSpace(format!(
            "stiffness needs an H1 space, got {:?}",
            space.family
        )));
    }
    let deg = 2 * space.polynomial_degree() - 2;
    assemble_cells(space, space, deg, |t, i, u, j| {
        let (a, b) = (&t.grads[i], &u.grads[j]);
        coef * (a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1])
    })
}

/// `2 coef (eps(u), eps(v))` with the symmetric gradient.
pub fn assemble_epsilon_form(space: &FunctionSpace, coef: f64) -> Result<SparseMatrix> {
    if !space.is_vector() || matches!(space.family, Family::P0 | Family::RT0) {
        return Err(Error::UnsupportedSpace(
            "symmetric-gradient form needs a vector H1 space".into(),
        ));
    }
    let deg = 2 * space.polynomial_degree() - 2;
    assemble_cells(space, space, deg, |t, i, u, j| {
        let ea = sym(&t.grads[i]);
        let eb = sym(&u.grads[j]);
        2.0 * coef * (ea[0][0] * eb[0][0] + 2.0 * ea[0][1] * eb[0][1] + ea[1][1] * eb[1][1])
    })
}

fn sym(g: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}

/// `coef * (u, v)`
pub fn assemble_mass(space: &FunctionSpace, coef: f64) -> Result<SparseMatrix> {
    assemble_cells(space, space, quad_degree(space, space), |t, i, u, j| {
        coef * (t.values[i][0] * u.values[j][0] + t.values[i][1] * u.values[j][1])
    })
}

/// `(div u, q)` with rows indexed by the scalar test space.
pub fn assemble_div(velocity: &FunctionSpace, pressure: &FunctionSpace) -> Result<SparseMatrix> {
    if !velocity.is_vector() || pressure.is_vector() {
        return Err(Error::UnsupportedPair(format!(
            "div needs vector trial and scalar test, got {:?}/{:?}",
            velocity.rank, pressure.rank
        )));
    }
    let deg = (velocity.polynomial_degree() - 1 + pressure.polynomial_degree()).max(1);
    assemble_cells(pressure, velocity, deg, |q, i, u, j| u.divs[j] * q.values[i][0])
}

/// `coef * ((u, v) + (div u, div v))`
pub fn assemble_hdiv_operator(space: &FunctionSpace, coef: f64) -> Result<SparseMatrix> {
    if !space.is_vector() {
        return Err(Error::UnsupportedSpace("H(div) form needs a vector space".into()));
    }
    assemble_cells(space, space, quad_degree(space, space), |t, i, u, j| {
        coef * (t.values[i][0] * u.values[j][0] + t.values[i][1] * u.values[j][1] + t.divs[i] * u.divs[j])
    })
}

/// `(f, v)` for a vector source (scalar spaces read component 0).
pub fn assemble_load<F>(space: &FunctionSpace, degree: usize, f: F) -> Vec<f64>
where
    F: Fn([f64; 2]) -> [f64; 2],
{
    let rule = TriangleRule::new(degree);
    let mut b = vec![0.0; space.num_dofs()];
    let mut lb = LocalBasis::default();
    for c in 0..space.mesh.num_cells() {
        let geom = space.cell_geometry(c);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            space.eval(c, &geom, p, &mut lb);
            let v = f(geom.point(p));
            for i in 0..lb.len() {
                b[lb.dofs[i]] += w * geom.area * (v[0] * lb.values[i][0] + v[1] * lb.values[i][1]);
            }
        }
    }
    b
}

/// `(g, v)` over boundary facets carrying `tag`. The closure receives the
/// point and the outward unit normal.
pub fn assemble_boundary_load<F>(space: &FunctionSpace, tag: FacetTag, npts: usize, g: F) -> Vec<f64>
where
    F: Fn([f64; 2], [f64; 2]) -> [f64; 2],
{
    let m = &space.mesh;
    let (tq, wq) = gauss_legendre(npts);
    let mut b = vec![0.0; space.num_dofs()];
    let mut lb = LocalBasis::default();
    for f in m.tagged_facets(tag) {
        let facet = &m.facets[f];
        let (c, k) = (facet.cells[0], facet.local[0]);
        let geom = space.cell_geometry(c);
        let n = m.outward_normal(c, k);
        let len = m.facet_length(f);
        for (t, w) in tq.iter().zip(&wq) {
            let bary = facet_point(k, *t);
            space.eval(c, &geom, &bary, &mut lb);
            let v = g(geom.point(&bary), n);
            for i in 0..lb.len() {
                b[lb.dofs[i]] += w * len * (v[0] * lb.values[i][0] + v[1] * lb.values[i][1]);
            }
        }
    }
    b
}

/// Dofs of `space` whose basis functions do not vanish on facets tagged
/// `tag` restricted to component `comp` (vector Lagrange spaces only).
pub fn component_boundary_dofs(space: &FunctionSpace, tags: &[FacetTag], comp: usize) -> Vec<usize> {
    let m = &space.mesh;
    let vs = space.value_size();
    let nv = m.num_vertices();
    let mut mask = vec![false; space.num_dofs()];
    for (f, facet) in m.facets.iter().enumerate() {
        if !matches!(m.facet_tags[f], Some(t) if tags.contains(&t)) {
            continue;
        }
        let mut scalar = facet.vertices.to_vec();
        if space.family == Family::P2 {
            scalar.push(nv + f);
        }
        for s in scalar {
            mask[vs * s + comp] = true;
        }
    }
    (0..mask.len()).filter(|&i| mask[i]).collect()
}
