//! Interface spaces, trace couplings and spectrally defined fractional
//! operators on a straight interface.
//!
//! For a symmetric positive definite pair `(A, M)` on the interface space,
//! with `A = L + M` and `L` a discrete Laplacian, the generalized
//! eigenproblem `A phi = lambda M phi` (normalized `Phi^T M Phi = I`) gives
//! `H(s) = weight * M Phi Lambda^s Phi^T M`.

use std::fmt::Write as _;
use std::sync::Arc;

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::fem::quadrature::gauss_legendre;
use crate::fem::space::{facet_point, FunctionSpace, LocalBasis};
use crate::fem::{SparseMatrix, TripletBuilder};
use crate::mesh::{InterfaceMesh, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IfaceFamily {
    P0,
    P1,
}

/// Boundary behaviour of the interface Laplacian at the two endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// Natural (Neumann-type) endpoints.
    Free,
    /// Homogeneous Dirichlet-type endpoints.
    Zero00,
}

#[derive(Clone, Debug)]
pub struct InterfaceSpace {
    pub mesh: Arc<InterfaceMesh>,
    pub family: IfaceFamily,
    pub components: usize,
}

impl InterfaceSpace {
    pub fn new(mesh: Arc<InterfaceMesh>, family: IfaceFamily, components: usize) -> Result<Self> {
        if !(components == 1 || components == 2) {
            return Err(Error::UnsupportedSpace(format!(
                "{components} interface components"
            )));
        }
        Ok(Self {
            mesh,
            family,
            components,
        })
    }

    pub fn scalar_dofs(&self) -> usize {
        match self.family {
            IfaceFamily::P0 => self.mesh.num_segments(),
            IfaceFamily::P1 => self.mesh.num_vertices(),
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.components * self.scalar_dofs()
    }

    /// Scalar mass matrix.
    pub fn mass(&self) -> SparseMatrix {
        let m = &self.mesh;
        let n = self.scalar_dofs();
        let mut t = TripletBuilder::new(n, n);
        for s in 0..m.num_segments() {
            let h = m.segment_length(s);
            match self.family {
                IfaceFamily::P0 => t.add(s, s, h),
                IfaceFamily::P1 => {
                    t.add(s, s, h / 3.0);
                    t.add(s + 1, s + 1, h / 3.0);
                    t.add(s, s + 1, h / 6.0);
                    t.add(s + 1, s, h / 6.0);
                }
            }
        }
        t.build()
    }

    /// Values of the scalar basis functions of segment `s` at height `y`.
    fn segment_basis(&self, s: usize, y: f64) -> Vec<(usize, f64)> {
        match self.family {
            IfaceFamily::P0 => vec![(s, 1.0)],
            IfaceFamily::P1 => {
                let (y0, y1) = (self.mesh.vertices[s], self.mesh.vertices[s + 1]);
                let t = (y - y0) / (y1 - y0);
                vec![(s, 1.0 - t), (s + 1, t)]
            }
        }
    }
}

/// Discrete Laplacian on the scalar interface space. For P0 this is the
/// two-point jump operator `[p][q] / <h>` over interior vertices; the
/// `Zero00` flavor adds `p q / h` at the two endpoints. For P1 it is the
/// usual stiffness matrix; `Zero00` is handled by removing endpoint dofs.
pub fn assemble_interface_laplacian(space: &InterfaceSpace, flavor: Flavor) -> SparseMatrix {
    let m = &space.mesh;
    let n = space.scalar_dofs();
    let ns = m.num_segments();
    let mut t = TripletBuilder::new(n, n);
    match space.family {
        IfaceFamily::P0 => {
            for v in 1..ns {
                let hbar = 0.5 * (m.segment_length(v - 1) + m.segment_length(v));
                let c = 1.0 / hbar;
                t.add(v - 1, v - 1, c);
                t.add(v, v, c);
                t.add(v - 1, v, -c);
                t.add(v, v - 1, -c);
            }
            if flavor == Flavor::Zero00 {
                t.add(0, 0, 1.0 / m.segment_length(0));
                t.add(ns - 1, ns - 1, 1.0 / m.segment_length(ns - 1));
            }
        }
        IfaceFamily::P1 => {
            for s in 0..ns {
                let c = 1.0 / m.segment_length(s);
                t.add(s, s, c);
                t.add(s + 1, s + 1, c);
                t.add(s, s + 1, -c);
                t.add(s + 1, s, -c);
            }
        }
    }
    t.build()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractionalSpec {
    pub s: f64,
    pub weight: f64,
    pub flavor: Flavor,
}

impl FractionalSpec {
    pub fn new(s: f64, weight: f64, flavor: Flavor) -> Self {
        Self { s, weight, flavor }
    }
}

/// Eigen-decomposition of `(L + M, M)` on a scalar interface space.
#[derive(Clone, Debug)]
pub struct InterfaceEigen {
    pub flavor: Flavor,
    /// Ascending generalized eigenvalues.
    pub lambda: Vec<f64>,
    /// `M`-orthonormal eigenvectors (columns), full space size; for P1
    /// `Zero00` the endpoint rows are zero.
    pub phi: Mat<f64>,
    pub mass: Mat<f64>,
}

impl InterfaceEigen {
    pub fn new(space: &InterfaceSpace, flavor: Flavor) -> Result<Self> {
        let n = space.scalar_dofs();
        let mass = space.mass().to_dense();
        let a = assemble_interface_laplacian(space, flavor).to_dense() + &mass;
        let keep: Vec<usize> = if space.family == IfaceFamily::P1 && flavor == Flavor::Zero00 {
            (1..n - 1).collect()
        } else {
            (0..n).collect()
        };
        let k = keep.len();
        if k == 0 {
            return Err(Error::InvalidArgument("interface space has no free dofs".into()));
        }
        let ar = Mat::<f64>::from_fn(k, k, |i, j| a[(keep[i], keep[j])]);
        let mr = Mat::<f64>::from_fn(k, k, |i, j| mass[(keep[i], keep[j])]);
        let llt = mr.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
        let l = llt.L().to_owned();
        // B = L^{-1} A L^{-T}
        let linv = invert_lower(&l);
        let b = &linv * &ar * linv.transpose();
        let b = Mat::<f64>::from_fn(k, k, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]));
        let eig = b
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let q = eig.U();
        let lambda: Vec<f64> = (0..k).map(|i| eig.S()[i]).collect();
        let phir = linv.transpose() * q;
        let mut phi = Mat::<f64>::zeros(n, k);
        for (r, &i) in keep.iter().enumerate() {
            for j in 0..k {
                phi[(i, j)] = phir[(r, j)];
            }
        }
        Ok(Self {
            flavor,
            lambda,
            phi,
            mass,
        })
    }

    /// `weight * M Phi Lambda^s Phi^T M` (dense, scalar space).
    pub fn power(&self, s: f64, weight: f64) -> Mat<f64> {
        let mp = &self.mass * &self.phi;
        let k = self.lambda.len();
        let scaled = Mat::<f64>::from_fn(mp.nrows(), k, |i, j| mp[(i, j)] * self.lambda[j].powf(s));
        (scaled * mp.transpose()) * weight
    }

    /// `Phi Lambda^{-s} Phi^T / weight`, the inverse of [`Self::power`] on
    /// the range of the eigenvectors.
    pub fn inverse_power(&self, s: f64, weight: f64) -> Mat<f64> {
        let k = self.lambda.len();
        let scaled = Mat::<f64>::from_fn(self.phi.nrows(), k, |i, j| {
            self.phi[(i, j)] * self.lambda[j].powf(-s)
        });
        (scaled * self.phi.transpose()) * (1.0 / weight)
    }
}

fn invert_lower(l: &Mat<f64>) -> Mat<f64> {
    let n = l.nrows();
    let mut inv = Mat::<f64>::zeros(n, n);
    for c in 0..n {
        for i in c..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                s -= l[(i, k)] * inv[(k, c)];
            }
            inv[(i, c)] = s / l[(i, i)];
        }
    }
    inv
}

/// A fractional operator assembled as a dense matrix on a (possibly
/// vector) interface space.
#[derive(Clone, Debug)]
pub struct FractionalOperator {
    pub specs: Vec<FractionalSpec>,
    pub matrix: Mat<f64>,
}

impl FractionalOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        SparseMatrix::from_dense(&self.matrix, 0.0)
    }
}

/// `H(s)` for one spec on a scalar interface space.
pub fn build_fractional(space: &InterfaceSpace, spec: FractionalSpec) -> Result<FractionalOperator> {
    sum_fractional(space, &[spec])
}

/// Sum of fractional operators on a scalar interface space.
pub fn sum_fractional(space: &InterfaceSpace, specs: &[FractionalSpec]) -> Result<FractionalOperator> {
    if space.components != 1 {
        return Err(Error::UnsupportedSpace(
            "use vector_fractional for vector interface spaces".into(),
        ));
    }
    let n = space.scalar_dofs();
    let mut total = Mat::<f64>::zeros(n, n);
    let mut cache: Vec<(Flavor, InterfaceEigen)> = Vec::new();
    for spec in specs {
        if !spec.weight.is_finite() || spec.weight <= 0.0 || !spec.s.is_finite() {
            return Err(Error::InvalidArgument(format!("bad fractional spec {spec:?}")));
        }
        if !cache.iter().any(|(f, _)| *f == spec.flavor) {
            cache.push((spec.flavor, InterfaceEigen::new(space, spec.flavor)?));
        }
        let eig = &cache.iter().find(|(f, _)| *f == spec.flavor).unwrap().1;
        total += eig.power(spec.s, spec.weight);
    }
    Ok(FractionalOperator {
        specs: specs.to_vec(),
        matrix: total,
    })
}

/// Componentwise operator on a 2-component interface space: component `c`
/// gets the sum of `specs[c]`; dofs are interleaved `2 * scalar + c`.
pub fn vector_fractional(
    space: &InterfaceSpace,
    specs: [&[FractionalSpec]; 2],
) -> Result<FractionalOperator> {
    if space.components != 2 {
        return Err(Error::UnsupportedSpace("expected a 2-component space".into()));
    }
    let scalar = InterfaceSpace::new(space.mesh.clone(), space.family, 1)?;
    let n = scalar.scalar_dofs();
    let mut m = Mat::<f64>::zeros(2 * n, 2 * n);
    let mut all = Vec::new();
    for c in 0..2 {
        let op = sum_fractional(&scalar, specs[c])?;
        for i in 0..n {
            for j in 0..n {
                m[(2 * i + c, 2 * j + c)] = op.matrix[(i, j)];
            }
        }
        all.extend_from_slice(specs[c]);
    }
    Ok(FractionalOperator { specs: all, matrix: m })
}

/// `sqrt(e^T H e)` in the fractional norm of order `s` (weight one).
pub fn fractional_error_norm(space: &InterfaceSpace, flavor: Flavor, s: f64, e: &[f64]) -> Result<f64> {
    let op = build_fractional(space, FractionalSpec::new(s, 1.0, flavor))?;
    if e.len() != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "error vector {} vs interface space {}",
            e.len(),
            op.dim()
        )));
    }
    let mut v = 0.0;
    for i in 0..e.len() {
        for j in 0..e.len() {
            v += e[i] * op.matrix[(i, j)] * e[j];
        }
    }
    Ok(v.max(0.0).sqrt())
}

/// Plain-text eigenvalue dump, one `index value` line per eigenvalue.
pub fn eigenvalue_dump(space: &InterfaceSpace, flavor: Flavor) -> Result<String> {
    let eig = InterfaceEigen::new(space, flavor)?;
    let mut out = String::new();
    for (i, l) in eig.lambda.iter().enumerate() {
        let _ = writeln!(out, "{i} {l:.17e}");
    }
    Ok(out)
}

/// What a trace coupling measures on the interface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceKind {
    /// Full trace (scalar into scalar, vector into vector).
    Full,
    /// Normal component `u . n` into a scalar space.
    Normal,
    /// Tangential component `u . tau` into a scalar space.
    Tangential,
}

fn for_each_interface_point<F>(
    domain: &FunctionSpace,
    iface: &InterfaceMesh,
    npts: usize,
    mut f: F,
) -> Result<()>
where
    F: FnMut(usize, f64, f64, &LocalBasis),
{
    let map = iface.facet_map(&domain.mesh)?;
    let mesh: &Mesh = &domain.mesh;
    let (tq, wq) = gauss_legendre(npts);
    let mut lb = LocalBasis::default();
    for (s, &fct) in map.iter().enumerate() {
        let facet = &mesh.facets[fct];
        let (c, k) = (facet.cells[0], facet.local[0]);
        let geom = domain.cell_geometry(c);
        let len = mesh.facet_length(fct);
        for (t, w) in tq.iter().zip(&wq) {
            let bary = facet_point(k, *t);
            domain.eval(c, &geom, &bary, &mut lb);
            let y = geom.point(&bary)[1];
            f(s, y, w * len, &lb);
        }
    }
    Ok(())
}

/// Rows are interface dofs, columns domain dofs: `(T u, w)_Gamma`, with the
/// normal/tangent of `iface` for the projected kinds.
pub fn assemble_trace(
    domain: &FunctionSpace,
    space: &InterfaceSpace,
    kind: TraceKind,
) -> Result<SparseMatrix> {
    let iface = &space.mesh;
    let n = iface.normal;
    let tau = iface.tangent();
    let full = kind == TraceKind::Full;
    if full && domain.value_size() != space.components
        || !full && (!domain.is_vector() || space.components != 1)
    {
        return Err(Error::UnsupportedPair(format!(
            "{kind:?} trace from {:?}/{:?} into {} components",
            domain.family, domain.rank, space.components
        )));
    }
    if full && domain.family == crate::fem::Family::RT0 {
        return Err(Error::UnsupportedPair("full trace of an RT0 field".into()));
    }
    let nc = space.components;
    let mut tb = TripletBuilder::new(space.num_dofs(), domain.num_dofs());
    let deg = domain.polynomial_degree() + 1;
    for_each_interface_point(domain, iface, deg / 2 + 2, |s, y, w, lb| {
        for (ws, wv) in space.segment_basis(s, y) {
            for i in 0..lb.len() {
                let u = lb.values[i];
                match kind {
                    TraceKind::Full => {
                        for c in 0..nc {
                            if u[c] != 0.0 {
                                tb.add(nc * ws + c, lb.dofs[i], w * wv * u[c]);
                            }
                        }
                    }
                    TraceKind::Normal | TraceKind::Tangential => {
                        let d = if kind == TraceKind::Normal { n } else { tau };
                        let un = u[0] * d[0] + u[1] * d[1];
                        if un != 0.0 {
                            tb.add(ws, lb.dofs[i], w * wv * un);
                        }
                    }
                }
            }
        }
    })?;
    Ok(tb.build())
}

/// Normal trace `(u . n, w)_Gamma` scaled by `sign`.
pub fn assemble_normal_trace(domain: &FunctionSpace, space: &InterfaceSpace, sign: f64) -> Result<SparseMatrix> {
    Ok(assemble_trace(domain, space, TraceKind::Normal)?.scaled(sign))
}

/// `coef * (u . tau, v . tau)_Gamma` on the domain space.
pub fn assemble_tangential_trace_mass(domain: &FunctionSpace, iface: &InterfaceMesh, coef: f64) -> Result<SparseMatrix> {
    if !domain.is_vector() {
        return Err(Error::UnsupportedSpace("tangential trace needs a vector space".into()));
    }
    let tau = iface.tangent();
    let nd = domain.num_dofs();
    let mut tb = TripletBuilder::new(nd, nd);
    let deg = 2 * domain.polynomial_degree();
    for_each_interface_point(domain, iface, deg / 2 + 1, |_, _, w, lb| {
        for i in 0..lb.len() {
            let ui = lb.values[i][0] * tau[0] + lb.values[i][1] * tau[1];
            if ui == 0.0 {
                continue;
            }
            for j in 0..lb.len() {
                let uj = lb.values[j][0] * tau[0] + lb.values[j][1] * tau[1];
                if uj != 0.0 {
                    tb.add(lb.dofs[i], lb.dofs[j], coef * w * ui * uj);
                }
            }
        }
    })?;
    Ok(tb.build())
}

/// `(g, w)_Gamma` for a vector-valued `g` (scalar spaces read component 0).
pub fn assemble_interface_load<F>(space: &InterfaceSpace, npts: usize, g: F) -> Vec<f64>
where
    F: Fn(f64) -> [f64; 2],
{
    let m = &space.mesh;
    let (tq, wq) = gauss_legendre(npts);
    let nc = space.components;
    let mut b = vec![0.0; space.num_dofs()];
    for s in 0..m.num_segments() {
        let (y0, h) = (m.vertices[s], m.segment_length(s));
        for (t, w) in tq.iter().zip(&wq) {
            let y = y0 + t * h;
            let v = g(y);
            for (d, bv) in space.segment_basis(s, y) {
                for c in 0..nc {
                    b[nc * d + c] += w * h * bv * v[c];
                }
            }
        }
    }
    b
}

/// Per-segment means of `g` (P0 interpolation on the interface).
pub fn interface_means<F>(space: &InterfaceSpace, g: F) -> Vec<f64>
where
    F: Fn(f64) -> [f64; 2],
{
    let mut b = assemble_interface_load(space, 6, &g);
    match space.family {
        IfaceFamily::P0 => {
            let nc = space.components;
            for (i, v) in b.iter_mut().enumerate() {
                *v /= space.mesh.segment_length(i / nc);
            }
            b
        }
        IfaceFamily::P1 => {
            // nodal values at vertices instead
            let nc = space.components;
            for (i, y) in space.mesh.vertices.iter().enumerate() {
                let v = g(*y);
                for c in 0..nc {
                    b[nc * i + c] = v[c];
                }
            }
            b
        }
    }
}

/// Lifts a P0 function on the interface to P1 by averaging the values of
/// the segments around each vertex (one-sided at the endpoints).
pub fn p0_to_p1(p0: &[f64], components: usize) -> Vec<f64> {
    let ns = p0.len() / components;
    let mut out = vec![0.0; (ns + 1) * components];
    for c in 0..components {
        out[c] = p0[c];
        out[ns * components + c] = p0[(ns - 1) * components + c];
        for v in 1..ns {
            out[v * components + c] = 0.5 * (p0[(v - 1) * components + c] + p0[v * components + c]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, Side};

    fn iface(n: usize) -> Arc<InterfaceMesh> {
        let m = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 1, n).unwrap();
        Arc::new(InterfaceMesh::from_side(&m, Side::Left).unwrap())
    }

    #[test]
    fn two_segment_zero00_laplacian() {
        let sp = InterfaceSpace::new(iface(2), IfaceFamily::P0, 1).unwrap();
        let l = assemble_interface_laplacian(&sp, Flavor::Zero00).to_dense();
        // h = 1/2
        assert!((l[(0, 0)] - 4.0).abs() < 1e-14);
        assert!((l[(0, 1)] + 2.0).abs() < 1e-14);
        assert!((l[(1, 1)] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn free_laplacian_annihilates_constants() {
        let sp = InterfaceSpace::new(iface(5), IfaceFamily::P0, 1).unwrap();
        let l = assemble_interface_laplacian(&sp, Flavor::Free);
        assert!(l.mul_vec(&vec![1.0; 5]).iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn power_zero_is_mass() {
        let sp = InterfaceSpace::new(iface(6), IfaceFamily::P0, 1).unwrap();
        let h = build_fractional(&sp, FractionalSpec::new(0.0, 2.5, Flavor::Free)).unwrap();
        let m = sp.mass().to_dense();
        for i in 0..6 {
            for j in 0..6 {
                assert!((h.matrix[(i, j)] - 2.5 * m[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_power_inverts() {
        let sp = InterfaceSpace::new(iface(7), IfaceFamily::P1, 1).unwrap();
        let eig = InterfaceEigen::new(&sp, Flavor::Free).unwrap();
        let p = eig.power(-0.5, 3.0);
        let q = eig.inverse_power(-0.5, 3.0);
        let id = &p * &q;
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn p0_to_p1_endpoints() {
        assert_eq!(p0_to_p1(&[1.0, 3.0], 1), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn misaligned_trace_rejected() {
        let m = Arc::new(build_rect_mesh(0.0, 1.0, 0.0, 1.0, 2, 3).unwrap());
        let v = FunctionSpace::new(m, crate::fem::Family::P1, crate::fem::ValueRank::Scalar, &[]).unwrap();
        let sp = InterfaceSpace::new(iface(4), IfaceFamily::P0, 1).unwrap();
        assert!(matches!(assemble_trace(&v, &sp, TraceKind::Full), Err(Error::Misaligned(_))));
    }
}
