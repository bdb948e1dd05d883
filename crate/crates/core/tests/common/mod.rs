//! Independent oracles and property checks shared by the integration
//! tests and the acceptance harness.
#![allow(dead_code)]

use std::sync::Arc;

use faer::Mat;
use mpprecond::fem::{
    assemble_div, assemble_epsilon_form, assemble_hdiv_operator, assemble_mass, assemble_stiffness,
    interpolate, Family, FunctionSpace, SparseMatrix, ValueRank,
};
use mpprecond::interface::{
    assemble_interface_laplacian, assemble_normal_trace, Flavor, IfaceFamily, InterfaceEigen, InterfaceSpace,
};
use mpprecond::mesh::{build_rect_mesh, build_unit_square_subproblem, FacetTag, Mesh};
use mpprecond::solve::{Factorization, MinresOptions};
use mpprecond::systems::{Precond, Problem};
use mpprecond::systems::ParameterSet;

/// Five point Gauss-Legendre rule on [0, 1], written out so the oracle
/// shares no code with the library quadrature.
const GL5: [(f64, f64); 5] = [
    (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
    (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_4),
    (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.953_089_922_969_332_0, 0.118_463_442_528_094_5),
];

/// Integrates `f` over every cell of `mesh` with a collapsed (Duffy)
/// tensor rule, exact for polynomials of total degree up to 8.
pub fn duffy_integral<F: Fn([f64; 2]) -> f64>(mesh: &Mesh, f: F) -> f64 {
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        let [a, b, d] = mesh.cell_coords(c);
        let area2 = ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1])).abs();
        for &(u, wu) in &GL5 {
            for &(v, wv) in &GL5 {
                let x = [
                    a[0] + u * (b[0] - a[0]) + u * v * (d[0] - b[0]),
                    a[1] + u * (b[1] - a[1]) + u * v * (d[1] - b[1]),
                ];
                total += wu * wv * u * area2 * f(x);
            }
        }
    }
    total
}

/// A polynomial with its gradient, given as closures.
#[derive(Clone)]
pub struct Poly {
    pub value: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
    pub grad: Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>,
}

fn poly(v: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static, g: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static) -> Poly {
    Poly {
        value: Arc::new(v),
        grad: Arc::new(g),
    }
}

/// Monomial basis of degree `deg` (1 or 2).
pub fn monomials(deg: usize) -> Vec<Poly> {
    let mut out = vec![
        poly(|_| 1.0, |_| [0.0, 0.0]),
        poly(|x| x[0], |_| [1.0, 0.0]),
        poly(|x| x[1], |_| [0.0, 1.0]),
    ];
    if deg >= 2 {
        out.push(poly(|x| x[0] * x[0], |x| [2.0 * x[0], 0.0]));
        out.push(poly(|x| x[0] * x[1], |x| [x[1], x[0]]));
        out.push(poly(|x| x[1] * x[1], |x| [0.0, 2.0 * x[1]]));
    }
    out
}

/// Polynomial combination `sum c_i m_i`.
pub fn combine(basis: &[Poly], coef: &[f64]) -> Poly {
    let (b1, c1) = (basis.to_vec(), coef.to_vec());
    let (b2, c2) = (basis.to_vec(), coef.to_vec());
    poly(
        move |x| b1.iter().zip(&c1).map(|(p, c)| c * (p.value)(x)).sum(),
        move |x| {
            let mut g = [0.0; 2];
            for (p, c) in b2.iter().zip(&c2) {
                let d = (p.grad)(x);
                g[0] += c * d[0];
                g[1] += c * d[1];
            }
            g
        },
    )
}

pub fn small_mesh() -> Arc<Mesh> {
    // 2 x 2 squares = 8 triangles on a skewed rectangle
    Arc::new(build_rect_mesh(0.0, 1.5, -0.5, 0.5, 2, 2).unwrap())
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Largest relative gap between `u^T A v` and the oracle integral over all
/// pairs of monomial fields, for every form the library assembles.
pub fn assembled_form_gap(mesh: &Arc<Mesh>) -> Vec<(&'static str, f64)> {
    let mut out = Vec::new();
    for (name, fam, deg) in [("P1", Family::P1, 1), ("P2", Family::P2, 2)] {
        let sp = FunctionSpace::new(mesh.clone(), fam, ValueRank::Scalar, &[]).unwrap();
        let ms = monomials(deg);
        let m = assemble_mass(&sp, 1.7).unwrap();
        let k = assemble_stiffness(&sp, 0.3).unwrap();
        let vals: Vec<Vec<f64>> = ms
            .iter()
            .map(|p| {
                let f = p.value.clone();
                interpolate(&sp, move |x| [f(x), 0.0])
            })
            .collect();
        let (mut gm, mut gk) = (0.0f64, 0.0f64);
        for (i, p) in ms.iter().enumerate() {
            for (j, q) in ms.iter().enumerate() {
                let om = 1.7 * duffy_integral(mesh, |x| (p.value)(x) * (q.value)(x));
                let ok = 0.3 * duffy_integral(mesh, |x| {
                    let (a, b) = ((p.grad)(x), (q.grad)(x));
                    a[0] * b[0] + a[1] * b[1]
                });
                gm = gm.max(rel_gap(m.bilinear(&vals[i], &vals[j]), om));
                gk = gk.max(rel_gap(k.bilinear(&vals[i], &vals[j]), ok));
            }
        }
        out.push((if name == "P1" { "P1 mass" } else { "P2 mass" }, gm));
        out.push((if name == "P1" { "P1 stiffness" } else { "P2 stiffness" }, gk));
    }

    // vector P2: symmetric gradient form and divergence against P1
    let v = FunctionSpace::new(mesh.clone(), Family::P2, ValueRank::Vector2, &[]).unwrap();
    let q = FunctionSpace::new(mesh.clone(), Family::P1, ValueRank::Scalar, &[]).unwrap();
    let ms = monomials(2);
    let mut fields = Vec::new();
    for p in &ms {
        for comp in 0..2 {
            fields.push((p.clone(), comp));
        }
    }
    let interp = |p: &Poly, comp: usize| {
        let f = p.value.clone();
        interpolate(&v, move |x| {
            let mut r = [0.0; 2];
            r[comp] = f(x);
            r
        })
    };
    let grad_of = |p: &Poly, comp: usize, x: [f64; 2]| {
        let g = (p.grad)(x);
        let mut out = [[0.0; 2]; 2];
        out[comp] = g;
        out
    };
    let e = assemble_epsilon_form(&v, 0.9).unwrap();
    let d = assemble_div(&v, &q).unwrap();
    let vv: Vec<Vec<f64>> = fields.iter().map(|(p, c)| interp(p, *c)).collect();
    let (mut ge, mut gd) = (0.0f64, 0.0f64);
    let ps = monomials(1);
    let qv: Vec<Vec<f64>> = ps
        .iter()
        .map(|p| {
            let f = p.value.clone();
            interpolate(&q, move |x| [f(x), 0.0])
        })
        .collect();
    for (i, (p, ci)) in fields.iter().enumerate() {
        for (j, (r, cj)) in fields.iter().enumerate() {
            let oracle = duffy_integral(mesh, |x| {
                let (a, b) = (grad_of(p, *ci, x), grad_of(r, *cj, x));
                let sa = [[a[0][0], 0.5 * (a[0][1] + a[1][0])], [0.5 * (a[0][1] + a[1][0]), a[1][1]]];
                let sb = [[b[0][0], 0.5 * (b[0][1] + b[1][0])], [0.5 * (b[0][1] + b[1][0]), b[1][1]]];
                2.0 * 0.9 * (sa[0][0] * sb[0][0] + 2.0 * sa[0][1] * sb[0][1] + sa[1][1] * sb[1][1])
            });
            ge = ge.max(rel_gap(e.bilinear(&vv[i], &vv[j]), oracle));
        }
        for (k, s) in ps.iter().enumerate() {
            let oracle = duffy_integral(mesh, |x| (p.grad)(x)[*ci] * (s.value)(x));
            gd = gd.max(rel_gap(d.bilinear(&qv[k], &vv[i]), oracle));
        }
    }
    out.push(("P2 symmetric gradient", ge));
    out.push(("P2-P1 divergence", gd));

    // RT0 fields a + b (x, y)
    let rt = FunctionSpace::new(mesh.clone(), Family::RT0, ValueRank::Vector2, &[]).unwrap();
    let rt_fields: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, -0.2, 1.0]];
    let eval = |c: [f64; 3], x: [f64; 2]| [c[0] + c[2] * x[0], c[1] + c[2] * x[1]];
    let rv: Vec<Vec<f64>> = rt_fields.iter().map(|&c| interpolate(&rt, move |x| eval(c, x))).collect();
    let rm = assemble_mass(&rt, 2.5).unwrap();
    let rh = assemble_hdiv_operator(&rt, 0.5).unwrap();
    let (mut gr, mut gh) = (0.0f64, 0.0f64);
    for (i, &a) in rt_fields.iter().enumerate() {
        for (j, &b) in rt_fields.iter().enumerate() {
            let mass = duffy_integral(mesh, |x| {
                let (u, w) = (eval(a, x), eval(b, x));
                u[0] * w[0] + u[1] * w[1]
            });
            let divdiv = duffy_integral(mesh, |_| 4.0 * a[2] * b[2]);
            gr = gr.max(rel_gap(rm.bilinear(&rv[i], &rv[j]), 2.5 * mass));
            gh = gh.max(rel_gap(rh.bilinear(&rv[i], &rv[j]), 0.5 * (mass + divdiv)));
        }
    }
    out.push(("RT0 mass", gr));
    out.push(("RT0 H(div)", gh));
    out
}

pub fn eight_segment_space(family: IfaceFamily) -> InterfaceSpace {
    let (_, iface) = build_unit_square_subproblem(0.25, FacetTag::DirF, FacetTag::NeuF).unwrap();
    assert_eq!(iface.num_segments(), 8);
    InterfaceSpace::new(Arc::new(iface), family, 1).unwrap()
}

pub fn max_abs_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut d = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            d = d.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    d
}

/// Largest deviation in `H(0) = w M`, `H(1) = w (L + M)` and
/// `H(s) Phi Phi^T H(t) = H(s + t)` over families and flavors.
pub fn fractional_identity_gap(weight: f64, s: f64, t: f64) -> f64 {
    let mut worst = 0.0f64;
    for family in [IfaceFamily::P0, IfaceFamily::P1] {
        let sp = eight_segment_space(family);
        for flavor in [Flavor::Free, Flavor::Zero00] {
            let eig = InterfaceEigen::new(&sp, flavor).unwrap();
            let m = sp.mass().to_dense();
            let a = assemble_interface_laplacian(&sp, flavor).to_dense() + &m;
            let n = m.nrows();
            // P1 with zero endpoints lives on the interior vertices only
            let keep: Vec<usize> = if family == IfaceFamily::P1 && flavor == Flavor::Zero00 {
                (1..n - 1).collect()
            } else {
                (0..n).collect()
            };
            let restrict = |x: &Mat<f64>| Mat::<f64>::from_fn(keep.len(), keep.len(), |i, j| x[(keep[i], keep[j])]);
            let scale = |x: &Mat<f64>, w: f64| Mat::<f64>::from_fn(x.nrows(), x.ncols(), |i, j| w * x[(i, j)]);
            worst = worst.max(max_abs_diff(&restrict(&eig.power(0.0, weight)), &restrict(&scale(&m, weight))));
            worst = worst.max(
                max_abs_diff(&restrict(&eig.power(1.0, weight)), &restrict(&scale(&a, weight)))
                    / a.norm_max().max(1.0),
            );
            let proj = eig.inverse_power(0.0, 1.0);
            let lhs = eig.power(s, 1.0) * &proj * eig.power(t, 1.0);
            let rhs = eig.power(s + t, 1.0);
            worst = worst.max(max_abs_diff(&lhs, &rhs) / rhs.norm_max().max(1.0));
        }
    }
    worst
}

/// Every problem with every preconditioner it accepts.
pub fn all_variants() -> Vec<(Problem, Precond)> {
    let mut out = Vec::new();
    for p in Problem::ALL {
        let list: &[Precond] = match p {
            Problem::PoissonNd | Problem::PoissonDd | Problem::PoissonNn => &[Precond::Nd, Precond::Dd, Precond::Nn],
            Problem::DarcyStokes | Problem::DarcyStokesDirichlet => &[Precond::Robust, Precond::Naive],
            Problem::StokesSub | Problem::DarcySub => &[Precond::Free, Precond::Zero00],
            Problem::NavierSub => &[Precond::Free, Precond::Zero00, Precond::N0, Precond::T0],
            Problem::StokesNavier | Problem::StokesNavierDirichlet => &[Precond::Robust],
        };
        for &pc in list {
            out.push((p, pc));
        }
    }
    out
}

pub fn relative_asymmetry(a: &SparseMatrix) -> f64 {
    a.max_asymmetry() / a.max_abs().max(f64::MIN_POSITIVE)
}

/// Worst relative asymmetry of system and preconditioner matrices, and
/// the variants whose preconditioner fails Cholesky.
pub fn symmetry_and_cholesky(h: f64, params: &ParameterSet) -> (f64, Vec<String>) {
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for (p, pc) in all_variants() {
        let b = p.build(params, h, pc).unwrap();
        worst = worst.max(relative_asymmetry(&b.a)).max(relative_asymmetry(&b.precond));
        if Factorization::cholesky(&b.precond).is_err() {
            failed.push(format!("{p}/{pc}"));
        }
    }
    (worst, failed)
}

/// Whether the MinRes residual history never increases (up to rounding).
pub fn minres_monotone(problem: Problem, h: f64, seed: u64) -> bool {
    let b = problem
        .build(&ParameterSet::default(), h, problem.default_precond())
        .unwrap();
    let opts = MinresOptions {
        tol: 1e-10,
        max_iter: 2000,
        seed,
    };
    let deflate = b.deflation.is_some();
    let r = b.solve(&opts, deflate).unwrap();
    r.converged && r.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
}

/// Deviation of the RT0 normal trace from its closed form: the entry for
/// segment `s` and the facet below it is `(n_facet . n_gamma) |s|`, every
/// other entry vanishes.
pub fn rt0_normal_trace_gap(h: f64) -> f64 {
    let (mesh, iface) = build_unit_square_subproblem(h, FacetTag::DirP, FacetTag::NeuP).unwrap();
    let mesh = Arc::new(mesh);
    let map = iface.facet_map(&mesh).unwrap();
    let sp = InterfaceSpace::new(Arc::new(iface), IfaceFamily::P0, 1).unwrap();
    let rt = FunctionSpace::new(mesh.clone(), Family::RT0, ValueRank::Vector2, &[]).unwrap();
    let t = assemble_normal_trace(&rt, &sp, 1.0).unwrap();
    let n = sp.mesh.normal;
    let mut gap = 0.0f64;
    let dense = t.to_dense();
    for s in 0..sp.scalar_dofs() {
        for f in 0..rt.num_dofs() {
            let want = if map[s] == f {
                let nf = rt.facet_normal(f);
                (nf[0] * n[0] + nf[1] * n[1]) * sp.mesh.segment_length(s)
            } else {
                0.0
            };
            gap = gap.max((dense[(s, f)] - want).abs());
        }
    }
    gap
}

/// `max |E r|` over the three rigid motions, relative to `max |E|`.
pub fn rigid_motion_residual(h: f64) -> f64 {
    let mesh = Arc::new(build_rect_mesh(0.0, 1.0, 0.0, 1.0, (2.0 / h) as usize, (2.0 / h) as usize).unwrap());
    let v = FunctionSpace::new(mesh, Family::P2, ValueRank::Vector2, &[]).unwrap();
    let e = assemble_epsilon_form(&v, 1.0).unwrap();
    let motions: [fn([f64; 2]) -> [f64; 2]; 3] = [|_| [1.0, 0.0], |_| [0.0, 1.0], |x| [-x[1], x[0]]];
    let mut worst = 0.0f64;
    for r in motions {
        let x = interpolate(&v, r);
        let y = e.mul_vec(&x);
        worst = worst.max(y.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    worst / e.max_abs()
}
