//! Manufactured solutions on the unit-square subproblems and the observed
//! convergence rates of the discrete solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use super::subproblems::{darcy_parts, navier_parts, stokes_parts, SubDomain};
use super::{Assembly, ParameterSet, Precond, SystemBundle};
use crate::error::{Error, Result};
use crate::fem::quadrature::{gauss_legendre, TriangleRule};
use crate::fem::space::facet_point;
use crate::fem::{assemble_boundary_load, assemble_load, interpolate, FunctionSpace, LocalBasis};
use crate::interface::{
    assemble_interface_load, fractional_error_norm, p0_to_p1, Flavor, IfaceFamily, InterfaceSpace,
};
use crate::mesh::{FacetTag, InterfaceMesh};
use crate::solve::{MinresOptions, MinresResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MmsProblem {
    Stokes,
    Darcy,
    Navier,
}

impl MmsProblem {
    pub fn error_names(self) -> &'static [&'static str] {
        match self {
            MmsProblem::Darcy => &["u", "p", "lambda"],
            _ => &["u", "p", "lambda"],
        }
    }
}

/// Errors of one refinement level, in the norms of the preconditioner
/// blocks.
#[derive(Clone, Debug)]
pub struct MmsLevel {
    pub h: f64,
    pub ndof: usize,
    pub iterations: usize,
    pub errors: Vec<(String, f64)>,
}

impl MmsLevel {
    pub fn error(&self, name: &str) -> Option<f64> {
        self.errors.iter().find(|(n, _)| n == name).map(|(_, e)| *e)
    }
}

#[derive(Clone, Debug)]
pub struct MmsStudy {
    pub problem: MmsProblem,
    pub levels: Vec<MmsLevel>,
    /// Least-squares slopes of `log e` against `log h`.
    pub rates: Vec<(String, f64)>,
}

impl MmsStudy {
    pub fn rate(&self, name: &str) -> Option<f64> {
        self.rates.iter().find(|(n, _)| n == name).map(|(_, r)| *r)
    }
}

/// Slope of the least-squares line through `(log h, log e)`.
pub fn least_squares_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn run_mms(problem: MmsProblem, params: &ParameterSet, hs: &[f64], opts: &MinresOptions) -> Result<MmsStudy> {
    if hs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two mesh sizes".into()));
    }
    let levels = hs
        .iter()
        .map(|&h| mms_level(problem, params, h, opts))
        .collect::<Result<Vec<_>>>()?;
    let hv: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let rates = problem
        .error_names()
        .iter()
        .map(|name| {
            let e: Vec<f64> = levels.iter().map(|l| l.error(name).unwrap()).collect();
            (name.to_string(), least_squares_slope(&hv, &e))
        })
        .collect();
    Ok(MmsStudy {
        problem,
        levels,
        rates,
    })
}

// u = (sin(pi x) cos(pi y), -cos(pi x) sin(pi y)), divergence free
fn flow_u(x: [f64; 2]) -> [f64; 2] {
    let (sx, cx, sy, cy) = trig(x);
    [sx * cy, -cx * sy]
}

/// `grad[comp][dir]`
fn flow_grad(x: [f64; 2]) -> [[f64; 2]; 2] {
    let (sx, cx, sy, cy) = trig(x);
    [[PI * cx * cy, -PI * sx * sy], [PI * sx * sy, -PI * cx * cy]]
}

fn flow_p(x: [f64; 2]) -> f64 {
    let (_, cx, _, cy) = trig(x);
    cx * cy
}

fn flow_grad_p(x: [f64; 2]) -> [f64; 2] {
    let (sx, cx, sy, cy) = trig(x);
    [-PI * sx * cy, -PI * cx * sy]
}

/// `-mu lap u - grad p` (the pressure unknown enters with a plus sign).
fn flow_source(mu: f64, x: [f64; 2]) -> [f64; 2] {
    let u = flow_u(x);
    let gp = flow_grad_p(x);
    [2.0 * PI * PI * mu * u[0] - gp[0], 2.0 * PI * PI * mu * u[1] - gp[1]]
}

fn trig(x: [f64; 2]) -> (f64, f64, f64, f64) {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    (sx, cx, sy, cy)
}

fn matvec(g: &[[f64; 2]; 2], n: [f64; 2]) -> [f64; 2] {
    [g[0][0] * n[0] + g[0][1] * n[1], g[1][0] * n[0] + g[1][1] * n[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn strain_traction(mu: f64, x: [f64; 2], n: [f64; 2]) -> [f64; 2] {
    let g = flow_grad(x);
    let gn = matvec(&g, n);
    let gtn = [g[0][0] * n[0] + g[1][0] * n[1], g[0][1] * n[0] + g[1][1] * n[1]];
    [mu * (gn[0] + gtn[0]), mu * (gn[1] + gtn[1])]
}

// Darcy: p = cos(pi x) sin(pi y), u = K grad p
fn darcy_p(x: [f64; 2]) -> f64 {
    let (_, cx, sy, _) = trig(x);
    cx * sy
}

fn darcy_u(kk: f64, x: [f64; 2]) -> [f64; 2] {
    let (sx, cx, sy, cy) = trig(x);
    [-kk * PI * sx * sy, kk * PI * cx * cy]
}

fn darcy_div(kk: f64, x: [f64; 2]) -> f64 {
    -2.0 * kk * PI * PI * darcy_p(x)
}

fn interface_point(iface: &InterfaceMesh, y: f64) -> [f64; 2] {
    [iface.x, y]
}

fn mms_level(problem: MmsProblem, params: &ParameterSet, h: f64, opts: &MinresOptions) -> Result<MmsLevel> {
    let mu = params.mu;
    let kk = params.perm;
    match problem {
        MmsProblem::Stokes => {
            let parts = stokes_parts(params, h, Flavor::Free, SubDomain::UnitSquare)?;
            let (u, p, q) = (&parts.u, &parts.p, &parts.q);
            let iface = q.mesh.clone();
            let (n, tau) = (iface.normal, iface.tangent());
            let lambda = |y: f64| {
                let x = interface_point(&iface, y);
                -(mu * dot(matvec(&flow_grad(x), n), n) + flow_p(x))
            };
            let mut fu = assemble_load(u, 6, |x| flow_source(mu, x));
            add(&mut fu, &assemble_boundary_load(u, FacetTag::NeuF, 5, |x, nn| {
                let t = matvec(&flow_grad(x), nn);
                let pv = flow_p(x);
                [mu * t[0] + pv * nn[0], mu * t[1] + pv * nn[1]]
            }));
            add(&mut fu, &assemble_boundary_load(u, FacetTag::Interface, 5, |x, _| {
                let s = mu * dot(matvec(&flow_grad(x), n), tau) + dot(flow_u(x), tau);
                [s * tau[0], s * tau[1]]
            }));
            let fp = vec![0.0; p.num_dofs()];
            let fq = assemble_interface_load(q, 5, |y| [dot(flow_u(interface_point(&iface, y)), n), 0.0]);
            let ue = interpolate(u, flow_u);
            let (bundle, res) = solve_parts(parts.asm, [fu, fp, fq], [ue, vec![0.0; p.num_dofs()], vec![0.0; q.num_dofs()]], opts)?;
            let x = &res.x;
            let uh = bundle.field_values(x, "u").unwrap();
            let ph = bundle.field_values(x, "p").unwrap();
            let lh = bundle.field_values(x, "lambda").unwrap();
            let eu = (mu * cell_error(u, uh, 6, |lb, xq, uv| {
                let g = lb.gradient(uv);
                let ge = flow_grad(xq);
                sq(g[0][0] - ge[0][0]) + sq(g[0][1] - ge[0][1]) + sq(g[1][0] - ge[1][0]) + sq(g[1][1] - ge[1][1])
            }) + interface_error(u, &iface, uh, |v, xq| sq(dot(v, tau) - dot(flow_u(xq), tau))))
            .sqrt();
            let ep = (cell_error(p, ph, 4, |lb, xq, pv| sq(lb.value(pv)[0] - flow_p(xq))) / mu).sqrt();
            let el = multiplier_error(q, lh, Flavor::Free, -0.5, 1.0 / mu, |y| [lambda(y), 0.0])?;
            Ok(level(h, &bundle, &res, [eu, ep, el]))
        }
        MmsProblem::Darcy => {
            let parts = darcy_parts(params, h, Flavor::Zero00, SubDomain::UnitSquare)?;
            let (u, p, q) = (&parts.u, &parts.p, &parts.q);
            let iface = q.mesh.clone();
            let n = iface.normal;
            let fu = assemble_boundary_load(u, FacetTag::NeuF, 5, |x, nn| {
                let pv = darcy_p(x);
                [pv * nn[0], pv * nn[1]]
            });
            let fp = assemble_load(p, 6, |x| [darcy_div(kk, x), 0.0]);
            let fq = assemble_interface_load(q, 5, |y| [dot(darcy_u(kk, interface_point(&iface, y)), n), 0.0]);
            let ue = interpolate(u, |x| darcy_u(kk, x));
            let (bundle, res) = solve_parts(parts.asm, [fu, fp, fq], [ue, vec![0.0; p.num_dofs()], vec![0.0; q.num_dofs()]], opts)?;
            let x = &res.x;
            let uh = bundle.field_values(x, "u").unwrap();
            let ph = bundle.field_values(x, "p").unwrap();
            let lh = bundle.field_values(x, "lambda").unwrap();
            let eu = (cell_error(u, uh, 6, |lb, xq, uv| {
                let v = lb.value(uv);
                let ue = darcy_u(kk, xq);
                sq(v[0] - ue[0]) + sq(v[1] - ue[1]) + sq(lb.divergence(uv) - darcy_div(kk, xq))
            }) / kk)
                .sqrt();
            let ep = (kk * cell_error(p, ph, 6, |lb, xq, pv| sq(lb.value(pv)[0] - darcy_p(xq)))).sqrt();
            let el = multiplier_error(q, lh, Flavor::Zero00, 0.5, kk, |y| {
                [-darcy_p(interface_point(&iface, y)), 0.0]
            })?;
            Ok(level(h, &bundle, &res, [eu, ep, el]))
        }
        MmsProblem::Navier => {
            let parts = navier_parts(params, h, Precond::Free, SubDomain::UnitSquare)?;
            let (u, p, q) = (&parts.u, &parts.p, &parts.q);
            let iface = q.mesh.clone();
            let n = iface.normal;
            let lambda = |y: f64| {
                let x = interface_point(&iface, y);
                let t = strain_traction(mu, x, n);
                let pv = flow_p(x);
                [-(t[0] + pv * n[0]), -(t[1] + pv * n[1])]
            };
            let mut fu = assemble_load(u, 6, |x| flow_source(mu, x));
            add(&mut fu, &assemble_boundary_load(u, FacetTag::NeuF, 5, |x, nn| {
                let t = strain_traction(mu, x, nn);
                let pv = flow_p(x);
                [t[0] + pv * nn[0], t[1] + pv * nn[1]]
            }));
            let fp = vec![0.0; p.num_dofs()];
            let fq = assemble_interface_load(q, 5, |y| flow_u(interface_point(&iface, y)));
            let ue = interpolate(u, flow_u);
            let (bundle, res) = solve_parts(parts.asm, [fu, fp, fq], [ue, vec![0.0; p.num_dofs()], vec![0.0; q.num_dofs()]], opts)?;
            let x = &res.x;
            let uh = bundle.field_values(x, "u").unwrap();
            let ph = bundle.field_values(x, "p").unwrap();
            let lh = bundle.field_values(x, "lambda").unwrap();
            let eu = (2.0 * mu * cell_error(u, uh, 6, |lb, xq, uv| {
                let g = lb.gradient(uv);
                let ge = flow_grad(xq);
                let d = [[g[0][0] - ge[0][0], g[0][1] - ge[0][1]], [g[1][0] - ge[1][0], g[1][1] - ge[1][1]]];
                let off = 0.5 * (d[0][1] + d[1][0]);
                sq(d[0][0]) + 2.0 * sq(off) + sq(d[1][1])
            }))
            .sqrt();
            let ep = (cell_error(p, ph, 4, |lb, xq, pv| sq(lb.value(pv)[0] - flow_p(xq))) / mu).sqrt();
            let el = multiplier_error(q, lh, Flavor::Free, -0.5, 1.0 / mu, lambda)?;
            Ok(level(h, &bundle, &res, [eu, ep, el]))
        }
    }
}

fn sq(v: f64) -> f64 {
    v * v
}

fn add(a: &mut [f64], b: &[f64]) {
    a.iter_mut().zip(b).for_each(|(a, b)| *a += b);
}

fn level(h: f64, bundle: &SystemBundle, res: &MinresResult, e: [f64; 3]) -> MmsLevel {
    MmsLevel {
        h,
        ndof: bundle.ndof(),
        iterations: res.iterations,
        errors: ["u", "p", "lambda"].iter().zip(e).map(|(n, v)| (n.to_string(), v)).collect(),
    }
}

fn solve_parts(
    asm: Assembly,
    loads: [Vec<f64>; 3],
    values: [Vec<f64>; 3],
    opts: &MinresOptions,
) -> Result<(SystemBundle, MinresResult)> {
    let rhs: Vec<f64> = loads.concat();
    let vals: Vec<f64> = values.concat();
    let bundle = asm.finish(Some((rhs, vals)))?;
    let res = bundle.solve(opts, false)?;
    if !res.converged {
        return Err(Error::InvalidArgument(format!(
            "MinRes did not converge in {} iterations",
            res.iterations
        )));
    }
    Ok((bundle, res))
}

/// `sum_T int_T f(basis, x, u_h)` with a triangle rule of `degree`.
fn cell_error<F>(space: &FunctionSpace, uh: &[f64], degree: usize, f: F) -> f64
where
    F: Fn(&LocalBasis, [f64; 2], &[f64]) -> f64,
{
    let rule = TriangleRule::new(degree);
    let mut lb = LocalBasis::default();
    let mut total = 0.0;
    for c in 0..space.mesh.num_cells() {
        let geom = space.cell_geometry(c);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            space.eval(c, &geom, p, &mut lb);
            total += w * geom.area * f(&lb, geom.point(p), uh);
        }
    }
    total
}

/// `int_Gamma f(u_h, x)` over the interface facets of `space`.
fn interface_error<F>(space: &FunctionSpace, iface: &Arc<InterfaceMesh>, uh: &[f64], f: F) -> f64
where
    F: Fn([f64; 2], [f64; 2]) -> f64,
{
    let map = iface.facet_map(&space.mesh).expect("interface matches mesh");
    let (tq, wq) = gauss_legendre(5);
    let mut lb = LocalBasis::default();
    let mut total = 0.0;
    for fct in map {
        let facet = &space.mesh.facets[fct];
        let (c, k) = (facet.cells[0], facet.local[0]);
        let geom = space.cell_geometry(c);
        let len = space.mesh.facet_length(fct);
        for (t, w) in tq.iter().zip(&wq) {
            let bary = facet_point(k, *t);
            space.eval(c, &geom, &bary, &mut lb);
            total += w * len * f(lb.value(uh), geom.point(&bary));
        }
    }
    total
}

/// Weighted fractional norm of `lambda - lambda_h`, measured after lifting
/// the piecewise constant multiplier to continuous P1 by vertex averaging
/// and interpolating the exact multiplier at the vertices.
fn multiplier_error<G>(
    q: &InterfaceSpace,
    lh: &[f64],
    flavor: Flavor,
    s: f64,
    weight: f64,
    exact: G,
) -> Result<f64>
where
    G: Fn(f64) -> [f64; 2],
{
    let nc = q.components;
    let p1 = InterfaceSpace::new(q.mesh.clone(), IfaceFamily::P1, 1)?;
    let lifted = p0_to_p1(lh, nc);
    let mut total = 0.0;
    for c in 0..nc {
        let e: Vec<f64> = q
            .mesh
            .vertices
            .iter()
            .enumerate()
            .map(|(v, &y)| exact(y)[c] - lifted[nc * v + c])
            .collect();
        total += sq(fractional_error_norm(&p1, flavor, s, &e)?);
    }
    Ok((weight * total).sqrt())
}
