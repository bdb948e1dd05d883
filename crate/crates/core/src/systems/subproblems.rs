use std::sync::Arc;

use super::{reference, Assembly, Field, ParameterSet, Precond, SystemBundle};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_div, assemble_epsilon_form, assemble_hdiv_operator, assemble_mass,
    assemble_stiffness, interpolate, Family, FunctionSpace, ValueRank,
};
use crate::interface::{
    assemble_normal_trace, assemble_tangential_trace_mass, assemble_trace, interface_means,
    sum_fractional, vector_fractional, Flavor, FractionalSpec, IfaceFamily, InterfaceSpace,
    TraceKind,
};
use crate::mesh::{
    build_coupled_mesh, build_rect_mesh, build_unit_square_subproblem, cells_per_unit,
    CoupledGeometry, FacetTag, InterfaceMesh, Mesh, Side,
};

/// Where a single-domain subproblem lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SubDomain {
    /// `[0,1]^2` with the interface on `x = 0`.
    UnitSquare,
    /// `[0,1/2]x[0,1]` with the interface on `x = 1/2`, as in the coupled
    /// geometry.
    HalfStrip,
}

fn sub_mesh(h: f64, domain: SubDomain) -> Result<(Arc<Mesh>, Arc<InterfaceMesh>)> {
    let (m, i) = match domain {
        SubDomain::UnitSquare => build_unit_square_subproblem(h, FacetTag::DirF, FacetTag::NeuF)?,
        SubDomain::HalfStrip => {
            let cm = build_coupled_mesh(h, CoupledGeometry::DarcyStokes)?;
            (cm.fluid, cm.interface)
        }
    };
    Ok((Arc::new(m), Arc::new(i)))
}

pub(crate) struct StokesParts {
    pub asm: Assembly,
    pub u: FunctionSpace,
    pub p: FunctionSpace,
    pub q: InterfaceSpace,
}

/// Stokes with a normal-flux multiplier and unit tangential slip:
/// fields `(u, p, lambda)`.
pub(crate) fn stokes_parts(params: &ParameterSet, h: f64, flavor: Flavor, domain: SubDomain) -> Result<StokesParts> {
    let (mesh, iface) = sub_mesh(h, domain)?;
    let mu = params.mu;
    let u = FunctionSpace::new(mesh.clone(), Family::P2, ValueRank::Vector2, &[FacetTag::DirF])?;
    let p = FunctionSpace::new(mesh, Family::P1, ValueRank::Scalar, &[])?;
    let q = InterfaceSpace::new(iface.clone(), IfaceFamily::P0, 1)?;
    let fields = vec![
        Field::new("u", u.num_dofs()),
        Field::new("p", p.num_dofs()),
        Field::new("lambda", q.num_dofs()),
    ];
    let mut asm = Assembly::new("stokes-sub", fields);
    let a = assemble_stiffness(&u, mu)?.add_scaled(&assemble_tangential_trace_mass(&u, &iface, 1.0)?, 1.0)?;
    asm.op.add(0, 0, a.clone())?;
    asm.op.add_coupling(1, 0, assemble_div(&u, &p)?)?;
    asm.op.add_coupling(2, 0, assemble_normal_trace(&u, &q, 1.0)?)?;
    asm.prec.add(0, 0, a)?;
    asm.prec.add(1, 1, assemble_mass(&p, 1.0 / mu)?)?;
    let s = sum_fractional(&q, &[FractionalSpec::new(-0.5, 1.0 / mu, flavor)])?;
    asm.prec.add(2, 2, s.to_sparse())?;
    asm.constrained = vec![u.dirichlet_dofs().to_vec(), vec![], vec![]];
    Ok(StokesParts { asm, u, p, q })
}

pub fn build_stokes_subproblem(params: &ParameterSet, h: f64, flavor: Flavor, domain: SubDomain) -> Result<SystemBundle> {
    let parts = stokes_parts(params, h, flavor, domain)?;
    let mut x = interpolate(&parts.u, reference::vector);
    x.extend(interpolate(&parts.p, reference::scalar));
    x.extend(interface_means(&parts.q, reference::interface));
    parts.asm.finish_with_reference(x)
}

pub(crate) struct DarcyParts {
    pub asm: Assembly,
    pub u: FunctionSpace,
    pub p: FunctionSpace,
    pub q: InterfaceSpace,
}

/// Mixed Darcy with a normal-flux multiplier: fields `(u, p, lambda)`.
pub(crate) fn darcy_parts(params: &ParameterSet, h: f64, flavor: Flavor, domain: SubDomain) -> Result<DarcyParts> {
    let (mesh, iface) = sub_mesh(h, domain)?;
    let kk = params.perm;
    let u = FunctionSpace::new(mesh.clone(), Family::RT0, ValueRank::Vector2, &[FacetTag::DirF])?;
    let p = FunctionSpace::new(mesh, Family::P0, ValueRank::Scalar, &[])?;
    let q = InterfaceSpace::new(iface, IfaceFamily::P0, 1)?;
    let fields = vec![
        Field::new("u", u.num_dofs()),
        Field::new("p", p.num_dofs()),
        Field::new("lambda", q.num_dofs()),
    ];
    let mut asm = Assembly::new("darcy-sub", fields);
    asm.op.add(0, 0, assemble_mass(&u, 1.0 / kk)?)?;
    asm.op.add_coupling(1, 0, assemble_div(&u, &p)?)?;
    asm.op.add_coupling(2, 0, assemble_normal_trace(&u, &q, 1.0)?)?;
    asm.prec.add(0, 0, assemble_hdiv_operator(&u, 1.0 / kk)?)?;
    asm.prec.add(1, 1, assemble_mass(&p, kk)?)?;
    let s = sum_fractional(&q, &[FractionalSpec::new(0.5, kk, flavor)])?;
    asm.prec.add(2, 2, s.to_sparse())?;
    asm.constrained = vec![u.dirichlet_dofs().to_vec(), vec![], vec![]];
    Ok(DarcyParts { asm, u, p, q })
}

pub fn build_darcy_subproblem(params: &ParameterSet, h: f64, flavor: Flavor, domain: SubDomain) -> Result<SystemBundle> {
    let parts = darcy_parts(params, h, flavor, domain)?;
    let mut x = interpolate(&parts.u, reference::vector);
    x.extend(interpolate(&parts.p, reference::scalar));
    x.extend(interface_means(&parts.q, reference::interface));
    parts.asm.finish_with_reference(x)
}

pub(crate) struct NavierParts {
    pub asm: Assembly,
    pub u: FunctionSpace,
    pub p: FunctionSpace,
    pub q: InterfaceSpace,
}

/// Per-component flavors `[normal, tangential]` of a Navier preconditioner.
fn navier_flavors(precond: Precond) -> Result<[Flavor; 2]> {
    Ok(match precond {
        Precond::Free | Precond::Robust => [Flavor::Free, Flavor::Free],
        Precond::Zero00 => [Flavor::Zero00, Flavor::Zero00],
        Precond::N0 => [Flavor::Zero00, Flavor::Free],
        Precond::T0 => [Flavor::Free, Flavor::Zero00],
        p => return Err(Error::InvalidArgument(format!("navier-sub has no {p} preconditioner"))),
    })
}

/// Stokes in symmetric-gradient form with a full vector trace multiplier:
/// fields `(u, p, lambda)`.
pub(crate) fn navier_parts(params: &ParameterSet, h: f64, precond: Precond, domain: SubDomain) -> Result<NavierParts> {
    let [fn_, ft] = navier_flavors(precond)?;
    let (mesh, iface) = sub_mesh(h, domain)?;
    let mu = params.mu;
    let u = FunctionSpace::new(mesh.clone(), Family::P2, ValueRank::Vector2, &[FacetTag::DirF])?;
    let p = FunctionSpace::new(mesh, Family::P1, ValueRank::Scalar, &[])?;
    let q = InterfaceSpace::new(iface, IfaceFamily::P0, 2)?;
    let fields = vec![
        Field::new("u", u.num_dofs()),
        Field::new("p", p.num_dofs()),
        Field::new("lambda", q.num_dofs()),
    ];
    let mut asm = Assembly::new("navier-sub", fields);
    let a = assemble_epsilon_form(&u, mu)?;
    asm.op.add(0, 0, a.clone())?;
    asm.op.add_coupling(1, 0, assemble_div(&u, &p)?)?;
    asm.op.add_coupling(2, 0, assemble_trace(&u, &q, TraceKind::Full)?)?;
    asm.prec.add(0, 0, a)?;
    asm.prec.add(1, 1, assemble_mass(&p, 1.0 / mu)?)?;
    // the interface is vertical, so component 0 is the normal direction
    let s = vector_fractional(
        &q,
        [
            &[FractionalSpec::new(-0.5, 1.0 / mu, fn_)],
            &[FractionalSpec::new(-0.5, 1.0 / mu, ft)],
        ],
    )?;
    asm.prec.add(2, 2, s.to_sparse())?;
    asm.constrained = vec![u.dirichlet_dofs().to_vec(), vec![], vec![]];
    Ok(NavierParts { asm, u, p, q })
}

pub fn build_navier_subproblem(params: &ParameterSet, h: f64, precond: Precond, domain: SubDomain) -> Result<SystemBundle> {
    let parts = navier_parts(params, h, precond, domain)?;
    let mut x = interpolate(&parts.u, reference::vector);
    x.extend(interpolate(&parts.p, reference::scalar));
    x.extend(interface_means(&parts.q, reference::interface));
    parts.asm.finish_with_reference(x)
}

/// Subproblem kinds with every boundary condition imposed strongly and no
/// interface multiplier, on the half strip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrongKind {
    Stokes,
    Darcy,
    Navier,
}

/// Reference solves without a multiplier. Stokes-type variants have the
/// velocity fixed on the whole boundary, so the constant pressure is
/// deflated; the Darcy variant prescribes pressure naturally everywhere.
pub fn build_strong_subproblem(params: &ParameterSet, h: f64, kind: StrongKind) -> Result<SystemBundle> {
    let n = cells_per_unit(h)?;
    let mut mesh = build_rect_mesh(0.0, 0.5, 0.0, 1.0, n / 2, n)?;
    for s in Side::ALL {
        mesh.tag_side(s, FacetTag::DirF);
    }
    let mesh = Arc::new(mesh);
    let (mu, kk) = (params.mu, params.perm);
    match kind {
        StrongKind::Stokes | StrongKind::Navier => {
            let u = FunctionSpace::new(mesh.clone(), Family::P2, ValueRank::Vector2, &[FacetTag::DirF])?;
            let p = FunctionSpace::new(mesh, Family::P1, ValueRank::Scalar, &[])?;
            let name = if kind == StrongKind::Stokes { "stokes-strong" } else { "navier-strong" };
            let mut asm = Assembly::new(name, vec![Field::new("u", u.num_dofs()), Field::new("p", p.num_dofs())]);
            let a = if kind == StrongKind::Stokes {
                assemble_stiffness(&u, mu)?
            } else {
                assemble_epsilon_form(&u, mu)?
            };
            asm.op.add(0, 0, a.clone())?;
            asm.op.add_coupling(1, 0, assemble_div(&u, &p)?)?;
            asm.prec.add(0, 0, a)?;
            asm.prec.add(1, 1, assemble_mass(&p, 1.0 / mu)?)?;
            asm.constrained = vec![u.dirichlet_dofs().to_vec(), vec![]];
            let mut z = vec![0.0; u.num_dofs()];
            z.extend(std::iter::repeat(1.0).take(p.num_dofs()));
            asm.deflation = Some(z);
            let mut x = interpolate(&u, reference::vector);
            x.extend(interpolate(&p, reference::scalar));
            asm.finish_with_reference(x)
        }
        StrongKind::Darcy => {
            let u = FunctionSpace::new(mesh.clone(), Family::RT0, ValueRank::Vector2, &[])?;
            let p = FunctionSpace::new(mesh, Family::P0, ValueRank::Scalar, &[])?;
            let mut asm = Assembly::new("darcy-strong", vec![Field::new("u", u.num_dofs()), Field::new("p", p.num_dofs())]);
            asm.op.add(0, 0, assemble_mass(&u, 1.0 / kk)?)?;
            asm.op.add_coupling(1, 0, assemble_div(&u, &p)?)?;
            asm.prec.add(0, 0, assemble_hdiv_operator(&u, 1.0 / kk)?)?;
            asm.prec.add(1, 1, assemble_mass(&p, kk)?)?;
            asm.constrained = vec![vec![], vec![]];
            let mut x = interpolate(&u, reference::vector);
            x.extend(interpolate(&p, reference::scalar));
            asm.finish_with_reference(x)
        }
    }
}
