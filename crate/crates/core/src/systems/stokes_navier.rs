use std::sync::Arc;

use super::{reference, Assembly, BcMode, Field, ParameterSet, SystemBundle};
use crate::error::Result;
use crate::fem::{
    assemble_div, assemble_epsilon_form, assemble_mass, interpolate, Family, FunctionSpace,
    ValueRank,
};
use crate::interface::{
    assemble_trace, interface_means, vector_fractional, Flavor, FractionalSpec, IfaceFamily,
    InterfaceSpace, TraceKind,
};
use crate::mesh::{build_coupled_mesh, CoupledGeometry, FacetTag};

/// Stokes coupled to a (nearly) incompressible elastic body through the
/// full interface trace: fields `(u_f, u_p, p_f, p_p, lambda)`.
pub fn build_stokes_navier(params: &ParameterSet, h: f64, bc: BcMode) -> Result<SystemBundle> {
    let geom = match bc {
        BcMode::Mixed => CoupledGeometry::DarcyStokes,
        BcMode::AllDirichlet => CoupledGeometry::AllDirichlet,
    };
    let cm = build_coupled_mesh(h, geom)?;
    let (mu, k, eta) = (params.mu, params.k, params.eta);
    let mf = Arc::new(cm.fluid);
    let mp = Arc::new(cm.porous);
    let iface = Arc::new(cm.interface);
    let n = iface.normal;

    let uf = FunctionSpace::new(mf.clone(), Family::P2, ValueRank::Vector2, &[FacetTag::DirF])?;
    let up = FunctionSpace::new(mp.clone(), Family::P2, ValueRank::Vector2, &[FacetTag::DirP])?;
    let pf = FunctionSpace::new(mf, Family::P1, ValueRank::Scalar, &[])?;
    let pp = FunctionSpace::new(mp, Family::P1, ValueRank::Scalar, &[])?;
    let q = InterfaceSpace::new(iface, IfaceFamily::P0, 2)?;

    let fields = vec![
        Field::new("u_f", uf.num_dofs()),
        Field::new("u_p", up.num_dofs()),
        Field::new("p_f", pf.num_dofs()),
        Field::new("p_p", pp.num_dofs()),
        Field::new("lambda", q.num_dofs()),
    ];
    let name = match bc {
        BcMode::Mixed => "stokes-navier",
        BcMode::AllDirichlet => "stokes-navier-dirichlet",
    };
    let mut asm = Assembly::new(name, fields);

    let af = assemble_epsilon_form(&uf, mu)?;
    let ap = assemble_epsilon_form(&up, 1.0)?;
    asm.op.add(0, 0, af.clone())?;
    asm.op.add(1, 1, ap.clone())?;
    asm.op.add_coupling(2, 0, assemble_div(&uf, &pf)?)?;
    asm.op.add_coupling(3, 1, assemble_div(&up, &pp)?)?;
    if eta.is_finite() {
        asm.op.add(3, 3, assemble_mass(&pp, -1.0 / eta)?)?;
    }
    asm.op.add_coupling(4, 0, assemble_trace(&uf, &q, TraceKind::Full)?.scaled(k))?;
    asm.op.add_coupling(4, 1, assemble_trace(&up, &q, TraceKind::Full)?.scaled(-1.0))?;

    asm.prec.add(0, 0, af)?;
    asm.prec.add(1, 1, ap)?;
    asm.prec.add(2, 2, assemble_mass(&pf, 1.0 / mu)?)?;
    asm.prec.add(3, 3, assemble_mass(&pp, 1.0)?)?;
    let flavor = match bc {
        BcMode::Mixed => Flavor::Free,
        BcMode::AllDirichlet => Flavor::Zero00,
    };
    let spec = [FractionalSpec::new(-0.5, k * k / mu + 1.0, flavor)];
    asm.prec.add(4, 4, vector_fractional(&q, [&spec, &spec])?.to_sparse())?;

    asm.constrained = vec![
        uf.dirichlet_dofs().to_vec(),
        up.dirichlet_dofs().to_vec(),
        vec![],
        vec![],
        vec![],
    ];
    if bc == BcMode::AllDirichlet {
        // p_f = k, p_p = 1, lambda = -n lies in the kernel when the
        // penalty is absent and dominates the spectrum when it is weak
        let mut z = vec![0.0; uf.num_dofs() + up.num_dofs()];
        z.extend(std::iter::repeat(k).take(pf.num_dofs()));
        z.extend(std::iter::repeat(1.0).take(pp.num_dofs()));
        for _ in 0..q.scalar_dofs() {
            z.extend_from_slice(&[-n[0], -n[1]]);
        }
        asm.deflation = Some(z);
    }

    let mut x = interpolate(&uf, reference::vector);
    x.extend(interpolate(&up, reference::vector));
    x.extend(interpolate(&pf, reference::scalar));
    x.extend(interpolate(&pp, reference::scalar));
    x.extend(interface_means(&q, reference::interface));
    asm.finish_with_reference(x)
}
