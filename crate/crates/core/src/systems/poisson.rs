use std::sync::Arc;

use super::{reference, Assembly, Field, ParameterSet, PoissonCase, SystemBundle};
use crate::error::Result;
use crate::fem::{assemble_stiffness, interpolate, Family, FunctionSpace, ValueRank};
use crate::interface::{
    assemble_trace, interface_means, sum_fractional, Flavor, FractionalSpec, IfaceFamily,
    InterfaceSpace, TraceKind,
};
use crate::mesh::{build_coupled_mesh, CoupledGeometry, FacetTag};

/// Two-domain Poisson problem coupled by a Lagrange multiplier.
///
/// `case` fixes the boundary conditions of the operator and `precond`
/// selects which interface operator the preconditioner uses; the two can
/// be mixed to show what happens when the preconditioner does not match.
pub fn build_poisson_interface(
    params: &ParameterSet,
    h: f64,
    case: PoissonCase,
    precond: PoissonCase,
) -> Result<SystemBundle> {
    let geom = match case {
        PoissonCase::Nd => CoupledGeometry::PoissonNd,
        PoissonCase::Dd => CoupledGeometry::PoissonDd,
        PoissonCase::Nn => CoupledGeometry::PoissonNn,
    };
    let cm = build_coupled_mesh(h, geom)?;
    let (k1, k2) = (params.kappa1, params.kappa2);
    let m1 = Arc::new(cm.fluid);
    let m2 = Arc::new(cm.porous);
    let iface = Arc::new(cm.interface);
    let v1 = FunctionSpace::new(m1, Family::P2, ValueRank::Scalar, &[FacetTag::DirF])?;
    let v2 = FunctionSpace::new(m2, Family::P2, ValueRank::Scalar, &[FacetTag::DirP])?;
    let q = InterfaceSpace::new(iface, IfaceFamily::P0, 1)?;

    let fields = vec![
        Field::new("u1", v1.num_dofs()),
        Field::new("u2", v2.num_dofs()),
        Field::new("lambda", q.num_dofs()),
    ];
    let name = match case {
        PoissonCase::Nd => "poisson-nd",
        PoissonCase::Dd => "poisson-dd",
        PoissonCase::Nn => "poisson-nn",
    };
    let mut asm = Assembly::new(name, fields);

    let a1 = assemble_stiffness(&v1, k1)?;
    let a2 = assemble_stiffness(&v2, k2)?;
    asm.op.add(0, 0, a1.clone())?;
    asm.op.add(1, 1, a2.clone())?;
    asm.op.add_coupling(2, 0, assemble_trace(&v1, &q, TraceKind::Full)?)?;
    asm.op.add_coupling(2, 1, assemble_trace(&v2, &q, TraceKind::Full)?.scaled(-1.0))?;

    let (f1, f2) = match precond {
        PoissonCase::Nd => (Flavor::Free, Flavor::Zero00),
        PoissonCase::Dd => (Flavor::Zero00, Flavor::Zero00),
        PoissonCase::Nn => (Flavor::Free, Flavor::Free),
    };
    let s = sum_fractional(
        &q,
        &[FractionalSpec::new(-0.5, 1.0 / k1, f1), FractionalSpec::new(-0.5, 1.0 / k2, f2)],
    )?;
    asm.prec.add(0, 0, a1)?;
    asm.prec.add(1, 1, a2)?;
    asm.prec.add(2, 2, s.to_sparse())?;
    asm.constrained = vec![v1.dirichlet_dofs().to_vec(), v2.dirichlet_dofs().to_vec(), vec![]];

    let mut x = interpolate(&v1, reference::scalar);
    x.extend(interpolate(&v2, reference::scalar));
    x.extend(interface_means(&q, reference::interface));
    asm.finish_with_reference(x)
}
