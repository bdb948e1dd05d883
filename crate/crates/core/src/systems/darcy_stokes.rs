use std::sync::Arc;

use super::{reference, Assembly, BcMode, Field, ParameterSet, Precond, SystemBundle};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_div, assemble_hdiv_operator, assemble_mass, assemble_stiffness, interpolate, Family,
    FunctionSpace, SparseMatrix, ValueRank,
};
use crate::interface::{
    assemble_normal_trace, assemble_tangential_trace_mass, interface_means, sum_fractional,
    Flavor, FractionalSpec, IfaceFamily, InterfaceSpace,
};
use crate::mesh::{build_coupled_mesh, CoupledGeometry, FacetTag};

/// Coupled Stokes-Darcy problem with fields `(u_f, u_p, p_f, p_p, lambda)`
/// and, for the robust all-Dirichlet variant, an extra scalar `r` fixing
/// the mean of `p_f`.
pub fn build_darcy_stokes(params: &ParameterSet, h: f64, precond: Precond, bc: BcMode) -> Result<SystemBundle> {
    let naive = match precond {
        Precond::Naive => true,
        Precond::Robust => false,
        p => return Err(Error::InvalidArgument(format!("darcy-stokes has no {p} preconditioner"))),
    };
    let geom = match bc {
        BcMode::Mixed => CoupledGeometry::DarcyStokes,
        BcMode::AllDirichlet => CoupledGeometry::AllDirichlet,
    };
    let cm = build_coupled_mesh(h, geom)?;
    let (mu, kk, d) = (params.mu, params.perm, params.slip());
    let mf = Arc::new(cm.fluid);
    let mp = Arc::new(cm.porous);
    let iface = Arc::new(cm.interface);

    let uf = FunctionSpace::new(mf.clone(), Family::P2, ValueRank::Vector2, &[FacetTag::DirF])?;
    let up = FunctionSpace::new(mp.clone(), Family::RT0, ValueRank::Vector2, &[FacetTag::DirP])?;
    let pf = FunctionSpace::new(mf, Family::P1, ValueRank::Scalar, &[])?;
    let pp = FunctionSpace::new(mp, Family::P0, ValueRank::Scalar, &[])?;
    let q = InterfaceSpace::new(iface.clone(), IfaceFamily::P0, 1)?;

    let with_mean = bc == BcMode::AllDirichlet && !naive;
    let mut fields = vec![
        Field::new("u_f", uf.num_dofs()),
        Field::new("u_p", up.num_dofs()),
        Field::new("p_f", pf.num_dofs()),
        Field::new("p_p", pp.num_dofs()),
        Field::new("lambda", q.num_dofs()),
    ];
    if with_mean {
        fields.push(Field::new("r", 1));
    }
    let name = match bc {
        BcMode::Mixed => "darcy-stokes",
        BcMode::AllDirichlet => "darcy-stokes-dirichlet",
    };
    let mut asm = Assembly::new(name, fields);

    let slip = assemble_tangential_trace_mass(&uf, &iface, d)?;
    let a_f = assemble_stiffness(&uf, mu)?.add_scaled(&slip, 1.0)?;
    asm.op.add(0, 0, a_f.clone())?;
    asm.op.add(1, 1, assemble_mass(&up, 1.0 / kk)?)?;
    asm.op.add_coupling(2, 0, assemble_div(&uf, &pf)?)?;
    asm.op.add_coupling(3, 1, assemble_div(&up, &pp)?)?;
    asm.op.add_coupling(4, 0, assemble_normal_trace(&uf, &q, 1.0)?)?;
    asm.op.add_coupling(4, 1, assemble_normal_trace(&up, &q, -1.0)?)?;

    let mass_pf = assemble_mass(&pf, 1.0)?;
    if with_mean {
        let c = mass_pf.mul_vec(&vec![1.0; pf.num_dofs()]);
        let col = SparseMatrix::from_triplets(1, c.len(), c.iter().enumerate().map(|(j, &v)| (0, j, v)).collect());
        asm.op.add_coupling(5, 2, col)?;
    }

    if naive {
        let a0 = assemble_stiffness(&uf, 1.0)?.add_scaled(&slip, 1.0)?;
        asm.prec.add(0, 0, a0)?;
        asm.prec.add(1, 1, assemble_hdiv_operator(&up, 1.0 / kk)?)?;
        asm.prec.add(2, 2, mass_pf)?;
        asm.prec.add(3, 3, assemble_mass(&pp, kk)?)?;
        let s = sum_fractional(&q, &[FractionalSpec::new(0.5, 1.0, Flavor::Free)])?;
        asm.prec.add(4, 4, s.to_sparse())?;
    } else {
        asm.prec.add(0, 0, a_f)?;
        asm.prec.add(1, 1, assemble_hdiv_operator(&up, 1.0 / kk)?)?;
        asm.prec.add(2, 2, mass_pf.scaled(1.0 / mu))?;
        asm.prec.add(3, 3, assemble_mass(&pp, kk)?)?;
        let specs = match bc {
            BcMode::Mixed => [
                FractionalSpec::new(0.5, kk, Flavor::Zero00),
                FractionalSpec::new(-0.5, 1.0 / mu, Flavor::Free),
            ],
            BcMode::AllDirichlet => [
                FractionalSpec::new(-0.5, 1.0 / mu, Flavor::Zero00),
                FractionalSpec::new(0.5, kk, Flavor::Free),
            ],
        };
        asm.prec.add(4, 4, sum_fractional(&q, &specs)?.to_sparse())?;
        if with_mean {
            // c^T (mu^-1 M)^-1 c with c = M 1
            let area = pf.mesh.total_area();
            asm.prec.add(5, 5, SparseMatrix::diagonal(&[mu * area]))?;
        }
    }

    asm.constrained = vec![
        uf.dirichlet_dofs().to_vec(),
        up.dirichlet_dofs().to_vec(),
        vec![],
        vec![],
        vec![],
    ];
    if with_mean {
        asm.constrained.push(vec![]);
    }
    if bc == BcMode::AllDirichlet && naive {
        // p_f = 1, p_p = 1, lambda = -1 is annihilated by the operator
        let mut z = vec![0.0; uf.num_dofs() + up.num_dofs()];
        z.extend(std::iter::repeat(1.0).take(pf.num_dofs() + pp.num_dofs()));
        z.extend(std::iter::repeat(-1.0).take(q.num_dofs()));
        asm.deflation = Some(z);
    }

    let mut x = interpolate(&uf, reference::vector);
    x.extend(interpolate(&up, reference::vector));
    x.extend(interpolate(&pf, reference::scalar));
    x.extend(interpolate(&pp, reference::scalar));
    x.extend(interface_means(&q, reference::interface));
    if with_mean {
        x.push(0.3);
    }
    asm.finish_with_reference(x)
}
