//! Spectral fractional operators on an interface: eigenvalues of the
//! interface Laplacian and the effect of the endpoint flavor on H^s.

use std::sync::Arc;

use mpprecond::interface::{build_fractional, Flavor, FractionalSpec, IfaceFamily, InterfaceEigen, InterfaceSpace};
use mpprecond::mesh::{build_unit_square_subproblem, FacetTag};

fn main() -> mpprecond::error::Result<()> {
    let (_, iface) = build_unit_square_subproblem(0.125, FacetTag::DirF, FacetTag::NeuF)?;
    let space = InterfaceSpace::new(Arc::new(iface), IfaceFamily::P0, 1)?;
    for flavor in [Flavor::Free, Flavor::Zero00] {
        let eig = InterfaceEigen::new(&space, flavor)?;
        let n = eig.lambda.len();
        println!(
            "{flavor:?}: {n} eigenvalues, smallest {:.4}, largest {:.1}",
            eig.lambda[0],
            eig.lambda[n - 1]
        );
        // the constant function measured in H^{1/2} and H^{-1/2}
        for s in [0.5, -0.5] {
            let op = build_fractional(&space, FractionalSpec::new(s, 1.0, flavor))?;
            let m = &op.matrix;
            let mut q = 0.0;
            for i in 0..n {
                for j in 0..n {
                    q += m[(i, j)];
                }
            }
            println!("    |1|^2 in H^{s:+}: {q:.5}");
        }
    }
    Ok(())
}
