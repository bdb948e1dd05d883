//! Coupled Darcy-Stokes flow: MinRes iterations with the naive and the
//! parameter-robust preconditioner for shrinking permeability.

use mpprecond::solve::MinresOptions;
use mpprecond::systems::{ParameterSet, Precond, Problem};

fn main() -> mpprecond::error::Result<()> {
    let opts = MinresOptions { tol: 1e-12, max_iter: 5000, seed: 0 };
    println!("{:>6} {:>8} {:>8} {:>8}", "K", "h", "naive", "robust");
    for perm in [1.0, 1e-4, 1e-8] {
        let params = ParameterSet { perm, ..Default::default() };
        for k in 2..=4 {
            let h = 2f64.powi(-k);
            let naive = Problem::DarcyStokesDirichlet.build(&params, h, Precond::Naive)?;
            let robust = Problem::DarcyStokes.build(&params, h, Precond::Robust)?;
            let n = naive.solve(&opts, false)?;
            let r = robust.solve(&opts, false)?;
            println!("{perm:>6e} {:>8} {:>8} {:>8}", format!("2^-{k}"), n.iterations, r.iterations);
        }
    }
    Ok(())
}
