//! Stokes coupled to a nearly incompressible solid. With Dirichlet
//! conditions everywhere the condition number blows up with the penalty
//! parameter; deflating the known near-kernel vector removes the blow-up.

use mpprecond::solve::SpectrumOptions;
use mpprecond::systems::{ParameterSet, Precond, Problem};

fn main() -> mpprecond::error::Result<()> {
    let opts = SpectrumOptions::default();
    println!("{:>6} {:>14} {:>10} {:>10}", "eta", "plain", "deflated", "mixed bc");
    for eta in [1.0, 1e3, 1e6, f64::INFINITY] {
        let params = ParameterSet { eta, ..Default::default() };
        let dirichlet = Problem::StokesNavierDirichlet.build(&params, 0.25, Precond::Robust)?;
        let plain = if eta.is_finite() {
            format!("{:.1}", dirichlet.condition(&opts, false)?.cond)
        } else {
            "singular".to_string()
        };
        let deflated = dirichlet.condition(&opts, true)?.cond;
        let mixed = Problem::StokesNavier.build(&params, 0.25, Precond::Robust)?.condition(&opts, false)?.cond;
        println!("{eta:>6e} {plain:>14} {deflated:>10.2} {mixed:>10.2}");
    }
    Ok(())
}
