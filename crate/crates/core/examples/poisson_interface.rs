//! Two-domain Poisson problem with a multiplier on the interface: condition
//! numbers of the three interface preconditioners as the mesh is refined.

use mpprecond::solve::SpectrumOptions;
use mpprecond::systems::{ParameterSet, Precond, Problem};

fn main() -> mpprecond::error::Result<()> {
    let opts = SpectrumOptions::default();
    for ratio in [1e6, 1.0, 1e-6] {
        let params = ParameterSet { kappa2: ratio, ..Default::default() };
        for pc in [Precond::Nd, Precond::Dd, Precond::Nn] {
            let mut row = Vec::new();
            for k in 1..=4 {
                let b = Problem::PoissonNd.build(&params, 2f64.powi(-k), pc)?;
                row.push(format!("{:6.2}", b.condition(&opts, false)?.cond));
            }
            println!("kappa2/kappa1={ratio:<6e} {pc:<3} {}", row.join(" "));
        }
    }
    Ok(())
}
