//! Stokes, Darcy and Navier subproblems with an interface multiplier:
//! condition numbers for each multiplier preconditioner flavor.

use mpprecond::solve::SpectrumOptions;
use mpprecond::systems::{ParameterSet, Precond, Problem};

fn main() -> mpprecond::error::Result<()> {
    let opts = SpectrumOptions::default();
    let cases = [
        (Problem::StokesSub, vec![Precond::Free, Precond::Zero00]),
        (Problem::DarcySub, vec![Precond::Zero00, Precond::Free]),
        (Problem::NavierSub, vec![Precond::Free, Precond::Zero00, Precond::N0, Precond::T0]),
    ];
    for (problem, preconds) in cases {
        for pc in preconds {
            let mut row = Vec::new();
            for k in 2..=4 {
                let b = problem.build(&ParameterSet::default(), 2f64.powi(-k), pc)?;
                row.push(format!("{:7.2}", b.condition(&opts, false)?.cond));
            }
            println!("{problem:<11} {pc:<7} {}", row.join(" "));
        }
    }
    Ok(())
}
