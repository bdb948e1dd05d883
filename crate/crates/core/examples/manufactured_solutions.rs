//! Convergence rates against manufactured solutions, measured in the norms
//! induced by the preconditioners.

use mpprecond::solve::MinresOptions;
use mpprecond::systems::mms::{run_mms, MmsProblem};
use mpprecond::systems::ParameterSet;

fn main() -> mpprecond::error::Result<()> {
    let hs: Vec<f64> = (1..=4).map(|k| 2f64.powi(-k)).collect();
    let opts = MinresOptions { tol: 1e-12, max_iter: 5000, seed: 0 };
    for problem in [MmsProblem::Stokes, MmsProblem::Darcy, MmsProblem::Navier] {
        let study = run_mms(problem, &ParameterSet::default(), &hs, &opts)?;
        println!("{problem:?}");
        for level in &study.levels {
            let errs: Vec<String> = problem
                .error_names()
                .iter()
                .map(|n| format!("{n}={:.3e}", level.error(n).unwrap()))
                .collect();
            println!("    h={:<7} {}", level.h, errs.join("  "));
        }
        let rates: Vec<String> = problem
            .error_names()
            .iter()
            .map(|n| format!("{n}: {:.2}", study.rate(n).unwrap()))
            .collect();
        println!("    rates {}", rates.join(", "));
    }
    Ok(())
}
