//! A parameter sweep driven by the same key=value configuration the command
//! line tool reads, written as CSV to stdout.

use mpprecond::experiment::{run_sweep, write_sweep_csv, ExperimentConfig};

fn main() -> mpprecond::error::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_text(
        "mode=cond
         problem=darcy-stokes
         h=2^-2,2^-3
         mu=1,1e-4
         K=1,1e-4
         alpha=1,1e-4
         jobs=2",
    )?;
    let rows = run_sweep(&cfg)?;
    write_sweep_csv(&rows, std::io::stdout().lock(), false)?;
    Ok(())
}
