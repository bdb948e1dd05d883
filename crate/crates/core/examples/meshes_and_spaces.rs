//! Builds the coupled fluid/porous mesh and prints the dimensions of the
//! Darcy-Stokes spaces for a few mesh sizes.

use mpprecond::experiment::report_dofs;
use mpprecond::mesh::{build_coupled_mesh, CoupledGeometry};

fn main() -> mpprecond::error::Result<()> {
    let cm = build_coupled_mesh(0.25, CoupledGeometry::DarcyStokes)?;
    println!(
        "h=1/4: fluid {} cells, porous {} cells, interface {} segments",
        cm.fluid.num_cells(),
        cm.porous.num_cells(),
        cm.interface.num_segments()
    );
    println!("{:>8} {:>8} {:>7} {:>7} {:>7} {:>6}", "h", "V_f", "Q_f", "V_p", "Q_p", "Lambda");
    for k in 3..=6 {
        let d = report_dofs(2f64.powi(-k))?;
        println!(
            "{:>8} {:>8} {:>7} {:>7} {:>7} {:>6}",
            format!("2^-{k}"),
            d.velocity_f,
            d.pressure_f,
            d.flux_p,
            d.pressure_p,
            d.multiplier
        );
    }
    Ok(())
}
