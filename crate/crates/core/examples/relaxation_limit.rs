//! Relaxation runs approach the viscous reference as eps shrinks; the discrete
//! energy never increases on a periodic domain.

use std::f64::consts::PI;

use galrelax::sim1d::{relaxation_limit_study, sample_euler, Boundary, Grid1D, Reference, RunOptions};
use galrelax::thermo::GammaLaw;

fn main() -> galrelax::Result<()> {
    let eos = GammaLaw::default();
    let grid = Grid1D::new(400, 0.0, 2.0 * PI, Boundary::Periodic)?;
    let q0 = sample_euler(&grid, |x| 1.0 + 0.2 * x.sin(), |x| 0.2 * x.cos());
    let eps = [0.1, 0.05, 0.025, 0.0125];
    let opts = RunOptions::default();

    for reference in [Reference::NavierStokes, Reference::Euler] {
        let table = relaxation_limit_study(&q0, &eos, 2.0, &grid, 0.2, &eps, &opts, reference)?;
        println!("reference {reference:?}");
        println!("{:>8} {:>12} {:>7}", "eps", "L2 error", "steps");
        for r in &table.rows {
            println!("{:>8} {:>12.4e} {:>7}", r.eps, r.l2_error.unwrap_or(f64::NAN), r.steps);
        }
        println!(
            "strictly decreasing: {}, largest per-step energy change / E(0): {:.2e}\n",
            table.strictly_decreasing(),
            table.max_relative_energy_increase
        );
    }
    Ok(())
}
