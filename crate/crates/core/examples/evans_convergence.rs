//! Normalized relaxation Evans functions converge to the viscous one on a
//! contour in the right half plane.

use galrelax::evans::contour::{evans_convergence, Contour};
use galrelax::evans::{EvansOptions, EvansProblem};
use galrelax::profiles::{profile_auto, rankine_hugoniot};
use galrelax::thermo::GammaLaw;

fn main() -> galrelax::Result<()> {
    let setup = rankine_hugoniot(&GammaLaw::default(), 1.0, 2.0)?;
    let problem = |eps: f64| -> galrelax::Result<EvansProblem<GammaLaw>> {
        let tol = if eps == 0.0 { 1e-8 } else { 1e-6 };
        EvansProblem::new(profile_auto(&setup, 1.0, eps, 0.02, tol)?, EvansOptions::default())
    };
    let viscous = problem(0.0)?;
    let relaxed = [0.1, 0.05, 0.025, 0.0125, 0.00625]
        .iter()
        .map(|&e| problem(e))
        .collect::<galrelax::Result<Vec<_>>>()?;
    let table = evans_convergence(&viscous, &relaxed, &Contour::HalfDisc { radius: 5.0, offset: 0.1 }, 128, 2.5)?;
    print!("{}", table.to_csv());
    for w in table.rows.windows(2) {
        println!("ratio {} -> {}: {:.3}", w[0].eps, w[1].eps, w[0].sup_error / w[1].sup_error);
    }
    println!("strictly decreasing: {}", table.strictly_decreasing());
    Ok(())
}
