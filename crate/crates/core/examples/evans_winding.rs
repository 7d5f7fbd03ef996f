//! Evans function of the gamma = 2 shock: a simple zero at the translational
//! eigenvalue and no zeros in the right half plane.

use galrelax::evans::contour::{origin_value, winding_number, Contour, WindingOptions};
use galrelax::evans::{EvansOptions, EvansProblem};
use galrelax::profiles::{profile_auto, rankine_hugoniot};
use galrelax::thermo::GammaLaw;
use nalgebra::Complex;

fn main() -> galrelax::Result<()> {
    let setup = rankine_hugoniot(&GammaLaw::default(), 1.0, 2.0)?;
    for eps in [0.0, 0.05] {
        let tol = if eps == 0.0 { 1e-8 } else { 1e-6 };
        let problem = EvansProblem::new(profile_auto(&setup, 1.0, eps, 0.02, tol)?, EvansOptions::default())?;
        let r0 = 0.6 * problem.branch_point_distance(2.0)?;
        let small = Contour::Circle { center_re: 0.0, center_im: 0.0, radius: r0 };
        let w0 = winding_number(&problem, &small, &WindingOptions::default())?;
        let d0 = origin_value(&problem, r0)?;
        let scale = problem.evaluate(Complex::new(r0, 0.0))?.d.norm();
        let half = winding_number(
            &problem,
            &Contour::HalfDisc { radius: 5.0, offset: 0.1 },
            &WindingOptions::default(),
        )?;
        println!(
            "eps = {eps}: winding {} on |lambda| = {r0:.3}, |D(0)| / |D(r0)| = {:.1e}, winding {} on the half disc ({} samples, min |D| {:.3e})",
            w0.winding,
            d0.norm() / scale,
            half.winding,
            half.samples.len(),
            half.min_modulus
        );
    }
    Ok(())
}
