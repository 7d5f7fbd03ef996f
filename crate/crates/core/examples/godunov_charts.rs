//! Galilean Euler, Navier-Stokes-Fourier and Ruggeri charts: protopotential,
//! potentials and fluxes agree, and the Euler chart is symmetric hyperbolic.

use galrelax::godunov::galilean::{build_charts, random_state, Coefficients, GalileanState};
use galrelax::godunov::{check_chart, hyperbolicity_check, Chart};
use galrelax::thermo::ExponentialGodunov;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> galrelax::Result<()> {
    let charts = build_charts(ExponentialGodunov { c0: 1.0, n: 2.5 }, Coefficients::default());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let states: Vec<GalileanState> = (0..20).map(|_| random_state(&mut rng, 0.3)).collect();
    println!("{:<8} {:>5} {:>12} {:>12} {:>12}", "chart", "vars", "proto->X", "X->F", "dF symmetry");
    for chart in &charts {
        let (mut a, mut b, mut c) = (0.0f64, 0.0f64, 0.0f64);
        for s in &states {
            let r = check_chart(chart, &s.to_godunov(chart.extended()), false)?;
            a = a.max(r.protopotential_error.unwrap_or(f64::NAN));
            b = b.max(r.flux_chain_error.unwrap_or(f64::NAN));
            c = c.max(r.flux_symmetry_defect);
        }
        println!("{:<8} {:>5} {a:>12.2e} {b:>12.2e} {c:>12.2e}", chart.name(), chart.dim());
    }

    let eq = GalileanState::equilibrium(1.0, 0.0, Vector3::new(0.3, 0.0, -0.2));
    for chart in &charts {
        let r = hyperbolicity_check(chart, &eq.to_godunov(chart.extended()))?;
        println!(
            "{:<8} at equilibrium: {:?} ({} +, {} -, {} zero)",
            chart.name(),
            r.verdict,
            r.signature.positive,
            r.signature.negative,
            r.signature.zero
        );
    }
    Ok(())
}
