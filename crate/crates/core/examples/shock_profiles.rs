//! Viscous and relaxation shock profiles for the gamma = 2 shock with
//! upstream state (1, 2), and the first-order approach of the relaxation stress
//! to its Newtonian value.

use galrelax::profiles::{hyperbolic_restpoint_check, ns_profile, profile_auto, rankine_hugoniot, relaxation_profile};
use galrelax::thermo::GammaLaw;

fn main() -> galrelax::Result<()> {
    let setup = rankine_hugoniot(&GammaLaw::default(), 1.0, 2.0)?;
    println!(
        "downstream state: rho+ = {:.12}, u+ = {:.12} (exact (1 + sqrt 17)/4 = {:.12})",
        setup.rho_plus,
        setup.u_plus,
        (1.0 + 17f64.sqrt()) / 4.0
    );
    println!("Lax shock: {}, largest admissible eps: {}", setup.is_lax(), setup.eps_ceiling());

    let ns = ns_profile(&setup, 1.0, 25.0, 1001)?;
    println!("viscous profile: endpoint residual {:.2e}, decay rates {:?}", ns.endpoint_residual, ns.rates);

    let rest = hyperbolic_restpoint_check(&setup, 1.0, 0.1)?;
    println!("rest points at eps = 0.1: {rest:?}");

    println!("\n{:>8} {:>16} {:>8} {:>14}", "eps", "sup|S + mu U'|", "ratio", "sup|U - U_ns|");
    let mut prev: Option<f64> = None;
    for eps in [0.1, 0.05, 0.025, 0.0125] {
        let p = relaxation_profile(&setup, 1.0, eps, 25.0, 1001)?;
        let d = p.newtonian_defect();
        let du = p.u.iter().zip(&ns.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let ratio = prev.map(|q| format!("{:.3}", q / d)).unwrap_or_default();
        println!("{eps:>8} {d:>16.6e} {ratio:>8} {du:>14.6e}");
        prev = Some(d);
    }

    let auto = profile_auto(&setup, 1.0, 0.05, 0.05, 1e-8)?;
    println!("\nautomatic window at eps = 0.05: L = {}, {} samples", auto.half_length, auto.xi.len());
    let csv = auto.to_csv();
    println!("{}", csv.lines().take(3).collect::<Vec<_>>().join("\n"));
    Ok(())
}
