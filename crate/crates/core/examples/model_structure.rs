//! Coupling tensor, pointwise energy identity and convexity of the total energy.

use galrelax::model::{
    c_tensor, energy_hessian, energy_identity_residual, manufactured_fields, random_primitive, ModelParams,
};
use galrelax::thermo::{check_convexity, GammaLaw};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> galrelax::Result<()> {
    let c = c_tensor(3)?;
    let sigma = [2, 1, -3, 1, 5, 4, -3, 4, -7];
    println!("c : sigma (in sixths) = {:?}", c.contract_exact(&sigma));

    let eos = GammaLaw::new(1.0, 1.4)?;
    let conv = check_convexity(&eos, (0.5, 2.0), 200)?;
    println!("gamma = 1.4: e'' > 0 on [0.5, 2]: {} (min {:.4e})", conv.convex, conv.min_energy_vv);

    let params = ModelParams::new(0.5, 0.8, 1.2, 3)?;
    let x = [0.3, -0.4, 0.7];
    let f = |t: f64, x: &[f64]| manufactured_fields(t, x, false);
    println!("\n{:>10} {:>14} {:>8}", "h", "residual", "ratio");
    let mut prev: Option<f64> = None;
    for k in 0..4 {
        let h = 2e-3 / f64::powi(2.0, k);
        let r = energy_identity_residual(f, &eos, &params, 0.2, &x, h)?.residual;
        let ratio = prev.map(|p| format!("{:.3}", p / r)).unwrap_or_default();
        println!("{h:>10.2e} {r:>14.6e} {ratio:>8}");
        prev = Some(r);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w = random_primitive(&mut rng, 3);
        let h = energy_hessian(&w.to_conserved(), &eos)?;
        assert!(h.verdict.is_definite());
        worst = worst.max(h.max_relative_error);
    }
    println!("\nHessian of E at 100 random states: positive definite, worst FD mismatch {worst:.2e}");
    Ok(())
}
