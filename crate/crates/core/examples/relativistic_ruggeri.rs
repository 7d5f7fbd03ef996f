//! Lorentz-invariant charts: projector algebra, the perfect-fluid tensor from
//! the protopotential, the Eckart readback and Ruggeri causality verdicts.

use galrelax::godunov::relativistic::{rel_eckart_assembly, rel_euler_tensor, rel_ruggeri_system, RelState};
use galrelax::godunov::tensor4::{random_boost, random_symmetric, ProjectorSet};
use galrelax::thermo::ExponentialGodunov;
use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> galrelax::Result<()> {
    let g = ExponentialGodunov { c0: 1.0, n: 4.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rest = Vector4::new(1.0, 0.0, 0.0, 0.0);

    let l = random_boost(&mut rng, 1.0);
    let (idem, total) = ProjectorSet::new(&(l * rest))?.identity_defects();
    println!("projectors under a boost: idempotency {idem:.1e}, completeness {total:.1e}");

    let upsilon = l * rest / 1.2;
    let e = rel_euler_tensor(&ExponentialGodunov { c0: 1.0, n: 3.0 }, &upsilon, 0.1)?;
    println!(
        "perfect fluid (n = 3): FD vs closed form {:.1e}, trace {:.6} vs 4p - theta p_theta = {:.6}",
        e.max_relative_error, e.trace_fd, e.trace_closed
    );

    let sigma = random_symmetric(&mut rng, 0.3);
    let grad = Matrix4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let k = rel_eckart_assembly(&g, &upsilon, 0.1, &sigma, &[1.0, 2.0, 0.5, 0.3], &grad)?;
    println!(
        "Eckart: identity {:.1e}, readback signs (shear, bulk, heat, heating) {:?}",
        k.identity_error, k.readback_sign
    );

    let eq = RelState::at_rest(1.0, 0.0);
    for eps in [[0.01; 4], [0.1; 4], [-10.0, -10.0, 10.0, -10.0]] {
        let r = rel_ruggeri_system(&g, &eq, &eps, &[])?;
        let c = &r.causality[0];
        println!(
            "Ruggeri eps = {eps:?}: {:?} ({} +, {} -), reduction defect {:.1e}",
            c.verdict, c.signature.positive, c.signature.negative, r.eckart_defect
        );
    }
    Ok(())
}
