//! Long-time and resolution checks on the fixture shock (gamma = 2, rho- = 1, u- = 2).

use galrelax::evans::contour::{winding_number, Contour, WindingOptions};
use galrelax::evans::{EvansOptions, EvansProblem};
use galrelax::profiles::{profile_auto, rankine_hugoniot, ShockSetup};
use galrelax::sim1d::{sample_euler, Boundary, Grid1D, NavierStokesSolver, RunOptions};
use galrelax::thermo::GammaLaw;

fn fixture() -> ShockSetup<GammaLaw> {
    rankine_hugoniot(&GammaLaw::default(), 1.0, 2.0).unwrap()
}

fn steepest(u: &[f64]) -> usize {
    (1..u.len() - 1)
        .max_by(|&i, &j| {
            let (a, b) = ((u[i + 1] - u[i - 1]).abs(), (u[j + 1] - u[j - 1]).abs());
            a.total_cmp(&b)
        })
        .unwrap()
}

#[test]
fn viscous_profile_stays_in_place() {
    let mu = 1.0;
    let setup = fixture();
    let profile = profile_auto(&setup, mu, 0.0, 0.02, 1e-8).unwrap();
    let grid = Grid1D::new(200, -20.0, 20.0, Boundary::Outflow).unwrap();
    let q0 = sample_euler(&grid, |x| profile.eval(x).r, |x| profile.eval(x).u);
    let solver = NavierStokesSolver::new(setup.eos, mu, grid).unwrap();
    let opts = RunOptions {
        output_times: (1..40).map(|k| k as f64 * 0.25).collect(),
        ..RunOptions::default()
    };
    let traj = solver.run(q0, 10.0, &opts).unwrap();
    let dx = grid.dx();
    let x = grid.centers();
    let start = x[steepest(&traj.snapshots[0].u)];
    let drift = traj
        .snapshots
        .iter()
        .map(|s| (x[steepest(&s.u)] - start).abs())
        .fold(0.0, f64::max);
    assert_eq!(traj.snapshots.len(), 41);
    assert!(drift <= 2.0 * dx + 1e-12, "drift {drift} with dx {dx}");
}

fn problem(eps: f64, spacing: f64, tol: f64) -> EvansProblem<GammaLaw> {
    let profile = profile_auto(&fixture(), 1.0, eps, spacing, 1e-8).unwrap();
    let opts = EvansOptions {
        rtol: tol,
        atol: 1e-2 * tol,
        ..EvansOptions::default()
    };
    EvansProblem::new(profile, opts).unwrap()
}

#[test]
fn evans_samples_are_resolution_independent() {
    let half_disc = Contour::HalfDisc { radius: 5.0, offset: 0.1 };
    for eps in [0.0, 0.05] {
        let coarse = problem(eps, 0.04, 1e-8);
        let fine = problem(eps, 0.02, 5e-9);
        for k in 0..24 {
            let lambda = half_disc.point(k as f64 / 24.0);
            let a = coarse.evaluate(lambda).unwrap().d;
            let b = fine.evaluate(lambda).unwrap().d;
            let rel = (a - b).norm() / b.norm();
            assert!(rel < 1e-2, "eps {eps} lambda {lambda}: {rel}");
        }
        let opts = WindingOptions::default();
        let r0 = 0.6 * fine.branch_point_distance(2.0).unwrap();
        let circle = Contour::Circle { center_re: 0.0, center_im: 0.0, radius: r0 };
        for (contour, expected) in [(half_disc, 0), (circle, 1)] {
            let wc = winding_number(&coarse, &contour, &opts).unwrap().winding;
            let wf = winding_number(&fine, &contour, &opts).unwrap().winding;
            assert_eq!((wc, wf), (expected, expected), "eps {eps} {contour:?}");
        }
    }
}
