//! First-order finite-volume solvers on a uniform 1D grid.
//!
//! [`RelaxationSolver`] advances the rescaled relaxation system held in
//! [`System1D`] with a Rusanov flux, a centered `u_x / eps` coupling and an exact
//! implicit relaxation step. [`NavierStokesSolver`] is the viscous reference:
//! the same Rusanov Euler flux plus a central viscous flux.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::System1D;
use crate::thermo::BarotropicEos;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// Zero-gradient ghost cells.
    Outflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub boundary: Boundary,
}

impl Grid1D {
    pub fn new(n: usize, a: f64, b: f64, boundary: Boundary) -> Result<Self> {
        if n < 8 {
            return Err(Error::Domain(format!("grid needs at least 8 cells, got {n}")));
        }
        if !(b > a) {
            return Err(Error::Domain(format!("empty interval [{a}, {b}]")));
        }
        Ok(Grid1D { n, a, b, boundary })
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n).map(|i| self.a + (i as f64 + 0.5) * dx).collect()
    }

    /// Index of the neighbour `offset` cells away, honouring the boundary mode.
    fn neighbour(&self, i: usize, offset: isize) -> usize {
        let j = i as isize + offset;
        let n = self.n as isize;
        match self.boundary {
            Boundary::Periodic => j.rem_euclid(n) as usize,
            Boundary::Outflow => j.clamp(0, n - 1) as usize,
        }
    }
}

/// Primitive cell values at one output time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    /// Relaxation stress, or the Newtonian stress `-mu_tilde u_x` for viscous runs.
    pub sigma: Vec<f64>,
}

/// Per-step record of total energy `sum E dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub energy: f64,
    /// Time integral of `sum (-sigma^2 / mu_tilde) dx` up to `t`.
    pub dissipated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub snapshots: Vec<Snapshot>,
    pub energy: Vec<EnergyRecord>,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }

    /// CSV with columns `t,x,rho,u,sigma`, one row per cell and snapshot.
    pub fn to_csv(&self) -> String {
        let xs = self.grid.centers();
        let mut out = String::from("t,x,rho,u,sigma\n");
        for s in &self.snapshots {
            for (i, x) in xs.iter().enumerate() {
                out.push_str(&format!(
                    "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                    s.t, x, s.rho[i], s.u[i], s.sigma[i]
                ));
            }
        }
        out
    }
}

/// Time-stepping controls shared by both solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub cfl: f64,
    /// Extra snapshot times in `(0, t_final)`; `0` and `t_final` are always recorded.
    pub output_times: Vec<f64>,
    pub max_steps: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            cfl: 0.45,
            output_times: vec![],
            max_steps: 10_000_000,
        }
    }
}

fn check_cells(q: &[[f64; 3]], t: f64) -> Result<()> {
    for (cell, qi) in q.iter().enumerate() {
        if qi.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotFinite { cell, time: t });
        }
        if !(qi[0] > 0.0) {
            return Err(Error::Vacuum {
                cell,
                time: t,
                rho: qi[0],
            });
        }
    }
    Ok(())
}

fn euler_speed<E: BarotropicEos + ?Sized>(eos: &E, rho: f64, m: f64) -> f64 {
    (m / rho).abs() + eos.sound_speed(rho)
}

/// Drives a time loop: `dt_of(q)` picks the stable step, `advance(q, dt)` takes it.
fn march<FDt, FAdv, FEn>(
    grid: &Grid1D,
    q0: Vec<[f64; 3]>,
    t_final: f64,
    opts: &RunOptions,
    mut dt_of: FDt,
    mut advance: FAdv,
    energy_of: FEn,
    snapshot: impl Fn(f64, &[[f64; 3]]) -> Snapshot,
) -> Result<Trajectory>
where
    FDt: FnMut(&[[f64; 3]]) -> f64,
    FAdv: FnMut(&[[f64; 3]], f64, f64) -> Result<Vec<[f64; 3]>>,
    FEn: Fn(&[[f64; 3]]) -> (f64, f64),
{
    if !(t_final >= 0.0) {
        return Err(Error::Domain(format!("final time must be nonnegative, got {t_final}")));
    }
    check_cells(&q0, 0.0)?;
    let mut outputs: Vec<f64> = opts
        .output_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < t_final)
        .collect();
    outputs.sort_by(f64::total_cmp);
    outputs.dedup();
    outputs.push(t_final);

    let mut q = q0;
    let mut t = 0.0;
    let (e0, _) = energy_of(&q);
    let mut energy = vec![EnergyRecord {
        t,
        energy: e0,
        dissipated: 0.0,
    }];
    let mut dissipated = 0.0;
    let mut snapshots = vec![snapshot(t, &q)];
    let mut steps = 0;
    for target in outputs {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Integration {
                    t,
                    reason: "step budget exhausted".into(),
                });
            }
            let mut dt = dt_of(&q);
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::Integration {
                    t,
                    reason: format!("invalid time step {dt}"),
                });
            }
            if t + dt >= target {
                dt = target - t;
            }
            q = advance(&q, dt, t)?;
            t = if t + dt >= target { target } else { t + dt };
            check_cells(&q, t)?;
            steps += 1;
            let (e, rate) = energy_of(&q);
            dissipated += rate * dt;
            energy.push(EnergyRecord {
                t,
                energy: e,
                dissipated,
            });
        }
        if snapshots.last().map(|s| s.t) != Some(target) {
            snapshots.push(snapshot(t, &q));
        }
    }
    Ok(Trajectory {
        grid: *grid,
        snapshots,
        energy,
        steps,
    })
}

/// Relaxation-system solver.
#[derive(Clone, Debug)]
pub struct RelaxationSolver<E> {
    pub system: System1D<E>,
    pub grid: Grid1D,
    /// Keep `sigma = 0` and drop the coupling, leaving the Euler discretization
    /// shared with [`NavierStokesSolver`] at zero viscosity.
    pub euler_limit: bool,
}

impl<E: BarotropicEos> RelaxationSolver<E> {
    pub fn new(system: System1D<E>, grid: Grid1D) -> Self {
        RelaxationSolver {
            system,
            grid,
            euler_limit: false,
        }
    }

    /// Cell-wise spectral radius used by the Rusanov flux.
    pub fn wave_speed(&self, q: &[f64; 3]) -> f64 {
        if self.euler_limit {
            euler_speed(&self.system.eos, q[0], q[1])
        } else {
            self.system.spectral_radius(q)
        }
    }

    pub fn max_wave_speed(&self, q: &[[f64; 3]]) -> f64 {
        q.iter().map(|qi| self.wave_speed(qi)).fold(0.0, f64::max)
    }

    pub fn stable_dt(&self, q: &[[f64; 3]], cfl: f64) -> f64 {
        cfl * self.grid.dx() / self.max_wave_speed(q)
    }

    fn flux(&self, q: &[f64; 3]) -> [f64; 3] {
        if self.euler_limit {
            let u = q[1] / q[0];
            [q[1], q[1] * u + self.system.eos.pressure_rho(q[0]), 0.0]
        } else {
            self.system.flux(q)
        }
    }

    /// One step of size `dt` without a stability check.
    pub fn advance(&self, q: &[[f64; 3]], dt: f64) -> Vec<[f64; 3]> {
        let n = self.grid.n;
        let dx = self.grid.dx();
        let g = &self.grid;
        let speeds: Vec<f64> = q.iter().map(|qi| self.wave_speed(qi)).collect();
        let fluxes: Vec<[f64; 3]> = q.iter().map(|qi| self.flux(qi)).collect();
        // interface i carries the flux between cells i-1 and i; n+1 interfaces
        let interface = |i: usize| -> [f64; 3] {
            let (l, r) = if i == 0 {
                (g.neighbour(0, -1), 0)
            } else if i == n {
                (n - 1, g.neighbour(n - 1, 1))
            } else {
                (i - 1, i)
            };
            let a = speeds[l].max(speeds[r]);
            std::array::from_fn(|k| 0.5 * (fluxes[l][k] + fluxes[r][k]) - 0.5 * a * (q[r][k] - q[l][k]))
        };
        let fhat: Vec<[f64; 3]> = (0..=n).map(interface).collect();
        let lam = dt / dx;
        let eps = self.system.eps;
        let mu = self.system.mu_tilde;
        (0..n)
            .map(|i| {
                let mut out: [f64; 3] =
                    std::array::from_fn(|k| q[i][k] - lam * (fhat[i + 1][k] - fhat[i][k]));
                if self.euler_limit {
                    out[2] = 0.0;
                    return out;
                }
                let ul = q[g.neighbour(i, -1)][1] / q[g.neighbour(i, -1)][0];
                let ur = q[g.neighbour(i, 1)][1] / q[g.neighbour(i, 1)][0];
                out[2] -= dt * (ur - ul) / (2.0 * dx * eps);
                // implicit relaxation: rho sigma_new = S* - dt sigma_new / (eps mu)
                let sigma = out[2] / (out[0] + dt / (eps * mu));
                out[2] = out[0] * sigma;
                out
            })
            .collect()
    }

    /// `step_relaxation`: rejects steps above the CFL bound `cfl dx / lambda_max`.
    pub fn step(&self, q: &[[f64; 3]], dt: f64, cfl: f64) -> Result<Vec<[f64; 3]>> {
        check_cells(q, f64::NAN)?;
        let bound = self.stable_dt(q, cfl);
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, bound });
        }
        let out = self.advance(q, dt);
        check_cells(&out, f64::NAN)?;
        Ok(out)
    }

    /// Total energy `sum E dx` and the instantaneous discrete dissipation rate.
    pub fn energy(&self, q: &[[f64; 3]]) -> (f64, f64) {
        let dx = self.grid.dx();
        let e = q.iter().map(|qi| self.system.energy(qi)).sum::<f64>() * dx;
        let d = q.iter().map(|qi| self.system.dissipation(qi)).sum::<f64>() * dx;
        (e, d)
    }

    pub fn run(&self, q0: Vec<[f64; 3]>, t_final: f64, opts: &RunOptions) -> Result<Trajectory> {
        if q0.len() != self.grid.n {
            return Err(Error::Domain("initial data does not match grid".into()));
        }
        let cfl = opts.cfl;
        march(
            &self.grid,
            q0,
            t_final,
            opts,
            |q| self.stable_dt(q, cfl),
            |q, dt, t| {
                let out = self.advance(q, dt);
                check_cells(&out, t + dt)?;
                Ok(out)
            },
            |q| self.energy(q),
            |t, q| Snapshot {
                t,
                rho: q.iter().map(|c| c[0]).collect(),
                u: q.iter().map(|c| c[1] / c[0]).collect(),
                sigma: q.iter().map(|c| c[2] / c[0]).collect(),
            },
        )
    }
}

/// Reference viscous solver for `rho_t + (rho u)_x = 0`,
/// `(rho u)_t + (rho u^2 + p)_x = (mu_tilde u_x)_x`.
#[derive(Clone, Debug)]
pub struct NavierStokesSolver<E> {
    pub eos: E,
    pub mu_tilde: f64,
    pub grid: Grid1D,
}

impl<E: BarotropicEos> NavierStokesSolver<E> {
    pub fn new(eos: E, mu_tilde: f64, grid: Grid1D) -> Result<Self> {
        if !(mu_tilde >= 0.0) {
            return Err(Error::Domain(format!("viscosity must be nonnegative, got {mu_tilde}")));
        }
        Ok(NavierStokesSolver { eos, mu_tilde, grid })
    }

    pub fn stable_dt(&self, q: &[[f64; 3]], cfl: f64) -> f64 {
        let dx = self.grid.dx();
        let lam = q
            .iter()
            .map(|c| euler_speed(&self.eos, c[0], c[1]))
            .fold(0.0, f64::max);
        let convective = cfl * dx / lam;
        if self.mu_tilde > 0.0 {
            convective.min(0.25 * dx * dx / self.mu_tilde)
        } else {
            convective
        }
    }

    /// One explicit step; the third slot is ignored on input and set to zero.
    pub fn advance(&self, q: &[[f64; 3]], dt: f64) -> Vec<[f64; 3]> {
        let n = self.grid.n;
        let dx = self.grid.dx();
        let g = &self.grid;
        let speeds: Vec<f64> = q.iter().map(|c| euler_speed(&self.eos, c[0], c[1])).collect();
        let fluxes: Vec<[f64; 2]> = q
            .iter()
            .map(|c| [c[1], c[1] * c[1] / c[0] + self.eos.pressure_rho(c[0])])
            .collect();
        let interface = |i: usize| -> [f64; 2] {
            let (l, r) = if i == 0 {
                (g.neighbour(0, -1), 0)
            } else if i == n {
                (n - 1, g.neighbour(n - 1, 1))
            } else {
                (i - 1, i)
            };
            let a = speeds[l].max(speeds[r]);
            let mut f: [f64; 2] =
                std::array::from_fn(|k| 0.5 * (fluxes[l][k] + fluxes[r][k]) - 0.5 * a * (q[r][k] - q[l][k]));
            if self.mu_tilde > 0.0 {
                f[1] -= self.mu_tilde * (q[r][1] / q[r][0] - q[l][1] / q[l][0]) / dx;
            }
            f
        };
        let fhat: Vec<[f64; 2]> = (0..=n).map(interface).collect();
        let lam = dt / dx;
        (0..n)
            .map(|i| {
                [
                    q[i][0] - lam * (fhat[i + 1][0] - fhat[i][0]),
                    q[i][1] - lam * (fhat[i + 1][1] - fhat[i][1]),
                    0.0,
                ]
            })
            .collect()
    }

    /// Euler energy `sum (rho e + m^2 / (2 rho)) dx` and the viscous dissipation rate.
    pub fn energy(&self, q: &[[f64; 3]]) -> (f64, f64) {
        let dx = self.grid.dx();
        let e = q
            .iter()
            .map(|c| c[0] * self.eos.energy(1.0 / c[0]) + 0.5 * c[1] * c[1] / c[0])
            .sum::<f64>()
            * dx;
        let ux = self.velocity_gradient(q);
        let d = -self.mu_tilde * ux.iter().map(|g| g * g).sum::<f64>() * dx;
        (e, d)
    }

    fn velocity_gradient(&self, q: &[[f64; 3]]) -> Vec<f64> {
        let g = &self.grid;
        let dx = g.dx();
        (0..g.n)
            .map(|i| {
                let l = &q[g.neighbour(i, -1)];
                let r = &q[g.neighbour(i, 1)];
                (r[1] / r[0] - l[1] / l[0]) / (2.0 * dx)
            })
            .collect()
    }

    pub fn run(&self, q0: Vec<[f64; 3]>, t_final: f64, opts: &RunOptions) -> Result<Trajectory> {
        if q0.len() != self.grid.n {
            return Err(Error::Domain("initial data does not match grid".into()));
        }
        let cfl = opts.cfl;
        march(
            &self.grid,
            q0,
            t_final,
            opts,
            |q| self.stable_dt(q, cfl),
            |q, dt, _| Ok(self.advance(q, dt)),
            |q| self.energy(q),
            |t, q| {
                let ux = self.velocity_gradient(q);
                Snapshot {
                    t,
                    rho: q.iter().map(|c| c[0]).collect(),
                    u: q.iter().map(|c| c[1] / c[0]).collect(),
                    sigma: ux.iter().map(|g| -self.mu_tilde * g).collect(),
                }
            },
        )
    }
}

/// Cell values `(rho, rho u, 0)` sampled at the grid centres.
pub fn sample_euler(grid: &Grid1D, rho: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> Vec<[f64; 3]> {
    grid.centers()
        .into_iter()
        .map(|x| {
            let r = rho(x);
            [r, r * u(x), 0.0]
        })
        .collect()
}

/// Sets `rho sigma = -rho mu_tilde u_x` with `u_x` from centered differences,
/// the Newtonian stress the relaxation field approaches as `eps -> 0`.
pub fn prepare_stress(grid: &Grid1D, q: &mut [[f64; 3]], mu_tilde: f64) {
    let dx = grid.dx();
    let u: Vec<f64> = q.iter().map(|c| c[1] / c[0]).collect();
    for i in 0..grid.n {
        let ux = (u[grid.neighbour(i, 1)] - u[grid.neighbour(i, -1)]) / (2.0 * dx);
        q[i][2] = -q[i][0] * mu_tilde * ux;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub energy: Vec<EnergyRecord>,
    pub tolerance: f64,
    pub nonincreasing: bool,
    /// First step whose energy exceeds its predecessor by more than the tolerance.
    pub first_violation: Option<usize>,
    pub max_increase: f64,
}

/// Checks `sum E dx` is nonincreasing within `rel_tol * E(0)` per step.
pub fn discrete_energy_audit(traj: &Trajectory, rel_tol: f64) -> Result<EnergyAudit> {
    if traj.grid.boundary != Boundary::Periodic {
        return Err(Error::Domain("energy audit requires periodic boundaries".into()));
    }
    let e0 = traj.energy.first().map(|r| r.energy).unwrap_or(0.0);
    let tolerance = rel_tol * e0.abs();
    let mut first_violation = None;
    let mut max_increase = f64::NEG_INFINITY;
    for (k, w) in traj.energy.windows(2).enumerate() {
        let inc = w[1].energy - w[0].energy;
        max_increase = max_increase.max(inc);
        if inc > tolerance && first_violation.is_none() {
            first_violation = Some(k + 1);
        }
    }
    Ok(EnergyAudit {
        energy: traj.energy.clone(),
        tolerance,
        nonincreasing: first_violation.is_none(),
        first_violation,
        max_increase: if max_increase.is_finite() { max_increase } else { 0.0 },
    })
}

/// L2 distance of the `(rho, u)` parts of two snapshots on the same grid.
pub fn l2_distance(a: &Snapshot, b: &Snapshot, dx: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.rho.len() {
        acc += (a.rho[i] - b.rho[i]).powi(2) + (a.u[i] - b.u[i]).powi(2);
    }
    (acc * dx).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    NavierStokes,
    /// Inviscid run; used as a negative control.
    Euler,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub eps: f64,
    /// `None` when the relaxation run failed; see `failure`.
    pub l2_error: Option<f64>,
    pub steps: usize,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitTable {
    pub reference: Reference,
    pub mu_tilde: f64,
    pub t_final: f64,
    pub rows: Vec<LimitRow>,
    /// Largest per-step energy increase over all relaxation runs, relative to `E(0)`.
    pub max_relative_energy_increase: f64,
}

impl LimitTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| match (w[0].l2_error, w[1].l2_error) {
            (Some(a), Some(b)) => b < a,
            _ => false,
        })
    }

    pub fn errors(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.l2_error).collect()
    }
}

/// Runs the relaxation system for every `eps` from prepared data and compares
/// `(rho, u)` at `t_final` with a viscous (or inviscid) reference on the same grid.
#[allow(clippy::too_many_arguments)]
pub fn relaxation_limit_study<E>(
    q0: &[[f64; 3]],
    eos: &E,
    mu_tilde: f64,
    grid: &Grid1D,
    t_final: f64,
    eps_list: &[f64],
    opts: &RunOptions,
    reference: Reference,
) -> Result<LimitTable>
where
    E: BarotropicEos + Clone + Send + Sync,
{
    if eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Domain("every eps must be positive".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("eps list must be decreasing".into()));
    }
    let ref_mu = match reference {
        Reference::NavierStokes => mu_tilde,
        Reference::Euler => 0.0,
    };
    let ns = NavierStokesSolver::new(eos.clone(), ref_mu, *grid)?;
    let mut q_ref = q0.to_vec();
    for c in &mut q_ref {
        c[2] = 0.0;
    }
    let reference_run = ns.run(q_ref, t_final, opts)?;
    let target = reference_run.last().clone();
    let results: Vec<(LimitRow, f64)> = eps_list
        .par_iter()
        .map(|&eps| {
            let solver = RelaxationSolver::new(
                System1D {
                    eos: eos.clone(),
                    eps,
                    mu_tilde,
                },
                *grid,
            );
            let mut q = q0.to_vec();
            prepare_stress(grid, &mut q, mu_tilde);
            match solver.run(q, t_final, opts) {
                Ok(traj) => {
                    let e0 = traj.energy[0].energy.abs();
                    let inc = traj
                        .energy
                        .windows(2)
                        .map(|w| w[1].energy - w[0].energy)
                        .fold(f64::NEG_INFINITY, f64::max)
                        / e0;
                    (
                        LimitRow {
                            eps,
                            l2_error: Some(l2_distance(traj.last(), &target, grid.dx())),
                            steps: traj.steps,
                            failure: None,
                        },
                        inc,
                    )
                }
                Err(e) => (
                    LimitRow {
                        eps,
                        l2_error: None,
                        steps: 0,
                        failure: Some(e.to_string()),
                    },
                    f64::NEG_INFINITY,
                ),
            }
        })
        .collect();
    let max_inc = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(LimitTable {
        reference,
        mu_tilde,
        t_final,
        rows: results.into_iter().map(|r| r.0).collect(),
        max_relative_energy_increase: max_inc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::GammaLaw;
    use std::f64::consts::PI;

    fn periodic(n: usize) -> Grid1D {
        Grid1D::new(n, 0.0, 1.0, Boundary::Periodic).unwrap()
    }

    fn solver(eps: f64, mu: f64, grid: Grid1D) -> RelaxationSolver<GammaLaw> {
        RelaxationSolver::new(
            System1D {
                eos: GammaLaw::default(),
                eps,
                mu_tilde: mu,
            },
            grid,
        )
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(4, 0.0, 1.0, Boundary::Periodic).is_err());
        assert!(Grid1D::new(8, 1.0, 1.0, Boundary::Periodic).is_err());
        let g = periodic(10);
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert_eq!(g.neighbour(0, -1), 9);
        let o = Grid1D { boundary: Boundary::Outflow, ..g };
        assert_eq!(o.neighbour(0, -1), 0);
        assert_eq!(o.neighbour(9, 1), 9);
    }

    #[test]
    fn constant_state_is_preserved() {
        let s = solver(0.1, 1.0, periodic(32));
        let q = vec![[1.3, 0.4, 0.0]; 32];
        let dt = s.stable_dt(&q, 0.45);
        let out = s.step(&q, dt, 0.45).unwrap();
        for c in out {
            for k in 0..3 {
                assert!((c[k] - [1.3, 0.4, 0.0][k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cfl_violation_and_vacuum_are_reported() {
        let s = solver(0.1, 1.0, periodic(16));
        let q = vec![[1.0, 0.0, 0.0]; 16];
        let dt = s.stable_dt(&q, 0.45);
        assert!(matches!(s.step(&q, 2.0 * dt, 0.45), Err(Error::CflViolation { .. })));
        let mut bad = q.clone();
        bad[5][0] = -1.0;
        assert!(matches!(s.step(&bad, dt, 0.45), Err(Error::Vacuum { cell: 5, .. })));
    }

    #[test]
    fn wave_speed_matches_rest_state_characteristics() {
        let s = solver(0.1, 1.0, periodic(16));
        assert!((s.wave_speed(&[1.0, 0.0, 0.0]) - 12f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mass_and_momentum_are_conserved() {
        let g = periodic(64);
        let s = solver(0.05, 0.5, g);
        let mut q = sample_euler(&g, |x| 1.0 + 0.2 * (2.0 * PI * x).sin(), |x| 0.3 * (2.0 * PI * x).cos());
        prepare_stress(&g, &mut q, 0.5);
        let total = |q: &[[f64; 3]], k: usize| q.iter().map(|c| c[k]).sum::<f64>();
        for _ in 0..50 {
            let dt = s.stable_dt(&q, 0.45);
            let next = s.step(&q, dt, 0.45).unwrap();
            assert!((total(&next, 0) - total(&q, 0)).abs() < 1e-12 * total(&q, 0).abs().max(1.0));
            assert!((total(&next, 1) - total(&q, 1)).abs() < 1e-12 * total(&q, 0).abs().max(1.0));
            q = next;
        }
    }

    #[test]
    fn stress_perturbation_dissipates_energy() {
        let g = periodic(1000);
        let s = solver(0.2, 1.0, g);
        let q: Vec<[f64; 3]> = g
            .centers()
            .iter()
            .map(|x| [1.0, 0.0, 0.5 * (2.0 * PI * x).sin()])
            .collect();
        let traj = s.run(q, 0.3, &RunOptions::default()).unwrap();
        let audit = discrete_energy_audit(&traj, 1e-10).unwrap();
        assert!(audit.nonincreasing, "{:?}", audit.first_violation);
        assert!(traj.energy.windows(2).all(|w| w[1].energy < w[0].energy));
        let last = traj.energy.last().unwrap();
        let lost = last.energy - traj.energy[0].energy;
        assert!(((lost - last.dissipated) / last.dissipated).abs() < 0.05, "{lost} vs {}", last.dissipated);
    }

    #[test]
    fn equilibrium_energy_is_constant() {
        let g = periodic(32);
        let s = solver(0.1, 1.0, g);
        let traj = s.run(vec![[2.0, 0.0, 0.0]; 32], 0.1, &RunOptions::default()).unwrap();
        let e0 = traj.energy[0].energy;
        assert!(traj.energy.iter().all(|r| (r.energy - e0).abs() <= 1e-14 * e0));
    }

    #[test]
    fn euler_limit_agrees_with_inviscid_reference() {
        let g = periodic(100);
        let mut s = solver(0.1, 1.0, g);
        s.euler_limit = true;
        let ns = NavierStokesSolver::new(GammaLaw::default(), 0.0, g).unwrap();
        let q = sample_euler(&g, |x| 1.0 + 0.3 * (2.0 * PI * x).sin(), |x| 0.2 * (2.0 * PI * x).sin());
        let opts = RunOptions::default();
        let a = s.run(q.clone(), 0.2, &opts).unwrap();
        let b = ns.run(q, 0.2, &opts).unwrap();
        assert_eq!(a.steps, b.steps);
        for i in 0..g.n {
            assert!((a.last().rho[i] - b.last().rho[i]).abs() <= 1e-12);
            assert!((a.last().u[i] - b.last().u[i]).abs() <= 1e-12);
        }
        let audit = discrete_energy_audit(&a, 1e-10).unwrap();
        assert!(audit.nonincreasing);
    }

    #[test]
    fn first_order_self_convergence() {
        let eos = GammaLaw::default();
        let run = |n: usize| {
            let g = periodic(n);
            let s = RelaxationSolver::new(System1D { eos, eps: 0.2, mu_tilde: 0.5 }, g);
            let mut q = sample_euler(&g, |x| 1.0 + 0.1 * (-30.0 * (x - 0.5) * (x - 0.5)).exp(), |_| 0.0);
            prepare_stress(&g, &mut q, 0.5);
            s.run(q, 0.1, &RunOptions::default()).unwrap().last().clone()
        };
        // restrict a fine solution to the coarse grid by cell averaging
        let restrict = |v: &[f64]| -> Vec<f64> { v.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect() };
        let l1 = |a: &[f64], b: &[f64], dx: f64| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx;
        let (c, m, f) = (run(400), run(800), run(1600));
        let e1 = l1(&c.rho, &restrict(&m.rho), 1.0 / 400.0);
        let e2 = l1(&m.rho, &restrict(&f.rho), 1.0 / 800.0);
        let rate = (e1 / e2).log2();
        assert!(rate >= 0.9, "rate {rate}");
    }

    #[test]
    fn viscosity_smooths_velocity() {
        let g = periodic(64);
        let ns = NavierStokesSolver::new(GammaLaw::default(), 1.0, g).unwrap();
        let q = sample_euler(&g, |_| 1.0, |x| 0.1 * (2.0 * PI * x).sin());
        let opts = RunOptions {
            output_times: vec![0.02, 0.04],
            ..RunOptions::default()
        };
        let traj = ns.run(q, 0.06, &opts).unwrap();
        let var: Vec<f64> = traj
            .snapshots
            .iter()
            .map(|s| {
                let mean = s.u.iter().sum::<f64>() / s.u.len() as f64;
                s.u.iter().map(|u| (u - mean).powi(2)).sum()
            })
            .collect();
        assert_eq!(var.len(), 4);
        assert!(var.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn csv_has_expected_header_and_rows() {
        let g = periodic(8);
        let ns = NavierStokesSolver::new(GammaLaw::default(), 0.1, g).unwrap();
        let traj = ns.run(vec![[1.0, 0.0, 0.0]; 8], 0.01, &RunOptions::default()).unwrap();
        let csv = traj.to_csv();
        assert!(csv.starts_with("t,x,rho,u,sigma\n"));
        assert_eq!(csv.lines().count(), 1 + 8 * traj.snapshots.len());
    }
}
