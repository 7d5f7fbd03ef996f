//! Galilean charts in three space dimensions: Euler (5 variables), and the
//! Navier-Stokes-Fourier and Ruggeri charts on the extended 14-variable list
//! `(psi~, u~ (3), theta~, q~ (3), sigma~ (5), tau~)`.
//!
//! With temperature `theta`, `psi = g/theta`, velocity `u`, trace-free stress
//! `sigma`, bulk stress `tau` and heat flux `q`:
//! `psi~ = psi - |u|^2/(2 theta)`, `u~ = u/theta`, `theta~ = 1/theta`,
//! `sigma~ = sigma/theta`, `tau~ = tau/theta`, `q~ = q/theta^2`.
//! The trace-free `sigma~` is stored by its coordinates in an orthonormal basis
//! of trace-free symmetric matrices, so `|sigma~|^2` is the sum of squares.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::Chart;
use crate::error::{Error, Result};
use crate::thermo::{invert_godunov_eos, GodunovEos};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GalileanKind {
    Euler,
    Nsf,
    Ruggeri,
}

/// Relaxation weights of the Ruggeri potential and dissipation coefficients of
/// the production term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub eps_s: f64,
    pub eps_b: f64,
    pub eps_q: f64,
    pub eta_s: f64,
    pub eta_b: f64,
    pub eta_q: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Coefficients {
            eps_s: 0.1,
            eps_b: 0.1,
            eps_q: 0.1,
            eta_s: 1.0,
            eta_b: 1.0,
            eta_q: 1.0,
        }
    }
}

/// Orthonormal basis of trace-free symmetric 3x3 matrices.
pub fn tracefree_basis() -> [Matrix3<f64>; 5] {
    let r2 = std::f64::consts::SQRT_2;
    let r6 = 6f64.sqrt();
    let e = |i: usize, j: usize| {
        let mut m = Matrix3::zeros();
        m[(i, j)] = 1.0;
        m
    };
    [
        (e(0, 0) - e(1, 1)) / r2,
        (e(0, 0) + e(1, 1) - e(2, 2) * 2.0) / r6,
        (e(0, 1) + e(1, 0)) / r2,
        (e(0, 2) + e(2, 0)) / r2,
        (e(1, 2) + e(2, 1)) / r2,
    ]
}

pub fn tracefree_from_coords(c: &[f64]) -> Matrix3<f64> {
    tracefree_basis().iter().zip(c).map(|(b, x)| b * *x).sum()
}

pub fn tracefree_coords(m: &Matrix3<f64>) -> [f64; 5] {
    let basis = tracefree_basis();
    std::array::from_fn(|k| basis[k].component_mul(m).sum())
}

/// Physical state of the extended Galilean description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GalileanState {
    pub theta: f64,
    pub psi: f64,
    pub u: Vector3<f64>,
    /// Trace-free symmetric.
    pub sigma: Matrix3<f64>,
    pub tau: f64,
    pub q: Vector3<f64>,
}

impl GalileanState {
    pub fn equilibrium(theta: f64, psi: f64, u: Vector3<f64>) -> Self {
        GalileanState {
            theta,
            psi,
            u,
            sigma: Matrix3::zeros(),
            tau: 0.0,
            q: Vector3::zeros(),
        }
    }

    /// Godunov variables; 5 entries for `extended = false`, otherwise 14.
    pub fn to_godunov(&self, extended: bool) -> Vec<f64> {
        let th = self.theta;
        let mut y = vec![self.psi - self.u.norm_squared() / (2.0 * th)];
        y.extend((self.u / th).iter());
        y.push(1.0 / th);
        if extended {
            y.extend((self.q / (th * th)).iter());
            y.extend(tracefree_coords(&(self.sigma / th)));
            y.push(self.tau / th);
        }
        y
    }

    pub fn from_godunov(y: &[f64]) -> Result<Self> {
        if y.len() != 5 && y.len() != 14 {
            return Err(Error::Domain(format!("expected 5 or 14 Godunov variables, got {}", y.len())));
        }
        if !(y[4] > 0.0) {
            return Err(Error::NonPhysical(format!("theta~ = {} must be positive", y[4])));
        }
        let th = 1.0 / y[4];
        let ut = Vector3::new(y[1], y[2], y[3]);
        let mut s = GalileanState::equilibrium(th, y[0] + th * ut.norm_squared() / 2.0, ut * th);
        if y.len() == 14 {
            s.q = Vector3::new(y[5], y[6], y[7]) * (th * th);
            s.sigma = tracefree_from_coords(&y[8..13]) * th;
            s.tau = y[13] * th;
        }
        Ok(s)
    }
}

#[derive(Clone, Debug)]
pub struct GalileanChart<G> {
    pub kind: GalileanKind,
    pub eos: G,
    pub coeffs: Coefficients,
}

impl<G: GodunovEos> GalileanChart<G> {
    pub fn new(kind: GalileanKind, eos: G, coeffs: Coefficients) -> Self {
        GalileanChart { kind, eos, coeffs }
    }

    pub fn extended(&self) -> bool {
        self.kind != GalileanKind::Euler
    }

    /// `S(sigma~, tau~, q~)`; zero except on the Ruggeri chart.
    pub fn shift(&self, y: &[f64]) -> f64 {
        if self.kind != GalileanKind::Ruggeri {
            return 0.0;
        }
        let c = &self.coeffs;
        let sig2: f64 = y[8..13].iter().map(|x| x * x).sum();
        let q2: f64 = y[5..8].iter().map(|x| x * x).sum();
        0.5 * (c.eps_s * sig2 + c.eps_b * y[13] * y[13] + c.eps_q * q2)
    }

    fn check_len(&self, y: &[f64]) -> Result<()> {
        let n = if self.extended() { 14 } else { 5 };
        if y.len() != n {
            return Err(Error::Domain(format!("chart {:?} takes {n} variables, got {}", self.kind, y.len())));
        }
        Ok(())
    }

    /// Mass, momentum and (negative) total energy densities from the physical
    /// state: `(rho, rho u, -(rho e + rho |u|^2/2))` with `rho = p_psi/theta` and
    /// `rho e = theta p_theta - p`. These equal `dX^0/dY` on the Euler block.
    pub fn densities(&self, s: &GalileanState) -> Result<[f64; 5]> {
        let dp = invert_godunov_eos(&self.eos, s.theta, s.psi)?;
        let rho_e = s.theta * self.eos.dp_dtheta(s.theta, s.psi) - dp.p;
        let ru = s.u * dp.rho;
        Ok([dp.rho, ru[0], ru[1], ru[2], -(rho_e + 0.5 * dp.rho * s.u.norm_squared())])
    }

    /// Classical mass flux `rho u` and momentum flux `rho u u + (p - tau) I - sigma`.
    pub fn classical_fluxes(&self, s: &GalileanState) -> Result<(Vector3<f64>, Matrix3<f64>)> {
        let dp = invert_godunov_eos(&self.eos, s.theta, s.psi)?;
        let mom = s.u * s.u.transpose() * dp.rho + Matrix3::identity() * (dp.p - s.tau) - s.sigma;
        Ok((s.u * dp.rho, mom))
    }
}

impl<G: GodunovEos + Sync> Chart for GalileanChart<G> {
    fn name(&self) -> String {
        match self.kind {
            GalileanKind::Euler => "euler",
            GalileanKind::Nsf => "nsf",
            GalileanKind::Ruggeri => "ruggeri",
        }
        .into()
    }

    fn variable_names(&self) -> Vec<String> {
        let mut v: Vec<String> = ["psi~", "u~1", "u~2", "u~3", "theta~"].iter().map(|s| s.to_string()).collect();
        if self.extended() {
            v.extend(["q~1", "q~2", "q~3"].iter().map(|s| s.to_string()));
            v.extend((1..=5).map(|k| format!("sigma~{k}")));
            v.push("tau~".into());
        }
        v
    }

    fn potentials(&self, y: &[f64]) -> Result<[f64; 4]> {
        self.check_len(y)?;
        let s = GalileanState::from_godunov(y)?;
        let pn = self.eos.p_hat(s.theta, s.psi - self.shift(y));
        let stress = Matrix3::identity() * (pn - s.tau) - s.sigma;
        let x = (stress * s.u + s.q) / s.theta;
        Ok([pn / s.theta, x[0], x[1], x[2]])
    }

    fn protopotential(&self, y: &[f64]) -> Option<Result<f64>> {
        Some((|| {
            self.check_len(y)?;
            let s = GalileanState::from_godunov(y)?;
            let base = self.eos.x_hat(s.theta, s.psi - self.shift(y)) / s.theta;
            if !self.extended() {
                return Ok(base);
            }
            let ut = Vector3::new(y[1], y[2], y[3]);
            let st = tracefree_from_coords(&y[8..13]) + Matrix3::identity() * y[13];
            let qt = Vector3::new(y[5], y[6], y[7]);
            Ok(base + s.theta * (-0.5 * (ut.transpose() * st * ut)[0] + qt.dot(&ut)))
        })())
    }

    fn potential_slots(&self) -> [usize; 4] {
        [0, 1, 2, 3]
    }

    fn production(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y)?;
        let mut out = vec![0.0; y.len()];
        if !self.extended() {
            return Ok(out);
        }
        let s = GalileanState::from_godunov(y)?;
        let c = &self.coeffs;
        if !(c.eta_s > 0.0 && c.eta_b > 0.0 && c.eta_q > 0.0) {
            return Err(Error::Domain("dissipation coefficients must be positive".into()));
        }
        for i in 0..3 {
            out[5 + i] = -s.q[i] / (s.theta * c.eta_q);
        }
        let sc = tracefree_coords(&s.sigma);
        for k in 0..5 {
            out[8 + k] = sc[k] / (s.theta * c.eta_s);
        }
        out[13] = s.tau / (s.theta * c.eta_b);
        Ok(out)
    }
}

/// `build_charts`: the Euler, NSF and Ruggeri charts for one equation of state.
pub fn build_charts<G: GodunovEos + Clone>(eos: G, coeffs: Coefficients) -> [GalileanChart<G>; 3] {
    [
        GalileanChart::new(GalileanKind::Euler, eos.clone(), coeffs),
        GalileanChart::new(GalileanKind::Nsf, eos.clone(), coeffs),
        GalileanChart::new(GalileanKind::Ruggeri, eos, coeffs),
    ]
}

/// A random state with `theta` in `[0.5, 2]`, `|psi| <= 1`, `|u| <= 1` and
/// dissipative fields of size `amp`.
pub fn random_state<R: rand::Rng>(rng: &mut R, amp: f64) -> GalileanState {
    let mut v = || rng.gen_range(-1.0..1.0);
    let theta = 1.25 + 0.75 * v();
    let psi = v();
    let u = Vector3::new(v(), v(), v()) / 3f64.sqrt();
    let coords: Vec<f64> = (0..5).map(|_| amp * v()).collect();
    GalileanState {
        theta,
        psi,
        u,
        sigma: tracefree_from_coords(&coords),
        tau: amp * v(),
        q: Vector3::new(v(), v(), v()) * amp,
    }
}
