//! Equations of state.
//!
//! Three families are used throughout the crate:
//!
//! * [`BarotropicEos`]: internal energy `e(v)` of the specific volume `v = 1/rho`,
//!   with `p(v) = -e'(v)`.
//! * [`NonbarotropicEos`]: `e(v, s)` with `p = -e_v` and temperature `theta = e_s`.
//! * [`GodunovEos`]: pressure given as `p_hat(theta, psi)` where `psi = g/theta` is
//!   the chemical potential over temperature. This is the form consumed by the
//!   Godunov-variable charts in [`crate::godunov`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Barotropic equation of state `e = e(v)`.
pub trait BarotropicEos: Send + Sync {
    fn energy(&self, v: f64) -> f64;
    fn pressure(&self, v: f64) -> f64;
    /// Second derivative `e''(v) = -p'(v)`.
    fn energy_vv(&self, v: f64) -> f64;

    /// `dp/dv`.
    fn pressure_v(&self, v: f64) -> f64 {
        -self.energy_vv(v)
    }

    /// `d^2p/dv^2`, by default a central difference of [`Self::pressure_v`].
    fn pressure_vv(&self, v: f64) -> f64 {
        let h = 1e-5 * v.abs().max(1e-3);
        (self.pressure_v(v + h) - self.pressure_v(v - h)) / (2.0 * h)
    }

    /// Pressure as a function of density.
    fn pressure_rho(&self, rho: f64) -> f64 {
        self.pressure(1.0 / rho)
    }

    /// `dp/drho = -p'(v)/rho^2`, the squared sound speed.
    fn dpressure_drho(&self, rho: f64) -> f64 {
        -self.pressure_v(1.0 / rho) / (rho * rho)
    }

    /// `d^2p/drho^2`.
    fn d2pressure_drho2(&self, rho: f64) -> f64 {
        let v = 1.0 / rho;
        // p(rho) = P(1/rho): P'' v^4 + 2 P' v^3
        self.pressure_vv(v) * v.powi(4) + 2.0 * self.pressure_v(v) * v.powi(3)
    }

    fn sound_speed(&self, rho: f64) -> f64 {
        self.dpressure_drho(rho).sqrt()
    }
}

/// Gamma-law `e(v) = A v^(1-gamma)/(gamma-1)`, `p(v) = A v^(-gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaLaw {
    pub a: f64,
    pub gamma: f64,
}

impl Default for GammaLaw {
    fn default() -> Self {
        GammaLaw { a: 1.0, gamma: 2.0 }
    }
}

impl GammaLaw {
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        if !(a > 0.0) || !(gamma > 1.0) {
            return Err(Error::Domain(format!(
                "gamma-law needs A > 0 and gamma > 1 (got A = {a}, gamma = {gamma})"
            )));
        }
        Ok(GammaLaw { a, gamma })
    }
}

impl BarotropicEos for GammaLaw {
    fn energy(&self, v: f64) -> f64 {
        self.a * v.powf(1.0 - self.gamma) / (self.gamma - 1.0)
    }

    fn pressure(&self, v: f64) -> f64 {
        self.a * v.powf(-self.gamma)
    }

    fn energy_vv(&self, v: f64) -> f64 {
        self.a * self.gamma * v.powf(-self.gamma - 1.0)
    }

    fn pressure_vv(&self, v: f64) -> f64 {
        self.a * self.gamma * (self.gamma + 1.0) * v.powf(-self.gamma - 2.0)
    }
}

/// Outcome of [`check_convexity`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityVerdict {
    pub convex: bool,
    /// Smallest sampled value of `e''(v)`.
    pub min_energy_vv: f64,
    /// Location of the smallest sample.
    pub argmin_v: f64,
}

/// Samples `e''(v)` on `n_samples` uniformly spaced points of `[v_lo, v_hi]`.
pub fn check_convexity<E: BarotropicEos + ?Sized>(
    eos: &E,
    v_interval: (f64, f64),
    n_samples: usize,
) -> Result<ConvexityVerdict> {
    let (lo, hi) = v_interval;
    if !(lo > 0.0) || !(hi >= lo) {
        return Err(Error::Domain(format!(
            "specific-volume interval [{lo}, {hi}] must lie in (0, inf)"
        )));
    }
    if n_samples < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    let mut min = f64::INFINITY;
    let mut argmin = lo;
    for i in 0..n_samples {
        let v = lo + (hi - lo) * i as f64 / (n_samples - 1) as f64;
        let evv = eos.energy_vv(v);
        if evv < min {
            min = evv;
            argmin = v;
        }
    }
    Ok(ConvexityVerdict {
        convex: min > 0.0,
        min_energy_vv: min,
        argmin_v: argmin,
    })
}

/// Nonbarotropic equation of state `e = e(v, s)`.
pub trait NonbarotropicEos: Send + Sync {
    fn energy(&self, v: f64, s: f64) -> f64;
    /// `p = -e_v`.
    fn pressure(&self, v: f64, s: f64) -> f64;
    /// `theta = e_s`.
    fn temperature(&self, v: f64, s: f64) -> f64;
    /// Hessian `[[e_vv, e_vs], [e_vs, e_ss]]`.
    fn hessian(&self, v: f64, s: f64) -> [[f64; 2]; 2];
}

/// Polytropic ideal gas `e(v, s) = A v^(1-gamma) exp(s/c_v) / (gamma - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealGas {
    pub a: f64,
    pub gamma: f64,
    pub cv: f64,
}

impl Default for IdealGas {
    fn default() -> Self {
        IdealGas {
            a: 1.0,
            gamma: 1.4,
            cv: 1.0,
        }
    }
}

impl NonbarotropicEos for IdealGas {
    fn energy(&self, v: f64, s: f64) -> f64 {
        self.a * v.powf(1.0 - self.gamma) * (s / self.cv).exp() / (self.gamma - 1.0)
    }

    fn pressure(&self, v: f64, s: f64) -> f64 {
        self.a * v.powf(-self.gamma) * (s / self.cv).exp()
    }

    fn temperature(&self, v: f64, s: f64) -> f64 {
        self.energy(v, s) / self.cv
    }

    fn hessian(&self, v: f64, s: f64) -> [[f64; 2]; 2] {
        let e = self.energy(v, s);
        let p = self.pressure(v, s);
        let evv = self.gamma * p / v;
        let evs = -p / self.cv;
        let ess = e / (self.cv * self.cv);
        [[evv, evs], [evs, ess]]
    }
}

/// Pressure in Godunov form `p = p_hat(theta, psi)`.
///
/// Two antiderivatives are needed by the potential machinery: the `psi`-primitive
/// `X_hat` with `dX_hat/dpsi = p_hat`, and the temperature primitive `Xbar_hat`
/// normalised so that `dXbar_hat/dtheta = p_hat / theta^3`. The latter is what makes
/// the second `Upsilon`-derivatives of `Xbar_hat(theta(Upsilon), psi)` equal to the
/// perfect-fluid energy-momentum tensor.
pub trait GodunovEos: Send + Sync {
    fn p_hat(&self, theta: f64, psi: f64) -> f64;
    fn dp_dtheta(&self, theta: f64, psi: f64) -> f64;
    fn dp_dpsi(&self, theta: f64, psi: f64) -> f64;
    /// `X_hat` with `dX_hat/dpsi = p_hat`.
    fn x_hat(&self, theta: f64, psi: f64) -> f64;
    /// `Xbar_hat` with `dXbar_hat/dtheta = p_hat / theta^3`.
    fn xbar_hat(&self, theta: f64, psi: f64) -> f64;

    /// `dXbar_hat/dpsi`, by default a central difference.
    fn xbar_hat_psi(&self, theta: f64, psi: f64) -> f64 {
        let h = 1e-6 * (psi.abs() + 1.0);
        (self.xbar_hat(theta, psi + h) - self.xbar_hat(theta, psi - h)) / (2.0 * h)
    }
}

/// `p_hat = c0 theta^n exp(psi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialGodunov {
    pub c0: f64,
    pub n: f64,
}

impl Default for ExponentialGodunov {
    fn default() -> Self {
        ExponentialGodunov { c0: 1.0, n: 4.0 }
    }
}

impl GodunovEos for ExponentialGodunov {
    fn p_hat(&self, theta: f64, psi: f64) -> f64 {
        self.c0 * theta.powf(self.n) * psi.exp()
    }

    fn dp_dtheta(&self, theta: f64, psi: f64) -> f64 {
        self.c0 * self.n * theta.powf(self.n - 1.0) * psi.exp()
    }

    fn dp_dpsi(&self, theta: f64, psi: f64) -> f64 {
        self.p_hat(theta, psi)
    }

    fn x_hat(&self, theta: f64, psi: f64) -> f64 {
        self.p_hat(theta, psi)
    }

    fn xbar_hat(&self, theta: f64, psi: f64) -> f64 {
        if (self.n - 2.0).abs() < 1e-14 {
            self.c0 * theta.ln() * psi.exp()
        } else {
            self.c0 * theta.powf(self.n - 2.0) * psi.exp() / (self.n - 2.0)
        }
    }

    fn xbar_hat_psi(&self, theta: f64, psi: f64) -> f64 {
        self.xbar_hat(theta, psi)
    }
}

/// Physical density and pressure recovered from a Godunov-form EOS.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityPressure {
    pub rho: f64,
    pub p: f64,
}

/// `rho = d(p_hat/theta)/dpsi` at fixed `theta` (Gibbs-Duhem), by central difference.
pub fn invert_godunov_eos<G: GodunovEos + ?Sized>(
    geos: &G,
    theta: f64,
    psi: f64,
) -> Result<DensityPressure> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {theta}")));
    }
    let h = 1e-6 * (psi.abs() + 1.0);
    let rho = (geos.p_hat(theta, psi + h) - geos.p_hat(theta, psi - h)) / (2.0 * h * theta);
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::NonPhysical(format!(
            "d(p/theta)/dpsi = {rho:e} at theta = {theta}, psi = {psi}"
        )));
    }
    Ok(DensityPressure {
        rho,
        p: geos.p_hat(theta, psi),
    })
}

/// Serializable selection of a barotropic EOS for experiment configs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EosSpec {
    GammaLaw { a: f64, gamma: f64 },
}

impl Default for EosSpec {
    fn default() -> Self {
        EosSpec::GammaLaw { a: 1.0, gamma: 2.0 }
    }
}

impl EosSpec {
    pub fn build(&self) -> Result<GammaLaw> {
        match *self {
            EosSpec::GammaLaw { a, gamma } => GammaLaw::new(a, gamma),
        }
    }
}
