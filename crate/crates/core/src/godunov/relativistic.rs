//! Lorentz-invariant charts on `(psi, Upsilon_a, Sigma_ab)`.
//!
//! `Upsilon^a = u^a/theta` with `theta^{-2} = -Upsilon.Upsilon`. The Euler chart
//! has protopotential `Xbar_hat(theta, psi)`; the Eckart chart subtracts
//! `Sigma_ab Upsilon^a Upsilon^b / 2`; the Ruggeri chart additionally evaluates
//! `Xbar_hat` at `psi - S(Sigma, u)`, where `S = sum_C eps_C <P_C Sigma, Sigma>/2`.
//!
//! Variables are stored as `[psi, Upsilon_0..Upsilon_3, Sigma_ab (a <= b)]` with
//! lower indices. An off-diagonal coordinate sets both `Sigma_ab` and `Sigma_ba`,
//! a linear change of variables that leaves every definiteness verdict unchanged.

use nalgebra::{DMatrix, Matrix4, SMatrix, Vector4};
use serde::{Deserialize, Serialize};

use super::tensor4::{contract, dot, lower, metric, raise2, ProjectorSet, SymTensor4, Vec4, PARTS};
use super::{causality_check, Chart, DefinitenessReport, FD_STEP2};
use crate::error::{Error, Result};
use crate::linalg::{fd_hessian_richardson, max_relative_error};
use crate::thermo::GodunovEos;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelKind {
    Euler,
    Eckart,
    Ruggeri,
}

/// Per-part weights in the order shear, bulk, heat flux, heating.
pub type PartWeights = [f64; 4];

pub const SIGMA_SLOTS: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelState {
    pub psi: f64,
    /// Upper index.
    pub upsilon: Vec4,
    /// Lower indices.
    pub sigma: SymTensor4,
}

impl RelState {
    pub fn at_rest(theta: f64, psi: f64) -> Self {
        RelState {
            psi,
            upsilon: Vector4::new(1.0 / theta, 0.0, 0.0, 0.0),
            sigma: Matrix4::zeros(),
        }
    }

    pub fn theta(&self) -> Result<f64> {
        theta_of(&self.upsilon)
    }

    pub fn velocity(&self) -> Result<Vec4> {
        Ok(self.upsilon * self.theta()?)
    }

    pub fn to_vars(&self, with_sigma: bool) -> Vec<f64> {
        let mut y = vec![self.psi];
        y.extend(lower(&self.upsilon).iter());
        if with_sigma {
            y.extend(SIGMA_SLOTS.iter().map(|&(a, b)| self.sigma[(a, b)]));
        }
        y
    }

    pub fn from_vars(y: &[f64]) -> Result<Self> {
        if y.len() != 5 && y.len() != 15 {
            return Err(Error::Domain(format!("expected 5 or 15 variables, got {}", y.len())));
        }
        let mut sigma = Matrix4::zeros();
        if y.len() == 15 {
            for (k, &(a, b)) in SIGMA_SLOTS.iter().enumerate() {
                sigma[(a, b)] = y[5 + k];
                sigma[(b, a)] = y[5 + k];
            }
        }
        Ok(RelState {
            psi: y[0],
            upsilon: lower(&Vector4::new(y[1], y[2], y[3], y[4])),
            sigma,
        })
    }
}

pub fn theta_of(upsilon: &Vec4) -> Result<f64> {
    let n = dot(upsilon, upsilon);
    if !(n < 0.0) {
        return Err(Error::Domain(format!("Upsilon is not timelike (Upsilon.Upsilon = {n})")));
    }
    Ok(1.0 / (-n).sqrt())
}

/// Scalar invariants of `Sigma` relative to `u`: `a = Sigma(u, u)`, `w = Sigma u`
/// (lower), `tr = g^ab Sigma_ab`, `|Sigma|^2`.
struct Invariants {
    a: f64,
    w: Vec4,
    ww: f64,
    tr: f64,
    norm2: f64,
}

fn invariants(sigma: &SymTensor4, u: &Vec4) -> Invariants {
    let w = sigma * u;
    let wu = lower(&w);
    Invariants {
        a: u.dot(&w),
        w,
        ww: w.dot(&wu),
        tr: (metric() * sigma).trace(),
        norm2: contract(sigma, sigma),
    }
}

/// `S(Sigma, u)` from the scalar invariants:
/// `<P_B S, S> = (tr + a)^2/3`, `<P_Q S, S> = -2 (w.w + a^2)`, `<P_H S, S> = a^2`,
/// and the shear part is the remainder of `|Sigma|^2`.
pub fn shift(eps: &PartWeights, sigma: &SymTensor4, u: &Vec4) -> f64 {
    let i = invariants(sigma, u);
    let bulk = (i.tr + i.a).powi(2) / 3.0;
    let heat = -2.0 * (i.ww + i.a * i.a);
    let heating = i.a * i.a;
    let shear = i.norm2 - bulk - heat - heating;
    0.5 * (eps[0] * shear + eps[1] * bulk + eps[2] * heat + eps[3] * heating)
}

/// `dS/du^m` at fixed `Sigma`, treating the components of `u` as independent.
fn shift_du(eps: &PartWeights, sigma: &SymTensor4, u: &Vec4) -> Vec4 {
    let i = invariants(sigma, u);
    // S as a function of (a, w.w)
    let d_a = 0.5
        * (eps[0] * (-2.0 * (i.tr + i.a) / 3.0 + 4.0 * i.a - 2.0 * i.a)
            + eps[1] * 2.0 * (i.tr + i.a) / 3.0
            - 4.0 * eps[2] * i.a
            + 2.0 * eps[3] * i.a);
    let d_ww = eps[0] - eps[2];
    // d a/du^m = 2 w_m, d (w.w)/du^m = 2 Sigma_ma w^a
    let z = sigma * lower(&i.w);
    i.w * (2.0 * d_a) + z * (2.0 * d_ww)
}

/// `S` assembled from the four projectors.
pub fn shift_projected(eps: &PartWeights, sigma: &SymTensor4, u: &Vec4) -> Result<f64> {
    let p = ProjectorSet::new(u)?;
    Ok(0.5
        * PARTS
            .iter()
            .zip(eps.iter())
            .map(|(c, e)| e * contract(&p.project(*c, sigma), sigma))
            .sum::<f64>())
}

#[derive(Clone, Debug)]
pub struct RelChart<G> {
    pub kind: RelKind,
    pub eos: G,
    pub eps: PartWeights,
    pub eta: PartWeights,
}

impl<G: GodunovEos> RelChart<G> {
    pub fn new(kind: RelKind, eos: G) -> Self {
        RelChart {
            kind,
            eos,
            eps: [0.0; 4],
            eta: [1.0, 1.0, 1.0, 0.0],
        }
    }

    pub fn with_eps(mut self, eps: PartWeights) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_eta(mut self, eta: PartWeights) -> Self {
        self.eta = eta;
        self
    }

    fn has_sigma(&self) -> bool {
        self.kind != RelKind::Euler
    }

    fn state(&self, y: &[f64]) -> Result<RelState> {
        let n = if self.has_sigma() { 15 } else { 5 };
        if y.len() != n {
            return Err(Error::Domain(format!("chart {:?} takes {n} variables, got {}", self.kind, y.len())));
        }
        RelState::from_vars(y)
    }

    fn shifted_psi(&self, s: &RelState, theta: f64) -> f64 {
        match self.kind {
            RelKind::Ruggeri => s.psi - shift(&self.eps, &s.sigma, &(s.upsilon * theta)),
            _ => s.psi,
        }
    }

    /// The protopotential `Xbar` at a state.
    pub fn xbar(&self, s: &RelState) -> Result<f64> {
        let theta = s.theta()?;
        let quad = 0.5 * s.upsilon.dot(&(s.sigma * s.upsilon));
        Ok(self.eos.xbar_hat(theta, self.shifted_psi(s, theta)) - quad)
    }

    /// `X^a = dXbar/dUpsilon_a` in closed form (upper index).
    pub fn potential_vector(&self, s: &RelState) -> Result<Vec4> {
        let theta = s.theta()?;
        let phi = self.shifted_psi(s, theta);
        let mut x = s.upsilon * self.eos.p_hat(theta, phi) - lower(&(s.sigma * s.upsilon));
        if self.kind == RelKind::Ruggeri {
            let u = s.upsilon * theta;
            let pi_up = metric() + u * u.transpose();
            // dS/dUpsilon_a = theta Pi^{ma} dS/du^m
            let ds = pi_up * shift_du(&self.eps, &s.sigma, &u) * theta;
            x -= ds * self.eos.xbar_hat_psi(theta, phi);
        }
        Ok(x)
    }

    /// Production `I_ab` (lower) with per-part coefficients `-1/(theta eta_C)` for
    /// shear and `+1/(theta eta_C)` for the other parts. A vanishing coefficient
    /// requires the matching part of `Sigma` to vanish.
    pub fn production_tensor(&self, s: &RelState) -> Result<SymTensor4> {
        if !self.has_sigma() {
            return Ok(Matrix4::zeros());
        }
        let theta = s.theta()?;
        let p = ProjectorSet::new(&(s.upsilon * theta))?;
        let signs = [1.0, -1.0, -1.0, -1.0];
        let mut out = Matrix4::zeros();
        for (k, part) in PARTS.iter().enumerate() {
            let comp = p.project(*part, &s.sigma);
            if self.eta[k] == 0.0 {
                if comp.amax() > 1e-12 * (1.0 + s.sigma.amax()) {
                    return Err(Error::Domain(format!(
                        "{part:?} coefficient vanishes but Sigma has a {part:?} part"
                    )));
                }
                continue;
            }
            out -= comp * (signs[k] / (theta * self.eta[k]));
        }
        Ok(out)
    }
}

impl<G: GodunovEos + Sync> Chart for RelChart<G> {
    fn name(&self) -> String {
        match self.kind {
            RelKind::Euler => "rel_euler",
            RelKind::Eckart => "rel_eckart",
            RelKind::Ruggeri => "rel_ruggeri",
        }
        .into()
    }

    fn variable_names(&self) -> Vec<String> {
        let mut v: Vec<String> = vec!["psi".into()];
        v.extend((0..4).map(|a| format!("Upsilon_{a}")));
        if self.has_sigma() {
            v.extend(SIGMA_SLOTS.iter().map(|(a, b)| format!("Sigma_{a}{b}")));
        }
        v
    }

    fn potentials(&self, y: &[f64]) -> Result<[f64; 4]> {
        let x = self.potential_vector(&self.state(y)?)?;
        Ok([x[0], x[1], x[2], x[3]])
    }

    fn protopotential(&self, y: &[f64]) -> Option<Result<f64>> {
        Some(self.state(y).and_then(|s| self.xbar(&s)))
    }

    fn potential_slots(&self) -> [usize; 4] {
        [1, 2, 3, 4]
    }

    fn production(&self, y: &[f64]) -> Result<Vec<f64>> {
        let s = self.state(y)?;
        let mut out = vec![0.0; y.len()];
        if self.has_sigma() {
            let i = self.production_tensor(&s)?;
            for (k, &(a, b)) in SIGMA_SLOTS.iter().enumerate() {
                out[5 + k] = i[(a, b)];
            }
        }
        Ok(out)
    }

    fn lorentz_invariant(&self) -> bool {
        true
    }
}

/// Second derivatives of a protopotential: the `Upsilon`-`Upsilon` block (upper
/// indices), the `Upsilon`-`psi` column, and the full Hessian.
fn protopotential_blocks<G: GodunovEos + Sync>(
    chart: &RelChart<G>,
    s: &RelState,
) -> Result<(Matrix4<f64>, Vec4, DMatrix<f64>)> {
    let y = s.to_vars(chart.has_sigma());
    let h = fd_hessian_richardson(|z| chart.protopotential(z).unwrap().unwrap_or(f64::NAN), &y, FD_STEP2);
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonPhysical("protopotential undefined near the state (light cone)".into()));
    }
    let tt = Matrix4::from_fn(|a, b| h[(1 + a, 1 + b)]);
    let tp = Vector4::from_fn(|a, _| h[(1 + a, 0)]);
    Ok((tt, tp, h))
}

#[derive(Clone, Debug, Serialize)]
pub struct EulerTensorReport {
    /// `T^{ab}` and `N^a` from second differences of the protopotential.
    pub t_fd: [[f64; 4]; 4],
    pub n_fd: [f64; 4],
    pub t_closed: [[f64; 4]; 4],
    pub n_closed: [f64; 4],
    pub max_relative_error: f64,
    /// `g_ab T^ab` from the differenced tensor and `4p - theta p_theta`.
    pub trace_fd: f64,
    pub trace_closed: f64,
}

fn rows(m: &Matrix4<f64>) -> [[f64; 4]; 4] {
    std::array::from_fn(|a| std::array::from_fn(|b| m[(a, b)]))
}

/// Perfect-fluid `T^{ab} = theta^3 p_theta Upsilon^a Upsilon^b + p g^{ab}` and
/// `N^a = p_psi Upsilon^a`.
pub fn euler_closed_form<G: GodunovEos>(geos: &G, upsilon: &Vec4, psi: f64) -> Result<(Matrix4<f64>, Vec4)> {
    let theta = theta_of(upsilon)?;
    let t = upsilon * upsilon.transpose() * (theta.powi(3) * geos.dp_dtheta(theta, psi))
        + metric() * geos.p_hat(theta, psi);
    Ok((t, upsilon * geos.dp_dpsi(theta, psi)))
}

/// `rel_euler_tensor`.
pub fn rel_euler_tensor<G: GodunovEos + Clone + Sync>(geos: &G, upsilon: &Vec4, psi: f64) -> Result<EulerTensorReport> {
    let chart = RelChart::new(RelKind::Euler, geos.clone());
    let s = RelState {
        psi,
        upsilon: *upsilon,
        sigma: Matrix4::zeros(),
    };
    let (t_fd, n_fd, _) = protopotential_blocks(&chart, &s)?;
    let (t, n) = euler_closed_form(geos, upsilon, psi)?;
    let theta = theta_of(upsilon)?;
    let err_t = max_relative_error(
        &DMatrix::from_iterator(16, 1, t_fd.iter().copied()),
        &DMatrix::from_iterator(16, 1, t.iter().copied()),
        1e-3 * t.amax(),
    );
    let err_n = (0..4)
        .map(|a| (n_fd[a] - n[a]).abs() / n[a].abs().max(1e-3 * n.amax()))
        .fold(0.0, f64::max);
    Ok(EulerTensorReport {
        t_fd: rows(&t_fd),
        n_fd: [n_fd[0], n_fd[1], n_fd[2], n_fd[3]],
        t_closed: rows(&t),
        n_closed: [n[0], n[1], n[2], n[3]],
        max_relative_error: err_t.max(err_n),
        trace_fd: (metric() * t_fd).trace(),
        trace_closed: 4.0 * geos.p_hat(theta, psi) - theta * geos.dp_dtheta(theta, psi),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EckartReport {
    /// `max |d^2 Xbar/dUpsilon dUpsilon - (T_E - Sigma)| / max |T_E - Sigma|`.
    pub identity_error: f64,
    pub production: [[f64; 4]; 4],
    /// Readback of the constitutive law: for each part, the stress built from the
    /// velocity gradient lies in that part's range (`leakage`), and the
    /// production map returns `sign * P_C D` (`sign` should be +1 for every part).
    pub leakage: f64,
    pub readback_sign: [f64; 4],
    pub readback_defect: [f64; 4],
}

/// `Sigma = -theta sum_C eta_C P_C D` with `D` the symmetric part of `grad`.
pub fn constitutive_stress(eta: &PartWeights, theta: f64, p: &ProjectorSet, grad: &Matrix4<f64>) -> SymTensor4 {
    let d = (grad + grad.transpose()) * 0.5;
    -PARTS
        .iter()
        .zip(eta.iter())
        .map(|(c, e)| p.project(*c, &d) * *e)
        .sum::<SymTensor4>()
        * theta
}

/// `rel_eckart_assembly`.
pub fn rel_eckart_assembly<G: GodunovEos + Clone + Sync>(
    geos: &G,
    upsilon: &Vec4,
    psi: f64,
    sigma: &SymTensor4,
    eta: &PartWeights,
    grad: &Matrix4<f64>,
) -> Result<EckartReport> {
    if eta.iter().any(|e| *e < 0.0) {
        return Err(Error::Domain("dissipation coefficients must be nonnegative".into()));
    }
    let chart = RelChart::new(RelKind::Eckart, geos.clone()).with_eta(*eta);
    let s = RelState {
        psi,
        upsilon: *upsilon,
        sigma: *sigma,
    };
    let (tt, _, _) = protopotential_blocks(&chart, &s)?;
    let (te, _) = euler_closed_form(geos, upsilon, psi)?;
    let target = te - raise2(sigma);
    let identity_error = (tt - target).amax() / target.amax();
    let production = chart.production_tensor(&s)?;

    let theta = theta_of(upsilon)?;
    let p = ProjectorSet::new(&(upsilon * theta))?;
    let read = constitutive_stress(eta, theta, &p, grad);
    let d = (grad + grad.transpose()) * 0.5;
    let mut leakage: f64 = 0.0;
    for (k, c) in PARTS.iter().enumerate() {
        let part = p.project(*c, &read);
        for (j, other) in PARTS.iter().enumerate() {
            if j != k {
                leakage = leakage.max(p.project(*other, &part).amax());
            }
        }
    }
    let readback = RelState {
        psi,
        upsilon: *upsilon,
        sigma: read,
    };
    let i = chart.production_tensor(&readback)?;
    let mut readback_sign = [0.0; 4];
    let mut readback_defect = [0.0; 4];
    for (k, c) in PARTS.iter().enumerate() {
        let pd = p.project(*c, &d);
        let pi = p.project(*c, &i);
        let n = pd.norm();
        if n < 1e-12 || eta[k] == 0.0 {
            continue;
        }
        let sign = (pi.dot(&pd) / (n * n)).signum();
        readback_sign[k] = sign;
        readback_defect[k] = (pi - pd * sign).norm() / n;
    }
    Ok(EckartReport {
        identity_error,
        production: rows(&production),
        leakage,
        readback_sign,
        readback_defect,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RuggeriReport {
    /// `d^2 Xbar_N / dUpsilon dUpsilon`, `d^2 Xbar_N / dUpsilon dpsi`, and
    /// `d^2 Xbar_N / dUpsilon dSigma` (4 x 10, coordinates as in [`SIGMA_SLOTS`]).
    pub upsilon_upsilon: [[f64; 4]; 4],
    pub upsilon_psi: [f64; 4],
    pub upsilon_sigma: Vec<Vec<f64>>,
    /// `S` from the invariants and from the projectors.
    pub shift: f64,
    pub shift_projected: f64,
    /// Largest difference of the blocks from the Eckart chart at the same state.
    pub eckart_defect: f64,
    /// Causality at the state for `T = u` and for each supplied direction.
    pub causality: Vec<DefinitenessReport>,
}

/// `rel_ruggeri_system`.
pub fn rel_ruggeri_system<G: GodunovEos + Clone + Sync>(
    geos: &G,
    state: &RelState,
    eps: &PartWeights,
    directions: &[Vec4],
) -> Result<RuggeriReport> {
    let chart = RelChart::new(RelKind::Ruggeri, geos.clone()).with_eps(*eps);
    let eckart = RelChart::new(RelKind::Eckart, geos.clone());
    let (tt, tp, h) = protopotential_blocks(&chart, state)?;
    let (_, _, he) = protopotential_blocks(&eckart, state)?;
    let upsilon_sigma = (0..4).map(|a| (0..10).map(|k| h[(1 + a, 5 + k)]).collect()).collect();
    let u = state.velocity()?;
    let mut causality = vec![causality_check(&chart, &state.to_vars(true), &lower(&u))?];
    for t in directions {
        causality.push(causality_check(&chart, &state.to_vars(true), t)?);
    }
    Ok(RuggeriReport {
        upsilon_upsilon: rows(&tt),
        upsilon_psi: [tp[0], tp[1], tp[2], tp[3]],
        upsilon_sigma,
        shift: shift(eps, &state.sigma, &u),
        shift_projected: shift_projected(eps, &state.sigma, &u)?,
        eckart_defect: (h.rows(1, 4) - he.rows(1, 4)).amax(),
        causality,
    })
}

/// The dissipative-dissipative block of the causality Hessian of the Ruggeri
/// chart at `Sigma = 0` in the rest frame with `T = u`, in closed form: at
/// equilibrium only the shifted chemical potential contributes, giving
/// `(p_psi / theta) d^2 S / dSigma dSigma`.
pub fn ruggeri_rest_sigma_block<G: GodunovEos>(geos: &G, theta: f64, psi: f64, eps: &PartWeights) -> SMatrix<f64, 10, 10> {
    let u = Vector4::new(1.0, 0.0, 0.0, 0.0);
    let unit = |k: usize| {
        let (a, b) = SIGMA_SLOTS[k];
        let mut m = Matrix4::zeros();
        m[(a, b)] = 1.0;
        m[(b, a)] = 1.0;
        m
    };
    // S is quadratic: its Hessian is the polarized form
    let q = |x: &SymTensor4, y: &SymTensor4| shift(eps, &(x + y), &u) - shift(eps, &(x - y), &u);
    let n = geos.dp_dpsi(theta, psi) / theta;
    SMatrix::<f64, 10, 10>::from_fn(|i, j| n * 0.5 * q(&unit(i), &unit(j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::godunov::tensor4::{random_boost, random_symmetric, Part};
    use crate::godunov::{contracted_hessian, protopotential_consistency};
    use crate::linalg::Definiteness;
    use crate::thermo::ExponentialGodunov;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn geos() -> ExponentialGodunov {
        ExponentialGodunov { c0: 1.0, n: 4.0 }
    }

    fn random_state<R: Rng>(rng: &mut R, amp: f64) -> RelState {
        let theta = rng.gen_range(0.6..1.5);
        let u = random_boost(rng, 0.8) * Vector4::new(1.0, 0.0, 0.0, 0.0);
        RelState {
            psi: rng.gen_range(-0.5..0.5),
            upsilon: u / theta,
            sigma: random_symmetric(rng, amp),
        }
    }

    #[test]
    fn shift_invariants_match_projectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let eps = [0.3, 0.7, 0.2, 0.5];
        for _ in 0..20 {
            let s = random_state(&mut rng, 1.0);
            let u = s.velocity().unwrap();
            let a = shift(&eps, &s.sigma, &u);
            let b = shift_projected(&eps, &s.sigma, &u).unwrap();
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()), "{a} {b}");
        }
    }

    #[test]
    fn potentials_are_protopotential_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for kind in [RelKind::Euler, RelKind::Eckart, RelKind::Ruggeri] {
            let chart = RelChart::new(kind, geos()).with_eps([0.3, 0.2, 0.4, 0.1]);
            for _ in 0..10 {
                let s = random_state(&mut rng, 0.3);
                let r = protopotential_consistency(&chart, &s.to_vars(kind != RelKind::Euler)).unwrap();
                assert!(r.max_relative_error < 1e-6, "{kind:?} {r:?}");
            }
        }
    }

    #[test]
    fn euler_tensor_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rest = rel_euler_tensor(&geos(), &Vector4::new(1.0 / 1.2, 0.0, 0.0, 0.0), 0.1).unwrap();
        assert!(rest.max_relative_error < 1e-5, "{rest:?}");
        for _ in 0..10 {
            let s = random_state(&mut rng, 0.0);
            let r = rel_euler_tensor(&geos(), &s.upsilon, s.psi).unwrap();
            assert!(r.max_relative_error < 1e-5, "{r:?}");
            assert!(r.trace_closed.abs() < 1e-12 && r.trace_fd.abs() < 1e-5);
            let r = rel_euler_tensor(&ExponentialGodunov { c0: 1.0, n: 3.0 }, &s.upsilon, s.psi).unwrap();
            assert!(r.max_relative_error < 1e-5, "{r:?}");
            assert!(r.trace_closed.abs() > 0.1);
            assert!((r.trace_fd - r.trace_closed).abs() < 1e-5 * r.trace_closed.abs());
        }
    }

    #[test]
    fn particle_current_is_along_upsilon() {
        let s = RelState {
            psi: 0.2,
            upsilon: boost_of(0.5) / 0.9,
            sigma: Matrix4::zeros(),
        };
        let r = rel_euler_tensor(&geos(), &s.upsilon, s.psi).unwrap();
        let n = Vector4::from(r.n_fd);
        let cross = n - s.upsilon * (n[0] / s.upsilon[0]);
        assert!(cross.amax() < 1e-6 * n.amax());
    }

    fn boost_of(eta: f64) -> Vec4 {
        super::super::tensor4::boost(eta, &Vector3::new(0.3, -0.5, 0.8)) * Vector4::new(1.0, 0.0, 0.0, 0.0)
    }

    #[test]
    fn eckart_identity_and_readback() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let s = random_state(&mut rng, 0.5);
            let grad = Matrix4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let r = rel_eckart_assembly(&geos(), &s.upsilon, s.psi, &s.sigma, &[1.0, 2.0, 0.5, 0.3], &grad).unwrap();
            assert!(r.identity_error < 1e-5, "{r:?}");
            assert!(r.leakage < 1e-10);
            // shear is consistent; the other parts come back with the opposite sign
            assert_eq!(r.readback_sign, [1.0, -1.0, -1.0, -1.0]);
            assert!(r.readback_defect.iter().all(|d| *d < 1e-10), "{r:?}");
        }
    }

    #[test]
    fn eckart_with_zero_stress_is_euler() {
        let s = RelState::at_rest(1.1, 0.3);
        let eck = RelChart::new(RelKind::Eckart, geos());
        let eul = RelChart::new(RelKind::Euler, geos());
        let a = eck.potential_vector(&s).unwrap();
        let b = eul.potential_vector(&s).unwrap();
        assert_eq!(a, b);
        let r = rel_eckart_assembly(&geos(), &s.upsilon, s.psi, &s.sigma, &[1.0; 4], &Matrix4::zeros()).unwrap();
        assert!(r.production.iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn bulk_stress_gives_bulk_production() {
        let s0 = RelState::at_rest(1.0, 0.0);
        let u = s0.velocity().unwrap();
        let p = ProjectorSet::new(&u).unwrap();
        let sigma = p.project(Part::Bulk, &Matrix4::identity()) * 0.7;
        let chart = RelChart::new(RelKind::Eckart, geos()).with_eta([1.0, 4.0, 1.0, 1.0]);
        let i = chart.production_tensor(&RelState { sigma, ..s0 }).unwrap();
        assert!((i - sigma / 4.0).amax() < 1e-14);
    }

    #[test]
    fn vanishing_coefficient_needs_vanishing_part() {
        let s0 = RelState::at_rest(1.0, 0.0);
        let mut sigma = Matrix4::zeros();
        sigma[(0, 1)] = 0.2;
        sigma[(1, 0)] = 0.2;
        let chart = RelChart::new(RelKind::Eckart, geos()).with_eta([1.0, 1.0, 0.0, 0.0]);
        assert!(chart.production_tensor(&RelState { sigma, ..s0 }).is_err());
        sigma[(0, 1)] = 0.0;
        sigma[(1, 0)] = 0.0;
        sigma[(2, 3)] = 0.2;
        sigma[(3, 2)] = 0.2;
        assert!(chart.production_tensor(&RelState { sigma, ..s0 }).is_ok());
    }

    #[test]
    fn euler_causality_is_frame_independent() {
        let chart = RelChart::new(RelKind::Euler, geos());
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = RelState::at_rest(1.0, 0.1);
        let y = s.to_vars(false);
        let rest = causality_check(&chart, &y, &Vector4::new(-1.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(rest.verdict.is_definite(), "{rest:?}");
        for _ in 0..8 {
            let t = random_boost(&mut rng, 1.5) * Vector4::new(1.0, 0.0, 0.0, 0.0);
            let r = causality_check(&chart, &y, &lower(&t)).unwrap();
            assert_eq!(r.verdict, rest.verdict);
        }
        let spacelike = Vector4::new(0.1, 1.0, 0.0, 0.0);
        assert!(causality_check(&chart, &y, &spacelike).is_err());
    }

    #[test]
    fn ruggeri_reduces_at_zero_stress() {
        let s = RelState::at_rest(0.9, 0.2);
        let r = rel_ruggeri_system(&geos(), &s, &[0.1; 4], &[]).unwrap();
        assert!(r.eckart_defect < 1e-6, "{}", r.eckart_defect);
        assert_eq!(r.shift, 0.0);
    }

    #[test]
    fn ruggeri_stress_block_matches_closed_form() {
        let (theta, psi, eps) = (1.0, 0.0, [0.2, 0.3, 0.4, 0.5]);
        let chart = RelChart::new(RelKind::Ruggeri, geos()).with_eps(eps);
        let s = RelState::at_rest(theta, psi);
        let h = contracted_hessian(&chart, &s.to_vars(true), &Vector4::new(-1.0, 0.0, 0.0, 0.0), FD_STEP2).unwrap();
        let block = ruggeri_rest_sigma_block(&geos(), theta, psi, &eps);
        for i in 0..10 {
            for j in 0..10 {
                assert!((h[(5 + i, 5 + j)] - block[(i, j)]).abs() < 1e-6, "{i} {j}");
            }
        }
    }

    fn rest_verdict(eps: PartWeights) -> DefinitenessReport {
        let chart = RelChart::new(RelKind::Ruggeri, geos()).with_eps(eps);
        let s = RelState::at_rest(1.0, 0.0);
        causality_check(&chart, &s.to_vars(true), &Vector4::new(-1.0, 0.0, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn ruggeri_is_not_causal_at_small_eps() {
        // Euler block negative, stress block +eps, and an O(1) Upsilon-Sigma coupling
        for e in [1e-3, 1e-2, 0.1] {
            let r = rest_verdict([e; 4]);
            assert_eq!(r.verdict, Definiteness::Indefinite);
            assert_eq!(r.verdict, r.verdict_half_step);
            assert_eq!((r.signature.positive, r.signature.negative), (10, 5));
        }
        let eckart = RelChart::new(RelKind::Eckart, geos());
        let y = RelState::at_rest(1.0, 0.0).to_vars(true);
        let r = causality_check(&eckart, &y, &Vector4::new(-1.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(r.verdict, Definiteness::Indefinite);
    }

    #[test]
    fn opposite_shift_with_large_weights_is_causal() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let eps = [-10.0, -10.0, 10.0, -10.0];
        let rest = rest_verdict(eps);
        assert_eq!(rest.verdict, Definiteness::NegativeDefinite);
        assert_eq!(rest.verdict_half_step, Definiteness::NegativeDefinite);
        assert_eq!(rest_verdict([-0.1, -0.1, 0.1, -0.1]).verdict, Definiteness::Indefinite);
        let chart = RelChart::new(RelKind::Ruggeri, geos()).with_eps(eps);
        let y = RelState::at_rest(1.0, 0.0).to_vars(true);
        for _ in 0..8 {
            let t = random_boost(&mut rng, 0.3) * Vector4::new(1.0, 0.0, 0.0, 0.0);
            let r = causality_check(&chart, &y, &lower(&t)).unwrap();
            assert_eq!(r.verdict, Definiteness::NegativeDefinite);
        }
    }
}
