//! The Galilei-invariant relaxation system in `d` space dimensions.
//!
//! Conserved fields are `(rho, m_i = rho u_i, S_kl = rho sigma_kl, T = rho tau)`:
//!
//! ```text
//! rho_t + (rho u^j)_j                                        = 0
//! (rho u^i)_t + (rho u^j u^i + p delta^ij + (sigma^ij + tau delta^ij)/eps)_j = 0
//! (rho sigma^kl)_t + (rho u^j sigma^kl)_j + c^klj_i u^i_j / eps = -sigma^kl / (mu eps^2)
//! (rho tau)_t + (rho u^j tau)_j + u^j_j / eps                  = -tau / (nu eps^2)
//! ```
//!
//! The `c`-coupling and `div u` terms are not divergences of functions of the
//! conserved state. They are kept as non-conservative products
//! ([`relaxation_coupling`]) and never folded into [`flux`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{definiteness, fd_hessian, max_relative_error, symmetry_defect, Definiteness};
use crate::thermo::{BarotropicEos, NonbarotropicEos};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub eps: f64,
    pub mu: f64,
    pub nu: f64,
    pub dim: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            eps: 0.1,
            mu: 1.0,
            nu: 1.0,
            dim: 3,
        }
    }
}

impl ModelParams {
    pub fn new(eps: f64, mu: f64, nu: f64, dim: usize) -> Result<Self> {
        let p = ModelParams { eps, mu, nu, dim };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("mu", self.mu), ("nu", self.nu)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {}", self.dim)));
        }
        Ok(())
    }

    /// One-dimensional effective viscosity `(2/3) mu + nu`.
    pub fn mu_tilde(&self) -> f64 {
        2.0 / 3.0 * self.mu + self.nu
    }
}

/// The rank-4 coupling tensor `c^{klj}_i`, stored exactly as multiples of 1/6.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CTensor {
    dim: usize,
    sixths: Vec<i64>,
}

impl CTensor {
    fn index(&self, k: usize, l: usize, j: usize, i: usize) -> usize {
        ((k * self.dim + l) * self.dim + j) * self.dim + i
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `6 c^{klj}_i`.
    pub fn sixths(&self, k: usize, l: usize, j: usize, i: usize) -> i64 {
        self.sixths[self.index(k, l, j, i)]
    }

    pub fn get(&self, k: usize, l: usize, j: usize, i: usize) -> f64 {
        self.sixths(k, l, j, i) as f64 / 6.0
    }

    /// `sigma_kl c^{klj}_i` returned as a matrix indexed `[(i, j)]`.
    pub fn contract(&self, sigma: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |i, j| {
            let mut acc = 0.0;
            for k in 0..d {
                for l in 0..d {
                    acc += sigma[(k, l)] * self.get(k, l, j, i);
                }
            }
            acc
        })
    }

    /// Exact integer contraction: `6 sigma_kl c^{klj}_i` for integer `sigma` (row-major).
    pub fn contract_exact(&self, sigma: &[i64]) -> Vec<i64> {
        let d = self.dim;
        let mut out = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0;
                for k in 0..d {
                    for l in 0..d {
                        acc += sigma[k * d + l] * self.sixths(k, l, j, i);
                    }
                }
                out[i * d + j] = acc;
            }
        }
        out
    }

    /// `c^{klj}_i u^i_{,j}` indexed `[(k, l)]`, with `grad_u[(i, j)] = du^i/dx^j`.
    pub fn apply_gradient(&self, grad_u: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |k, l| {
            let mut acc = 0.0;
            for j in 0..d {
                for i in 0..d {
                    acc += self.get(k, l, j, i) * grad_u[(i, j)];
                }
            }
            acc
        })
    }
}

/// `c^{klj}_i = (delta^k_i delta^lj + delta^l_i delta^kj)/2 - delta_ij delta^kl / 3`.
/// The 1/3 is kept for every dimension.
pub fn c_tensor(dim: usize) -> Result<CTensor> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    let delta = |a: usize, b: usize| i64::from(a == b);
    let mut sixths = vec![0; dim.pow(4)];
    let mut t = CTensor { dim, sixths: vec![] };
    for k in 0..dim {
        for l in 0..dim {
            for j in 0..dim {
                for i in 0..dim {
                    let v = 3 * (delta(k, i) * delta(l, j) + delta(l, i) * delta(k, j))
                        - 2 * delta(i, j) * delta(k, l);
                    sixths[((k * dim + l) * dim + j) * dim + i] = v;
                }
            }
        }
    }
    t.sixths = sixths;
    Ok(t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub tau: f64,
}

impl PrimitiveState {
    pub fn rest(dim: usize, rho: f64) -> Self {
        PrimitiveState {
            rho,
            u: DVector::zeros(dim),
            sigma: DMatrix::zeros(dim, dim),
            tau: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn check(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::NonPhysical(format!("density {} is not positive", self.rho)));
        }
        Ok(())
    }

    pub fn to_conserved(&self) -> ConservedVec {
        let d = self.dim();
        let mut data = Vec::with_capacity(ConservedVec::len_for(d));
        data.push(self.rho);
        data.extend(self.u.iter().map(|u| self.rho * u));
        for k in 0..d {
            for l in 0..d {
                data.push(self.rho * self.sigma[(k, l)]);
            }
        }
        data.push(self.rho * self.tau);
        ConservedVec { dim: d, data }
    }
}

/// Conserved state laid out as `[rho, m_1..m_d, S_11, S_12, .., S_dd, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConservedVec {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl ConservedVec {
    pub fn len_for(dim: usize) -> usize {
        2 + dim + dim * dim
    }

    pub fn from_slice(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != Self::len_for(dim) {
            return Err(Error::Domain(format!(
                "conserved vector of length {} does not match dimension {dim}",
                data.len()
            )));
        }
        Ok(ConservedVec {
            dim,
            data: data.to_vec(),
        })
    }

    pub fn rho(&self) -> f64 {
        self.data[0]
    }

    pub fn to_primitive(&self) -> Result<PrimitiveState> {
        let d = self.dim;
        let rho = self.rho();
        if !(rho > 0.0) {
            return Err(Error::NonPhysical(format!("density {rho} is not positive")));
        }
        let u = DVector::from_fn(d, |i, _| self.data[1 + i] / rho);
        let sigma = DMatrix::from_fn(d, d, |k, l| self.data[1 + d + k * d + l] / rho);
        let tau = self.data[1 + d + d * d] / rho;
        Ok(PrimitiveState { rho, u, sigma, tau })
    }
}

/// Conservative part of the flux in direction `j`, same layout as [`ConservedVec`].
pub fn flux<E: BarotropicEos + ?Sized>(
    state: &ConservedVec,
    eos: &E,
    params: &ModelParams,
    j: usize,
) -> Result<Vec<f64>> {
    let w = state.to_primitive()?;
    let d = w.dim();
    if j >= d {
        return Err(Error::Domain(format!("direction {j} out of range for d = {d}")));
    }
    let p = eos.pressure_rho(w.rho);
    let uj = w.u[j];
    let mut out = Vec::with_capacity(state.data.len());
    out.push(w.rho * uj);
    for i in 0..d {
        let delta = if i == j { 1.0 } else { 0.0 };
        out.push(
            w.rho * uj * w.u[i] + p * delta + (w.sigma[(i, j)] + w.tau * delta) / params.eps,
        );
    }
    for k in 0..d {
        for l in 0..d {
            out.push(w.rho * uj * w.sigma[(k, l)]);
        }
    }
    out.push(w.rho * uj * w.tau);
    Ok(out)
}

/// Non-conservative products `(c^{klj}_i u^i_j / eps, u^j_j / eps)` for the
/// `S` and `T` equations, given `grad_u[(i, j)] = du^i/dx^j`.
pub fn relaxation_coupling(
    grad_u: &DMatrix<f64>,
    params: &ModelParams,
) -> Result<(DMatrix<f64>, f64)> {
    let c = c_tensor(params.dim)?;
    let s = c.apply_gradient(grad_u) / params.eps;
    Ok((s, grad_u.trace() / params.eps))
}

/// Stiff source, same layout as [`ConservedVec`].
pub fn source(state: &ConservedVec, params: &ModelParams) -> Result<Vec<f64>> {
    let w = state.to_primitive()?;
    let d = w.dim();
    let e2 = params.eps * params.eps;
    let mut out = vec![0.0; state.data.len()];
    for k in 0..d {
        for l in 0..d {
            out[1 + d + k * d + l] = -w.sigma[(k, l)] / (params.mu * e2);
        }
    }
    out[1 + d + d * d] = -w.tau / (params.nu * e2);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyPair {
    pub energy: f64,
    pub flux: DVector<f64>,
}

pub fn energy_pair<E: BarotropicEos + ?Sized>(
    state: &PrimitiveState,
    eos: &E,
    params: &ModelParams,
) -> Result<EnergyPair> {
    state.check()?;
    let v = 1.0 / state.rho;
    let e = eos.energy(v);
    let p = eos.pressure(v);
    let kinetic = 0.5 * state.u.norm_squared();
    let stress = 0.5 * state.sigma.norm_squared() + 0.5 * state.tau * state.tau;
    let energy = state.rho * (e + kinetic + stress);
    let d = state.dim();
    let flux = DVector::from_fn(d, |j, _| {
        let mut f = (energy + p) * state.u[j];
        for i in 0..d {
            let delta = if i == j { 1.0 } else { 0.0 };
            f += (state.sigma[(i, j)] + state.tau * delta) * state.u[i] / params.eps;
        }
        f
    });
    Ok(EnergyPair { energy, flux })
}

/// `-sigma:sigma/(mu eps^2) - tau^2/(nu eps^2)`.
pub fn dissipation_rate(state: &PrimitiveState, params: &ModelParams) -> f64 {
    let e2 = params.eps * params.eps;
    -state.sigma.norm_squared() / (params.mu * e2) - state.tau * state.tau / (params.nu * e2)
}

/// Result of [`energy_identity_residual`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityResidual {
    /// `E_t + div F - dissipation` minus the multiplier-weighted residuals of the
    /// field equations. Zero in the continuum for every smooth field with
    /// trace-free `sigma`.
    pub residual: f64,
    /// `E_t + div F - dissipation` alone; zero when the fields solve the system.
    pub uncompensated: f64,
}

/// Checks the pointwise energy identity by central differences of step `h`.
///
/// `fields(t, x)` need not solve the system: the residuals of the four field
/// equations act as a compensating forcing, weighted by the multipliers
/// `(e + p/rho - |u|^2/2 - |sigma|^2/2 - tau^2/2, u, sigma, tau)` that produce the
/// energy balance from the field equations.
pub fn energy_identity_residual<E, F>(
    fields: F,
    eos: &E,
    params: &ModelParams,
    t: f64,
    x: &[f64],
    h: f64,
) -> Result<IdentityResidual>
where
    E: BarotropicEos + ?Sized,
    F: Fn(f64, &[f64]) -> PrimitiveState,
{
    let d = params.dim;
    if x.len() != d {
        return Err(Error::Domain("evaluation point has wrong dimension".into()));
    }
    if !(h > 0.0) {
        return Err(Error::Domain("finite-difference step must be positive".into()));
    }
    let n = ConservedVec::len_for(d);
    // densities: conserved vector followed by E
    let density = |t: f64, x: &[f64]| -> Result<Vec<f64>> {
        let w = fields(t, x);
        let mut q = w.to_conserved().data;
        q.push(energy_pair(&w, eos, params)?.energy);
        Ok(q)
    };
    let fluxes = |t: f64, x: &[f64], j: usize| -> Result<Vec<f64>> {
        let w = fields(t, x);
        let mut f = flux(&w.to_conserved(), eos, params, j)?;
        f.push(energy_pair(&w, eos, params)?.flux[j]);
        Ok(f)
    };
    let mut balance = vec![0.0; n + 1];
    let qp = density(t + h, x)?;
    let qm = density(t - h, x)?;
    for k in 0..=n {
        balance[k] = (qp[k] - qm[k]) / (2.0 * h);
    }
    let mut grad_u = DMatrix::zeros(d, d);
    let mut xs = x.to_vec();
    for j in 0..d {
        xs[j] = x[j] + h;
        let fp = fluxes(t, &xs, j)?;
        let up = fields(t, &xs).u;
        xs[j] = x[j] - h;
        let fm = fluxes(t, &xs, j)?;
        let um = fields(t, &xs).u;
        xs[j] = x[j];
        for k in 0..=n {
            balance[k] += (fp[k] - fm[k]) / (2.0 * h);
        }
        for i in 0..d {
            grad_u[(i, j)] = (up[i] - um[i]) / (2.0 * h);
        }
    }
    let w = fields(t, x);
    w.check()?;
    let (s_coupling, t_coupling) = relaxation_coupling(&grad_u, params)?;
    let src = source(&w.to_conserved(), params)?;
    // field-equation residuals: LHS - RHS
    let mut res = balance[..n].to_vec();
    for k in 0..d {
        for l in 0..d {
            let idx = 1 + d + k * d + l;
            res[idx] += s_coupling[(k, l)] - src[idx];
        }
    }
    res[n - 1] += t_coupling - src[n - 1];

    let diss = dissipation_rate(&w, params);
    let uncompensated = balance[n] - diss;
    let v = 1.0 / w.rho;
    let w_rho = eos.energy(v) + eos.pressure(v) * v
        - 0.5 * w.u.norm_squared()
        - 0.5 * w.sigma.norm_squared()
        - 0.5 * w.tau * w.tau;
    let mut forcing = w_rho * res[0];
    for i in 0..d {
        forcing += w.u[i] * res[1 + i];
    }
    for k in 0..d {
        for l in 0..d {
            forcing += w.sigma[(k, l)] * res[1 + d + k * d + l];
        }
    }
    forcing += w.tau * res[n - 1];
    Ok(IdentityResidual {
        residual: uncompensated - forcing,
        uncompensated,
    })
}

/// Total energy as a function of the conserved variables.
pub fn energy_of_conserved<E: BarotropicEos + ?Sized>(q: &[f64], eos: &E) -> f64 {
    let rho = q[0];
    let quad: f64 = q[1..].iter().map(|x| x * x).sum();
    rho * eos.energy(1.0 / rho) + quad / (2.0 * rho)
}

#[derive(Clone, Debug)]
pub struct HessianReport {
    pub analytic: DMatrix<f64>,
    pub finite_difference: DMatrix<f64>,
    /// Entrywise relative deviation (absolute below unit magnitude).
    pub max_relative_error: f64,
    pub symmetry_defect: f64,
    pub verdict: Definiteness,
}

/// Hessian of `E(rho, m, S, T) = rho e(1/rho) + (|m|^2 + |S|^2 + T^2) / (2 rho)`.
///
/// The analytic matrix has first row `(p'(rho)/rho + K/rho^3, -q_a/rho^2)` and
/// block `delta_ab / rho` for every other coordinate `q_a`, `K = sum q_a^2`. It is
/// reported together with a central-difference Hessian of the scalar energy.
pub fn energy_hessian<E: BarotropicEos + ?Sized>(
    state: &ConservedVec,
    eos: &E,
) -> Result<HessianReport> {
    let q = &state.data;
    let rho = q[0];
    if !(rho > 0.0) {
        return Err(Error::NonPhysical(format!("density {rho} is not positive")));
    }
    let n = q.len();
    let quad: f64 = q[1..].iter().map(|x| x * x).sum();
    let mut analytic = DMatrix::zeros(n, n);
    analytic[(0, 0)] = eos.dpressure_drho(rho) / rho + quad / rho.powi(3);
    for a in 1..n {
        analytic[(0, a)] = -q[a] / (rho * rho);
        analytic[(a, 0)] = -q[a] / (rho * rho);
        analytic[(a, a)] = 1.0 / rho;
    }
    let finite_difference = fd_hessian(|x| energy_of_conserved(x, eos), q, 1e-4);
    Ok(HessianReport {
        max_relative_error: max_relative_error(&analytic, &finite_difference, 1.0),
        symmetry_defect: symmetry_defect(&analytic),
        verdict: definiteness(&analytic, 1e-10),
        analytic,
        finite_difference,
    })
}

/// `eta = rho s`, `zeta = rho s u`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyPair {
    pub entropy: f64,
    pub flux: DVector<f64>,
}

pub fn entropy_pair(state: &PrimitiveState, specific_entropy: f64) -> EntropyPair {
    let entropy = state.rho * specific_entropy;
    EntropyPair {
        entropy,
        flux: &state.u * entropy,
    }
}

/// Material derivative of the specific entropy at temperature `theta`:
/// `(sigma:sigma/(mu eps^2) + tau^2/(nu eps^2)) / (rho theta)`.
pub fn entropy_production_at(
    state: &PrimitiveState,
    theta: f64,
    params: &ModelParams,
) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {theta}")));
    }
    state.check()?;
    Ok(-dissipation_rate(state, params) / (state.rho * theta))
}

pub fn entropy_production<N: NonbarotropicEos + ?Sized>(
    state: &PrimitiveState,
    specific_entropy: f64,
    eos: &N,
    params: &ModelParams,
) -> Result<f64> {
    state.check()?;
    let theta = eos.temperature(1.0 / state.rho, specific_entropy);
    entropy_production_at(state, theta, params)
}

/// Energy pair of the nonbarotropic system, `E = rho (e(v, s) + |u|^2/2 + ...)`.
pub fn energy_pair_nonbarotropic<N: NonbarotropicEos + ?Sized>(
    state: &PrimitiveState,
    specific_entropy: f64,
    eos: &N,
    params: &ModelParams,
) -> Result<EnergyPair> {
    state.check()?;
    let v = 1.0 / state.rho;
    let e = eos.energy(v, specific_entropy);
    let p = eos.pressure(v, specific_entropy);
    let energy = state.rho
        * (e + 0.5 * state.u.norm_squared()
            + 0.5 * state.sigma.norm_squared()
            + 0.5 * state.tau * state.tau);
    let d = state.dim();
    let flux = DVector::from_fn(d, |j, _| {
        let mut f = (energy + p) * state.u[j];
        for i in 0..d {
            let delta = if i == j { 1.0 } else { 0.0 };
            f += (state.sigma[(i, j)] + state.tau * delta) * state.u[i] / params.eps;
        }
        f
    });
    Ok(EnergyPair { energy, flux })
}

/// The one-dimensional rescaled system for `q = (rho, rho u, rho sigma)`:
///
/// ```text
/// rho_t + (rho u)_x = 0
/// (rho u)_t + (rho u^2 + p + sigma)_x = 0
/// eps ((rho sigma)_t + (rho u sigma)_x) + u_x = -sigma / mu_tilde
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct System1D<E> {
    pub eos: E,
    pub eps: f64,
    pub mu_tilde: f64,
}

/// Serializable summary of a [`System1D`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub fields: Vec<String>,
    pub fluxes: Vec<String>,
    pub stiff_term: String,
    pub eps: f64,
    pub mu_tilde: f64,
    pub eos: serde_json::Value,
}

pub fn reduce_1d<E: BarotropicEos + Clone>(params: &ModelParams, eos: &E) -> Result<System1D<E>> {
    params.validate()?;
    Ok(System1D {
        eos: eos.clone(),
        eps: params.eps,
        mu_tilde: params.mu_tilde(),
    })
}

impl<E: BarotropicEos> System1D<E> {
    /// Conservative flux `(rho u, rho u^2 + p + sigma, rho u sigma)`.
    pub fn flux(&self, q: &[f64; 3]) -> [f64; 3] {
        let rho = q[0];
        let u = q[1] / rho;
        let sigma = q[2] / rho;
        [
            q[1],
            q[1] * u + self.eos.pressure_rho(rho) + sigma,
            q[1] * sigma,
        ]
    }

    /// Stiff source of the `rho sigma` equation written as a balance law,
    /// `-sigma / (eps mu_tilde)`.
    pub fn source(&self, q: &[f64; 3]) -> [f64; 3] {
        [0.0, 0.0, -q[2] / q[0] / (self.eps * self.mu_tilde)]
    }

    /// Quasilinear matrix `dF/dq + B(q)`, where `B` carries the `u_x / eps` coupling.
    pub fn quasilinear_matrix(&self, q: &[f64; 3]) -> nalgebra::Matrix3<f64> {
        let rho = q[0];
        let u = q[1] / rho;
        let sigma = q[2] / rho;
        let c2 = self.eos.dpressure_drho(rho);
        nalgebra::Matrix3::new(
            0.0,
            1.0,
            0.0,
            -u * u + c2 - sigma / rho,
            2.0 * u,
            1.0 / rho,
            -u * sigma - u / (self.eps * rho),
            sigma + 1.0 / (self.eps * rho),
            u,
        )
    }

    /// Spectral radius of [`Self::quasilinear_matrix`].
    pub fn spectral_radius(&self, q: &[f64; 3]) -> f64 {
        self.quasilinear_matrix(q)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Energy `rho (e + u^2/2 + eps sigma^2/2)` of the rescaled system.
    pub fn energy(&self, q: &[f64; 3]) -> f64 {
        let rho = q[0];
        let u = q[1] / rho;
        let sigma = q[2] / rho;
        rho * (self.eos.energy(1.0 / rho) + 0.5 * u * u + 0.5 * self.eps * sigma * sigma)
    }

    /// Energy flux `(E + p) u + sigma u`.
    pub fn energy_flux(&self, q: &[f64; 3]) -> f64 {
        let rho = q[0];
        let u = q[1] / rho;
        let sigma = q[2] / rho;
        (self.energy(q) + self.eos.pressure_rho(rho)) * u + sigma * u
    }

    /// `-sigma^2 / mu_tilde`.
    pub fn dissipation(&self, q: &[f64; 3]) -> f64 {
        let sigma = q[2] / q[0];
        -sigma * sigma / self.mu_tilde
    }
}

impl<E: BarotropicEos + Serialize> System1D<E> {
    pub fn descriptor(&self) -> SystemDescriptor {
        SystemDescriptor {
            fields: vec!["rho".into(), "rho_u".into(), "rho_sigma".into()],
            fluxes: vec![
                "rho_u".into(),
                "rho_u^2 + p(1/rho) + sigma".into(),
                "rho_u sigma".into(),
            ],
            stiff_term: "eps((rho sigma)_t + (rho u sigma)_x) + u_x = -sigma/mu_tilde".into(),
            eps: self.eps,
            mu_tilde: self.mu_tilde,
            eos: serde_json::to_value(&self.eos).unwrap_or(serde_json::Value::Null),
        }
    }
}

fn random_symmetric_matrix<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

/// A random admissible state with `rho` in `[0.3, 3)` and unit-scale fields.
pub fn random_primitive<R: Rng>(rng: &mut R, d: usize) -> PrimitiveState {
    PrimitiveState {
        rho: rng.gen_range(0.3..3.0),
        u: DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)),
        sigma: random_symmetric_matrix(rng, d),
        tau: rng.gen_range(-1.0..1.0),
    }
}

/// Smooth non-solution fields; `sigma` trace-free unless `traceful`.
pub fn manufactured_fields(t: f64, x: &[f64], traceful: bool) -> PrimitiveState {
    let (a, b, c) = (x[0], x[1], x[2]);
    let rho = 1.5 + 0.3 * (a + 0.5 * t).sin() * (0.7 * b).cos() + 0.1 * c.cos();
    let u = DVector::from_vec(vec![
        0.4 * (b - t).sin() + 0.2 * c + 0.3 * (a + t).sin(),
        0.3 * (a + c).cos() * (1.0 + 0.5 * t) - 0.2 * (b * b),
        -0.2 * (a * b + t).sin(),
    ]);
    let s01 = 0.2 * (a + 2.0 * t).cos();
    let s02 = 0.1 * (b * c).sin();
    let s12 = 0.15 * (a - b + t).sin();
    let d0 = 0.3 * (c + t).sin();
    let d1 = -0.2 * (a + b).cos();
    let d2 = if traceful { 0.25 + 0.1 * (a - t).cos() } else { -d0 - d1 };
    let sigma = DMatrix::from_row_slice(3, 3, &[d0, s01, s02, s01, d1, s12, s02, s12, d2]);
    PrimitiveState {
        rho,
        u,
        sigma,
        tau: 0.3 * (a + b + c - t).cos(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::GammaLaw;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn c_tensor_contracts_trace_free_sigma_to_itself() {
        let c = c_tensor(3).unwrap();
        let out = c.contract(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0])));
        assert_eq!(out, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0])));
        let exact = c.contract_exact(&[2, 1, -3, 1, 5, 4, -3, 4, -7]);
        assert_eq!(exact, vec![12, 6, -18, 6, 30, 24, -18, 24, -42]);
        let id = c.contract(&DMatrix::identity(3, 3));
        assert!(id.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn c_tensor_general_contraction_matches_index_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = c_tensor(3).unwrap();
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for _ in 0..20 {
            let s = random_symmetric_matrix(&mut rng, 3);
            // direct evaluation of the definition
            let mut brute = DMatrix::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            let cv = 0.5 * (delta(k, i) * delta(l, j) + delta(l, i) * delta(k, j))
                                - delta(i, j) * delta(k, l) / 3.0;
                            brute[(i, j)] += s[(k, l)] * cv;
                        }
                    }
                }
            }
            let formula = &s - DMatrix::identity(3, 3) * (s.trace() / 3.0);
            assert!((c.contract(&s) - &brute).amax() < 1e-14);
            assert!((c.contract(&s) - formula).amax() < 1e-14);
        }
    }

    #[test]
    fn c_tensor_is_symmetric_in_k_l_and_traceless_in_three_d() {
        let c = c_tensor(3).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                for j in 0..3 {
                    for i in 0..3 {
                        assert_eq!(c.sixths(k, l, j, i), c.sixths(l, k, j, i));
                    }
                }
            }
        }
        for j in 0..3 {
            for i in 0..3 {
                let tr: i64 = (0..3).map(|k| c.sixths(k, k, j, i)).sum();
                assert_eq!(tr, 0);
            }
        }
        // in lower dimensions the fixed 1/3 leaves a trace
        let c1 = c_tensor(1).unwrap();
        assert_eq!(c1.sixths(0, 0, 0, 0), 4);
        assert!(c_tensor(4).is_err());
    }

    #[test]
    fn rest_state_momentum_flux_is_pressure() {
        let eos = GammaLaw::default();
        let params = ModelParams::default();
        let q = PrimitiveState::rest(3, 1.0).to_conserved();
        for j in 0..3 {
            let f = flux(&q, &eos, &params, j).unwrap();
            for i in 0..3 {
                assert_eq!(f[1 + i], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn tau_enters_momentum_flux_linearly() {
        let eos = GammaLaw::default();
        let params = ModelParams::new(0.25, 1.0, 1.0, 2).unwrap();
        let mut w = PrimitiveState::rest(2, 1.0);
        w.tau = 0.5;
        let f = flux(&w.to_conserved(), &eos, &params, 1).unwrap();
        assert!((f[2] - (1.0 + 0.5 / 0.25)).abs() < 1e-15);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn translation_has_no_stress_flux() {
        let eos = GammaLaw::default();
        let params = ModelParams::default();
        let mut w = PrimitiveState::rest(3, 1.3);
        w.u = DVector::from_vec(vec![0.3, -0.2, 1.0]);
        let f = flux(&w.to_conserved(), &eos, &params, 0).unwrap();
        assert!(f[4..13].iter().all(|&x| x == 0.0));
        let (s, t) = relaxation_coupling(&DMatrix::zeros(3, 3), &params).unwrap();
        assert!(s.iter().all(|&x| x == 0.0) && t == 0.0);
    }

    #[test]
    fn galilean_boost_shifts_fluxes_by_the_analytic_law() {
        let eos = GammaLaw::new(1.0, 1.4).unwrap();
        let params = ModelParams::new(0.3, 0.7, 1.1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w = random_primitive(&mut rng, 3);
            let boost = DVector::from_fn(3, |_, _| rng.gen_range(-2.0..2.0));
            let mut wb = w.clone();
            wb.u += &boost;
            for j in 0..3 {
                let f = flux(&w.to_conserved(), &eos, &params, j).unwrap();
                let fb = flux(&wb.to_conserved(), &eos, &params, j).unwrap();
                let mut shift = vec![0.0; f.len()];
                shift[0] = w.rho * boost[j];
                for i in 0..3 {
                    shift[1 + i] = w.rho
                        * (boost[j] * w.u[i] + w.u[j] * boost[i] + boost[j] * boost[i]);
                }
                for k in 0..9 {
                    shift[4 + k] = w.rho * boost[j] * w.sigma[(k / 3, k % 3)];
                }
                shift[13] = w.rho * boost[j] * w.tau;
                for a in 0..f.len() {
                    assert!((fb[a] - f[a] - shift[a]).abs() <= 1e-12 * (1.0 + f[a].abs()));
                }
            }
        }
    }

    #[test]
    fn source_examples() {
        let params = ModelParams::new(1.0, 1.0, 1.0, 3).unwrap();
        let q = PrimitiveState::rest(3, 2.0).to_conserved();
        assert!(source(&q, &params).unwrap().iter().all(|&x| x == 0.0));
        let mut w = PrimitiveState::rest(3, 2.0);
        w.sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -0.5, 0.0]));
        let s = source(&w.to_conserved(), &params).unwrap();
        assert_eq!(s[4], -0.5);
        assert_eq!(s[8], 0.5);
    }

    #[test]
    fn dissipation_is_source_weighted_by_stress() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let params =
                ModelParams::new(rng.gen_range(0.05..2.0), rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0), 3)
                    .unwrap();
            let w = random_primitive(&mut rng, 3);
            let s = source(&w.to_conserved(), &params).unwrap();
            let mut pairing = w.tau * s[13];
            for k in 0..9 {
                pairing += w.sigma[(k / 3, k % 3)] * s[4 + k];
            }
            let diss = dissipation_rate(&w, &params);
            assert!((pairing - diss).abs() <= 1e-12 * diss.abs().max(1.0));
            assert!(diss <= 0.0);
        }
    }

    #[test]
    fn dissipation_examples() {
        let params = ModelParams::new(1.0, 1.0, 1.0, 3).unwrap();
        let mut w = PrimitiveState::rest(3, 1.0);
        assert_eq!(dissipation_rate(&w, &params), 0.0);
        w.tau = 2.0;
        assert_eq!(dissipation_rate(&w, &params), -4.0);
    }

    #[test]
    fn energy_pair_examples() {
        let eos = GammaLaw::default();
        let params = ModelParams::default();
        let w = PrimitiveState::rest(3, 2.0);
        let pair = energy_pair(&w, &eos, &params).unwrap();
        assert_eq!(pair.energy, 4.0);
        assert!(pair.flux.iter().all(|&x| x == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut still = random_primitive(&mut rng, 3);
        still.u.fill(0.0);
        assert!(energy_pair(&still, &eos, &params).unwrap().flux.iter().all(|&x| x == 0.0));

        let mut euler = random_primitive(&mut rng, 3);
        euler.sigma.fill(0.0);
        euler.tau = 0.0;
        let pair = energy_pair(&euler, &eos, &params).unwrap();
        let p = eos.pressure_rho(euler.rho);
        for j in 0..3 {
            assert!((pair.flux[j] - (pair.energy + p) * euler.u[j]).abs() < 1e-14);
        }
        assert!(energy_pair(&PrimitiveState::rest(3, -1.0), &eos, &params).is_err());
    }

    #[test]
    fn entropy_production_examples() {
        let params = ModelParams::new(1.0, 1.0, 1.0, 3).unwrap();
        let mut w = PrimitiveState::rest(3, 1.0);
        assert_eq!(entropy_production_at(&w, 2.0, &params).unwrap(), 0.0);
        w.tau = 1.0;
        assert_eq!(entropy_production_at(&w, 2.0, &params).unwrap(), 0.5);
        assert!(entropy_production_at(&w, 0.0, &params).is_err());
    }

    #[test]
    fn entropy_production_balances_dissipation() {
        let eos = crate::thermo::IdealGas::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let params = ModelParams::new(rng.gen_range(0.1..1.0), 1.3, 0.4, 3).unwrap();
            let w = random_primitive(&mut rng, 3);
            let s = rng.gen_range(-1.0..1.0);
            let theta = eos.temperature(1.0 / w.rho, s);
            let prod = entropy_production(&w, s, &eos, &params).unwrap();
            assert!(prod >= 0.0);
            let lhs = w.rho * theta * prod + dissipation_rate(&w, &params);
            assert!(lhs.abs() <= 1e-12 * prod.abs().max(1.0) * w.rho * theta);
            let pair = entropy_pair(&w, s);
            assert!((pair.flux.clone() - &w.u * pair.entropy).amax() == 0.0);
        }
    }

    #[test]
    fn conserved_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in 1..=3 {
            for _ in 0..20 {
                let w = random_primitive(&mut rng, d);
                let back = w.to_conserved().to_primitive().unwrap();
                assert!((back.rho - w.rho).abs() <= 1e-14 * w.rho);
                assert!((&back.u - &w.u).amax() <= 1e-14);
                assert!((&back.sigma - &w.sigma).amax() <= 1e-14);
                assert!((back.tau - w.tau).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn rest_state_hessian() {
        let eos = GammaLaw::default();
        let q = PrimitiveState::rest(3, 1.0).to_conserved();
        let report = energy_hessian(&q, &eos).unwrap();
        let mut expected = DMatrix::identity(14, 14);
        expected[(0, 0)] = 2.0;
        assert_eq!(report.analytic, expected);
        assert_eq!(report.verdict, Definiteness::PositiveDefinite);
        assert!(report.max_relative_error < 1e-6);
    }

    #[test]
    fn hessian_matches_finite_differences_on_random_states() {
        let eos = GammaLaw::new(1.0, 1.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let w = random_primitive(&mut rng, 3);
            let report = energy_hessian(&w.to_conserved(), &eos).unwrap();
            assert!(report.max_relative_error < 1e-6, "{}", report.max_relative_error);
            assert!(report.symmetry_defect <= 1e-12);
            assert_eq!(report.verdict, Definiteness::PositiveDefinite);
        }
    }

    #[test]
    fn one_d_reduction() {
        let eos = GammaLaw::default();
        let params = ModelParams::new(0.1, 1.5, 1e-300, 1);
        assert!(params.is_ok());
        let sys = reduce_1d(&ModelParams { eps: 0.1, mu: 1.5, nu: 1e-300, dim: 1 }, &eos).unwrap();
        assert!((sys.mu_tilde - 1.0).abs() < 1e-15);
        let q = [1.0, 0.0, 0.0];
        assert_eq!(sys.source(&q), [0.0, 0.0, 0.0]);
        assert_eq!(sys.flux(&q), [0.0, 1.0, 0.0]);
        // rest-state characteristic speeds: 0 and +-sqrt(p' + 1/(eps rho^2))
        let rad = sys.spectral_radius(&q);
        assert!((rad - (2.0f64 + 10.0).sqrt()).abs() < 1e-12);
        let eig = sys.quasilinear_matrix(&[1.3, 0.4, -0.2]).complex_eigenvalues();
        assert!(eig.iter().all(|z| z.im.abs() < 1e-12));
        let desc = serde_json::to_string(&sys.descriptor()).unwrap();
        assert!(desc.contains("mu_tilde"));
    }

    #[test]
    fn quasilinear_matrix_is_flux_jacobian_plus_coupling() {
        let eos = GammaLaw::new(1.0, 1.4).unwrap();
        let sys = System1D { eos, eps: 0.2, mu_tilde: 0.8 };
        let q = [1.3, 0.5, -0.3];
        let jac = crate::linalg::fd_jacobian(
            |x| sys.flux(&[x[0], x[1], x[2]]).to_vec(),
            &q,
            1e-6,
        );
        let a = sys.quasilinear_matrix(&q);
        let rho = q[0];
        let u = q[1] / rho;
        for i in 0..3 {
            for j in 0..3 {
                let coupling = if i == 2 {
                    [-u / rho, 1.0 / rho, 0.0][j] / sys.eps
                } else {
                    0.0
                };
                assert!((a[(i, j)] - jac[(i, j)] - coupling).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn energy_identity_converges_at_second_order() {
        let eos = GammaLaw::new(1.0, 1.4).unwrap();
        let params = ModelParams::new(0.5, 0.8, 1.2, 3).unwrap();
        let x = [0.3, -0.4, 0.7];
        let f = |t: f64, x: &[f64]| manufactured_fields(t, x, false);
        let r1 = energy_identity_residual(f, &eos, &params, 0.2, &x, 1e-3).unwrap();
        let r2 = energy_identity_residual(f, &eos, &params, 0.2, &x, 5e-4).unwrap();
        let ratio = r1.residual / r2.residual;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        // the fields are not solutions, so the raw balance is far from zero
        assert!(r1.uncompensated.abs() > 1e3 * r1.residual.abs());
    }

    #[test]
    fn traceful_stress_leaves_a_bulk_defect() {
        let eos = GammaLaw::default();
        let params = ModelParams::new(0.5, 1.0, 1.0, 3).unwrap();
        let x = [0.9, 0.6, -0.3];
        let t = 0.4;
        let h = 1e-4;
        let f = |t: f64, x: &[f64]| manufactured_fields(t, x, true);
        let r = energy_identity_residual(f, &eos, &params, t, &x, h).unwrap();
        let w = f(t, &x);
        let mut div = 0.0;
        let mut xs = x;
        for j in 0..3 {
            xs[j] = x[j] + h;
            let up = f(t, &xs).u[j];
            xs[j] = x[j] - h;
            let um = f(t, &xs).u[j];
            xs[j] = x[j];
            div += (up - um) / (2.0 * h);
        }
        let expected = w.sigma.trace() * div / (3.0 * params.eps);
        assert!(expected.abs() > 1e-3, "{expected}");
        assert!((r.residual - expected).abs() < 1e-6, "{} vs {expected}", r.residual);
    }

    #[test]
    fn spatially_constant_decay_matches_dissipation() {
        // rho, u constant; sigma, tau relax exponentially so the fields solve the system
        let eos = GammaLaw::default();
        let params = ModelParams::new(0.7, 0.9, 1.3, 3).unwrap();
        let rho = 1.7;
        let fields = |t: f64, _x: &[f64]| {
            let ks = (-t / (rho * params.mu * params.eps * params.eps)).exp();
            let kt = (-t / (rho * params.nu * params.eps * params.eps)).exp();
            PrimitiveState {
                rho,
                u: DVector::from_vec(vec![0.2, -0.1, 0.3]),
                sigma: DMatrix::from_row_slice(3, 3, &[0.3, 0.1, 0.0, 0.1, -0.5, 0.2, 0.0, 0.2, 0.2])
                    * ks,
                tau: 0.4 * kt,
            }
        };
        let r = energy_identity_residual(fields, &eos, &params, 0.1, &[0.0; 3], 1e-4).unwrap();
        let diss = dissipation_rate(&fields(0.1, &[0.0; 3]), &params);
        assert!(r.uncompensated.abs() < 1e-6 * diss.abs(), "{}", r.uncompensated);
        assert!(r.residual.abs() < 1e-6 * diss.abs());
    }

    #[test]
    fn constant_state_has_zero_residual() {
        let eos = GammaLaw::default();
        let params = ModelParams::default();
        let w = PrimitiveState::rest(3, 1.2);
        let r = energy_identity_residual(|_, _| w.clone(), &eos, &params, 0.0, &[0.0; 3], 1e-3)
            .unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn euler_fields_reduce_to_euler_energy_balance() {
        let eos = GammaLaw::default();
        let params = ModelParams::new(0.5, 1.0, 1.0, 3).unwrap();
        let f = |t: f64, x: &[f64]| {
            let mut w = manufactured_fields(t, x, false);
            w.sigma.fill(0.0);
            w.tau = 0.0;
            w
        };
        let r1 = energy_identity_residual(f, &eos, &params, 0.1, &[0.2, 0.1, 0.0], 1e-3).unwrap();
        let r2 = energy_identity_residual(f, &eos, &params, 0.1, &[0.2, 0.1, 0.0], 5e-4).unwrap();
        assert!((3.5..=4.5).contains(&(r1.residual / r2.residual)));
    }
}
