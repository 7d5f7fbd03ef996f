//! Systems of conservation laws generated by potentials of Godunov variables.
//!
//! A chart supplies spatiotemporal potentials `X^a(Y)`, `a = 0..3`; the fluxes are
//! `F^{ab} = dX^a/dY_b`. When a scalar protopotential `X` exists, the potentials are
//! its derivatives with respect to four distinguished variables.

pub mod galilean;
pub mod relativistic;
pub mod tensor4;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    fd_gradient, fd_hessian_richardson, fd_jacobian, ldlt_inertia, symmetry_defect, Definiteness, Signature,
};
use tensor4::{dot, Vec4};

/// Relative step of the central differences used throughout.
pub const FD_STEP: f64 = 1e-6;
/// Step for second derivatives (Richardson-refined).
pub const FD_STEP2: f64 = 1e-3;
/// Pivot tolerance of the definiteness verdicts.
pub const DEFINITENESS_TOL: f64 = 1e-8;

pub trait Chart: Sync {
    fn name(&self) -> String;
    fn variable_names(&self) -> Vec<String>;

    fn dim(&self) -> usize {
        self.variable_names().len()
    }

    fn potentials(&self, y: &[f64]) -> Result<[f64; 4]>;

    /// Scalar protopotential, when one exists.
    fn protopotential(&self, _y: &[f64]) -> Option<Result<f64>> {
        None
    }

    /// Variables whose protopotential derivatives are `X^0..X^3`.
    fn potential_slots(&self) -> [usize; 4];

    /// Production vector `I^b` (for Galilean charts) or its nonzero block.
    fn production(&self, y: &[f64]) -> Result<Vec<f64>>;

    fn lorentz_invariant(&self) -> bool {
        false
    }
}

fn component<C: Chart + ?Sized>(chart: &C, a: usize) -> impl Fn(&[f64]) -> f64 + '_ {
    move |y: &[f64]| chart.potentials(y).map(|x| x[a]).unwrap_or(f64::NAN)
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonPhysical(format!("{what}: potential evaluation failed near the state")))
    }
}

/// `fluxes_from_potential`: `F[(a, b)] = dX^a/dY_b` by central differences.
pub fn fluxes_from_potential<C: Chart + ?Sized>(chart: &C, y: &[f64]) -> Result<DMatrix<f64>> {
    chart.potentials(y)?;
    let f = fd_jacobian(|z| chart.potentials(z).map(|x| x.to_vec()).unwrap_or(vec![f64::NAN; 4]), y, FD_STEP);
    check_finite(&f, "flux")?;
    Ok(f)
}

/// Largest asymmetry of `dF^{ab}/dY_c` in `(b, c)` over `a`, each Jacobian formed by
/// differencing the differenced fluxes, relative to the largest entry.
pub fn flux_jacobian_symmetry<C: Chart + ?Sized>(chart: &C, y: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        let row = |z: &[f64]| fd_gradient(component(chart, a), z, FD_STEP);
        let jac = fd_jacobian(row, y, 1e-4);
        check_finite(&jac, "flux Jacobian")?;
        let scale = jac.amax().max(1e-12);
        worst = worst.max(symmetry_defect(&jac) / scale);
    }
    Ok(worst)
}

/// Entrywise relative mismatch between the protopotential gradient and `X^a`.
#[derive(Clone, Debug, Serialize)]
pub struct ProtopotentialReport {
    pub potentials: [f64; 4],
    pub from_protopotential: [f64; 4],
    pub max_relative_error: f64,
}

pub fn protopotential_consistency<C: Chart + ?Sized>(chart: &C, y: &[f64]) -> Result<ProtopotentialReport> {
    let direct = chart.potentials(y)?;
    chart
        .protopotential(y)
        .ok_or_else(|| Error::Domain(format!("chart {} has no protopotential", chart.name())))??;
    let f = |z: &[f64]| chart.protopotential(z).unwrap().unwrap_or(f64::NAN);
    let grad = fd_gradient(f, y, FD_STEP);
    let slots = chart.potential_slots();
    let from: [f64; 4] = std::array::from_fn(|a| grad[slots[a]]);
    let scale = direct.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-12);
    let err = (0..4)
        .map(|a| (from[a] - direct[a]).abs() / direct[a].abs().max(1e-3 * scale))
        .fold(0.0, f64::max);
    Ok(ProtopotentialReport {
        potentials: direct,
        from_protopotential: from,
        max_relative_error: err,
    })
}

/// Flux matrices `F^{ab}` obtained twice: by differencing `X^a`, and as second
/// derivatives of the protopotential. Returns the largest relative mismatch.
pub fn flux_chain_defect<C: Chart + ?Sized>(chart: &C, y: &[f64]) -> Result<f64> {
    let direct = fluxes_from_potential(chart, y)?;
    chart
        .protopotential(y)
        .ok_or_else(|| Error::Domain(format!("chart {} has no protopotential", chart.name())))??;
    let hess = fd_hessian_richardson(|z| chart.protopotential(z).unwrap().unwrap_or(f64::NAN), y, FD_STEP2);
    check_finite(&hess, "protopotential Hessian")?;
    let slots = chart.potential_slots();
    let scale = direct.amax().max(1e-12);
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..chart.dim() {
            let d = direct[(a, b)];
            worst = worst.max((hess[(slots[a], b)] - d).abs() / d.abs().max(1e-3 * scale));
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct DefinitenessReport {
    pub signature: Signature,
    pub verdict: Definiteness,
    /// Verdict with the difference step halved.
    pub verdict_half_step: Definiteness,
    pub min_abs_eigenvalue: f64,
}

fn classify(hess: &DMatrix<f64>, half: &DMatrix<f64>) -> DefinitenessReport {
    let signature = ldlt_inertia(hess, DEFINITENESS_TOL);
    let sym = (hess + hess.transpose()) * 0.5;
    let min_abs = sym
        .symmetric_eigenvalues()
        .iter()
        .map(|x| x.abs())
        .fold(f64::INFINITY, f64::min);
    DefinitenessReport {
        signature,
        verdict: signature.verdict(),
        verdict_half_step: ldlt_inertia(half, DEFINITENESS_TOL).verdict(),
        min_abs_eigenvalue: min_abs,
    }
}

/// Hessian of `X^0` and its definiteness (symmetric hyperbolicity).
pub fn density_hessian<C: Chart + ?Sized>(chart: &C, y: &[f64], step: f64) -> Result<DMatrix<f64>> {
    let h = fd_hessian_richardson(component(chart, 0), y, step);
    check_finite(&h, "X^0 Hessian")?;
    Ok(h)
}

/// `hyperbolicity_check`.
pub fn hyperbolicity_check<C: Chart + ?Sized>(chart: &C, y: &[f64]) -> Result<DefinitenessReport> {
    let h = density_hessian(chart, y, FD_STEP2)?;
    let half = density_hessian(chart, y, 0.5 * FD_STEP2)?;
    Ok(classify(&h, &half))
}

/// Hessian of `T_a X^a` for a covector `T` (lower indices).
pub fn contracted_hessian<C: Chart + ?Sized>(chart: &C, y: &[f64], t_low: &Vec4, step: f64) -> Result<DMatrix<f64>> {
    let f = |z: &[f64]| {
        chart
            .potentials(z)
            .map(|x| (0..4).map(|a| t_low[a] * x[a]).sum())
            .unwrap_or(f64::NAN)
    };
    let h = fd_hessian_richardson(f, y, step);
    check_finite(&h, "contracted Hessian")?;
    Ok(h)
}

/// `causality_check` for a timelike covector `T_a`.
pub fn causality_check<C: Chart + ?Sized>(chart: &C, y: &[f64], t_low: &Vec4) -> Result<DefinitenessReport> {
    if !chart.lorentz_invariant() {
        return Err(Error::Domain(format!("chart {} is not Lorentz invariant", chart.name())));
    }
    let t_up = tensor4::lower(t_low);
    if !(dot(&t_up, &t_up) < 0.0) {
        return Err(Error::Domain("causality direction must be timelike".into()));
    }
    let h = contracted_hessian(chart, y, t_low, FD_STEP2)?;
    let half = contracted_hessian(chart, y, t_low, 0.5 * FD_STEP2)?;
    Ok(classify(&h, &half))
}

/// One row of a chart verification report.
#[derive(Clone, Debug, Serialize)]
pub struct ChartCheck {
    pub chart: String,
    pub state: Vec<f64>,
    pub protopotential_error: Option<f64>,
    pub flux_chain_error: Option<f64>,
    pub flux_symmetry_defect: f64,
    pub hyperbolicity: Option<DefinitenessReport>,
}

pub fn check_chart<C: Chart + ?Sized>(chart: &C, y: &[f64], with_hessian: bool) -> Result<ChartCheck> {
    let has_proto = chart.protopotential(y).is_some();
    let proto = if has_proto {
        Some(protopotential_consistency(chart, y)?.max_relative_error)
    } else {
        None
    };
    let chain = if has_proto { Some(flux_chain_defect(chart, y)?) } else { None };
    Ok(ChartCheck {
        chart: chart.name(),
        state: y.to_vec(),
        protopotential_error: proto,
        flux_chain_error: chain,
        flux_symmetry_defect: flux_jacobian_symmetry(chart, y)?,
        hyperbolicity: if with_hessian { Some(hyperbolicity_check(chart, y)?) } else { None },
    })
}
