//! Evans functions of viscous (`eps = 0`) and relaxation (`eps > 0`) shock profiles.
//!
//! Perturbations `e^{lambda t} (r, v, s)(xi)` of a stationary profile `(R, U, Sigma)`
//! satisfy `M y' = N(xi, lambda) y` with
//!
//! ```text
//!     | U  R   0     |        | -lambda - U'        -R'          0                      |
//! M = | a  2m  1     |    N = | -lambda U - a'      -lambda R    0                      |
//!     | 0  1   eps m |        | -eps Sigma' U       -eps Sigma' R   -1/mu - eps lambda R |
//! ```
//!
//! where `a = U^2 + p'(R)`. The Evans function is the determinant of the
//! solutions decaying at both ends, evaluated at `xi = 0`.

pub mod contour;
pub mod splitting;

use nalgebra::{Complex, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::DormandPrince;
use crate::profiles::ProfileSolution;
use crate::thermo::BarotropicEos;
use splitting::{
    classify, eigenvalues3, follow, normalization_from, normalized_eigenvector, Branches, C64,
    STABLE_DIM, UNSTABLE_DIM,
};

/// Which linearization of the 1D relaxation system to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linearization {
    /// Exact linearization about the profile.
    Full,
    /// Coefficients frozen at the profile values, dropping every term carrying a
    /// profile derivative. Agrees with `Full` at constant states only.
    Frozen,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvansOptions {
    pub rtol: f64,
    pub atol: f64,
    /// The integration window ends where `|U - U+-|` falls to this level.
    pub tail_tol: f64,
    /// Real reference point fixing the initial-basis normalization.
    pub lambda_ref: f64,
    pub linearization: Linearization,
    /// Splitting failure threshold on `|Re mu|` when classifying directly.
    pub splitting_tol: f64,
}

impl Default for EvansOptions {
    fn default() -> Self {
        EvansOptions {
            rtol: 1e-10,
            atol: 1e-12,
            tail_tol: 1e-10,
            lambda_ref: 2.5,
            linearization: Linearization::Full,
            splitting_tol: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// An Evans function sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvansValue {
    pub lambda: C64,
    pub d: C64,
    /// `log D`, defined up to `2 pi i`.
    pub log_d: C64,
}

/// Result of [`EvansProblem::asymptotic_splitting`].
#[derive(Clone, Debug, PartialEq)]
pub struct SplittingReport {
    pub unstable_minus: Vec<C64>,
    pub stable_plus: Vec<C64>,
    pub minus: [C64; 3],
    pub plus: [C64; 3],
    /// Decaying bases `(unstable at -inf, stable at +inf)`.
    pub basis_minus: Vec<Vector3<C64>>,
    pub basis_plus: Vec<Vector3<C64>>,
}

/// Evans function setup for one profile.
#[derive(Clone, Debug)]
pub struct EvansProblem<E> {
    pub profile: ProfileSolution<E>,
    pub opts: EvansOptions,
    pub xi_minus: f64,
    pub xi_plus: f64,
    reference: Branches,
    ell_minus: [Vector3<f64>; UNSTABLE_DIM],
    ell_plus: [Vector3<f64>; STABLE_DIM],
}

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

impl<E: BarotropicEos + Clone> EvansProblem<E> {
    pub fn new(profile: ProfileSolution<E>, opts: EvansOptions) -> Result<Self> {
        if profile.setup.m == 0.0 {
            return Err(Error::Domain("mass flux must be nonzero".into()));
        }
        if !(opts.lambda_ref > 0.0) {
            return Err(Error::Domain("reference point must be positive".into()));
        }
        let (xi_minus, xi_plus) = truncation(&profile, opts.tail_tol);
        let mut problem = EvansProblem {
            profile,
            opts,
            xi_minus,
            xi_plus,
            reference: Branches {
                minus: [c(0.0); 3],
                plus: [c(0.0); 3],
            },
            ell_minus: [Vector3::zeros(); UNSTABLE_DIM],
            ell_plus: [Vector3::zeros(); STABLE_DIM],
        };
        let lref = c(opts.lambda_ref);
        let branches = problem.classify_direct(lref)?;
        let am = problem.asymptotic_matrix(Side::Minus, lref)?;
        let ap = problem.asymptotic_matrix(Side::Plus, lref)?;
        for i in 0..UNSTABLE_DIM {
            let v = splitting::null_vector(&(am - Matrix3::identity() * branches.minus[i]));
            problem.ell_minus[i] = normalization_from(&v);
        }
        for i in 0..STABLE_DIM {
            let v = splitting::null_vector(&(ap - Matrix3::identity() * branches.plus[i]));
            problem.ell_plus[i] = normalization_from(&v);
        }
        problem.reference = branches;
        Ok(problem)
    }

    /// Adopts the initial-basis normalization of `other`, so that Evans functions
    /// of nearby problems are directly comparable.
    pub fn share_normalization(&mut self, other: &EvansProblem<E>) {
        self.ell_minus = other.ell_minus;
        self.ell_plus = other.ell_plus;
    }

    pub fn eps(&self) -> f64 {
        self.profile.eps
    }

    fn matrices(
        &self,
        r: f64,
        u: f64,
        derivs: Option<(f64, f64, f64)>,
        lambda: C64,
    ) -> Result<Matrix3<C64>> {
        let eos = &self.profile.setup.eos;
        let m = self.profile.setup.m;
        let mu = self.profile.mu_tilde;
        let eps = self.eps();
        if u == 0.0 {
            return Err(Error::Singular("U vanishes".into()));
        }
        let a = u * u + eos.dpressure_drho(r);
        let mmat = nalgebra::Matrix3::new(u, r, 0.0, a, 2.0 * m, 1.0, 0.0, 1.0, eps * m);
        let minv = mmat
            .try_inverse()
            .ok_or_else(|| Error::Singular(format!("leading matrix singular at U = {u}")))?;
        let (dr, du, ds) = match (self.opts.linearization, derivs) {
            (Linearization::Full, Some(d)) => d,
            _ => (0.0, 0.0, 0.0),
        };
        let da = 2.0 * u * du + eos.d2pressure_drho2(r) * dr;
        let n = Matrix3::new(
            -lambda - du,
            c(-dr),
            c(0.0),
            -lambda * u - da,
            -lambda * r,
            c(0.0),
            c(-eps * ds * u),
            c(-eps * ds * r),
            c(-1.0 / mu) - lambda * (eps * r),
        );
        Ok(minv.map(c) * n)
    }

    /// `build_evp`: the first-order coefficient matrix `A(xi, lambda) = M^{-1} N`.
    pub fn coefficient_matrix(&self, xi: f64, lambda: C64) -> Result<Matrix3<C64>> {
        let p = self.profile.eval(xi);
        self.matrices(p.r, p.u, Some((p.dr, p.du, p.dsigma)), lambda)
    }

    /// Limit of [`Self::coefficient_matrix`] at `xi -> -inf` or `+inf`.
    pub fn asymptotic_matrix(&self, side: Side, lambda: C64) -> Result<Matrix3<C64>> {
        let s = &self.profile.setup;
        let (r, u) = match side {
            Side::Minus => (s.rho_minus, s.u_minus),
            Side::Plus => (s.rho_plus, s.u_plus),
        };
        self.matrices(r, u, None, lambda)
    }

    fn end_eigenvalues(&self, lambda: C64) -> Result<([C64; 3], [C64; 3])> {
        Ok((
            eigenvalues3(&self.asymptotic_matrix(Side::Minus, lambda)?)?,
            eigenvalues3(&self.asymptotic_matrix(Side::Plus, lambda)?)?,
        ))
    }

    /// Branches at `lambda` classified by the sign of their real parts.
    pub fn classify_direct(&self, lambda: C64) -> Result<Branches> {
        let (m, p) = self.end_eigenvalues(lambda)?;
        classify(m, p, self.opts.splitting_tol)
    }

    /// Branches at `lambda` continued from nearby branches `prev`.
    pub fn track(&self, prev: &Branches, lambda: C64) -> Result<Branches> {
        let (m, p) = self.end_eigenvalues(lambda)?;
        Ok(Branches {
            minus: follow(&prev.minus, m),
            plus: follow(&prev.plus, p),
        })
    }

    /// `asymptotic_splitting`: decaying subspaces and their analytic bases.
    pub fn asymptotic_splitting(&self, lambda: C64) -> Result<SplittingReport> {
        let b = self.classify_direct(lambda)?;
        self.splitting_with(lambda, &b)
    }

    fn splitting_with(&self, lambda: C64, b: &Branches) -> Result<SplittingReport> {
        let am = self.asymptotic_matrix(Side::Minus, lambda)?;
        let ap = self.asymptotic_matrix(Side::Plus, lambda)?;
        let basis_minus = (0..UNSTABLE_DIM)
            .map(|i| normalized_eigenvector(&am, b.minus[i], &self.ell_minus[i]))
            .collect::<Result<Vec<_>>>()?;
        let basis_plus = (0..STABLE_DIM)
            .map(|i| normalized_eigenvector(&ap, b.plus[i], &self.ell_plus[i]))
            .collect::<Result<Vec<_>>>()?;
        Ok(SplittingReport {
            unstable_minus: b.minus[..UNSTABLE_DIM].to_vec(),
            stable_plus: b.plus[..STABLE_DIM].to_vec(),
            minus: b.minus,
            plus: b.plus,
            basis_minus,
            basis_plus,
        })
    }

    /// `evans_eval` at a point with `Re lambda > 0`.
    pub fn evaluate(&self, lambda: C64) -> Result<EvansValue> {
        let b = self.classify_direct(lambda)?;
        self.evaluate_with(lambda, &b)
    }

    /// Evans function with the decaying subspaces given by `branches`.
    pub fn evaluate_with(&self, lambda: C64, branches: &Branches) -> Result<EvansValue> {
        let split = self.splitting_with(lambda, branches)?;
        let mu_minus: C64 = split.unstable_minus.iter().sum();
        let mu_plus: C64 = split.stable_plus.iter().sum();
        let (qm, rho_m) = self.transport(lambda, self.xi_minus, &split.basis_minus, mu_minus)?;
        let (qp, rho_p) = self.transport(lambda, self.xi_plus, &split.basis_plus, mu_plus)?;
        let mat = Matrix3::from_columns(&[qm[0], qp[0], qp[1]]);
        let det = mat.determinant();
        if det.norm() == 0.0 {
            return Err(Error::Singular("decaying subspaces intersect exactly".into()));
        }
        let log_d = det.ln() + rho_m + rho_p;
        let d = log_d.exp();
        if !d.re.is_finite() || !d.im.is_finite() {
            return Err(Error::Integration {
                t: 0.0,
                reason: "Evans function overflow".into(),
            });
        }
        Ok(EvansValue { lambda, d, log_d })
    }

    /// Carries `span(basis) e^{mu_sum xi}` from `start` to `xi = 0` by continuous
    /// orthonormalization: `Q' = (I - Q Q*) A Q`, `rho' = tr(Q* A Q)`.
    fn transport(
        &self,
        lambda: C64,
        start: f64,
        basis: &[Vector3<C64>],
        mu_sum: C64,
    ) -> Result<(Vec<Vector3<C64>>, C64)> {
        let k = basis.len();
        let (q0, logdiag) = gram_schmidt(basis);
        let mut y: Vec<C64> = Vec::with_capacity(3 * k + 1);
        for q in &q0 {
            y.extend(q.iter().copied());
        }
        y.push(c(logdiag) + mu_sum * start);
        let rhs = |xi: f64, y: &[C64], dy: &mut [C64]| -> Result<()> {
            let a = self.coefficient_matrix(xi, lambda)?;
            let qs: Vec<Vector3<C64>> =
                (0..k).map(|j| Vector3::new(y[3 * j], y[3 * j + 1], y[3 * j + 2])).collect();
            let aq: Vec<Vector3<C64>> = qs.iter().map(|q| a * q).collect();
            let mut tr = c(0.0);
            for j in 0..k {
                let mut d = aq[j];
                for i in 0..k {
                    let b_ij = qs[i].dotc(&aq[j]);
                    d -= qs[i] * b_ij;
                    if i == j {
                        tr += b_ij;
                    }
                }
                dy[3 * j..3 * j + 3].copy_from_slice(d.as_slice());
            }
            dy[3 * k] = tr;
            Ok(())
        };
        let dp = DormandPrince {
            h_min: 1e-14,
            ..DormandPrince::with_tol(self.opts.rtol, self.opts.atol)
        };
        let (y, _) = dp.integrate_with(rhs, start, &y, 0.0, |_, y: &mut Vec<C64>| {
            let qs: Vec<Vector3<C64>> =
                (0..k).map(|j| Vector3::new(y[3 * j], y[3 * j + 1], y[3 * j + 2])).collect();
            let (qn, ld) = gram_schmidt(&qs);
            // only renormalize once drift is visible, keeping FSAL otherwise
            if ld.abs() > 1e-12 || qn.iter().zip(&qs).any(|(a, b)| (a - b).norm() > 1e-12) {
                for (j, q) in qn.iter().enumerate() {
                    y[3 * j..3 * j + 3].copy_from_slice(q.as_slice());
                }
                y[3 * k] += c(ld);
            }
            Ok(())
        })?;
        let q = (0..k).map(|j| Vector3::new(y[3 * j], y[3 * j + 1], y[3 * j + 2])).collect();
        Ok((q, y[3 * k]))
    }

    /// Reference branches at `lambda_ref`.
    pub fn reference_branches(&self) -> Branches {
        self.reference
    }

    /// Distance from the origin to the first real branch point `lambda < 0` of
    /// the end-state eigenvalues, where two of them coalesce. Circles about the
    /// origin must stay inside it for the decaying subspaces to continue analytically.
    pub fn branch_point_distance(&self, search: f64) -> Result<f64> {
        let complex_at = |x: f64| -> Result<bool> {
            let (m, p) = self.end_eigenvalues(c(-x))?;
            Ok(m.iter().chain(p.iter()).any(|z| z.im.abs() > 1e-9 * (1.0 + z.norm())))
        };
        let n = 400;
        let mut prev = 0.0;
        for k in 1..=n {
            let x = search * k as f64 / n as f64;
            if complex_at(x)? {
                let (mut lo, mut hi) = (prev, x);
                for _ in 0..50 {
                    let mid = 0.5 * (lo + hi);
                    if complex_at(mid)? {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Ok(lo);
            }
            prev = x;
        }
        Ok(search)
    }

    /// Half the smallest nonzero `|Re mu|` of the end-state matrices at `lambda = 0`.
    pub fn working_margin(&self) -> Result<f64> {
        let (m, p) = self.end_eigenvalues(c(0.0))?;
        let mut smallest = f64::INFINITY;
        for mu in m.iter().chain(p.iter()) {
            if mu.re.abs() > 1e-8 {
                smallest = smallest.min(mu.re.abs());
            }
        }
        Ok(0.5 * smallest)
    }
}

/// Modified Gram-Schmidt; returns orthonormal columns and `sum log R_ii`.
fn gram_schmidt(cols: &[Vector3<C64>]) -> (Vec<Vector3<C64>>, f64) {
    let mut out: Vec<Vector3<C64>> = Vec::with_capacity(cols.len());
    let mut logdiag = 0.0;
    for v in cols {
        let mut w = *v;
        for q in &out {
            let proj = q.dotc(&w);
            w -= q * proj;
        }
        let n = w.norm();
        logdiag += n.ln();
        out.push(w / c(n));
    }
    (out, logdiag)
}

/// Points `xi- < 0 < xi+` where the profile is within `tol` of its end states.
fn truncation<E: BarotropicEos>(profile: &ProfileSolution<E>, tol: f64) -> (f64, f64) {
    let s = &profile.setup;
    if s.is_trivial() {
        return (-1.0, 1.0);
    }
    let find = |end: f64, dir: f64| {
        let gap = |xi: f64| (profile.eval(xi).u - end).abs() - tol;
        let mut hi = dir;
        while gap(hi) > 0.0 && hi.abs() < 1e4 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    (find(s.u_minus, -1.0), find(s.u_plus, 1.0))
}
