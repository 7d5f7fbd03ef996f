//! Stationary viscous and relaxation shock profiles in one space dimension.
//!
//! In the shock frame the mass flux `m = R U` and the momentum
//! `m U + p(U/m) + Sigma = C` are first integrals, so every profile lies on
//! `Sigma = -g(U)` with `g(U) = m U + p(U/m) - C`. The remaining equation is
//!
//! ```text
//! viscous:     mu U' = g(U)
//! relaxation:  eps m Sigma' + U' = -Sigma / mu
//! ```

use nalgebra::{Complex, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::DormandPrince;
use crate::thermo::BarotropicEos;

/// End states of a stationary shock with `m > 0` (flow from left to right).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockSetup<E> {
    pub eos: E,
    pub rho_minus: f64,
    pub u_minus: f64,
    pub rho_plus: f64,
    pub u_plus: f64,
    pub m: f64,
    /// Momentum constant `m u + p(1/rho)`.
    pub momentum: f64,
}

impl<E: BarotropicEos> ShockSetup<E> {
    /// A constant state viewed as a zero-amplitude shock.
    pub fn constant(eos: E, rho: f64, u: f64) -> Result<Self> {
        if !(rho > 0.0) || !(u > 0.0) {
            return Err(Error::Domain("constant state needs rho > 0 and u > 0".into()));
        }
        let m = rho * u;
        let momentum = m * u + eos.pressure(1.0 / rho);
        Ok(ShockSetup {
            eos,
            rho_minus: rho,
            u_minus: u,
            rho_plus: rho,
            u_plus: u,
            m,
            momentum,
        })
    }

    /// `g(U) = m U + p(U/m) - C`.
    pub fn g(&self, u: f64) -> f64 {
        self.m * u + self.eos.pressure(u / self.m) - self.momentum
    }

    /// `g'(U) = m (1 - c^2/U^2)`.
    pub fn dg(&self, u: f64) -> f64 {
        self.m + self.eos.pressure_v(u / self.m) / self.m
    }

    pub fn d2g(&self, u: f64) -> f64 {
        self.eos.pressure_vv(u / self.m) / (self.m * self.m)
    }

    pub fn amplitude(&self) -> f64 {
        self.u_minus - self.u_plus
    }

    pub fn is_trivial(&self) -> bool {
        self.amplitude().abs() <= 1e-14 * self.u_minus.abs()
    }

    /// Velocity at fraction `phase` of the way from upstream to downstream.
    pub fn phase_velocity(&self, phase: f64) -> f64 {
        self.u_minus + phase * (self.u_plus - self.u_minus)
    }

    /// Largest deviation in the mass and momentum jump conditions.
    pub fn jump_residuals(&self) -> (f64, f64) {
        let mass = (self.rho_minus * self.u_minus - self.rho_plus * self.u_plus).abs();
        let mom = |rho: f64, u: f64| self.m * u + self.eos.pressure(1.0 / rho);
        (mass, (mom(self.rho_minus, self.u_minus) - mom(self.rho_plus, self.u_plus)).abs())
    }

    /// Lax conditions: supersonic upstream, subsonic downstream.
    pub fn is_lax(&self) -> bool {
        self.u_minus > self.eos.sound_speed(self.rho_minus)
            && self.u_plus < self.eos.sound_speed(self.rho_plus)
    }

    /// `1 - eps m g'(U)`: the relaxation profile is regular while this stays positive.
    pub fn relaxation_factor(&self, eps: f64, u: f64) -> f64 {
        1.0 - eps * self.m * self.dg(u)
    }

    /// Largest `eps` for which the factor stays positive on `[u+, u-]`.
    pub fn eps_ceiling(&self) -> f64 {
        let gmax = self.dg(self.u_minus).max(self.dg(self.u_plus));
        if gmax > 0.0 {
            1.0 / (self.m * gmax)
        } else {
            f64::INFINITY
        }
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= tol * mid.abs().max(1.0) {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Downstream state of the stationary shock with upstream `(rho_minus, u_minus)`.
pub fn rankine_hugoniot<E: BarotropicEos + Clone>(
    eos: &E,
    rho_minus: f64,
    u_minus: f64,
) -> Result<ShockSetup<E>> {
    if !(rho_minus > 0.0) || !(u_minus > 0.0) {
        return Err(Error::Domain(format!(
            "need rho- > 0 and u- > 0, got ({rho_minus}, {u_minus})"
        )));
    }
    let c = eos.sound_speed(rho_minus);
    if !(u_minus > c) {
        return Err(Error::Sonic { u: u_minus, c });
    }
    let mut setup = ShockSetup::constant(eos.clone(), rho_minus, u_minus)?;
    // g is convex with g(u-) = 0 and g'(u-) > 0; the other root lies below the sonic point
    let mut lo = 0.5 * u_minus;
    let mut k = 0;
    while setup.dg(lo) >= 0.0 {
        lo *= 0.5;
        k += 1;
        if k > 200 {
            return Err(Error::NoShock("no sonic point below u-".into()));
        }
    }
    let u_sonic = bisect(|u| setup.dg(u), lo, u_minus, 1e-15);
    let g_sonic = setup.g(u_sonic);
    let u_plus = if g_sonic >= -1e-14 * setup.momentum.abs() {
        u_sonic
    } else {
        let mut left = u_sonic;
        let mut k = 0;
        while setup.g(left) <= 0.0 {
            left *= 0.5;
            k += 1;
            if k > 200 || left < 1e-300 {
                return Err(Error::NoShock("g stays negative towards u = 0".into()));
            }
        }
        let mut x = bisect(|u| setup.g(u), left, u_sonic, 1e-13);
        // secant polish
        let mut x0 = x * (1.0 - 1e-8);
        for _ in 0..20 {
            let (f1, f0) = (setup.g(x), setup.g(x0));
            if f1 == f0 {
                break;
            }
            let x2 = x - f1 * (x - x0) / (f1 - f0);
            x0 = x;
            x = x2;
            if (x - x0).abs() <= 1e-15 * x.abs() {
                break;
            }
        }
        x
    };
    setup.u_plus = u_plus;
    setup.rho_plus = setup.m / u_plus;
    Ok(setup)
}

/// Eigen-data of the profile equations at the end states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestPointReport {
    pub eps: f64,
    /// Eigenvalue of the scalar reduction `U' = g(U) / (mu (1 - eps m g'(U)))`.
    pub reduced_upstream: f64,
    pub reduced_downstream: f64,
    /// Eigenvalues `(re, im)` of the planar `(U, Sigma)` linearization (`eps > 0`);
    /// one of each pair is the zero mode along the line of rest points.
    pub planar_upstream: Vec<(f64, f64)>,
    pub planar_downstream: Vec<(f64, f64)>,
    pub hyperbolic: bool,
}

fn planar_matrix<E: BarotropicEos>(setup: &ShockSetup<E>, mu: f64, eps: f64, u: f64) -> Matrix2<f64> {
    let d = setup.relaxation_factor(eps, u);
    Matrix2::new(0.0, -1.0 / (mu * d), 0.0, setup.dg(u) / (mu * d))
}

/// Checks that both end states are hyperbolic rest points of the profile ODE,
/// with one unstable direction upstream and one stable direction downstream.
///
/// For `eps > 0` the planar system carries the zero mode transverse to the
/// level sets of the momentum integral; hyperbolicity is judged on the
/// remaining (reduced) eigenvalue.
pub fn hyperbolic_restpoint_check<E: BarotropicEos>(
    setup: &ShockSetup<E>,
    mu: f64,
    eps: f64,
) -> Result<RestPointReport> {
    if !(mu > 0.0) || !(eps >= 0.0) {
        return Err(Error::Domain("need mu > 0 and eps >= 0".into()));
    }
    let mut reduced = [0.0; 2];
    for (k, &u) in [setup.u_minus, setup.u_plus].iter().enumerate() {
        let d = setup.relaxation_factor(eps, u);
        if !(d > 0.0) {
            return Err(Error::EpsTooLarge { eps, u });
        }
        reduced[k] = setup.dg(u) / (mu * d);
        if reduced[k].abs() <= 1e-10 {
            return Err(Error::NonHyperbolic {
                eigenvalue: reduced[k],
            });
        }
    }
    let planar = |u: f64| -> Vec<(f64, f64)> {
        if eps == 0.0 {
            return vec![];
        }
        planar_matrix(setup, mu, eps, u)
            .complex_eigenvalues()
            .iter()
            .map(|z: &Complex<f64>| (z.re, z.im))
            .collect()
    };
    Ok(RestPointReport {
        eps,
        reduced_upstream: reduced[0],
        reduced_downstream: reduced[1],
        planar_upstream: planar(setup.u_minus),
        planar_downstream: planar(setup.u_plus),
        hyperbolic: reduced[0] > 0.0 && reduced[1] < 0.0,
    })
}

/// Pointwise profile data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfilePoint {
    pub r: f64,
    pub u: f64,
    pub sigma: f64,
    pub dr: f64,
    pub du: f64,
    pub dsigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSolution<E> {
    pub setup: ShockSetup<E>,
    /// Zero denotes the viscous profile.
    pub eps: f64,
    pub mu_tilde: f64,
    pub half_length: f64,
    pub xi: Vec<f64>,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Largest deviation of `(R, U, Sigma)(+-L)` from the end states.
    pub endpoint_residual: f64,
    /// Distance from the downstream rest point after shooting (relaxation only).
    pub shooting_miss: Option<f64>,
    /// Rates `(upstream > 0, downstream < 0)` of exponential approach to the end states.
    pub rates: (f64, f64),
}

impl<E: BarotropicEos> ProfileSolution<E> {
    /// `U'` from the profile equation at velocity `u` and stress `sigma`.
    fn du_at(&self, u: f64, sigma: f64) -> f64 {
        -sigma / (self.mu_tilde * self.setup.relaxation_factor(self.eps, u))
    }

    fn point(&self, u: f64, sigma: f64) -> ProfilePoint {
        let m = self.setup.m;
        let du = self.du_at(u, sigma);
        ProfilePoint {
            r: m / u,
            u,
            sigma,
            dr: -m * du / (u * u),
            du,
            dsigma: -self.setup.dg(u) * du,
        }
    }

    /// Profile at any `xi`: cubic Hermite inside the sampled window and the
    /// linearized exponential tail outside it.
    pub fn eval(&self, xi: f64) -> ProfilePoint {
        let n = self.xi.len();
        if self.setup.is_trivial() || n < 2 {
            return self.point(self.setup.u_minus, 0.0);
        }
        if xi <= self.xi[0] || xi >= self.xi[n - 1] {
            let (k, end, rate) = if xi <= self.xi[0] {
                (0, self.setup.u_minus, self.rates.0)
            } else {
                (n - 1, self.setup.u_plus, self.rates.1)
            };
            let f = (rate * (xi - self.xi[k])).exp();
            let u = end + (self.u[k] - end) * f;
            let sigma = self.sigma[k] * f;
            return self.point(u, sigma);
        }
        let h = self.xi[1] - self.xi[0];
        let j = (((xi - self.xi[0]) / h).floor() as usize).min(n - 2);
        let s = (xi - self.xi[j]) / h;
        let (p0, p1) = (self.point(self.u[j], self.sigma[j]), self.point(self.u[j + 1], self.sigma[j + 1]));
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let u = h00 * p0.u + h10 * h * p0.du + h01 * p1.u + h11 * h * p1.du;
        let sigma = h00 * p0.sigma + h10 * h * p0.dsigma + h01 * p1.sigma + h11 * h * p1.dsigma;
        self.point(u, sigma)
    }

    /// `sup |Sigma + mu U'|` over the samples, the distance from the Newtonian closure.
    pub fn newtonian_defect(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.sigma)
            .map(|(&u, &s)| (s + self.mu_tilde * self.du_at(u, s)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `R U` from `m` and of `m U + p + Sigma` from `C`.
    pub fn first_integral_defects(&self) -> (f64, f64) {
        let mut mass = 0.0f64;
        let mut mom = 0.0f64;
        for i in 0..self.u.len() {
            mass = mass.max((self.r[i] * self.u[i] - self.setup.m).abs());
            let c = self.setup.m * self.u[i] + self.setup.eos.pressure(1.0 / self.r[i]) + self.sigma[i];
            mom = mom.max((c - self.setup.momentum).abs());
        }
        (mass, mom)
    }

    /// Window `[xi-, xi+]` outside which `|U - U+-|` is below `tol`.
    pub fn tail_window(&self, tol: f64) -> (f64, f64) {
        let n = self.xi.len();
        let left = self.xi[0] - ((self.u[0] - self.setup.u_minus).abs().max(1e-300) / tol).ln().max(0.0) / self.rates.0;
        let right =
            self.xi[n - 1] + ((self.u[n - 1] - self.setup.u_plus).abs().max(1e-300) / tol).ln().max(0.0) / (-self.rates.1);
        (left.min(self.xi[0]), right.max(self.xi[n - 1]))
    }

    /// CSV with columns `xi,R,U,Sigma`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("xi,R,U,Sigma\n");
        for i in 0..self.xi.len() {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.xi[i], self.r[i], self.u[i], self.sigma[i]
            ));
        }
        out
    }

    /// Samples `(x, rho, u, Sigma)` of the profile moving in direction `n = +-1`
    /// with speed `c`, at time zero: `x = n xi`, `u = n U + c`.
    pub fn galilean_boost(&self, n: f64, c: f64) -> Result<Vec<[f64; 4]>> {
        if n != 1.0 && n != -1.0 {
            return Err(Error::Domain("direction must be +1 or -1".into()));
        }
        Ok((0..self.xi.len())
            .map(|i| [n * self.xi[i], self.r[i], n * self.u[i] + c, self.sigma[i]])
            .collect())
    }
}

/// Sampling and accuracy controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// `U(0) = u- + phase (u+ - u-)`.
    pub phase: f64,
    /// Offset from the upstream rest point along the unstable eigenvector.
    pub offset: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_newton: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            phase: 0.5,
            offset: 1e-6,
            rtol: 1e-12,
            atol: 1e-14,
            max_newton: 50,
        }
    }
}

fn sample_grid(half_length: f64, n: usize) -> Result<Vec<f64>> {
    if n < 3 || !(half_length > 0.0) {
        return Err(Error::Domain("need at least 3 samples and L > 0".into()));
    }
    Ok((0..n)
        .map(|i| -half_length + 2.0 * half_length * i as f64 / (n - 1) as f64)
        .collect())
}

/// Integrates from `xi = 0` through the samples on each side.
fn sweep<F>(
    rhs: F,
    y_mid: &[f64],
    xs: &[f64],
    opts: &ProfileOptions,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Copy,
{
    let dp = DormandPrince::with_tol(opts.rtol, opts.atol);
    let mut out = vec![vec![]; xs.len()];
    let split = xs.partition_point(|&x| x < 0.0);
    for range in [(split..xs.len()).collect::<Vec<_>>(), (0..split).rev().collect()] {
        let mut t = 0.0;
        let mut y = y_mid.to_vec();
        for i in range {
            let (y1, _) = dp.integrate(|_, y: &[f64], dy: &mut [f64]| rhs(y, dy), t, &y, xs[i])?;
            y = y1;
            t = xs[i];
            out[i] = y.clone();
        }
    }
    Ok(out)
}

/// Strict decrease away from the end states; in the tails, where `U` equals an
/// end value to rounding, only increases are rejected.
fn check_monotone(xi: &[f64], u: &[f64], ends: (f64, f64)) -> Result<()> {
    let floor = 1e-12 * ends.0.abs();
    for i in 1..u.len() {
        let interior = (u[i] - ends.0).abs() > floor && (u[i] - ends.1).abs() > floor;
        let ok = if interior { u[i] < u[i - 1] } else { u[i] <= u[i - 1] + floor };
        if !ok {
            return Err(Error::NotMonotone { xi: xi[i] });
        }
    }
    Ok(())
}

fn constant_profile<E: BarotropicEos + Clone>(
    setup: &ShockSetup<E>,
    mu: f64,
    eps: f64,
    half_length: f64,
    n: usize,
) -> Result<ProfileSolution<E>> {
    let xi = sample_grid(half_length, n)?;
    Ok(ProfileSolution {
        setup: setup.clone(),
        eps,
        mu_tilde: mu,
        half_length,
        r: vec![setup.rho_minus; n],
        u: vec![setup.u_minus; n],
        sigma: vec![0.0; n],
        xi,
        endpoint_residual: 0.0,
        shooting_miss: None,
        rates: (1.0, -1.0),
    })
}

fn validate<E: BarotropicEos>(setup: &ShockSetup<E>, mu: f64) -> Result<()> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("viscosity must be positive, got {mu}")));
    }
    if !setup.is_lax() {
        return Err(Error::NoShock("end states violate the Lax conditions".into()));
    }
    Ok(())
}

fn endpoint_residual<E: BarotropicEos>(setup: &ShockSetup<E>, u: &[f64], sigma: &[f64]) -> f64 {
    let n = u.len();
    let du = (u[0] - setup.u_minus).abs().max((u[n - 1] - setup.u_plus).abs());
    let dr = (setup.m / u[0] - setup.rho_minus)
        .abs()
        .max((setup.m / u[n - 1] - setup.rho_plus).abs());
    du.max(dr).max(sigma[0].abs()).max(sigma[n - 1].abs())
}

/// Viscous profile from `mu U' = g(U)` with `U(0)` fixed by the phase condition,
/// sampled at `n` equispaced points of `[-L, L]`.
pub fn ns_profile<E: BarotropicEos + Clone>(
    setup: &ShockSetup<E>,
    mu: f64,
    half_length: f64,
    n: usize,
) -> Result<ProfileSolution<E>> {
    ns_profile_with(setup, mu, half_length, n, &ProfileOptions::default(), 1e-8)
}

pub fn ns_profile_with<E: BarotropicEos + Clone>(
    setup: &ShockSetup<E>,
    mu: f64,
    half_length: f64,
    n: usize,
    opts: &ProfileOptions,
    endpoint_tol: f64,
) -> Result<ProfileSolution<E>> {
    if setup.is_trivial() {
        return constant_profile(setup, mu, 0.0, half_length, n);
    }
    validate(setup, mu)?;
    let report = hyperbolic_restpoint_check(setup, mu, 0.0)?;
    let xi = sample_grid(half_length, n)?;
    let s = setup.clone();
    let rhs = move |y: &[f64], dy: &mut [f64]| -> Result<()> {
        dy[0] = s.g(y[0]) / mu;
        Ok(())
    };
    let ys = sweep(&rhs, &[setup.phase_velocity(opts.phase)], &xi, opts)?;
    let u: Vec<f64> = ys.iter().map(|y| y[0]).collect();
    let sigma: Vec<f64> = u.iter().map(|&u| -setup.g(u)).collect();
    finish(setup, mu, 0.0, half_length, xi, u, sigma, None, &report, endpoint_tol)
}

#[allow(clippy::too_many_arguments)]
fn finish<E: BarotropicEos + Clone>(
    setup: &ShockSetup<E>,
    mu: f64,
    eps: f64,
    half_length: f64,
    xi: Vec<f64>,
    u: Vec<f64>,
    sigma: Vec<f64>,
    shooting_miss: Option<f64>,
    report: &RestPointReport,
    endpoint_tol: f64,
) -> Result<ProfileSolution<E>> {
    check_monotone(&xi, &u, (setup.u_minus, setup.u_plus))?;
    let residual = endpoint_residual(setup, &u, &sigma);
    if !(residual < endpoint_tol) {
        return Err(Error::IncreaseL {
            half_length,
            residual,
        });
    }
    Ok(ProfileSolution {
        setup: setup.clone(),
        eps,
        mu_tilde: mu,
        half_length,
        r: u.iter().map(|&u| setup.m / u).collect(),
        u,
        sigma,
        xi,
        endpoint_residual: residual,
        shooting_miss,
        rates: (report.reduced_upstream, report.reduced_downstream),
    })
}

/// Relaxation profile (`eps > 0`) by shooting on the planar `(U, Sigma)` system
///
/// ```text
/// U'     = -Sigma / (mu (1 - eps m g'(U)))
/// Sigma' = -g'(U) U'
/// ```
///
/// from the upstream rest point along its unstable eigenvector `(-1, g'(u-))`.
/// Newton on the time of flight enforces the phase condition `U(0) = U_mid`;
/// the profile is then integrated from `xi = 0` in both directions.
pub fn relaxation_profile<E: BarotropicEos + Clone>(
    setup: &ShockSetup<E>,
    mu: f64,
    eps: f64,
    half_length: f64,
    n: usize,
) -> Result<ProfileSolution<E>> {
    relaxation_profile_with(setup, mu, eps, half_length, n, &ProfileOptions::default(), 1e-6)
}

pub fn relaxation_profile_with<E: BarotropicEos + Clone>(
    setup: &ShockSetup<E>,
    mu: f64,
    eps: f64,
    half_length: f64,
    n: usize,
    opts: &ProfileOptions,
    endpoint_tol: f64,
) -> Result<ProfileSolution<E>> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("relaxation profile needs eps > 0, got {eps}")));
    }
    if setup.is_trivial() {
        return constant_profile(setup, mu, eps, half_length, n);
    }
    validate(setup, mu)?;
    let report = hyperbolic_restpoint_check(setup, mu, eps)?;
    // the factor must stay positive along the whole connection
    let (lo, hi) = (setup.u_plus, setup.u_minus);
    for k in 0..=200 {
        let u = lo + (hi - lo) * k as f64 / 200.0;
        if !(setup.relaxation_factor(eps, u) > 0.0) {
            return Err(Error::EpsTooLarge { eps, u });
        }
    }
    let s = setup.clone();
    let rhs = move |y: &[f64], dy: &mut [f64]| -> Result<()> {
        let d = s.relaxation_factor(eps, y[0]);
        if !(d > 0.0) {
            return Err(Error::EpsTooLarge { eps, u: y[0] });
        }
        dy[0] = -y[1] / (mu * d);
        dy[1] = -s.dg(y[0]) * dy[0];
        Ok(())
    };
    let dp = DormandPrince::with_tol(opts.rtol, opts.atol);
    let gp = setup.dg(setup.u_minus);
    let norm = (1.0 + gp * gp).sqrt();
    let y0 = [setup.u_minus - opts.offset / norm, opts.offset * gp / norm];
    let target = setup.phase_velocity(opts.phase);
    let rate = report.reduced_upstream;
    let mut flight = ((setup.u_minus - target).abs() / (opts.offset / norm)).ln() / rate;
    let mut y_mid = None;
    let mut miss = f64::INFINITY;
    for _ in 0..opts.max_newton {
        let (y, _) = dp.integrate(|_, y: &[f64], dy: &mut [f64]| rhs(y, dy), 0.0, &y0, flight)?;
        let mut dy = [0.0; 2];
        rhs(&y, &mut dy)?;
        miss = y[0] - target;
        if miss.abs() <= 1e-13 * target.abs() {
            y_mid = Some(y);
            break;
        }
        let step = miss / dy[0];
        flight = (flight - step).max(0.5 * flight);
    }
    let y_mid = y_mid.ok_or(Error::ShootingFailed { miss: miss.abs() })?;
    let xi = sample_grid(half_length, n)?;
    let ys = sweep(&rhs, &y_mid, &xi, opts)?;
    let u: Vec<f64> = ys.iter().map(|y| y[0]).collect();
    let sigma: Vec<f64> = ys.iter().map(|y| y[1]).collect();
    let last = ys.last().unwrap();
    let shooting_miss = ((last[0] - setup.u_plus).powi(2) + last[1].powi(2)).sqrt();
    finish(setup, mu, eps, half_length, xi, u, sigma, Some(shooting_miss), &report, endpoint_tol)
}

/// Half-length at which the linearized tails have decayed to `tol`.
pub fn suggested_half_length<E: BarotropicEos>(setup: &ShockSetup<E>, mu: f64, eps: f64, tol: f64) -> Result<f64> {
    let report = hyperbolic_restpoint_check(setup, mu, eps)?;
    let amp = setup.amplitude().abs();
    let slow = report.reduced_upstream.min(-report.reduced_downstream);
    Ok(((amp / tol).ln().max(1.0) / slow).max(1.0))
}

/// Solves on `[-L, L]`, doubling `L` until the end-point residual is below
/// `endpoint_tol`; capped at `400 / min |rate|`. `eps = 0` gives the viscous profile.
pub fn profile_auto<E: BarotropicEos + Clone>(
    setup: &ShockSetup<E>,
    mu: f64,
    eps: f64,
    spacing: f64,
    endpoint_tol: f64,
) -> Result<ProfileSolution<E>> {
    if setup.is_trivial() {
        return constant_profile(setup, mu, eps, 1.0, 3);
    }
    let report = hyperbolic_restpoint_check(setup, mu, eps)?;
    let cap = 400.0 / report.reduced_upstream.min(-report.reduced_downstream);
    let mut half = suggested_half_length(setup, mu, eps, endpoint_tol * 1e-2)?;
    loop {
        let n = (2.0 * half / spacing).ceil() as usize + 1;
        let n = n.max(3) | 1;
        let opts = ProfileOptions::default();
        let res = if eps == 0.0 {
            ns_profile_with(setup, mu, half, n, &opts, endpoint_tol)
        } else {
            relaxation_profile_with(setup, mu, eps, half, n, &opts, endpoint_tol)
        };
        match res {
            Err(Error::IncreaseL { .. }) if 2.0 * half <= cap => half *= 2.0,
            other => return other,
        }
    }
}
