//! Adaptive Dormand-Prince 5(4) integration for real or complex state vectors.

use std::ops::{Add, Mul, Sub};

use nalgebra::Complex;

use crate::error::{Error, Result};

/// Scalar type an ODE state is built from.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex<f64> {
    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `None` picks `|t1 - t0| / 100`.
    pub h_init: Option<f64>,
    /// Absolute step floor; reaching it aborts the integration.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for DormandPrince {
    fn default() -> Self {
        DormandPrince {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_min: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights are the last row of A; these are fifth minus fourth
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl DormandPrince {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        DormandPrince {
            rtol,
            atol,
            ..Default::default()
        }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
    pub fn integrate<S, F>(&self, f: F, t0: f64, y0: &[S], t1: f64) -> Result<(Vec<S>, Stats)>
    where
        S: Scalar,
        F: FnMut(f64, &[S], &mut [S]) -> Result<()>,
    {
        self.integrate_with(f, t0, y0, t1, |_, _| Ok(()))
    }

    /// Like [`Self::integrate`], calling `on_step(t, y)` after every accepted step.
    /// The hook may modify `y` (renormalisation, projection).
    pub fn integrate_with<S, F, H>(
        &self,
        mut f: F,
        t0: f64,
        y0: &[S],
        t1: f64,
        mut on_step: H,
    ) -> Result<(Vec<S>, Stats)>
    where
        S: Scalar,
        F: FnMut(f64, &[S], &mut [S]) -> Result<()>,
        H: FnMut(f64, &mut Vec<S>) -> Result<()>,
    {
        let n = y0.len();
        let mut y = y0.to_vec();
        let mut stats = Stats::default();
        if t1 == t0 {
            return Ok((y, stats));
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let mut h = self.h_init.unwrap_or(span / 100.0).min(span);
        let mut t = t0;
        let mut k: Vec<Vec<S>> = vec![vec![S::zero(); n]; 7];
        let mut tmp = vec![S::zero(); n];
        let mut y_new = vec![S::zero(); n];
        f(t, &y, &mut k[0])?;
        let mut steps = 0;
        while (t1 - t) * dir > 0.0 {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration {
                    t,
                    reason: "step budget exhausted".into(),
                });
            }
            let last = h >= (t1 - t).abs();
            if last {
                h = (t1 - t).abs();
            }
            let hs = h * dir;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc = acc + kj[i] * (hs * A[s][j]);
                        }
                    }
                    tmp[i] = acc;
                }
                f(t + C[s] * hs, &tmp, &mut k[s])?;
                if s == 6 {
                    y_new.copy_from_slice(&tmp);
                }
            }
            let mut err = 0.0;
            for i in 0..n {
                let mut e = S::zero();
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e = e + kj[i] * (hs * E[j]);
                    }
                }
                let sc = self.atol + self.rtol * y[i].modulus().max(y_new[i].modulus());
                let r = e.modulus() / sc;
                err += r * r;
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration {
                    t,
                    reason: "non-finite state".into(),
                });
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + hs };
                std::mem::swap(&mut y, &mut y_new);
                stats.accepted += 1;
                let before: Vec<S> = y.clone();
                on_step(t, &mut y)?;
                let modified = y
                    .iter()
                    .zip(before.iter())
                    .any(|(a, b)| (*a - *b).modulus() != 0.0);
                if modified {
                    f(t, &y, &mut k[0])?;
                } else {
                    // FSAL
                    let last_k = k[6].clone();
                    k[0].copy_from_slice(&last_k);
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= fac;
            } else {
                stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h < self.h_min && (t1 - t).abs() > self.h_min {
                return Err(Error::Integration {
                    t,
                    reason: format!("step size fell below floor {:e}", self.h_min),
                });
            }
        }
        Ok((y, stats))
    }
}
