//! Closed contours, winding numbers and the Evans-function convergence table.

use std::f64::consts::PI;

use nalgebra::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::splitting::{Branches, C64};
use super::{EvansProblem, EvansValue};
use crate::error::{Error, Result};
use crate::thermo::BarotropicEos;

/// A closed, counterclockwise contour parametrized by `t` in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contour {
    /// Boundary of `{|lambda - offset| <= radius, Re lambda >= offset}`:
    /// the arc first, then the vertical segment from top to bottom.
    HalfDisc { radius: f64, offset: f64 },
    Circle { center_re: f64, center_im: f64, radius: f64 },
}

impl Contour {
    pub fn point(&self, t: f64) -> C64 {
        let t = t.rem_euclid(1.0);
        match *self {
            Contour::HalfDisc { radius, offset } => {
                let arc = PI * radius;
                let total = arc + 2.0 * radius;
                let s = t * total;
                if s <= arc {
                    let th = -PI / 2.0 + s / radius;
                    Complex::new(offset, 0.0) + Complex::from_polar(radius, th)
                } else {
                    Complex::new(offset, radius - (s - arc))
                }
            }
            Contour::Circle {
                center_re,
                center_im,
                radius,
            } => Complex::new(center_re, center_im) + Complex::from_polar(radius, 2.0 * PI * t),
        }
    }

    /// Rejects degenerate contours and ones starting off the right half plane.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Contour::HalfDisc { radius, offset } => radius > 0.0 && offset >= 0.0,
            Contour::Circle { radius, .. } => radius > 0.0,
        };
        if !ok {
            return Err(Error::Domain(format!("degenerate contour {self:?}")));
        }
        if self.point(0.0).re <= 0.0 {
            return Err(Error::Domain("contour must start in the right half plane".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingOptions {
    pub initial_points: usize,
    /// Largest accepted change of `arg D` between neighbouring samples.
    pub max_arg_step: f64,
    pub max_points: usize,
    /// Eigenvalue-tracking substeps between neighbouring samples.
    pub track_substeps: usize,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions {
            initial_points: 64,
            max_arg_step: PI / 2.0,
            max_points: 4096,
            track_substeps: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WindingResult {
    pub winding: i64,
    /// Total change of `arg D` divided by `2 pi` before rounding.
    pub raw: f64,
    pub params: Vec<f64>,
    pub samples: Vec<EvansValue>,
    pub min_modulus: f64,
    pub max_arg_step: f64,
}

impl WindingResult {
    pub fn to_csv(&self) -> String {
        samples_csv(&self.samples)
    }
}

/// CSV with header `Re lambda,Im lambda,Re D,Im D`.
pub fn samples_csv(samples: &[EvansValue]) -> String {
    let mut s = String::from("Re lambda,Im lambda,Re D,Im D\n");
    for v in samples {
        s.push_str(&format!("{:.12e},{:.12e},{:.12e},{:.12e}\n", v.lambda.re, v.lambda.im, v.d.re, v.d.im));
    }
    s
}

/// Branches at each parameter, continued from the classification at `params[0]`.
fn tracked_branches<E: BarotropicEos + Clone>(
    problem: &EvansProblem<E>,
    contour: &Contour,
    params: &[f64],
    substeps: usize,
) -> Result<Vec<Branches>> {
    let mut out = Vec::with_capacity(params.len());
    let mut b = problem.classify_direct(contour.point(params[0]))?;
    out.push(b);
    for w in params.windows(2) {
        for k in 1..=substeps {
            let t = w[0] + (w[1] - w[0]) * k as f64 / substeps as f64;
            b = problem.track(&b, contour.point(t))?;
        }
        out.push(b);
    }
    Ok(out)
}

fn close_monodromy<E: BarotropicEos + Clone>(
    problem: &EvansProblem<E>,
    contour: &Contour,
    last_t: f64,
    last: &Branches,
    first: &Branches,
    substeps: usize,
) -> Result<()> {
    let mut b = *last;
    for k in 1..=substeps {
        let t = last_t + (1.0 - last_t) * k as f64 / substeps as f64;
        b = problem.track(&b, contour.point(t))?;
    }
    let gap: f64 = (0..3)
        .map(|i| (b.minus[i] - first.minus[i]).norm() + (b.plus[i] - first.plus[i]).norm())
        .sum();
    let scale: f64 = first.minus.iter().chain(first.plus.iter()).map(|z| z.norm()).sum();
    if gap > 1e-6 * (1.0 + scale) {
        let z = contour.point(0.0);
        return Err(Error::Splitting { re: z.re, im: z.im });
    }
    Ok(())
}

fn arg_step(a: C64, b: C64) -> f64 {
    (b / a).arg()
}

/// Winding number of the Evans function around `contour`, refining the
/// sampling until every increment of `arg D` is below `opts.max_arg_step`.
pub fn winding_number<E: BarotropicEos + Clone + Sync>(
    problem: &EvansProblem<E>,
    contour: &Contour,
    opts: &WindingOptions,
) -> Result<WindingResult> {
    contour.validate()?;
    let n0 = opts.initial_points.max(8);
    let mut params: Vec<f64> = (0..n0).map(|k| k as f64 / n0 as f64).collect();
    let mut values: Vec<Option<EvansValue>> = vec![None; n0];
    loop {
        let branches = tracked_branches(problem, contour, &params, opts.track_substeps)?;
        close_monodromy(
            problem,
            contour,
            *params.last().unwrap(),
            branches.last().unwrap(),
            &branches[0],
            opts.track_substeps,
        )?;
        let todo: Vec<usize> = (0..params.len()).filter(|&i| values[i].is_none()).collect();
        let fresh: Vec<(usize, Result<EvansValue>)> = todo
            .par_iter()
            .map(|&i| (i, problem.evaluate_with(contour.point(params[i]), &branches[i])))
            .collect();
        for (i, v) in fresh {
            let v = v?;
            if v.d.norm() == 0.0 {
                return Err(Error::ZeroOnContour {
                    re: v.lambda.re,
                    im: v.lambda.im,
                });
            }
            values[i] = Some(v);
        }
        let vals: Vec<EvansValue> = values.iter().map(|v| v.unwrap()).collect();
        let n = vals.len();
        let steps: Vec<f64> = (0..n).map(|i| arg_step(vals[i].d, vals[(i + 1) % n].d)).collect();
        let bad: Vec<usize> = (0..n).filter(|&i| steps[i].abs() >= opts.max_arg_step).collect();
        if bad.is_empty() {
            let total: f64 = steps.iter().sum();
            let raw = total / (2.0 * PI);
            return Ok(WindingResult {
                winding: raw.round() as i64,
                raw,
                params,
                min_modulus: vals.iter().map(|v| v.d.norm()).fold(f64::INFINITY, f64::min),
                max_arg_step: steps.iter().map(|s| s.abs()).fold(0.0, f64::max),
                samples: vals,
            });
        }
        if n + bad.len() > opts.max_points {
            return Err(Error::Refinement { t: params[bad[0]] });
        }
        let mut new_params = Vec::with_capacity(n + bad.len());
        let mut new_values = Vec::with_capacity(n + bad.len());
        for i in 0..n {
            new_params.push(params[i]);
            new_values.push(values[i]);
            if bad.binary_search(&i).is_ok() {
                let next = if i + 1 < n { params[i + 1] } else { 1.0 };
                let mid = 0.5 * (params[i] + next);
                if (next - params[i]) < 1e-9 {
                    // arg D jumps across a vanishing sliver: a zero sits on the contour
                    let z = contour.point(mid);
                    return Err(Error::ZeroOnContour { re: z.re, im: z.im });
                }
                new_params.push(mid);
                new_values.push(None);
            }
        }
        params = new_params;
        values = new_values;
    }
}

/// `D(center)` as the mean of `D` over a circle of radius `radius`.
/// Exact for analytic `D` up to aliasing of order `(radius / R)^n`, where `R` is
/// the distance to the nearest singularity of the evaluation.
pub fn cauchy_mean<E: BarotropicEos + Clone + Sync>(
    problem: &EvansProblem<E>,
    center: C64,
    radius: f64,
    n: usize,
) -> Result<C64> {
    let contour = Contour::Circle {
        center_re: center.re,
        center_im: center.im,
        radius,
    };
    contour.validate()?;
    let params: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
    let branches = tracked_branches(problem, &contour, &params, 8)?;
    close_monodromy(problem, &contour, params[n - 1], &branches[n - 1], &branches[0], 8)?;
    let vals = params
        .par_iter()
        .zip(branches.par_iter())
        .map(|(&t, b)| problem.evaluate_with(contour.point(t), b).map(|v| v.d))
        .collect::<Result<Vec<_>>>()?;
    Ok(vals.iter().sum::<C64>() / n as f64)
}

/// `D(0)`, which is reached only through the analytic continuation of the
/// decaying subspaces; see [`cauchy_mean`].
pub fn origin_value<E: BarotropicEos + Clone + Sync>(problem: &EvansProblem<E>, radius: f64) -> Result<C64> {
    cauchy_mean(problem, Complex::new(0.0, 0.0), radius, 64)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// `sup |D_eps / D_eps(lambda_ref) - D_0 / D_0(lambda_ref)|` over the samples.
    pub sup_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub lambda_ref: f64,
    pub samples: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,sup_error\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.6e}\n", r.eps, r.sup_error));
        }
        s
    }
}

/// Samples of `D / D(lambda_ref)` at `n` equispaced parameters of `contour`.
/// The contour must lie in the right half plane.
pub fn normalized_samples<E: BarotropicEos + Clone + Sync>(
    problem: &EvansProblem<E>,
    contour: &Contour,
    n: usize,
    lambda_ref: f64,
) -> Result<Vec<C64>> {
    let dref = problem.evaluate(Complex::new(lambda_ref, 0.0))?.d;
    (0..n)
        .into_par_iter()
        .map(|k| {
            let lam = contour.point(k as f64 / n as f64);
            problem.evaluate(lam).map(|v| v.d / dref)
        })
        .collect()
}

/// Distance of relaxation Evans functions from the viscous one on a contour in
/// the right half plane, after removing the normalization freedom at `lambda_ref`.
pub fn evans_convergence<E: BarotropicEos + Clone + Sync>(
    viscous: &EvansProblem<E>,
    relaxed: &[EvansProblem<E>],
    contour: &Contour,
    n: usize,
    lambda_ref: f64,
) -> Result<ConvergenceTable> {
    let base = normalized_samples(viscous, contour, n, lambda_ref)?;
    let mut rows = Vec::with_capacity(relaxed.len());
    for p in relaxed {
        let mut p = p.clone();
        p.share_normalization(viscous);
        let s = normalized_samples(&p, contour, n, lambda_ref)?;
        let sup_error = s
            .iter()
            .zip(base.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        rows.push(ConvergenceRow { eps: p.eps(), sup_error });
    }
    Ok(ConvergenceTable {
        lambda_ref,
        samples: n,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evans::EvansOptions;
    use crate::profiles::{profile_auto, rankine_hugoniot};
    use crate::thermo::GammaLaw;

    fn problem(eps: f64) -> EvansProblem<GammaLaw> {
        let s = rankine_hugoniot(&GammaLaw::default(), 1.0, 2.0).unwrap();
        let tol = if eps == 0.0 { 1e-8 } else { 1e-6 };
        let p = profile_auto(&s, 1.0, eps, 0.02, tol).unwrap();
        EvansProblem::new(p, EvansOptions::default()).unwrap()
    }

    #[test]
    fn half_disc_is_closed_and_right_of_offset() {
        let c = Contour::HalfDisc { radius: 5.0, offset: 0.1 };
        assert!((c.point(0.0) - c.point(1.0)).norm() < 1e-12);
        for k in 0..200 {
            let z = c.point(k as f64 / 200.0);
            assert!(z.re >= 0.1 - 1e-12);
        }
        // the arc comes first and runs counterclockwise
        assert!(c.point(0.1).im < 0.0 && c.point(0.4).im > 0.0);
    }

    #[test]
    fn origin_is_a_simple_zero() {
        for eps in [0.0, 0.05] {
            let pr = problem(eps);
            let bp = pr.branch_point_distance(2.0).unwrap();
            assert!(bp > 0.15 && bp < 0.21, "{bp}");
            let r0 = 0.6 * bp;
            let r = winding_number(
                &pr,
                &Contour::Circle { center_re: 0.0, center_im: 0.0, radius: r0 },
                &WindingOptions::default(),
            )
            .unwrap();
            assert_eq!(r.winding, 1, "eps = {eps}, raw {}", r.raw);
            let d0 = origin_value(&pr, r0).unwrap();
            let scale = pr.evaluate(Complex::new(r0, 0.0)).unwrap().d.norm();
            assert!(d0.norm() < 1e-6 * scale, "{d0} vs {scale}");
        }
    }

    #[test]
    fn no_zeros_in_the_half_disc() {
        let pr = problem(0.0);
        let r = winding_number(
            &pr,
            &Contour::HalfDisc { radius: 5.0, offset: 0.1 },
            &WindingOptions::default(),
        )
        .unwrap();
        assert_eq!(r.winding, 0, "raw {}", r.raw);
        assert!(r.max_arg_step < PI / 2.0);
    }

    #[test]
    fn zero_amplitude_profile_has_no_spectrum() {
        let s = crate::profiles::ShockSetup::constant(GammaLaw::default(), 1.0, 2.0).unwrap();
        let p = profile_auto(&s, 1.0, 0.0, 0.1, 1e-8).unwrap();
        let pr = EvansProblem::new(p, EvansOptions::default()).unwrap();
        let r = winding_number(
            &pr,
            &Contour::HalfDisc { radius: 5.0, offset: 0.1 },
            &WindingOptions::default(),
        )
        .unwrap();
        assert_eq!(r.winding, 0);
    }

    #[test]
    fn convergence_rate_tends_to_first_order() {
        let v = problem(0.0);
        let rel: Vec<_> = [0.05, 0.025, 0.0125].iter().map(|&e| problem(e)).collect();
        let tab = evans_convergence(&v, &rel, &Contour::HalfDisc { radius: 5.0, offset: 0.1 }, 64, 2.5)
            .unwrap();
        assert!(tab.strictly_decreasing());
        for w in tab.rows.windows(2) {
            let ratio = w[0].sup_error / w[1].sup_error;
            assert!((1.4..=2.6).contains(&ratio), "{}", tab.to_csv());
        }
    }

    #[test]
    fn csv_header() {
        assert!(samples_csv(&[]).starts_with("Re lambda,Im lambda,Re D,Im D\n"));
    }
}
