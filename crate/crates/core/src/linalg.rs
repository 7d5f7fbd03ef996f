//! Small dense helpers: definiteness by pivoted LDL^T and finite differences.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Sign pattern of a symmetric matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    /// Numerically singular without evidence of mixed signs.
    Indeterminate,
}

impl Definiteness {
    pub fn is_definite(self) -> bool {
        matches!(
            self,
            Definiteness::PositiveDefinite | Definiteness::NegativeDefinite
        )
    }
}

/// Inertia reported by [`ldlt_inertia`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Signature {
    pub fn verdict(&self) -> Definiteness {
        let n = self.positive + self.negative + self.zero;
        if self.positive > 0 && self.negative > 0 {
            Definiteness::Indefinite
        } else if self.zero > 0 {
            Definiteness::Indeterminate
        } else if self.positive == n {
            Definiteness::PositiveDefinite
        } else {
            Definiteness::NegativeDefinite
        }
    }
}

/// Symmetric LDL^T with diagonal pivoting.
///
/// Pivots with `|d| <= tol * scale` (scale = largest absolute entry) count as zero.
/// When every remaining diagonal entry is negligible but an off-diagonal entry is
/// not, the trailing block contains a 2x2 saddle and one positive plus one negative
/// direction are recorded.
pub fn ldlt_inertia(mat: &DMatrix<f64>, tol: f64) -> Signature {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols(), "square matrix required");
    let mut a = mat.clone();
    // symmetrise against round-off
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(f64::MIN_POSITIVE);
    let thresh = tol * scale;
    let mut sig = Signature {
        positive: 0,
        negative: 0,
        zero: 0,
    };
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        let (pos, &p) = active
            .iter()
            .enumerate()
            .max_by(|x, y| a[(*x.1, *x.1)].abs().total_cmp(&a[(*y.1, *y.1)].abs()))
            .unwrap();
        let d = a[(p, p)];
        if d.abs() <= thresh {
            // look for a significant off-diagonal coupling among the remaining rows
            let mut best = (0.0, 0, 0);
            for (ii, &i) in active.iter().enumerate() {
                for &j in &active[ii + 1..] {
                    if a[(i, j)].abs() > best.0 {
                        best = (a[(i, j)].abs(), i, j);
                    }
                }
            }
            if best.0 > thresh {
                // 2x2 block [[~0, b], [b, ~0]] has eigenvalues of both signs
                sig.positive += 1;
                sig.negative += 1;
                let (_, i, j) = best;
                let b = a[(i, j)];
                let (ai, aj) = (a[(i, i)], a[(j, j)]);
                let det = ai * aj - b * b;
                active.retain(|&k| k != i && k != j);
                for &r in &active {
                    for &c in &active {
                        let ri = a[(r, i)];
                        let rj = a[(r, j)];
                        let ic = a[(i, c)];
                        let jc = a[(j, c)];
                        // Schur complement with inverse [[aj, -b], [-b, ai]] / det
                        let upd = (ri * (aj * ic - b * jc) + rj * (-b * ic + ai * jc)) / det;
                        a[(r, c)] -= upd;
                    }
                }
                continue;
            }
            sig.zero += active.len();
            break;
        }
        if d > 0.0 {
            sig.positive += 1;
        } else {
            sig.negative += 1;
        }
        active.remove(pos);
        for &r in &active {
            let l = a[(r, p)] / d;
            for &c in &active {
                a[(r, c)] -= l * a[(p, c)];
            }
        }
    }
    sig
}

pub fn definiteness(mat: &DMatrix<f64>, tol: f64) -> Definiteness {
    ldlt_inertia(mat, tol).verdict()
}

/// Largest `|a_ij - a_ji|`.
pub fn symmetry_defect(mat: &DMatrix<f64>) -> f64 {
    let n = mat.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((mat[(i, j)] - mat[(j, i)]).abs());
        }
    }
    worst
}

/// Central-difference gradient with per-coordinate step `h * (|x_i| + 1)`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let hi = h * (x[i].abs() + 1.0);
            y[i] = x[i] + hi;
            let fp = f(&y);
            y[i] = x[i] - hi;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * hi)
        })
        .collect()
}

/// Central-difference Jacobian of a vector function, `J[(i, j)] = d f_i / d x_j`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let m = f(x).len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut y = x.to_vec();
    for j in 0..n {
        let hj = h * (x[j].abs() + 1.0);
        y[j] = x[j] + hj;
        let fp = f(&y);
        y[j] = x[j] - hj;
        let fm = f(&y);
        y[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * hj);
        }
    }
    jac
}

/// Central-difference Hessian of a scalar function (four-point mixed stencil).
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut hess = DMatrix::zeros(n, n);
    let mut y = x.to_vec();
    let f0 = f(x);
    let steps: Vec<f64> = x.iter().map(|xi| h * (xi.abs() + 1.0)).collect();
    for i in 0..n {
        let hi = steps[i];
        y[i] = x[i] + hi;
        let fp = f(&y);
        y[i] = x[i] - hi;
        let fm = f(&y);
        y[i] = x[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let mut eval = |si: f64, sj: f64| {
                y[i] = x[i] + si * hi;
                y[j] = x[j] + sj * hj;
                let v = f(&y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// [`fd_hessian`] with one Richardson step: `(4 H(h/2) - H(h)) / 3`.
pub fn fd_hessian_richardson(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let coarse = fd_hessian(&f, x, h);
    let fine = fd_hessian(&f, x, 0.5 * h);
    (fine * 4.0 - coarse) / 3.0
}

/// Entrywise relative error `|a - b| / max(|b|, floor)`.
pub fn max_relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / y.abs().max(floor))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signatures() {
        let pd = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        assert_eq!(definiteness(&pd, 1e-10), Definiteness::PositiveDefinite);
        assert_eq!(definiteness(&(-&pd), 1e-10), Definiteness::NegativeDefinite);
        let saddle = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(definiteness(&saddle, 1e-10), Definiteness::Indefinite);
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0, 3.0]));
        let s = ldlt_inertia(&diag, 1e-10);
        assert_eq!((s.positive, s.negative, s.zero), (2, 1, 0));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(definiteness(&singular, 1e-10), Definiteness::Indeterminate);
    }

    #[test]
    fn inertia_matches_eigenvalues_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..7);
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let m = &b + b.transpose();
            let eig = m.clone().symmetric_eigenvalues();
            let pos = eig.iter().filter(|&&x| x > 1e-9).count();
            let neg = eig.iter().filter(|&&x| x < -1e-9).count();
            let s = ldlt_inertia(&m, 1e-12);
            assert_eq!((s.positive, s.negative), (pos, neg), "{m}");
        }
    }

    #[test]
    fn fd_hessian_of_quadratic() {
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[0] * x[1] - x[1] * x[1] * x[1];
        let h = fd_hessian(f, &[0.5, 2.0], 1e-4);
        assert!((h[(0, 0)] - 2.0).abs() < 1e-6);
        assert!((h[(0, 1)] - 3.0).abs() < 1e-6);
        assert!((h[(1, 1)] + 12.0).abs() < 1e-5);
    }
}
