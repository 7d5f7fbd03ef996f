//! Eigen-data of the constant end-state matrices and analytic initial bases.

use nalgebra::{Complex, Matrix3, Vector3};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Eigenvalues of a complex 3x3 matrix (complex Schur form, Newton-polished
/// on the characteristic polynomial).
pub fn eigenvalues3(a: &Matrix3<C64>) -> Result<[C64; 3]> {
    let schur = a.schur();
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::Singular("Schur form did not triangularize".into()))?;
    // det(mu I - A) = mu^3 - c2 mu^2 + c1 mu - c0
    let c2 = a.trace();
    let c1 = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] + a[(0, 0)] * a[(2, 2)]
        - a[(0, 2)] * a[(2, 0)]
        + a[(1, 1)] * a[(2, 2)]
        - a[(1, 2)] * a[(2, 1)];
    let c0 = a.determinant();
    let mut out = [ev[0], ev[1], ev[2]];
    for mu in &mut out {
        for _ in 0..3 {
            let p = ((*mu - c2) * *mu + c1) * *mu - c0;
            let dp = (*mu * 3.0 - c2 * 2.0) * *mu + c1;
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !(step.norm() < 1e-6 * (1.0 + mu.norm())) {
                break;
            }
            *mu -= step;
        }
    }
    Ok(out)
}

fn cross(a: &Vector3<C64>, b: &Vector3<C64>) -> Vector3<C64> {
    Vector3::new(
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )
}

/// Kernel vector of a rank-2 matrix from the largest cross product of two rows.
/// The cross product is bilinear, so the result is analytic in the entries.
pub fn null_vector(b: &Matrix3<C64>) -> Vector3<C64> {
    let rows: Vec<Vector3<C64>> = (0..3).map(|i| b.row(i).transpose()).collect();
    [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| cross(&rows[i], &rows[j]))
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .unwrap()
}

/// Eigenvalues of both end-state matrices in a fixed branch order: for the
/// upstream side the first entry spans the unstable subspace, for the
/// downstream side the first two span the stable subspace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branches {
    pub minus: [C64; 3],
    pub plus: [C64; 3],
}

pub const UNSTABLE_DIM: usize = 1;
pub const STABLE_DIM: usize = 2;

/// Orders eigenvalues by real part: descending for the upstream side,
/// ascending for the downstream side. Fails when a real part is within `tol` of 0.
pub fn classify(minus: [C64; 3], plus: [C64; 3], tol: f64) -> Result<Branches> {
    for mu in minus.iter().chain(plus.iter()) {
        if mu.re.abs() <= tol {
            return Err(Error::Splitting { re: mu.re, im: mu.im });
        }
    }
    let mut m = minus;
    m.sort_by(|a, b| b.re.total_cmp(&a.re));
    let mut p = plus;
    p.sort_by(|a, b| a.re.total_cmp(&b.re));
    let unstable = m.iter().filter(|z| z.re > 0.0).count();
    let stable = p.iter().filter(|z| z.re < 0.0).count();
    if unstable != UNSTABLE_DIM || stable != STABLE_DIM {
        return Err(Error::Splitting {
            re: f64::NAN,
            im: (unstable * 10 + stable) as f64,
        });
    }
    Ok(Branches { minus: m, plus: p })
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Reorders `new` so that entry `i` continues branch `prev[i]`.
pub fn follow(prev: &[C64; 3], new: [C64; 3]) -> [C64; 3] {
    let cost = |p: &[usize; 3]| (0..3).map(|i| (new[p[i]] - prev[i]).norm()).sum::<f64>();
    let best = PERMS
        .iter()
        .min_by(|a, b| cost(a).total_cmp(&cost(b)))
        .unwrap();
    [new[best[0]], new[best[1]], new[best[2]]]
}

/// Eigenvector for `mu`, scaled so that `ell . v = 1`.
pub fn normalized_eigenvector(a: &Matrix3<C64>, mu: C64, ell: &Vector3<f64>) -> Result<Vector3<C64>> {
    let b = a - Matrix3::identity() * mu;
    let v = null_vector(&b);
    let s: C64 = (0..3).map(|i| v[i] * ell[i]).sum();
    if s.norm() <= 1e-14 * v.norm() || v.norm() == 0.0 {
        return Err(Error::Singular("eigenvector orthogonal to its normalization".into()));
    }
    Ok(v / s)
}

/// Real normalization vector from an eigenvector at a real spectral parameter.
pub fn normalization_from(v: &Vector3<C64>) -> Vector3<f64> {
    let re = Vector3::new(v[0].re, v[1].re, v[2].re);
    let im = Vector3::new(v[0].im, v[1].im, v[2].im);
    let w = if re.norm() >= im.norm() { re } else { im };
    w / w.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    #[test]
    fn eigenvalues_of_triangular_and_rotated_matrices() {
        let a = Matrix3::new(
            c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0),
            c(0.0, 0.0), c(-3.0, 0.5), c(1.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.5, -2.0),
        );
        let mut ev = eigenvalues3(&a).unwrap().to_vec();
        ev.sort_by(|x, y| x.re.total_cmp(&y.re));
        assert!((ev[0] - c(-3.0, 0.5)).norm() < 1e-12);
        assert!((ev[1] - c(0.5, -2.0)).norm() < 1e-12);
        assert!((ev[2] - c(1.0, 0.0)).norm() < 1e-12);
        for mu in ev {
            let v = null_vector(&(a - Matrix3::identity() * mu));
            assert!((a * v - v * mu).norm() < 1e-10 * v.norm());
        }
    }

    #[test]
    fn following_undoes_a_permutation() {
        let prev = [c(1.0, 0.0), c(-1.0, 0.2), c(-3.0, 0.0)];
        let new = [c(-2.98, 0.01), c(1.01, 0.0), c(-1.0, 0.21)];
        let out = follow(&prev, new);
        assert_eq!(out, [new[1], new[2], new[0]]);
    }

    #[test]
    fn classification_counts() {
        let b = classify(
            [c(-1.0, 0.0), c(2.0, 0.0), c(-0.5, 1.0)],
            [c(0.3, 0.0), c(-1.0, 0.0), c(-0.2, 0.0)],
            1e-9,
        )
        .unwrap();
        assert_eq!(b.minus[0], c(2.0, 0.0));
        assert_eq!(b.plus[0], c(-1.0, 0.0));
        assert!(classify([c(0.0, 1.0); 3], [c(-1.0, 0.0); 3], 1e-9).is_err());
    }
}
