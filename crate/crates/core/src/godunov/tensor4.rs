//! Minkowski tensors in signature `(-,+,+,+)` and the four projectors that split
//! symmetric rank-2 tensors relative to a unit timelike velocity.
//!
//! Vectors are stored with upper indices unless a function says otherwise;
//! symmetric tensors are `Matrix4` with both indices down.

use nalgebra::{Matrix4, SMatrix, Vector3, Vector4};
use rand::Rng;

use crate::error::{Error, Result};

pub type Vec4 = Vector4<f64>;
pub type SymTensor4 = Matrix4<f64>;
/// A linear map on rank-2 tensors, acting on the row-major flattening
/// `V[4 a + b]`.
pub type Op16 = SMatrix<f64, 16, 16>;

pub fn metric() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0))
}

/// Lowers (or raises; the metric is its own inverse) a vector index.
pub fn lower(v: &Vec4) -> Vec4 {
    Vector4::new(-v[0], v[1], v[2], v[3])
}

pub fn dot(a: &Vec4, b: &Vec4) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Raises both indices of a tensor.
pub fn raise2(t: &Matrix4<f64>) -> Matrix4<f64> {
    let g = metric();
    g * t * g
}

/// Full contraction `A_ab B^ab` of two lower-index tensors.
pub fn contract(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    a.component_mul(&raise2(b)).sum()
}

/// Lorentz boost with rapidity `eta` along the unit 3-vector `n`.
pub fn boost(eta: f64, n: &Vector3<f64>) -> Matrix4<f64> {
    let n = n.normalize();
    let (ch, sh) = (eta.cosh(), eta.sinh());
    let mut l = Matrix4::identity();
    l[(0, 0)] = ch;
    for i in 0..3 {
        l[(0, i + 1)] = sh * n[i];
        l[(i + 1, 0)] = sh * n[i];
        for j in 0..3 {
            l[(i + 1, j + 1)] += (ch - 1.0) * n[i] * n[j];
        }
    }
    l
}

/// A random boost with rapidity below `max_eta`.
pub fn random_boost<R: Rng>(rng: &mut R, max_eta: f64) -> Matrix4<f64> {
    let n = Vector3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    let n = if n.norm() < 1e-3 { Vector3::x() } else { n };
    boost(rng.gen_range(0.0..max_eta), &n)
}

pub fn random_symmetric<R: Rng>(rng: &mut R, scale: f64) -> SymTensor4 {
    let mut t = Matrix4::zeros();
    for a in 0..4 {
        for b in a..4 {
            let x = scale * rng.gen_range(-1.0..1.0);
            t[(a, b)] = x;
            t[(b, a)] = x;
        }
    }
    t
}

/// Unit timelike velocity check; rescales when `|u.u + 1| <= 1e-8`.
pub fn normalize_velocity(u: &Vec4) -> Result<Vec4> {
    let n = dot(u, u);
    if !(n < 0.0) {
        return Err(Error::Domain(format!("velocity is not timelike (u.u = {n})")));
    }
    if (n + 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!("velocity is not unit (u.u = {n})")));
    }
    Ok(u / (-n).sqrt())
}

fn flat(a: usize, b: usize) -> usize {
    4 * a + b
}

/// Applies a 16x16 operator to a tensor.
pub fn apply(op: &Op16, v: &Matrix4<f64>) -> Matrix4<f64> {
    let mut x = nalgebra::SVector::<f64, 16>::zeros();
    for a in 0..4 {
        for b in 0..4 {
            x[flat(a, b)] = v[(a, b)];
        }
    }
    let y = op * x;
    Matrix4::from_fn(|a, b| y[flat(a, b)])
}

/// Symmetrizer `V -> (V + V^T)/2` as an operator.
pub fn symmetrizer() -> Op16 {
    let mut s = Op16::zeros();
    for a in 0..4 {
        for b in 0..4 {
            s[(flat(a, b), flat(a, b))] += 0.5;
            s[(flat(a, b), flat(b, a))] += 0.5;
        }
    }
    s
}

/// Shear, bulk, heat-flux and "heating" parts of symmetric tensors relative to `u`.
#[derive(Clone, Debug)]
pub struct ProjectorSet {
    pub u: Vec4,
    /// `Pi_ab = g_ab + u_a u_b`.
    pub pi: Matrix4<f64>,
    pub shear: Op16,
    pub bulk: Op16,
    pub heat: Op16,
    pub heating: Op16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Shear,
    Bulk,
    Heat,
    Heating,
}

pub const PARTS: [Part; 4] = [Part::Shear, Part::Bulk, Part::Heat, Part::Heating];

impl ProjectorSet {
    pub fn new(u: &Vec4) -> Result<Self> {
        let u = normalize_velocity(u)?;
        let ul = lower(&u);
        let g = metric();
        let pi_low = g + ul * ul.transpose();
        let pi_up = g + u * u.transpose();
        // mixed Pi_a^c = delta + u_a u^c
        let pi_mix = Matrix4::identity() + ul * u.transpose();
        let mut shear = Op16::zeros();
        let mut bulk = Op16::zeros();
        let mut heat = Op16::zeros();
        let mut heating = Op16::zeros();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let (r, s) = (flat(a, b), flat(c, d));
                        let b3 = pi_low[(a, b)] * pi_up[(c, d)] / 3.0;
                        shear[(r, s)] = 0.5 * (pi_mix[(a, c)] * pi_mix[(b, d)] + pi_mix[(b, c)] * pi_mix[(a, d)]) - b3;
                        bulk[(r, s)] = b3;
                        heat[(r, s)] = -0.5
                            * ((pi_mix[(a, c)] * ul[b] + pi_mix[(b, c)] * ul[a]) * u[d]
                                + (pi_mix[(a, d)] * ul[b] + pi_mix[(b, d)] * ul[a]) * u[c]);
                        heating[(r, s)] = ul[a] * ul[b] * u[c] * u[d];
                    }
                }
            }
        }
        Ok(ProjectorSet {
            u,
            pi: pi_low,
            shear,
            bulk,
            heat,
            heating,
        })
    }

    pub fn op(&self, part: Part) -> &Op16 {
        match part {
            Part::Shear => &self.shear,
            Part::Bulk => &self.bulk,
            Part::Heat => &self.heat,
            Part::Heating => &self.heating,
        }
    }

    pub fn project(&self, part: Part, v: &SymTensor4) -> SymTensor4 {
        apply(self.op(part), v)
    }

    /// Largest entry of `P_C P_D - delta_CD P_C` and of `sum P_C - id`, both
    /// restricted to symmetric tensors.
    pub fn identity_defects(&self) -> (f64, f64) {
        let sym = symmetrizer();
        let mut idem: f64 = 0.0;
        for (i, c) in PARTS.iter().enumerate() {
            for (j, d) in PARTS.iter().enumerate() {
                let mut m = self.op(*c) * self.op(*d) * sym;
                if i == j {
                    m -= self.op(*c) * sym;
                }
                idem = idem.max(m.amax());
            }
        }
        let total = (self.shear + self.bulk + self.heat + self.heating) * sym - sym;
        (idem, total.amax())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn metric_round_trip() {
        let v = Vector4::new(1.3, -0.2, 0.5, 2.0);
        assert_eq!(lower(&lower(&v)), v);
        assert!((metric() * metric() - Matrix4::identity()).amax() == 0.0);
        assert!((dot(&v, &v) - lower(&v).dot(&v)).abs() < 1e-15);
    }

    #[test]
    fn boosts_preserve_the_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let l = random_boost(&mut rng, 2.0);
            assert!((l.transpose() * metric() * l - metric()).amax() < 1e-12);
        }
    }

    #[test]
    fn rest_frame_blocks() {
        let p = ProjectorSet::new(&Vector4::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_symmetric(&mut rng, 1.0);
        let h = p.project(Part::Heating, &v);
        let mut expect = Matrix4::zeros();
        expect[(0, 0)] = v[(0, 0)];
        assert!((h - expect).amax() < 1e-15);
        let b = p.project(Part::Bulk, &v);
        let tr3 = v[(1, 1)] + v[(2, 2)] + v[(3, 3)];
        for i in 1..4 {
            assert!((b[(i, i)] - tr3 / 3.0).abs() < 1e-15);
        }
        assert!(b.row(0).amax() < 1e-15);
        // heat flux lives in the mixed time-space entries
        let q = p.project(Part::Heat, &v);
        assert!((q[(0, 2)] - v[(0, 2)]).abs() < 1e-15 && q[(1, 1)].abs() < 1e-15);
    }

    #[test]
    fn identities_under_random_boosts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..8 {
            let u = random_boost(&mut rng, 1.0) * Vector4::new(1.0, 0.0, 0.0, 0.0);
            let p = ProjectorSet::new(&u).unwrap();
            let (idem, total) = p.identity_defects();
            assert!(idem < 1e-12 && total < 1e-12, "{idem} {total}");
        }
        // entries grow like u^0 to the fourth; rounding in the products grows with their square
        for _ in 0..8 {
            let u = random_boost(&mut rng, 2.0) * Vector4::new(1.0, 0.0, 0.0, 0.0);
            let p = ProjectorSet::new(&u).unwrap();
            let scale = PARTS.iter().map(|c| p.op(*c).amax()).fold(1.0, f64::max).powi(2);
            let (idem, total) = p.identity_defects();
            assert!(idem < 1e-12 * scale && total < 1e-12 * scale, "{idem} {total} {scale}");
        }
    }

    #[test]
    fn completeness_on_random_tensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u = random_boost(&mut rng, 1.0) * Vector4::new(1.0, 0.0, 0.0, 0.0);
        let p = ProjectorSet::new(&u).unwrap();
        for _ in 0..50 {
            let v = random_symmetric(&mut rng, 1.0);
            let sum: SymTensor4 = PARTS.iter().map(|c| p.project(*c, &v)).sum();
            assert!((sum - v).amax() < 1e-12);
        }
    }

    #[test]
    fn spacelike_velocity_is_rejected() {
        assert!(ProjectorSet::new(&Vector4::new(0.5, 1.0, 0.0, 0.0)).is_err());
        assert!(ProjectorSet::new(&Vector4::new(0.0, 0.0, 0.0, 0.0)).is_err());
    }
}
