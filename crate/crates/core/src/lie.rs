//! SL₂(ℂ), its real Lie algebra, and the group actions on Vᴺ.
//!
//! The real form G_ℝ = SL₂(ℂ) acts by `g * Z = g Z g†`; the complex group
//! G = SL₂(ℂ) × SL₂(ℂ) acts by `(g, h) * Z = g Z hᵗ`, with G_ℝ embedded as
//! `g ↦ (g, ḡ)`. On the Lie algebra level `ξ ↦ (ξ, ξ̄)`, so the complexified
//! one-parameter group `exp(itξ)` acts by `Z ↦ exp(itξ) Z exp(itξ†)`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{c, Mat2, TuplePoint, C64, I, ONE};

/// Tolerance on `|det g - 1|` accepted for unimodular inputs.
pub const UNIMODULAR_TOL: f64 = 1e-10;

/// Below this `|δ|` the closed-form exponential switches to its Taylor series.
const EXP_SERIES_THRESHOLD: f64 = 1e-6;

/// An element of sl₂(ℂ) regarded as a 6-dimensional real Lie algebra.
///
/// Coefficients are taken over the ordered basis
/// `e1 = diag(1, -1)`, `e2 = E12`, `e3 = E21`, `e4 = i e1`, `e5 = i e2`, `e6 = i e3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlgebraVector(pub [f64; 6]);

impl AlgebraVector {
    pub const DIM: usize = 6;

    pub fn zero() -> Self {
        Self([0.0; 6])
    }

    /// The k-th basis vector, `k` in `0..6`.
    pub fn basis(k: usize) -> Self {
        let mut v = [0.0; 6];
        v[k] = 1.0;
        Self(v)
    }

    pub fn to_matrix(&self) -> Mat2 {
        let [c1, c2, c3, c4, c5, c6] = self.0;
        let a = c(c1, c4);
        Mat2::new(a, c(c2, c5), c(c3, c6), -a)
    }

    /// Coordinates of a traceless matrix. The trace part, if any, is dropped.
    pub fn from_matrix(m: &Mat2) -> Self {
        let a = (m.get(0, 0) - m.get(1, 1)) * 0.5;
        let b = m.get(0, 1);
        let cc = m.get(1, 0);
        Self([a.re, b.re, cc.re, a.im, b.im, cc.im])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|v| v * s))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Add for AlgebraVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        Self(out)
    }
}

impl Sub for AlgebraVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for AlgebraVector {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul<f64> for AlgebraVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

/// Lie bracket `[ξ, η] = ξη - ηξ`.
pub fn bracket(xi: &AlgebraVector, eta: &AlgebraVector) -> AlgebraVector {
    let a = xi.to_matrix();
    let b = eta.to_matrix();
    AlgebraVector::from_matrix(&(a * b - b * a))
}

/// Exponential of a traceless 2×2 matrix via `exp(M) = cosh δ · I + sinh δ / δ · M`,
/// `δ² = -det M`.
pub fn exp_traceless(m: &Mat2) -> Mat2 {
    let delta_sq = -m.det();
    let delta = delta_sq.sqrt();
    let (ch, shc) = if delta.norm() < EXP_SERIES_THRESHOLD {
        let d2 = delta_sq;
        let d4 = d2 * d2;
        (ONE + d2 / 2.0 + d4 / 24.0, ONE + d2 / 6.0 + d4 / 120.0)
    } else {
        (delta.cosh(), delta.sinh() / delta)
    };
    Mat2::scalar(ch) + m.scale(shc)
}

/// Matrix exponential of `t · ξ`.
pub fn exp_algebra(xi: &AlgebraVector, t: f64) -> Mat2 {
    exp_traceless(&xi.to_matrix().scale_re(t))
}

/// Rescales `g` by the principal square root of its determinant.
pub fn normalize_unimodular(g: &Mat2) -> Result<Mat2> {
    let d = g.det();
    if d.norm() == 0.0 || !d.is_finite() {
        return Err(Error::Singular("cannot normalize a singular matrix to SL2".into()));
    }
    Ok(g.scale(d.sqrt().inv()))
}

fn check_unimodular(g: &Mat2) -> Result<()> {
    let err = (g.det() - ONE).norm();
    if err > UNIMODULAR_TOL || !g.is_finite() {
        return Err(Error::Precondition(format!("|det g - 1| = {err:e} exceeds tolerance")));
    }
    Ok(())
}

/// An element `(g, h)` of SL₂(ℂ) × SL₂(ℂ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPair {
    pub g: Mat2,
    pub h: Mat2,
}

impl GroupPair {
    /// Normalizes both factors to determinant one.
    pub fn new(g: Mat2, h: Mat2) -> Result<Self> {
        Ok(Self { g: normalize_unimodular(&g)?, h: normalize_unimodular(&h)? })
    }

    pub fn identity() -> Self {
        Self { g: Mat2::identity(), h: Mat2::identity() }
    }

    /// The image `(g, ḡ)` of a real-form element.
    pub fn from_real(g: &Mat2) -> Self {
        Self { g: *g, h: g.conj() }
    }

    /// `(exp A, exp B)` for algebra elements `A`, `B`.
    pub fn exp(a: &AlgebraVector, b: &AlgebraVector) -> Self {
        Self { g: exp_algebra(a, 1.0), h: exp_algebra(b, 1.0) }
    }

    /// The complexified one-parameter group `exp(itξ) = (exp(itξ), exp(itξ̄))`.
    pub fn exp_i(xi: &AlgebraVector, t: f64) -> Self {
        let m = xi.to_matrix();
        Self {
            g: exp_traceless(&m.scale(c(0.0, t))),
            h: exp_traceless(&m.conj().scale(c(0.0, t))),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { g: self.g * other.g, h: self.h * other.h }
    }

    pub fn inverse(&self) -> Self {
        // unimodular: the adjugate is the inverse
        let inv = |m: &Mat2| {
            let [[x, y], [z, w]] = m.0;
            Mat2::new(w, -y, -z, x)
        };
        Self { g: inv(&self.g), h: inv(&self.h) }
    }

    /// Re-projects both factors onto determinant one.
    pub fn renormalized(&self) -> Self {
        Self::new(self.g, self.h).unwrap_or(*self)
    }

    pub fn is_finite(&self) -> bool {
        self.g.is_finite() && self.h.is_finite()
    }
}

/// Real action `Zʲ ↦ g Zʲ g†`.
pub fn act_real(g: &Mat2, z: &TuplePoint) -> Result<TuplePoint> {
    check_unimodular(g)?;
    Ok(act_real_unchecked(g, z))
}

pub(crate) fn act_real_unchecked(g: &Mat2, z: &TuplePoint) -> TuplePoint {
    let ga = g.adjoint();
    z.map(|p| *g * *p * ga)
}

/// Complex action `Zʲ ↦ g Zʲ hᵗ`.
pub fn act_complex(p: &GroupPair, z: &TuplePoint) -> Result<TuplePoint> {
    check_unimodular(&p.g)?;
    check_unimodular(&p.h)?;
    Ok(act_complex_unchecked(p, z))
}

pub(crate) fn act_complex_unchecked(p: &GroupPair, z: &TuplePoint) -> TuplePoint {
    let ht = p.h.transpose();
    z.map(|m| p.g * *m * ht)
}

/// Moves `Z` along the complexified flow: `exp(itξ) · Z`.
pub fn flow_i(xi: &AlgebraVector, t: f64, z: &TuplePoint) -> TuplePoint {
    act_complex_unchecked(&GroupPair::exp_i(xi, t), z)
}

/// An N-tuple of complex 2×2 matrices read as a tangent vector to Vᴺ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TangentVector {
    vectors: Vec<Mat2>,
}

impl TangentVector {
    pub fn new(vectors: Vec<Mat2>) -> Self {
        Self { vectors }
    }

    pub fn zero(n: usize) -> Self {
        Self { vectors: vec![Mat2::zero(); n] }
    }

    /// The coordinate direction with a one at flat index `k`
    /// (component `k / 4`, row-major entry `k % 4`).
    pub fn coordinate(n: usize, k: usize) -> Self {
        let mut v = Self::zero(n);
        v.vectors[k / 4] = Mat2::unit(k % 4);
        v
    }

    /// All `4N` coordinate directions.
    pub fn coordinate_basis(n: usize) -> Vec<Self> {
        (0..4 * n).map(|k| Self::coordinate(n, k)).collect()
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Mat2] {
        &self.vectors
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Mat2> {
        self.vectors.iter()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { vectors: self.vectors.iter().map(|m| m.scale(s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            vectors: self.vectors.iter().zip(other.iter()).map(|(a, b)| *a + *b).collect(),
        }
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: C64, other: &Self) -> Self {
        Self {
            vectors: self
                .vectors
                .iter()
                .zip(other.iter())
                .map(|(a, b)| *a + b.scale(s))
                .collect(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vectors.iter().map(Mat2::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.vectors.iter().map(Mat2::max_abs).fold(0.0, f64::max)
    }

    /// Hermitian inner product `Σ tr(selfʲ† otherʲ)`.
    pub fn herm_dot(&self, other: &Self) -> C64 {
        self.vectors.iter().zip(other.iter()).map(|(a, b)| a.herm_dot(b)).sum()
    }

    /// Flattened coordinates, component-major and row-major within a component.
    pub fn to_coords(&self) -> Vec<C64> {
        self.vectors.iter().flat_map(|m| m.entries()).collect()
    }

    pub fn from_coords(coords: &[C64]) -> Self {
        assert_eq!(coords.len() % 4, 0);
        Self {
            vectors: coords
                .chunks(4)
                .map(|ch| Mat2::from_entries([ch[0], ch[1], ch[2], ch[3]]))
                .collect(),
        }
    }
}

/// Fundamental vector field of the real action: `ξ Zʲ + Zʲ ξ†`.
pub fn real_vector_field(xi: &AlgebraVector, z: &TuplePoint) -> TangentVector {
    let m = xi.to_matrix();
    let ma = m.adjoint();
    TangentVector::new(z.iter().map(|p| m * *p + *p * ma).collect())
}

/// The ambient complex structure: multiplication by `i`.
pub fn apply_j(v: &TangentVector) -> TangentVector {
    v.scale(I)
}

/// `g X g⁻¹`.
pub fn conjugation_action(g: &Mat2, x: &Mat2) -> Result<Mat2> {
    check_unimodular(g)?;
    let inv = g.inverse().ok_or_else(|| Error::Singular("g".into()))?;
    Ok(*g * *x * inv)
}

/// `Ad(g) ξ = g ξ g⁻¹`, re-expressed over the fixed basis.
pub fn adjoint(g: &Mat2, xi: &AlgebraVector) -> Result<AlgebraVector> {
    let m = conjugation_action(g, &xi.to_matrix())?;
    Ok(AlgebraVector::from_matrix(&m))
}

/// Whether `u` is special unitary to within `tol`.
pub fn is_special_unitary(u: &Mat2, tol: f64) -> bool {
    (*u * u.adjoint() - Mat2::identity()).max_abs() <= tol && (u.det() - ONE).norm() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ZERO;

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (*a - *b).max_abs() <= tol
    }

    #[test]
    fn exp_examples() {
        for t in [0.0, 0.3, -1.7, 5.0] {
            assert_eq!(exp_algebra(&AlgebraVector::zero(), t), Mat2::identity());
            let e1 = exp_algebra(&AlgebraVector::basis(0), t);
            assert!(close(&e1, &Mat2::real(t.exp(), 0.0, 0.0, (-t).exp()), 1e-12 * t.exp()));
            let rot = AlgebraVector([0.0, 1.0, -1.0, 0.0, 0.0, 0.0]);
            let r = exp_algebra(&rot, t);
            assert!(close(&r, &Mat2::real(t.cos(), t.sin(), -t.sin(), t.cos()), 1e-13));
        }
    }

    #[test]
    fn exp_branches_agree_at_threshold() {
        let xi = AlgebraVector([0.3, -0.2, 0.5, 0.1, 0.4, -0.6]);
        let n = xi.to_matrix().det().norm().sqrt();
        for scale in [0.99, 1.01] {
            let t = scale * EXP_SERIES_THRESHOLD / n;
            let closed = {
                let m = xi.to_matrix().scale_re(t);
                let d = (-m.det()).sqrt();
                Mat2::scalar(d.cosh()) + m.scale(d.sinh() / d)
            };
            assert!(close(&exp_algebra(&xi, t), &closed, 1e-12));
        }
    }

    #[test]
    fn exp_is_unimodular() {
        let xi = AlgebraVector([1.2, -0.7, 0.4, 0.9, -1.1, 0.3]);
        for t in [0.1, 1.0, 2.5] {
            assert!((exp_algebra(&xi, t).det() - ONE).norm() < 1e-10);
        }
    }

    #[test]
    fn act_real_examples() {
        let z = TuplePoint::single(Mat2::scalar(I));
        assert_eq!(act_real(&Mat2::identity(), &z).unwrap(), z);
        let r: f64 = 1.7;
        let g = Mat2::real(r, 0.0, 0.0, 1.0 / r);
        let out = act_real(&g, &z).unwrap();
        assert!(close(&out.points()[0], &Mat2::diag(c(0.0, r * r), c(0.0, 1.0 / (r * r))), 1e-14));
        assert!(act_real(&Mat2::real(2.0, 0.0, 0.0, 1.0), &z).is_err());
    }

    #[test]
    fn act_complex_identity() {
        let z = TuplePoint::new(vec![Mat2::scalar(I), Mat2::new(c(1., 2.), ONE, ZERO, I)]).unwrap();
        assert_eq!(act_complex(&GroupPair::identity(), &z).unwrap(), z);
    }

    #[test]
    fn vector_field_examples() {
        let z = TuplePoint::repeat(Mat2::scalar(I), 2);
        let zero = real_vector_field(&AlgebraVector::zero(), &z);
        assert_eq!(zero.norm(), 0.0);
        let f = real_vector_field(&AlgebraVector::basis(0), &z);
        for v in f.iter() {
            assert_eq!(*v, Mat2::diag(c(0.0, 2.0), c(0.0, -2.0)));
        }
    }

    #[test]
    fn apply_j_squares_to_minus_one() {
        let v = TangentVector::new(vec![Mat2::new(c(1., 2.), c(-3., 0.), c(0.5, 0.5), c(0., -1.))]);
        assert_eq!(apply_j(&apply_j(&v)), v.scale(-ONE));
        assert_eq!(apply_j(&TangentVector::zero(1)).norm(), 0.0);
    }

    #[test]
    fn conjugation_example() {
        let g = Mat2::real(0.0, 1.0, -1.0, 0.0);
        let x = Mat2::new(I, ZERO, ONE, I);
        let out = conjugation_action(&g, &x).unwrap();
        assert!(close(&out, &Mat2::new(I, -ONE, ZERO, I), 1e-15));
        assert_eq!(conjugation_action(&Mat2::identity(), &x).unwrap(), x);
    }

    #[test]
    fn adjoint_roundtrip() {
        let g = exp_algebra(&AlgebraVector([0.3, -0.5, 0.2, 0.7, 0.1, -0.4]), 1.0);
        let gi = g.inverse().unwrap();
        let xi = AlgebraVector([1.0, 2.0, -0.5, 0.25, -1.5, 0.75]);
        assert_eq!(adjoint(&Mat2::identity(), &xi).unwrap(), xi);
        let back = adjoint(&g, &adjoint(&gi, &xi).unwrap()).unwrap();
        assert!((back - xi).norm() < 1e-10);
    }

    #[test]
    fn algebra_matrix_roundtrip() {
        let xi = AlgebraVector([1.0, 2.0, -0.5, 0.25, -1.5, 0.75]);
        assert_eq!(AlgebraVector::from_matrix(&xi.to_matrix()), xi);
        assert_eq!(xi.to_matrix().trace(), ZERO);
    }

    #[test]
    fn group_pair_normalizes() {
        let p = GroupPair::new(Mat2::real(2.0, 0.0, 0.0, 2.0), Mat2::new(c(0., 3.), ZERO, ONE, ONE)).unwrap();
        assert!((p.g.det() - ONE).norm() < 1e-14);
        assert!((p.h.det() - ONE).norm() < 1e-14);
        assert!(GroupPair::new(Mat2::zero(), Mat2::identity()).is_err());
    }

    #[test]
    fn exp_i_at_zero_is_identity() {
        let xi = AlgebraVector([0.4, 0.2, -0.3, 0.1, 0.5, 0.6]);
        assert_eq!(GroupPair::exp_i(&xi, 0.0), GroupPair::identity());
    }
}
