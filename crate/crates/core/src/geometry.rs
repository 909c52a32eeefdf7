//! Lorentz four-vectors and the 2×2 matrix picture of the future tube.
//!
//! A point `z = (z0, z1, z2, z3)` of ℂ⁴ corresponds to the matrix
//!
//! ```text
//! Z = [ z0 + z3    z1 - i z2 ]
//!     [ z1 + i z2  z0 - z3   ]
//! ```
//!
//! so that `det Z = <z, z>` for the complex-bilinear Lorentz product. The
//! future tube is the set of `Z` whose Hermitian imaginary part
//! `(Z - Z†) / 2i` is positive definite; `TuplePoint` holds an N-tuple of
//! such matrices.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A point of ℂ⁴ with the Lorentz signature (+, -, -, -).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FourVector(pub [C64; 4]);

impl FourVector {
    pub fn new(z0: C64, z1: C64, z2: C64, z3: C64) -> Self {
        Self([z0, z1, z2, z3])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }

    /// Componentwise real part, as a four-vector with zero imaginary parts.
    pub fn re(&self) -> Self {
        Self(self.0.map(|z| c(z.re, 0.0)))
    }

    /// Componentwise imaginary part.
    pub fn im(&self) -> Self {
        Self(self.0.map(|z| c(z.im, 0.0)))
    }

    pub fn to_matrix(&self) -> Mat2 {
        let [z0, z1, z2, z3] = self.0;
        Mat2::new(z0 + z3, z1 - I * z2, z1 + I * z2, z0 - z3)
    }

    pub fn from_matrix(m: &Mat2) -> Self {
        let [[x, y], [z, w]] = m.0;
        let z0 = (x + w) * 0.5;
        let z3 = (x - w) * 0.5;
        let z1 = (y + z) * 0.5;
        let z2 = (z - y) * (-0.5 * I);
        Self([z0, z1, z2, z3])
    }
}

/// The ℂ-bilinear (not sesquilinear) Lorentz product.
pub fn lorentz_product(z: &FourVector, w: &FourVector) -> C64 {
    z.0[0] * w.0[0] - z.0[1] * w.0[1] - z.0[2] * w.0[2] - z.0[3] * w.0[3]
}

/// A complex 2×2 matrix, row-major.
///
/// Serializes as `[[[re, im], [re, im]], [[re, im], [re, im]]]`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mat2(pub [[C64; 2]; 2]);

/// One point of V = ℂ^{2×2}.
pub type MatrixPoint = Mat2;

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1]
        )
    }
}

impl Mat2 {
    pub const fn new(x: C64, y: C64, z: C64, w: C64) -> Self {
        Self([[x, y], [z, w]])
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    /// `s · Identity`.
    pub fn scalar(s: C64) -> Self {
        Self::new(s, ZERO, ZERO, s)
    }

    pub fn diag(a: C64, b: C64) -> Self {
        Self::new(a, ZERO, ZERO, b)
    }

    /// Builds a matrix from real entries.
    pub fn real(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self::new(c(x, 0.0), c(y, 0.0), c(z, 0.0), c(w, 0.0))
    }

    #[inline]
    pub fn get(&self, r: usize, col: usize) -> C64 {
        self.0[r][col]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn transpose(&self) -> Self {
        let [[x, y], [z, w]] = self.0;
        Self::new(x, z, y, w)
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|row| row.map(|v| v.conj())))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let [[x, y], [z, w]] = self.0;
        Self::new(x.conj(), z.conj(), y.conj(), w.conj())
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 || !d.is_finite() {
            return None;
        }
        let [[x, y], [z, w]] = self.0;
        let inv = d.inv();
        Some(Self::new(w * inv, -y * inv, -z * inv, x * inv))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.map(|row| row.map(|v| v * s)))
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self(self.0.map(|row| row.map(|v| v * s)))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.norm_sqr()).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    /// Real Frobenius inner product `Re tr(self† · other)`.
    pub fn real_dot(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// Hermitian Frobenius inner product `tr(self† · other)`.
    pub fn herm_dot(&self, other: &Self) -> C64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Entries in row-major order, the coordinate order used for tangent bases.
    pub fn entries(&self) -> [C64; 4] {
        [self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1]]
    }

    pub fn from_entries(e: [C64; 4]) -> Self {
        Self::new(e[0], e[1], e[2], e[3])
    }

    /// The matrix unit with a one at row-major position `k`.
    pub fn unit(k: usize) -> Self {
        let mut e = [ZERO; 4];
        e[k] = ONE;
        Self::from_entries(e)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        out += rhs;
        out
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, rhs: Mat2) {
        for r in 0..2 {
            for col in 0..2 {
                self.0[r][col] += rhs.0[r][col];
            }
        }
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + (-rhs)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Self(self.0.map(|row| row.map(|v| -v)))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: C64) -> Mat2 {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        self.scale_re(s)
    }
}

/// A 2×2 Hermitian matrix `[[a, b], [conj b, d]]` stored without redundancy,
/// so it is exactly Hermitian and has real trace and determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianMatrix {
    pub a: f64,
    pub b: C64,
    pub d: f64,
}

impl HermitianMatrix {
    pub fn new(a: f64, b: C64, d: f64) -> Self {
        Self { a, b, d }
    }

    pub fn identity() -> Self {
        Self::new(1.0, ZERO, 1.0)
    }

    /// Hermitian part of an arbitrary matrix: `(M + M†) / 2`.
    pub fn hermitian_part(m: &Mat2) -> Self {
        Self {
            a: m.0[0][0].re,
            b: (m.0[0][1] + m.0[1][0].conj()) * 0.5,
            d: m.0[1][1].re,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b.norm_sqr()
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2::new(c(self.a, 0.0), self.b, self.b.conj(), c(self.d, 0.0))
    }

    /// Leading-minor test for a 2×2 Hermitian matrix.
    pub fn is_positive_definite(&self) -> bool {
        self.a > 0.0 && self.det() > 0.0
    }

    /// Smallest eigenvalue, closed form.
    pub fn min_eigenvalue(&self) -> f64 {
        let half_tr = 0.5 * self.trace();
        let gap = (0.25 * (self.a - self.d).powi(2) + self.b.norm_sqr()).sqrt();
        half_tr - gap
    }

    /// Inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self::new(self.d / det, -self.b / det, self.a / det))
    }
}

/// Hermitian imaginary part `(Z - Z†) / 2i`.
pub fn hermitian_im(z: &Mat2) -> HermitianMatrix {
    let [[x, y], [zz, w]] = z.0;
    // (y - conj(zz)) / 2i
    let off = (y - zz.conj()) * c(0.0, -0.5);
    HermitianMatrix::new(x.im, off, w.im)
}

/// Hermitian real part `(Z + Z†) / 2`.
pub fn hermitian_re(z: &Mat2) -> HermitianMatrix {
    HermitianMatrix::hermitian_part(z)
}

pub fn is_positive_definite(h: &HermitianMatrix) -> bool {
    h.is_positive_definite()
}

/// Membership of a single matrix in the generalised upper half plane.
pub fn in_tube(z: &Mat2) -> bool {
    hermitian_im(z).is_positive_definite()
}

/// Symmetric bilinear form associated to the quadratic form `det`.
pub fn matrix_lorentz_product(z: &Mat2, w: &Mat2) -> C64 {
    ((*z + *w).det() - z.det() - w.det()) * 0.5
}

/// An N-tuple of 2×2 complex matrices, N ≥ 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Mat2>", into = "Vec<Mat2>")]
pub struct TuplePoint {
    points: Vec<Mat2>,
}

impl TryFrom<Vec<Mat2>> for TuplePoint {
    type Error = Error;
    fn try_from(points: Vec<Mat2>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<TuplePoint> for Vec<Mat2> {
    fn from(t: TuplePoint) -> Self {
        t.points
    }
}

impl TuplePoint {
    pub fn new(points: Vec<Mat2>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("a tuple needs at least one point".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self { points })
    }

    pub fn single(p: Mat2) -> Self {
        Self { points: vec![p] }
    }

    /// `n` copies of the same matrix.
    pub fn repeat(p: Mat2, n: usize) -> Self {
        assert!(n >= 1);
        Self { points: vec![p; n] }
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Mat2] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Mat2> {
        self.points.iter()
    }

    /// Applies `f` to every component.
    pub fn map(&self, f: impl Fn(&Mat2) -> Mat2) -> Self {
        Self { points: self.points.iter().map(f).collect() }
    }

    /// `self + s · v`, componentwise.
    pub fn offset(&self, v: &crate::lie::TangentVector, s: C64) -> Self {
        debug_assert_eq!(self.n(), v.n());
        Self {
            points: self
                .points
                .iter()
                .zip(v.iter())
                .map(|(p, d)| *p + d.scale(s))
                .collect(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.points.iter().map(Mat2::norm_sqr).sum()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.points
            .iter()
            .zip(other.points.iter())
            .map(|(a, b)| (*a - *b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `det Im` of every component.
    pub fn det_im(&self) -> Vec<f64> {
        self.points.iter().map(|p| hermitian_im(p).det()).collect()
    }

    pub fn in_tube(&self) -> bool {
        self.points.iter().all(in_tube)
    }

    /// Errors with the first component that is not in the tube.
    pub fn check_in_tube(&self) -> Result<()> {
        for (component, p) in self.points.iter().enumerate() {
            let h = hermitian_im(p);
            if !h.is_positive_definite() {
                return Err(Error::OutsideTube { component, det_im: h.det() });
            }
        }
        Ok(())
    }
}

pub fn tube_membership(z: &TuplePoint) -> bool {
    z.in_tube()
}
