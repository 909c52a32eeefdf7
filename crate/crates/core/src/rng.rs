//! Deterministic random streams and the samplers used by the experiments.
//!
//! Every sample draws from its own PCG32 stream (`Lcg64Xsh32`, multiplier
//! 6364136223846793005) whose state and increment are derived from
//! `(seed, suite name, sample index)`:
//!
//! ```text
//! key   = splitmix64(seed ^ fnv1a64(suite))
//! state = splitmix64(key ^ (index * 0x9E3779B97F4A7C15))
//! inc   = splitmix64(state)
//! ```
//!
//! so results never depend on the order or concurrency in which samples run.

use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg32;

use crate::geometry::{c, FourVector, Mat2, TuplePoint, C64, I};
use crate::lie::{exp_algebra, AlgebraVector, GroupPair};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The generator for one sample of one suite.
pub fn sample_stream(seed: u64, suite: &str, index: u64) -> Pcg32 {
    let key = splitmix64(seed ^ fnv1a64(suite.as_bytes()));
    let state = splitmix64(key ^ index.wrapping_mul(GOLDEN));
    let inc = splitmix64(state);
    Pcg32::new(state, inc)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Complex number with independent standard-normal real and imaginary parts.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re = normal(rng);
    let im = normal(rng);
    c(re, im)
}

pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn random_four_vector<R: Rng + ?Sized>(rng: &mut R) -> FourVector {
    FourVector([complex_normal(rng), complex_normal(rng), complex_normal(rng), complex_normal(rng)])
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    Mat2::new(complex_normal(rng), complex_normal(rng), complex_normal(rng), complex_normal(rng))
}

/// Hermitian matrix with standard-normal real diagonal and complex off-diagonal.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let a = normal(rng);
    let d = normal(rng);
    let b = complex_normal(rng);
    Mat2::new(c(a, 0.0), b, b.conj(), c(d, 0.0))
}

/// `A A† + 0.1 I` for a standard-normal complex `A`.
pub fn random_positive<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let a = random_matrix(rng);
    a * a.adjoint() + Mat2::scalar(c(0.1, 0.0))
}

/// A point of the generalised upper half plane: `R + i P` with `R` Hermitian
/// and `P = A A† + 0.1 I`.
pub fn random_tube_point<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let p = random_positive(rng);
    let r = random_hermitian(rng);
    r + p.scale(I)
}

pub fn random_tube_tuple<R: Rng + ?Sized>(rng: &mut R, n: usize) -> TuplePoint {
    TuplePoint::new((0..n).map(|_| random_tube_point(rng)).collect())
        .expect("sampled tuple is finite and non-empty")
}

/// `i P` tuple with positive definite `P`.
pub fn random_imaginary_tuple<R: Rng + ?Sized>(rng: &mut R, n: usize) -> TuplePoint {
    TuplePoint::new((0..n).map(|_| random_positive(rng).scale(I)).collect())
        .expect("sampled tuple is finite and non-empty")
}

/// Unconstrained standard-normal complex tuple in Vᴺ.
pub fn random_tuple<R: Rng + ?Sized>(rng: &mut R, n: usize) -> TuplePoint {
    TuplePoint::new((0..n).map(|_| random_matrix(rng)).collect())
        .expect("sampled tuple is finite and non-empty")
}

/// Algebra vector with i.i.d. `N(0, sigma²)` coefficients.
pub fn random_algebra<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> AlgebraVector {
    AlgebraVector(std::array::from_fn(|_| sigma * normal(rng)))
}

/// Real-form element `exp(ξ)`, `ξ` with `N(0, sigma²)` coefficients.
pub fn random_sl2<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Mat2 {
    exp_algebra(&random_algebra(rng, sigma), 1.0)
}

/// Uniformly distributed element of SU(2), from a unit quaternion.
pub fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let q: [f64; 4] = std::array::from_fn(|_| normal(rng));
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [a, b, cc, d] = q.map(|v| v / n);
    let alpha = c(a, b);
    let beta = c(cc, d);
    Mat2::new(alpha, -beta.conj(), beta, alpha.conj())
}

pub fn random_group_pair<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> GroupPair {
    GroupPair::exp(&random_algebra(rng, sigma), &random_algebra(rng, sigma))
}
