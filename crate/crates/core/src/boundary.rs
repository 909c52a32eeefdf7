//! Boundary behaviour of `φ` and of the reduced function: the unitary normal
//! form of a point of ℍ, the pair-transfer bound, and threshold scans along
//! sequences of points.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{c, hermitian_im, in_tube, Mat2, TuplePoint, C64, ZERO};
use crate::lie::{act_real, act_real_unchecked, exp_algebra, AlgebraVector};
use crate::psh::phi;
use crate::quotient::{gram_map, GramMatrix};
use crate::reduction::{big_psi, ReductionOptions};

/// Both eigenvalues of a 2×2 matrix, larger modulus first.
///
/// Near-equal moduli are ordered by the larger `(Re, Im)`.
pub fn ordered_eigenvalues(m: &Mat2) -> [C64; 2] {
    let half = m.trace() * 0.5;
    let disc = (half * half - m.det()).sqrt();
    let mut l = [half + disc, half - disc];
    let (a, b) = (l[0].norm(), l[1].norm());
    let order = if (a - b).abs() <= 1e-12 * a.max(b) {
        (l[0].re, l[0].im).partial_cmp(&(l[1].re, l[1].im)).unwrap_or(Ordering::Equal).reverse()
    } else {
        b.partial_cmp(&a).unwrap_or(Ordering::Equal)
    };
    if order == Ordering::Greater {
        l.swap(0, 1);
    }
    l
}

/// Unit eigenvector for `lambda`, phased so its largest component is real
/// positive (the first one on ties).
fn eigenvector(m: &Mat2, lambda: C64) -> [C64; 2] {
    let [[a, b], [cc, d]] = m.0;
    let v1 = [b, lambda - a];
    let v2 = [lambda - d, cc];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    let scale = m.norm_sqr().max(f64::MIN_POSITIVE);
    let v = if n1.max(n2) <= 1e-24 * scale {
        // scalar matrix: every vector is an eigenvector
        [c(1.0, 0.0), ZERO]
    } else if n1 >= n2 {
        v1
    } else {
        v2
    };
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let lead = if v[1].norm() > v[0].norm() * (1.0 + 1e-12) { v[1] } else { v[0] };
    let phase = lead.conj() / lead.norm();
    [v[0] * phase / n, v[1] * phase / n]
}

/// Schur form: special-unitary `u` with `u m u⁻¹` upper triangular, the
/// eigenvalue ordered first by [`ordered_eigenvalues`] in position (1,1).
pub fn schur(m: &Mat2) -> (Mat2, Mat2) {
    let lambda = ordered_eigenvalues(m)[0];
    let [v1, v2] = eigenvector(m, lambda);
    // first row of u is v†, so u⁻¹ e₁ = v
    let u = Mat2::new(v1.conj(), v2.conj(), -v2, v1);
    let mut t = u * *m * u.adjoint();
    t.0[1][0] = ZERO;
    (u, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalForm {
    pub u: Mat2,
    pub r: f64,
    pub x: Mat2,
}

impl NormalForm {
    /// `D(r) u`, the element of SL₂(ℂ) whose real action produces `x`.
    pub fn transform(&self) -> Mat2 {
        Mat2::diag(c(self.r, 0.0), c(1.0 / self.r, 0.0)) * self.u
    }

    /// `‖D(r) u W u⁻¹ D(r) − X‖`.
    pub fn reconstruction_error(&self, w: &Mat2) -> f64 {
        let h = self.transform();
        (h * *w * h.adjoint() - self.x).norm()
    }
}

/// Unitary triangularization followed by diagonal balancing, so that the
/// diagonal entries of the result have equal modulus.
pub fn normal_form(w: &Mat2) -> Result<NormalForm> {
    if !in_tube(w) {
        return Err(Error::OutsideTube { component: 0, det_im: hermitian_im(w).det() });
    }
    let (u, t) = schur(w);
    let x11 = t.get(0, 0);
    let x22 = t.get(1, 1);
    // det W ≠ 0 on ℍ, so both diagonal entries are nonzero
    let r = (x22.norm() / x11.norm()).powf(0.25);
    let x = Mat2::new(x11 * (r * r), t.get(0, 1), ZERO, x22 / (r * r));
    Ok(NormalForm { u, r, x })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangularBounds {
    /// `¼|z|²` for the upper-right entry `z`.
    pub quarter_offdiag_sq: f64,
    /// `Im x · Im y` for the diagonal entries.
    pub im_product: f64,
    pub abs_det: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

pub fn triangular_bounds_check(x: &Mat2) -> Result<TriangularBounds> {
    let scale = x.max_abs().max(1.0);
    if x.get(1, 0).norm() > 1e-10 * scale {
        return Err(Error::Precondition("matrix is not upper triangular".into()));
    }
    if !in_tube(x) {
        return Err(Error::Precondition(format!(
            "matrix is not in the upper half plane (det Im = {:e})",
            hermitian_im(x).det()
        )));
    }
    let quarter = 0.25 * x.get(0, 1).norm_sqr();
    let prod = x.get(0, 0).im * x.get(1, 1).im;
    let abs_det = x.det().norm();
    Ok(TriangularBounds {
        quarter_offdiag_sq: quarter,
        im_product: prod,
        abs_det,
        lower_holds: quarter < prod,
        upper_holds: prod <= abs_det * (1.0 + 1e-12),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTransfer {
    /// `Z W⁻¹`.
    pub x: Mat2,
    pub trace: C64,
    pub det: C64,
    pub eigenvalues: [C64; 2],
    pub max_abs_eigenvalue: f64,
    /// `|tr| + √(|tr|² + |det|)`, a bound on every eigenvalue modulus.
    pub eigen_bound: f64,
    /// Upper-right entry of `X` after unitary triangularization.
    pub triangular_offdiag: C64,
    /// `Im(xa + zc) Im(yd) − ¼|xb + zd − ȳc̄|²` from the triangularized `X`
    /// and the correspondingly rotated `W`; present when `Z ∈ ℍ`.
    pub positivity: Option<f64>,
}

pub fn pair_transfer(z: &Mat2, w: &Mat2) -> Result<PairTransfer> {
    if w.det().norm() <= 1e-12 {
        return Err(Error::Singular(format!("|det W| = {:e}", w.det().norm())));
    }
    let x = *z * w.inverse().ok_or_else(|| Error::Singular("W".into()))?;
    let eigenvalues = ordered_eigenvalues(&x);
    let trace = x.trace();
    let det = x.det();
    let (u, t) = schur(&x);
    let positivity = in_tube(z).then(|| {
        let wr = u * *w * u.adjoint();
        let [[a, b], [cc, d]] = wr.0;
        let (xx, zz, yy) = (t.get(0, 0), t.get(0, 1), t.get(1, 1));
        (xx * a + zz * cc).im * (yy * d).im - 0.25 * (xx * b + zz * d - yy.conj() * cc.conj()).norm_sqr()
    });
    Ok(PairTransfer {
        x,
        trace,
        det,
        eigenvalues,
        max_abs_eigenvalue: eigenvalues[0].norm().max(eigenvalues[1].norm()),
        eigen_bound: trace.norm() + (trace.norm_sqr() + det.norm()).sqrt(),
        triangular_offdiag: t.get(0, 1),
        positivity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    /// `t_k = step · ln k`
    Log,
    /// `t_k = step · k`
    Linear,
}

/// A sequence `k = 1..=k_max` of points in ℍᴺ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    List {
        points: Vec<TuplePoint>,
    },
    /// `Z_k = Σ_m C_m k^{-m} / Σ_m d_m k^{-m}` with tuple coefficients `C_m`
    /// and optional complex scalar coefficients `d_m` (`[re, im]` pairs).
    Curve {
        numerator: Vec<TuplePoint>,
        #[serde(default)]
        denominator: Option<Vec<C64>>,
        k_max: usize,
    },
    /// `Z_k = exp(t_k ξ) · Z₀` under the real action.
    Translate {
        base: TuplePoint,
        generator: AlgebraVector,
        parameter: Parameter,
        step: f64,
        k_max: usize,
    },
}

pub const MAX_SEQUENCE_LEN: usize = 100_000;

impl SequenceSpec {
    /// Parses and validates a JSON specification.
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.generate()?;
        Ok(spec)
    }

    /// The points of the sequence; fails unless every point is in the tube.
    pub fn generate(&self) -> Result<Vec<TuplePoint>> {
        let points = match self {
            SequenceSpec::List { points } => {
                if points.is_empty() {
                    return Err(Error::Config("empty point list".into()));
                }
                points.clone()
            }
            SequenceSpec::Curve { numerator, denominator, k_max } => {
                check_len(*k_max)?;
                let Some(first) = numerator.first() else {
                    return Err(Error::Config("curve needs at least one numerator coefficient".into()));
                };
                if numerator.iter().any(|t| t.n() != first.n()) {
                    return Err(Error::Config("numerator coefficients differ in length".into()));
                }
                let mut out = Vec::with_capacity(*k_max);
                for k in 1..=*k_max {
                    let s = 1.0 / k as f64;
                    let den = match denominator {
                        Some(d) if d.is_empty() => {
                            return Err(Error::Config("empty denominator".into()));
                        }
                        Some(d) => d.iter().rev().fold(ZERO, |acc, v| acc * s + v),
                        None => c(1.0, 0.0),
                    };
                    if den.norm() < 1e-300 {
                        return Err(Error::Config(format!("denominator vanishes at k = {k}")));
                    }
                    let pts = (0..first.n())
                        .map(|j| {
                            numerator.iter().rev().fold(Mat2::zero(), |acc, cm| acc * s + cm.points()[j])
                                * (1.0 / den)
                        })
                        .collect();
                    out.push(TuplePoint::new(pts)?);
                }
                out
            }
            SequenceSpec::Translate { base, generator, parameter, step, k_max } => {
                check_len(*k_max)?;
                if !step.is_finite() || !generator.is_finite() {
                    return Err(Error::Config("non-finite translate parameters".into()));
                }
                (1..=*k_max)
                    .map(|k| {
                        let t = match parameter {
                            Parameter::Log => step * (k as f64).ln(),
                            Parameter::Linear => step * k as f64,
                        };
                        act_real(&exp_algebra(generator, t), base)
                    })
                    .collect::<Result<_>>()?
            }
        };
        let n = points[0].n();
        for (k, p) in points.iter().enumerate() {
            if p.n() != n {
                return Err(Error::Config(format!("point {} has {} components, expected {n}", k + 1, p.n())));
            }
            if !p.in_tube() {
                return Err(Error::Config(format!("point {} is outside the tube", k + 1)));
            }
        }
        Ok(points)
    }
}

fn check_len(k_max: usize) -> Result<()> {
    if k_max == 0 || k_max > MAX_SEQUENCE_LEN {
        return Err(Error::Config(format!("k_max must be in 1..={MAX_SEQUENCE_LEN}, got {k_max}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundaryOptions {
    pub compact_bound: f64,
    pub det_floor: f64,
    /// Bound on `φ` under which verdict (b) is tested.
    pub phi_bound: f64,
    pub thresholds: Vec<f64>,
    /// Tail oscillation of Gram images, relative to `1 + max_k ‖G_k‖`.
    pub gram_conv_tol: f64,
    /// A component counts as approaching the boundary once min det Im falls below this.
    pub vanish_tol: f64,
    pub reduction: ReductionOptions,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self {
            compact_bound: 1e3,
            det_floor: 1e-6,
            phi_bound: 1e3,
            thresholds: vec![10.0, 100.0, 1000.0],
            gram_conv_tol: 1e-2,
            vanish_tol: 1e-3,
            reduction: ReductionOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub k: usize,
    pub phi: f64,
    /// `None` when the reduction did not converge.
    pub big_psi: Option<f64>,
    pub gram: Vec<Vec<[f64; 2]>>,
    pub det_im: Vec<f64>,
    /// The sequence point moved by the normal form of its first component.
    pub normalized: TuplePoint,
    pub normalized_max_abs: f64,
    pub normalized_min_det_im: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NotTriggered,
    Holds,
    Fails,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub entries: Vec<ScanEntry>,
    pub thresholds: Vec<f64>,
    pub gram_converges: bool,
    pub boundary_approached: bool,
    pub constant: bool,
    /// First index from which every reduced value exceeds each threshold.
    pub threshold_indices: Vec<Option<usize>>,
    pub weak_exhaustion: Verdict,
    pub exhaustion_mod_real: Verdict,
}

fn scan_entry(k: usize, z: &TuplePoint, opts: &BoundaryOptions) -> Result<(ScanEntry, GramMatrix)> {
    let gram = gram_map(z);
    let psi = match big_psi(z, Some(z), &opts.reduction) {
        Ok(v) => Some(v),
        Err(Error::NotConverged(_)) => None,
        Err(e) => return Err(e),
    };
    let nf = normal_form(&z.points()[0])?;
    let normalized = act_real_unchecked(&nf.transform(), z);
    let normalized_max_abs = normalized.iter().map(Mat2::max_abs).fold(0.0, f64::max);
    let normalized_min_det_im = normalized.det_im().into_iter().fold(f64::INFINITY, f64::min);
    let entry = ScanEntry {
        k,
        phi: phi(z)?,
        big_psi: psi,
        gram: gram.to_rows(),
        det_im: z.det_im(),
        normalized,
        normalized_max_abs,
        normalized_min_det_im,
    };
    Ok((entry, gram))
}

pub fn boundary_scan(spec: &SequenceSpec, opts: &BoundaryOptions) -> Result<BoundaryReport> {
    let points = spec.generate()?;
    let computed: Vec<(ScanEntry, GramMatrix)> = points
        .par_iter()
        .enumerate()
        .map(|(i, z)| scan_entry(i + 1, z, opts))
        .collect::<Result<_>>()?;
    let (entries, grams): (Vec<_>, Vec<_>) = computed.into_iter().unzip();
    let len = entries.len();

    let constant = points.windows(2).all(|w| w[0].distance(&w[1]) == 0.0);
    let gram_converges = len >= 2 && {
        let last = &grams[len - 1];
        let tail = (len / 4).max(2).min(len);
        let osc = grams[len - tail..].iter().map(|g| g.distance(last)).fold(0.0, f64::max);
        let largest = grams.iter().map(GramMatrix::frobenius).fold(0.0, f64::max);
        osc <= opts.gram_conv_tol * (1.0 + largest)
    };
    let min_det = |e: &ScanEntry| e.det_im.iter().copied().fold(f64::INFINITY, f64::min);
    let boundary_approached =
        len >= 2 && min_det(&entries[len - 1]) < opts.vanish_tol && min_det(&entries[len - 1]) < min_det(&entries[0]);

    let threshold_indices: Vec<Option<usize>> = opts
        .thresholds
        .iter()
        .map(|&r| {
            let mut k0 = None;
            for e in entries.iter().rev() {
                match e.big_psi {
                    Some(v) if v > r => k0 = Some(e.k),
                    _ => break,
                }
            }
            k0
        })
        .collect();

    let weak_exhaustion = if constant || !gram_converges || !boundary_approached {
        Verdict::NotTriggered
    } else if threshold_indices.iter().all(Option::is_some) {
        Verdict::Holds
    } else {
        Verdict::Fails
    };

    let phi_bounded = entries.iter().all(|e| e.phi <= opts.phi_bound);
    let exhaustion_mod_real = if constant || !gram_converges || !phi_bounded {
        Verdict::NotTriggered
    } else if entries
        .iter()
        .all(|e| e.normalized_max_abs <= opts.compact_bound && e.normalized_min_det_im >= opts.det_floor)
    {
        Verdict::Holds
    } else {
        Verdict::Fails
    };

    Ok(BoundaryReport {
        entries,
        thresholds: opts.thresholds.clone(),
        gram_converges,
        boundary_approached,
        constant,
        threshold_indices,
        weak_exhaustion,
        exhaustion_mod_real,
    })
}
