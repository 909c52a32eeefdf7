//! Gram-matrix invariants and closed-orbit detection for the G-action on Vᴺ.
//!
//! The Gram map `Z ↦ (⟨Zⁱ, Zʲ⟩)` generates the O₄(ℂ)-invariants and is used
//! throughout as the computable stand-in for the quotient map `Vᴺ → Vᴺ//G`.
//! Closedness of an orbit is probed Kempf–Ness style: minimize the
//! K-invariant norm `‖(g, h) * Z‖²` over the complex group.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hermitian_im, matrix_lorentz_product, Mat2, TuplePoint, C64, ZERO};
use crate::lie::{act_complex_unchecked, exp_traceless, AlgebraVector, GroupPair};
use crate::reduction::{newton_direction_with_floor, orbit_minimize, ReductionOptions};

/// Every Gram-based comparison in reports records this proxy name.
pub const QUOTIENT_PROXY: &str = "gram";

pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// The symmetric (not Hermitian) matrix of pairwise Lorentz products.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<C64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[(i, j)]
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &GramMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let svd = self.entries.clone().svd(false, false);
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| [self.get(i, j).re, self.get(i, j).im]).collect())
            .collect()
    }
}

pub fn gram_map(z: &TuplePoint) -> GramMatrix {
    let n = z.n();
    let pts = z.points();
    let mut m = DMatrix::from_element(n, n, ZERO);
    for i in 0..n {
        // the polarization identity gives det exactly on the diagonal
        m[(i, i)] = pts[i].det();
        for j in (i + 1)..n {
            let v = matrix_lorentz_product(&pts[i], &pts[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    GramMatrix { entries: m }
}

/// Number of singular values above `tol` times the largest one.
pub fn gram_rank(gm: &GramMatrix, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("rank tolerance must be positive, got {tol}")));
    }
    let s = gram_singular_values(gm);
    let Some(&largest) = s.first() else { return Ok(0) };
    if largest == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > tol * largest).count())
}

fn gram_singular_values(gm: &GramMatrix) -> Vec<f64> {
    gm.singular_values()
}

/// Settings of the Kempf–Ness descent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KempfNessOptions {
    pub grad_tol: f64,
    pub collapse_tol: f64,
    pub divergence_bound: f64,
    pub max_iters: usize,
    pub armijo: f64,
    pub shrink: f64,
}

impl Default for KempfNessOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            collapse_tol: 1e-10,
            divergence_bound: 1e3,
            max_iters: 10_000,
            armijo: 1e-4,
            shrink: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitClass {
    Closed,
    NonClosed,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitProbeReport {
    pub achieved_norm_sq: f64,
    pub initial_norm_sq: f64,
    pub minimizer: GroupPair,
    pub converged: bool,
    pub iterations: usize,
    /// Norm of the gradient of `log ‖(g, h) * Z‖²` in the exponential chart.
    pub gradient_norm: f64,
    /// Cartan distance of the minimizer from the maximal compact subgroup.
    pub parameter_norm: f64,
    /// Whether every accepted step decreased the objective.
    pub monotone: bool,
    pub classification: OrbitClass,
}

/// `acosh(‖g‖²_F / 2) / 2`, the length of the noncompact part of `g ∈ SL₂(ℂ)`.
fn cartan_distance(g: &Mat2) -> f64 {
    (g.norm_sqr() / 2.0).max(1.0).acosh() / 2.0
}

/// Value and gradient of `log F`, `F = Σⱼ ‖Wʲ‖²`, over the twelve chart
/// coordinates `(A, B) ↦ (exp A, exp B) * W` at the origin.
fn log_norm_gradient(w: &TuplePoint) -> (f64, [f64; 12]) {
    let f = w.norm_sqr();
    let mut s = Mat2::zero();
    let mut t = Mat2::zero();
    for p in w.iter() {
        s += *p * p.adjoint();
        t += p.adjoint() * *p;
    }
    let tt = t.transpose();
    let mut grad = [0.0; 12];
    for k in 0..6 {
        let e = AlgebraVector::basis(k).to_matrix();
        grad[k] = 2.0 * (e * s).trace().re / f;
        grad[k + 6] = 2.0 * (e * tt).trace().re / f;
    }
    (f, grad)
}

fn pair_from_chart(x: &[f64; 12], scale: f64) -> GroupPair {
    let a = AlgebraVector(std::array::from_fn(|k| x[k] * scale));
    let b = AlgebraVector(std::array::from_fn(|k| x[k + 6] * scale));
    GroupPair { g: exp_traceless(&a.to_matrix()), h: exp_traceless(&b.to_matrix()) }
}

fn dot12(a: &[f64; 12], b: &[f64; 12]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Damped Newton descent on `log ‖(g, h) * Z‖²` with Armijo backtracking.
/// The Hessian is a central difference of the analytic gradient.
///
/// Classification: `closed` once the log-gradient is below `grad_tol` and
/// the Newton step is short, with bounded parameters; `non_closed` when the norm collapses below
/// `collapse_tol · ‖Z‖²` or the parameters run past `divergence_bound` while
/// the objective keeps decreasing; `inconclusive` otherwise.
pub fn kempf_ness_minimize(z: &TuplePoint, opts: &KempfNessOptions) -> OrbitProbeReport {
    let initial = z.norm_sqr();
    let mut pair = GroupPair::identity();
    let report = |pair: GroupPair, f: f64, iters: usize, gn: f64, monotone: bool, class: OrbitClass| {
        OrbitProbeReport {
            achieved_norm_sq: f,
            initial_norm_sq: initial,
            minimizer: pair,
            converged: class == OrbitClass::Closed,
            iterations: iters,
            gradient_norm: gn,
            parameter_norm: cartan_distance(&pair.g) + cartan_distance(&pair.h),
            monotone,
            classification: class,
        }
    };
    if initial == 0.0 {
        // the origin is its own closed orbit
        return report(pair, 0.0, 0, 0.0, true, OrbitClass::Closed);
    }

    let (mut f, mut grad) = log_norm_gradient(z);
    let mut w = z.clone();
    let mut monotone = true;
    for iter in 0..opts.max_iters {
        let gn = dot12(&grad, &grad).sqrt();
        let param = cartan_distance(&pair.g) + cartan_distance(&pair.h);
        if f <= opts.collapse_tol * initial {
            return report(pair, f, iter, gn, monotone, OrbitClass::NonClosed);
        }
        if param > opts.divergence_bound {
            return report(pair, f, iter, gn, monotone, OrbitClass::NonClosed);
        }
        let g = DVector::from_column_slice(&grad);
        let hess = log_norm_hessian(&w);
        // Near a minimum at infinity the Hessian is as small as the gradient,
        // so the undamped Newton step stays long there; a real minimum needs
        // both small.
        if gn <= opts.grad_tol && newton_direction_with_floor(&hess, &g, ESCAPE_FLOOR).norm() <= CRITICAL_STEP {
            return report(pair, f, iter, gn, monotone, OrbitClass::Closed);
        }
        let mut d = newton_direction_with_floor(&hess, &g, STEP_FLOOR);
        if !(g.dot(&d) < 0.0) {
            d = -&g;
        }
        let len = d.norm();
        if len > MAX_CHART_STEP {
            d *= MAX_CHART_STEP / len;
        }
        let slope = g.dot(&d);
        let dir: [f64; 12] = std::array::from_fn(|k| d[k]);
        let log_f = f.ln();
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let q = pair_from_chart(&dir, alpha);
            let trial_pair = q.compose(&pair).renormalized();
            let trial = act_complex_unchecked(&trial_pair, z);
            let ft = trial.norm_sqr();
            if ft.is_finite() && ft > 0.0 && ft <= f && ft.ln() <= log_f + opts.armijo * alpha * slope {
                accepted = Some((trial_pair, trial, ft));
                break;
            }
            alpha *= opts.shrink;
        }
        let Some((new_pair, new_w, new_f)) = accepted else {
            return report(pair, f, iter, gn, monotone, OrbitClass::Inconclusive);
        };
        if new_f > f {
            monotone = false;
        }
        grad = log_norm_gradient(&new_w).1;
        pair = new_pair;
        w = new_w;
        f = new_f;
    }
    let gn = dot12(&grad, &grad).sqrt();
    report(pair, f, opts.max_iters, gn, monotone, OrbitClass::Inconclusive)
}

const MAX_CHART_STEP: f64 = 2.0;
const CRITICAL_STEP: f64 = 1e-3;
const STEP_FLOOR: f64 = 1e-8;
// low enough to resolve escape curvature down to difference noise
const ESCAPE_FLOOR: f64 = 1e-12;
const HESSIAN_STEP: f64 = 1e-5;

/// Central differences of the analytic log-gradient, symmetrized.
fn log_norm_hessian(w: &TuplePoint) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(12, 12);
    for l in 0..12 {
        let mut e = [0.0; 12];
        e[l] = 1.0;
        let plus = log_norm_gradient(&act_complex_unchecked(&pair_from_chart(&e, HESSIAN_STEP), w)).1;
        let minus = log_norm_gradient(&act_complex_unchecked(&pair_from_chart(&e, -HESSIAN_STEP), w)).1;
        for k in 0..12 {
            m[(k, l)] = (plus[k] - minus[k]) / (2.0 * HESSIAN_STEP);
        }
    }
    (&m + m.transpose()) * 0.5
}

/// Settings of the saturation probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaturationOptions {
    pub kempf_ness: KempfNessOptions,
    pub reduction: ReductionOptions,
    /// Function evaluations allowed to the translate search per start.
    pub search_budget: usize,
    pub initial_search_step: f64,
}

impl Default for SaturationOptions {
    fn default() -> Self {
        Self {
            kempf_ness: KempfNessOptions::default(),
            reduction: ReductionOptions::default(),
            search_budget: 4000,
            initial_search_step: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub proxy: String,
    pub kempf_ness: OrbitProbeReport,
    /// Numerical stand-in for the closed orbit in the orbit closure.
    pub closed_point: TuplePoint,
    pub gram_distance: f64,
    pub certified_in_extended_tube: bool,
    /// A G-translate of the closed point that lies in the tube, when found.
    pub witness: Option<TuplePoint>,
    pub witness_pair: Option<GroupPair>,
    /// Which start of the translate search succeeded.
    pub certified_from: Option<String>,
    pub witness_phi_min: Option<f64>,
    pub status: String,
}

/// Smallest eigenvalue of `Im` over all components; positive iff in the tube.
fn tube_margin(z: &TuplePoint) -> f64 {
    z.iter().map(|p| hermitian_im(p).min_eigenvalue()).fold(f64::INFINITY, f64::min)
}

/// Compass search over the twelve chart directions maximizing the tube margin
/// of `(q ∘ start) * w`. Returns the successful pair once the margin is positive.
fn search_translate(w: &TuplePoint, start: GroupPair, opts: &SaturationOptions) -> Option<GroupPair> {
    let mut pair = start;
    let mut best = tube_margin(&act_complex_unchecked(&pair, w));
    let mut step = opts.initial_search_step;
    let mut evals = 0;
    while evals < opts.search_budget && step > 1e-9 {
        if best > 0.0 {
            return Some(pair);
        }
        let mut improved = false;
        'dirs: for k in 0..12 {
            for sign in [1.0, -1.0] {
                let mut x = [0.0; 12];
                x[k] = sign;
                let trial_pair = pair_from_chart(&x, step).compose(&pair).renormalized();
                let m = tube_margin(&act_complex_unchecked(&trial_pair, w));
                evals += 1;
                if m > best {
                    best = m;
                    pair = trial_pair;
                    improved = true;
                    break 'dirs;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best > 0.0).then_some(pair)
}

/// Probes whether the closed orbit in the closure of `G * Z` meets the tube.
///
/// A positive verdict is a numerical witness; a negative one only means the
/// probe failed within its budget.
pub fn saturation_probe(z: &TuplePoint, opts: &SaturationOptions) -> Result<SaturationReport> {
    z.check_in_tube()?;
    let kn = kempf_ness_minimize(z, &opts.kempf_ness);
    let closed_point = act_complex_unchecked(&kn.minimizer, z);
    let gram_distance = gram_map(&closed_point).distance(&gram_map(z));

    let mut starts = vec![("identity".to_string(), GroupPair::identity())];
    if kn.classification == OrbitClass::Closed {
        starts.push(("kempf-ness inverse".to_string(), kn.minimizer.inverse()));
    }
    let mut found = None;
    for (name, start) in starts {
        if let Some(pair) = search_translate(&closed_point, start, opts) {
            found = Some((name, pair));
            break;
        }
    }

    let (witness, witness_pair, certified_from, witness_phi_min) = match found {
        Some((name, pair)) => {
            let wt = act_complex_unchecked(&pair, &closed_point);
            let phi_min = match orbit_minimize(&wt, &opts.reduction) {
                Ok(reduced) => reduced.converged.then_some(reduced.phi_min),
                Err(e) if e.is_domain_exit() => None,
                Err(e) => return Err(e),
            };
            (Some(wt), Some(pair), Some(name), phi_min)
        }
        None => (None, None, None, None),
    };
    let certified = witness.is_some();
    Ok(SaturationReport {
        proxy: QUOTIENT_PROXY.to_string(),
        kempf_ness: kn,
        closed_point,
        gram_distance,
        certified_in_extended_tube: certified,
        witness,
        witness_pair,
        certified_from,
        witness_phi_min,
        status: if certified { "certified".into() } else { "probe failed".into() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{c, I, ONE};

    #[test]
    fn gram_examples() {
        let g = gram_map(&TuplePoint::single(Mat2::scalar(I)));
        assert_eq!(g.get(0, 0), -ONE);
        let g2 = gram_map(&TuplePoint::new(vec![Mat2::scalar(I), Mat2::diag(I, -I)]).unwrap());
        assert_eq!(g2.get(0, 0), -ONE);
        assert_eq!(g2.get(0, 1), ZERO);
        assert_eq!(g2.get(1, 0), ZERO);
        assert_eq!(g2.get(1, 1), ONE);
    }

    #[test]
    fn rank_examples() {
        let g = gram_map(&TuplePoint::single(Mat2::scalar(I)));
        assert_eq!(gram_rank(&g, DEFAULT_RANK_TOL).unwrap(), 1);
        let zero = gram_map(&TuplePoint::repeat(Mat2::zero(), 3));
        assert_eq!(gram_rank(&zero, DEFAULT_RANK_TOL).unwrap(), 0);
        assert!(gram_rank(&g, 0.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let z = TuplePoint::new(vec![
            Mat2::new(c(1.0, 0.5), c(-0.3, 0.2), c(0.7, -1.1), c(0.4, 0.0)),
            Mat2::new(c(0.2, 0.1), c(1.3, 0.0), c(-0.5, 0.6), c(0.9, 0.8)),
        ])
        .unwrap();
        let (_, grad) = log_norm_gradient(&z);
        let h = 1e-6;
        for k in 0..12 {
            let mut x = [0.0; 12];
            x[k] = 1.0;
            let fp = act_complex_unchecked(&pair_from_chart(&x, h), &z).norm_sqr().ln();
            let fm = act_complex_unchecked(&pair_from_chart(&x, -h), &z).norm_sqr().ln();
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-8, "k={k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn diagonal_orbit_is_closed_with_norm_four() {
        let z = TuplePoint::single(Mat2::real(2.0, 0.0, 0.0, 1.0));
        let r = kempf_ness_minimize(&z, &KempfNessOptions::default());
        assert_eq!(r.classification, OrbitClass::Closed);
        assert!((r.achieved_norm_sq - 4.0).abs() < 1e-6, "{}", r.achieved_norm_sq);
        assert!(r.monotone);
    }

    #[test]
    fn nilpotent_orbit_is_not_closed() {
        let z = TuplePoint::single(Mat2::real(0.0, 1.0, 0.0, 0.0));
        let r = kempf_ness_minimize(&z, &KempfNessOptions::default());
        assert_eq!(r.classification, OrbitClass::NonClosed);
        assert!(r.achieved_norm_sq <= 1e-6);
    }

    #[test]
    fn identity_point_is_already_minimal() {
        let z = TuplePoint::single(Mat2::scalar(I));
        let r = kempf_ness_minimize(&z, &KempfNessOptions::default());
        assert_eq!(r.classification, OrbitClass::Closed);
        assert_eq!(r.iterations, 0);
        assert!((r.achieved_norm_sq - 2.0).abs() < 1e-15);
    }

    #[test]
    fn saturation_trivial_case() {
        let z = TuplePoint::single(Mat2::scalar(I));
        let r = saturation_probe(&z, &SaturationOptions::default()).unwrap();
        assert!(r.certified_in_extended_tube);
        assert_eq!(r.certified_from.as_deref(), Some("identity"));
        assert!((r.witness_phi_min.unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn saturation_on_a_non_closed_orbit() {
        // (iI, iI + E12) spans a degenerate plane; the closed orbit in the
        // closure is that of (iI, iI).
        let z = TuplePoint::new(vec![Mat2::scalar(I), Mat2::new(I, ONE, ZERO, I)]).unwrap();
        assert!(z.in_tube());
        assert_eq!(gram_rank(&gram_map(&z), DEFAULT_RANK_TOL).unwrap(), 1);
        let r = saturation_probe(&z, &SaturationOptions::default()).unwrap();
        assert_ne!(r.kempf_ness.classification, OrbitClass::Closed, "{:?}", r.kempf_ness);
        assert!(r.certified_in_extended_tube);
        assert!(r.gram_distance < 1e-6);
    }
}
