//! Minimization of `φ` along the complexified directions and the checks built
//! on reduced points: the zero level of the moment map, criticality, and the
//! Levi form of the reduced function on a transverse section.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{c, TuplePoint, C64, ZERO};
use crate::lie::{apply_j, flow_i, real_vector_field, AlgebraVector, GroupPair, TangentVector};
use crate::psh::{directional_derivative, levi_form, levi_form_phi, moment_map, omega_eval, phi, LEVI_STEP};
use crate::quotient::gram_map;

/// Settings of [`orbit_minimize`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionOptions {
    pub moment_tol: f64,
    pub max_iters: usize,
    pub armijo: f64,
    pub shrink: f64,
    /// Step of the central difference of the moment map giving the Hessian.
    pub hessian_step: f64,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self { moment_tol: 1e-9, max_iters: 500, armijo: 1e-4, shrink: 0.5, hessian_step: 1e-5 }
    }
}

impl ReductionOptions {
    /// Tighter settings for nested solves inside finite-difference stencils.
    pub fn inner() -> Self {
        Self { moment_tol: 1e-10, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionResult {
    pub start: TuplePoint,
    /// The accumulated complexified move; `reduced_point = minimizer_group * start`.
    pub minimizer_group: GroupPair,
    pub reduced_point: TuplePoint,
    pub phi_min: f64,
    pub moment_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn algebra(d: &DVector<f64>) -> AlgebraVector {
    AlgebraVector(std::array::from_fn(|k| d[k]))
}

/// `∂μ_k / ∂s_l` for the moves `Z ↦ exp(i s_l e_l) · Z`, symmetrized.
/// Halves the difference step while it leaves the tube, which happens for
/// points close to the boundary relative to their size.
fn moment_hessian(w: &TuplePoint, h: f64) -> Result<DMatrix<f64>> {
    let mut h = h;
    for _ in 0..40 {
        match moment_hessian_at_step(w, h) {
            Err(e) if e.is_domain_exit() => h *= 0.5,
            other => return other,
        }
    }
    moment_hessian_at_step(w, h)
}

fn moment_hessian_at_step(w: &TuplePoint, h: f64) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(6, 6);
    for l in 0..6 {
        let e = AlgebraVector::basis(l);
        let plus = moment_map(&flow_i(&e, h, w))?;
        let minus = moment_map(&flow_i(&e, -h, w))?;
        for k in 0..6 {
            m[(k, l)] = (plus.0[k] - minus.0[k]) / (2.0 * h);
        }
    }
    Ok((&m + m.transpose()) * 0.5)
}

/// Newton direction with the Hessian restricted to its positive part; flat
/// directions (stabilizers of `w`) get a capped gradient step instead.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    newton_direction_with_floor(hess, grad, 1e-8)
}

/// As [`newton_direction`], with eigenvalues clamped below at `floor · top`.
pub(crate) fn newton_direction_with_floor(hess: &DMatrix<f64>, grad: &DVector<f64>, floor: f64) -> DVector<f64> {
    let eig = hess.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    if !(top > 0.0) {
        return -grad;
    }
    let floor = floor * top;
    let mut d = DVector::zeros(grad.len());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let coeff = v.dot(grad) / lambda.max(floor);
        d -= v * coeff;
    }
    d
}

/// Descends `φ` over `Z ↦ exp(iξ) · Z`, `ξ ∈ 𝔤`, with damped Newton steps
/// and Armijo backtracking. Steps leaving the tube are rejected by the line
/// search. Non-convergence is reported, not raised.
pub fn orbit_minimize(z: &TuplePoint, opts: &ReductionOptions) -> Result<ReductionResult> {
    z.check_in_tube()?;
    let mut w = z.clone();
    let mut pair = GroupPair::identity();
    let mut f = phi(&w)?;
    let mut mu = moment_map(&w)?;
    let mut iterations = 0;

    while mu.norm() > opts.moment_tol && iterations < opts.max_iters {
        iterations += 1;
        let grad = DVector::from_column_slice(&mu.0);
        let mut dir = newton_direction(&moment_hessian(&w, opts.hessian_step)?, &grad);
        let mut slope = grad.dot(&dir);
        if !(slope < 0.0) {
            dir = -&grad;
            slope = -grad.dot(&grad);
        }
        let xi = algebra(&dir);

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = flow_i(&xi, alpha, &w);
            if let Ok(ft) = phi(&trial) {
                if ft <= f + opts.armijo * alpha * slope {
                    accepted = Some((trial, ft, None));
                    break;
                }
                // Near the minimum the decrease is below rounding; accept a
                // step that keeps φ and shrinks the moment.
                if (ft - f).abs() <= 1e-13 * f.abs() {
                    let mt = moment_map(&trial)?;
                    if mt.norm() < mu.norm() {
                        accepted = Some((trial, ft, Some(mt)));
                        break;
                    }
                }
            }
            alpha *= opts.shrink;
        }
        let Some((trial, ft, mt)) = accepted else { break };
        pair = GroupPair::exp_i(&xi, alpha).compose(&pair);
        w = trial;
        f = ft;
        mu = match mt {
            Some(m) => m,
            None => moment_map(&w)?,
        };
    }

    let moment_norm = mu.norm();
    Ok(ReductionResult {
        start: z.clone(),
        minimizer_group: pair,
        reduced_point: w,
        phi_min: f,
        moment_norm,
        converged: moment_norm <= opts.moment_tol,
        iterations,
    })
}

/// Relative Gram distance under which a witness counts as lying in the same fiber.
pub const WITNESS_GRAM_TOL: f64 = 1e-8;

/// The reduced function `Ψ`, evaluated through a representative in the tube.
///
/// Without a witness `z` itself must be in the tube. A witness must be in the
/// tube and have the same Gram image as `z`.
pub fn big_psi(z: &TuplePoint, witness: Option<&TuplePoint>, opts: &ReductionOptions) -> Result<f64> {
    let rep = match witness {
        None => z,
        Some(w) => {
            if w.n() != z.n() {
                return Err(Error::InvalidInput(format!("witness has {} components, point has {}", w.n(), z.n())));
            }
            w.check_in_tube()?;
            let gz = gram_map(z);
            let d = gram_map(w).distance(&gz);
            if d > WITNESS_GRAM_TOL * (1.0 + gz.frobenius()) {
                return Err(Error::InvalidInput(format!("witness lies over a different fiber (Gram distance {d:e})")));
            }
            w
        }
    };
    let r = orbit_minimize(rep, opts)?;
    if !r.converged {
        return Err(Error::NotConverged(format!(
            "moment norm {:e} after {} iterations",
            r.moment_norm, r.iterations
        )));
    }
    Ok(r.phi_min)
}

/// Real rank of a family of tangent vectors, relative to the largest singular value.
pub fn real_rank(vectors: &[TangentVector], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.to_coords().iter().flat_map(|z| [z.re, z.im]).collect())
        .collect();
    let m = DMatrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i]);
    let s = m.svd(false, false).singular_values;
    let top = s.iter().copied().fold(0.0_f64, f64::max);
    if top < 1e-12 {
        return 0;
    }
    s.iter().filter(|&&v| v > tol * top).count()
}

pub const FIELD_ZERO_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianReport {
    /// `max |ω(ξ_X, η_X)|` over basis pairs.
    pub max_omega: f64,
    /// Real dimension of the span of the fields `ξ_X`.
    pub orbit_dim: usize,
    /// Real dimension of the span of `ξ_X` and `J ξ_X`.
    pub complex_orbit_dim: usize,
    /// Smallest `ω(ξ_X, J ξ_X)` over basis elements with nonzero field.
    pub min_normal_hessian: f64,
    pub passed: bool,
}

fn basis_fields(z: &TuplePoint) -> Vec<TangentVector> {
    (0..6).map(|k| real_vector_field(&AlgebraVector::basis(k), z)).collect()
}

/// `max |ω(ξ_X, η_X)|` over pairs of basis fields at any point of the tube.
pub fn field_isotropy(z: &TuplePoint) -> Result<f64> {
    let fields = basis_fields(z);
    let mut max_omega: f64 = 0.0;
    for i in 0..6 {
        for j in (i + 1)..6 {
            max_omega = max_omega.max(omega_eval(z, &fields[i], &fields[j])?.abs());
        }
    }
    Ok(max_omega)
}

/// Isotropy of the real orbit through a reduced point, its dimension count,
/// and positivity of `φ` in the normal directions.
pub fn lagrangian_check(r: &ReductionResult, tol: f64) -> Result<LagrangianReport> {
    if !r.converged {
        return Err(Error::Precondition("lagrangian check needs a converged reduction".into()));
    }
    let z = &r.reduced_point;
    let fields = basis_fields(z);
    let max_omega = field_isotropy(z)?;
    let mut min_normal = f64::INFINITY;
    for v in fields.iter().filter(|v| v.norm() > FIELD_ZERO_TOL) {
        min_normal = min_normal.min(omega_eval(z, v, &apply_j(v))?);
    }
    let orbit_dim = real_rank(&fields, 1e-8);
    let mut both = fields.clone();
    both.extend(fields.iter().map(apply_j));
    let complex_orbit_dim = real_rank(&both, 1e-8);
    let passed = max_omega <= tol && 2 * orbit_dim == complex_orbit_dim && !(min_normal <= 0.0);
    Ok(LagrangianReport { max_omega, orbit_dim, complex_orbit_dim, min_normal_hessian: min_normal, passed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub moment_norm: f64,
    /// Norm of the finite-difference gradient of `φ` along `ξ_X` and `J ξ_X`.
    pub orbit_gradient_norm: f64,
    pub passed: bool,
}

pub fn critical_iff_moment_zero(z: &TuplePoint, tol: f64) -> Result<CriticalityReport> {
    z.check_in_tube()?;
    let moment_norm = moment_map(z)?.norm();
    let mut sq = 0.0;
    for k in 0..6 {
        let v = real_vector_field(&AlgebraVector::basis(k), z);
        for dir in [v.clone(), apply_j(&v)] {
            let d = directional_derivative(phi, z, &dir)?;
            sq += d.value * d.value;
        }
    }
    let orbit_gradient_norm = sq.sqrt();
    let passed = (moment_norm <= tol) == (orbit_gradient_norm <= tol);
    Ok(CriticalityReport { moment_norm, orbit_gradient_norm, passed })
}

/// Base moment norm under which a point counts as reduced for a section probe.
pub const REDUCED_TOL: f64 = 1e-6;
/// Below this radius the stencil cannot resolve second differences.
pub const MIN_SECTION_RADIUS: f64 = 1e-6;

/// Complex directions at a reduced point, orthonormal for the Levi form of
/// `φ` and orthogonal to the complex orbit tangent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionProbe {
    pub base: TuplePoint,
    pub directions: Vec<TangentVector>,
    pub radius: f64,
}

/// Coefficient vectors in the coordinate basis, Hermitian product `u^T L v̄`.
struct Metric {
    levi: DMatrix<C64>,
}

impl Metric {
    fn dot(&self, u: &[C64], v: &[C64]) -> C64 {
        let mut acc = ZERO;
        for (a, ua) in u.iter().enumerate() {
            for (b, vb) in v.iter().enumerate() {
                acc += ua * vb.conj() * self.levi[(a, b)];
            }
        }
        acc
    }

    /// Orthogonalizes `v` against `basis` and appends it when it survives.
    fn push(&self, basis: &mut Vec<Vec<C64>>, mut v: Vec<C64>, keep_tol: f64) {
        for _ in 0..2 {
            for e in basis.iter() {
                let p = self.dot(&v, e);
                for (x, y) in v.iter_mut().zip(e) {
                    *x -= p * y;
                }
            }
        }
        let n = self.dot(&v, &v).re.max(0.0).sqrt();
        if n > keep_tol {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
}

impl SectionProbe {
    pub fn new(base: &TuplePoint, radius: f64) -> Result<Self> {
        let mu = moment_map(base)?.norm();
        if mu > REDUCED_TOL {
            return Err(Error::Precondition(format!("section base is not reduced (moment norm {mu:e})")));
        }
        let n = base.n();
        let coords = TangentVector::coordinate_basis(n);
        let metric = Metric { levi: levi_form_phi(base, &coords)?.entries().clone() };
        let scale = metric.levi.iter().map(|v| v.norm()).fold(0.0_f64, f64::max).sqrt();

        let mut orbit = Vec::new();
        for k in 0..6 {
            let field = real_vector_field(&AlgebraVector::basis(k), base);
            metric.push(&mut orbit, field.to_coords(), 1e-6 * scale);
        }
        let orbit_len = orbit.len();
        let mut all = orbit;
        for e in &coords {
            metric.push(&mut all, e.to_coords(), 1e-6);
        }
        let directions = all[orbit_len..].iter().map(|v| TangentVector::from_coords(v)).collect();
        Ok(Self { base: base.clone(), directions, radius })
    }

    /// Radius `rel · λ_min / max‖d‖`, so the stencil step is small against the
    /// distance of the base to the boundary whatever the metric scale.
    pub fn scaled(base: &TuplePoint, rel: f64) -> Result<Self> {
        let mut probe = Self::new(base, rel)?;
        let margin = base
            .iter()
            .map(|p| crate::geometry::hermitian_im(p).min_eigenvalue())
            .fold(f64::INFINITY, f64::min);
        let longest = probe.directions.iter().map(TangentVector::norm).fold(0.0, f64::max);
        if longest > 0.0 {
            probe.radius = rel * margin / longest;
        }
        Ok(probe)
    }

    /// Largest deviation from orthonormality and from orthogonality to the orbit.
    pub fn orthonormality_error(&self) -> Result<f64> {
        let mut vecs = self.directions.clone();
        let fields: Vec<TangentVector> =
            (0..6).map(|k| real_vector_field(&AlgebraVector::basis(k), &self.base)).collect();
        vecs.extend(fields);
        let l = levi_form_phi(&self.base, &vecs)?;
        let d = self.directions.len();
        let mut err: f64 = 0.0;
        for a in 0..d {
            for b in 0..vecs.len() {
                let target = if a == b { c(1.0, 0.0) } else { ZERO };
                err = err.max((l.get(a, b) - target).norm());
            }
        }
        Ok(err)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionLeviReport {
    pub dimension: usize,
    pub radius: f64,
    pub insufficient_stencil: bool,
    /// Levi form of the reduced function.
    pub reduced_levi: Option<Vec<Vec<[f64; 2]>>>,
    /// Levi form of `φ`.
    pub phi_levi: Option<Vec<Vec<[f64; 2]>>>,
    pub relative_deviation: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    /// `None` when the probe is degenerate.
    pub passed: Option<bool>,
}

/// Compares the stencil Levi form of `w ↦ min φ` over the orbit of `base + w`
/// with that of `φ` at the base, along the section directions.
pub fn section_levi_identity(
    probe: &SectionProbe,
    opts: &ReductionOptions,
    deviation_tol: f64,
    eig_tol: f64,
) -> Result<SectionLeviReport> {
    let dimension = probe.directions.len();
    if !(probe.radius >= MIN_SECTION_RADIUS) || dimension == 0 {
        return Ok(SectionLeviReport {
            dimension,
            radius: probe.radius,
            insufficient_stencil: true,
            reduced_levi: None,
            phi_levi: None,
            relative_deviation: None,
            min_eigenvalue: None,
            passed: None,
        });
    }
    let reduced = |p: &TuplePoint| -> Result<f64> {
        let r = orbit_minimize(p, opts)?;
        if r.converged {
            Ok(r.phi_min)
        } else {
            Err(Error::NotConverged(format!("inner reduction stopped at moment norm {:e}", r.moment_norm)))
        }
    };
    let a = levi_form(reduced, &probe.base, &probe.directions, probe.radius)?;
    let b = levi_form(phi, &probe.base, &probe.directions, probe.radius)?;
    let dev = a.relative_deviation(&b);
    let min_eig = a.min_eigenvalue();
    Ok(SectionLeviReport {
        dimension,
        radius: probe.radius,
        insufficient_stencil: false,
        reduced_levi: Some(a.to_rows()),
        phi_levi: Some(b.to_rows()),
        relative_deviation: Some(dev),
        min_eigenvalue: Some(min_eig),
        passed: Some(dev <= deviation_tol && min_eig >= -eig_tol),
    })
}

/// Default stencil radius of a section probe.
pub const SECTION_RADIUS: f64 = LEVI_STEP;
