//! The invariant exhaustion `φ(Z) = Σⱼ 1 / det Im Zʲ` and its calculus.
//!
//! Conventions: `d^c φ = i(∂ - ∂̄)φ`, so `d^c φ(V) = dφ(JV)`, and the Kähler
//! form is `ω = 2i∂∂̄φ = -dd^c φ`. For `f = |z|²` on ℂ this gives
//! `ω(1, i) = 4`. The moment map has components `μ_ξ = dφ(Jξ_X)`, i.e. the
//! derivative of `t ↦ φ(exp(itξ) · Z)` at `t = 0`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{c, hermitian_im, HermitianMatrix, TuplePoint, C64, I, ZERO};
use crate::lie::{apply_j, flow_i, real_vector_field, AlgebraVector, TangentVector};

/// First-derivative step sizes used with Richardson extrapolation.
pub const FD_STEPS: (f64, f64) = (1e-4, 5e-5);

/// Default step of the complex Levi stencil.
pub const LEVI_STEP: f64 = 1e-3;

/// Stencil step for `φ` at `z`: [`LEVI_STEP`] scaled down by the distance of
/// the nearest component to the boundary, so the step stays small against
/// the length scale on which `φ` varies.
pub fn levi_step(z: &TuplePoint) -> f64 {
    let margin = z.iter().map(|p| hermitian_im(p).min_eigenvalue()).fold(f64::INFINITY, f64::min);
    LEVI_STEP * margin.clamp(f64::MIN_POSITIVE, 1.0)
}

/// `tr(A B)` for Hermitian `A`, `B`.
fn herm_trace_product(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    a.a * b.a + a.d * b.d + 2.0 * (a.b * b.b.conj()).re
}

fn imaginary_parts(z: &TuplePoint) -> Result<Vec<HermitianMatrix>> {
    z.iter()
        .enumerate()
        .map(|(component, p)| {
            let h = hermitian_im(p);
            if h.is_positive_definite() {
                Ok(h)
            } else {
                Err(Error::OutsideTube { component, det_im: h.det() })
            }
        })
        .collect()
}

/// `φ(Z) = Σⱼ 1 / det Im Zʲ`. Errors when `Z` is not in the tube.
pub fn phi(z: &TuplePoint) -> Result<f64> {
    Ok(imaginary_parts(z)?.iter().map(|h| 1.0 / h.det()).sum())
}

/// Analytic differential `dφ(Z)[V] = -Σⱼ tr(Pⱼ⁻¹ Im Vʲ) / det Pⱼ`.
pub fn dphi(z: &TuplePoint, v: &TangentVector) -> Result<f64> {
    let parts = imaginary_parts(z)?;
    let mut total = 0.0;
    for (p, dv) in parts.iter().zip(v.iter()) {
        let det = p.det();
        let p_inv = p.inverse().ok_or_else(|| Error::Singular("Im Z".into()))?;
        total -= herm_trace_product(&p_inv, &hermitian_im(dv)) / det;
    }
    Ok(total)
}

/// `d^c φ(V) = dφ(JV)`.
pub fn dc_phi(z: &TuplePoint, v: &TangentVector) -> Result<f64> {
    dphi(z, &apply_j(v))
}

/// A finite-difference estimate together with its Richardson error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    pub value: f64,
    pub error: f64,
}

fn probe<T>(r: Result<T>, what: &str) -> Result<T> {
    r.map_err(|e| {
        if e.is_domain_exit() {
            Error::ProbeExitedDomain(format!("{what}: {e}"))
        } else {
            e
        }
    })
}

/// Derivative at 0 of a scalar function of one real variable: central
/// differences at `h = 1e-4` and `5e-5`, combined by Richardson extrapolation.
pub fn derivative_1d<F>(f: F) -> Result<Derivative>
where
    F: Fn(f64) -> Result<f64>,
{
    let (h1, h2) = FD_STEPS;
    let central = |h: f64| -> Result<f64> {
        let fp = probe(f(h), "forward step")?;
        let fm = probe(f(-h), "backward step")?;
        Ok((fp - fm) / (2.0 * h))
    };
    let d1 = central(h1)?;
    let d2 = central(h2)?;
    let value = (4.0 * d2 - d1) / 3.0;
    Ok(Derivative { value, error: (value - d2).abs() })
}

/// Directional derivative of a scalar field along a constant tangent vector.
pub fn directional_derivative<F>(f: F, z: &TuplePoint, v: &TangentVector) -> Result<Derivative>
where
    F: Fn(&TuplePoint) -> Result<f64>,
{
    derivative_1d(|t| f(&z.offset(v, c(t, 0.0))))
}

/// The six components `⟨μ(Z), e_k⟩` over the fixed algebra basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MomentValue(pub [f64; 6]);

impl MomentValue {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `⟨μ, ξ⟩`; the pairing is linear in the algebra coefficients.
    pub fn pair(&self, xi: &AlgebraVector) -> f64 {
        self.0.iter().zip(xi.0.iter()).map(|(m, x)| m * x).sum()
    }

    /// The descent direction `Σ μ_k e_k` as an algebra vector.
    pub fn as_algebra(&self) -> AlgebraVector {
        AlgebraVector(self.0)
    }
}

/// `μ_ξ(Z) = dφ(J ξ_X)`.
pub fn moment_component(z: &TuplePoint, xi: &AlgebraVector) -> Result<f64> {
    dphi(z, &apply_j(&real_vector_field(xi, z)))
}

pub fn moment_map(z: &TuplePoint) -> Result<MomentValue> {
    let mut out = [0.0; 6];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = moment_component(z, &AlgebraVector::basis(k))?;
    }
    Ok(MomentValue(out))
}

/// Finite-difference oracle for `μ_ξ`: `d/dt φ(exp(itξ) · Z)` at `t = 0`.
pub fn moment_component_fd(z: &TuplePoint, xi: &AlgebraVector) -> Result<Derivative> {
    derivative_1d(|t| phi(&flow_i(xi, t, z)))
}

/// A Hermitian matrix of second-order coefficients `∂²f / ∂s_a ∂s̄_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeviForm {
    entries: DMatrix<C64>,
}

impl LeviForm {
    /// Symmetrizes `(M + M†) / 2`.
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        let sym = (&m + m.adjoint()) * c(0.5, 0.0);
        Self { entries: sym }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.entries[(a, b)]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let eig = self.entries.clone().symmetric_eigen();
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::NAN)
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖self - other‖_F / ‖other‖_F`.
    pub fn relative_deviation(&self, other: &LeviForm) -> f64 {
        let diff: f64 = self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        diff / other.frobenius()
    }

    /// Entries as `[re, im]` pairs, row-major, for reports.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim())
            .map(|a| (0..self.dim()).map(|b| [self.get(a, b).re, self.get(a, b).im]).collect())
            .collect()
    }
}

/// Levi form of `f` at `z` along the complex directions `basis`, by a complex
/// finite-difference stencil of step `h`.
///
/// Diagonal entries use the five-point Laplacian in the complex line,
/// off-diagonal entries the four cross stencils over `s, t ∈ {±h, ±ih}`.
/// Stencil points are evaluated in parallel.
pub fn levi_form<F>(f: F, z: &TuplePoint, basis: &[TangentVector], h: f64) -> Result<LeviForm>
where
    F: Fn(&TuplePoint) -> Result<f64> + Sync,
{
    let d = basis.len();
    let steps = [c(h, 0.0), c(-h, 0.0), c(0.0, h), c(0.0, -h)];

    // (a, b, s, t) with b = None on the diagonal
    let mut jobs: Vec<(usize, Option<usize>, C64, C64)> = Vec::new();
    for a in 0..d {
        for s in steps {
            jobs.push((a, None, s, ZERO));
        }
        for b in (a + 1)..d {
            for s in steps {
                for t in steps {
                    jobs.push((a, Some(b), s, t));
                }
            }
        }
    }

    let center = probe(f(z), "stencil center")?;
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(a, b, s, t)| {
            let mut p = z.offset(&basis[a], s);
            if let Some(b) = b {
                p = p.offset(&basis[b], t);
            }
            probe(f(&p), "levi stencil")
        })
        .collect::<Result<_>>()?;

    let mut m = DMatrix::from_element(d, d, ZERO);
    let mut idx = 0;
    let inv = 1.0 / (4.0 * h * h);
    for a in 0..d {
        let lap: f64 = values[idx..idx + 4].iter().sum::<f64>() - 4.0 * center;
        idx += 4;
        m[(a, a)] = c(lap * inv, 0.0);
        for b in (a + 1)..d {
            // values ordered by steps = [+h, -h, +ih, -ih] for s (outer) and t
            let v = |si: usize, ti: usize| values[idx + 4 * si + ti];
            let cross = |s0: usize, t0: usize| {
                (v(s0, t0) - v(s0, t0 + 1) - v(s0 + 1, t0) + v(s0 + 1, t0 + 1)) * inv
            };
            let f_xu = cross(0, 0);
            let f_xv = cross(0, 2);
            let f_yu = cross(2, 0);
            let f_yv = cross(2, 2);
            idx += 16;
            let entry = c(f_xu + f_yv, f_xv - f_yu) * 0.25;
            m[(a, b)] = entry;
            m[(b, a)] = entry.conj();
        }
    }
    Ok(LeviForm::from_matrix(m))
}

/// Closed-form Levi form of `φ`: for each component with `P = Im Z`,
/// `A = U / 2i`, the coefficient is
/// `(tr(P⁻¹A_a) conj tr(P⁻¹A_b) + tr(P⁻¹A_b† P⁻¹A_a)) / det P`.
pub fn levi_form_phi(z: &TuplePoint, basis: &[TangentVector]) -> Result<LeviForm> {
    let parts = imaginary_parts(z)?;
    let data: Vec<_> = parts
        .iter()
        .map(|p| {
            let inv = p.inverse().expect("positive definite").to_mat();
            (inv, 1.0 / p.det())
        })
        .collect();
    let half_over_i = c(0.0, -0.5);
    let d = basis.len();
    let mut m = DMatrix::from_element(d, d, ZERO);
    for a in 0..d {
        for b in a..d {
            let mut acc = ZERO;
            for (j, (p_inv, inv_det)) in data.iter().enumerate() {
                let aa = basis[a].vectors()[j].scale(half_over_i);
                let ab = basis[b].vectors()[j].scale(half_over_i);
                let ta = (*p_inv * aa).trace();
                let tb = (*p_inv * ab).trace();
                let cross = (*p_inv * ab.adjoint() * *p_inv * aa).trace();
                acc += (ta * tb.conj() + cross) * *inv_det;
            }
            m[(a, b)] = acc;
            m[(b, a)] = acc.conj();
        }
    }
    Ok(LeviForm::from_matrix(m))
}

/// `ω(V, W) = -[D_V(d^cφ(W)) - D_W(d^cφ(V))]` with `D` the finite-difference
/// directional derivative and `V`, `W` extended as constant fields.
pub fn omega_eval(z: &TuplePoint, v: &TangentVector, w: &TangentVector) -> Result<f64> {
    let dv = directional_derivative(|p| dc_phi(p, w), z, v)?;
    let dw = directional_derivative(|p| dc_phi(p, v), z, w)?;
    Ok(-(dv.value - dw.value))
}

/// Calibration of `ω` on ℂ for `f = |z|²`, with the same finite-difference
/// route as [`omega_eval`]. Used to pin sign and factor conventions.
pub fn omega_calibration(v: C64, w: C64, at: C64) -> Result<f64> {
    // d^c f(W)(z) = df(iW)(z) = 2 Re(conj(z) i W)
    let dc = |z: C64, dir: C64| 2.0 * (z.conj() * I * dir).re;
    let dv = derivative_1d(|t| Ok(dc(at + v * t, w)))?;
    let dw = derivative_1d(|t| Ok(dc(at + w * t, v)))?;
    Ok(-(dv.value - dw.value))
}

/// Sampled behaviour of `t ↦ μ_ξ(exp(itξ) · Z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub displacements: Vec<f64>,
    pub nondecreasing: bool,
    pub strictly_increasing_where_moving: bool,
    /// Whether the flow left the tube before `t_max`.
    pub truncated: bool,
    pub tolerances: FlowTolerances,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowTolerances {
    pub slack: f64,
    pub displacement: f64,
}

impl Default for FlowTolerances {
    fn default() -> Self {
        Self { slack: 1e-9, displacement: 1e-9 }
    }
}

impl FlowReport {
    pub fn verdict(&self) -> bool {
        self.nondecreasing && self.strictly_increasing_where_moving
    }
}

pub fn flow_monotonicity(xi: &AlgebraVector, z: &TuplePoint, t_max: f64, steps: usize) -> Result<FlowReport> {
    flow_monotonicity_with(xi, z, t_max, steps, FlowTolerances::default())
}

/// [`flow_monotonicity`] with explicit tolerances.
pub fn flow_monotonicity_with(
    xi: &AlgebraVector,
    z: &TuplePoint,
    t_max: f64,
    steps: usize,
    tol: FlowTolerances,
) -> Result<FlowReport> {
    z.check_in_tube()?;
    let n_points = if t_max == 0.0 || steps == 0 { 1 } else { steps + 1 };
    let mut grid = Vec::with_capacity(n_points);
    let mut values = Vec::with_capacity(n_points);
    let mut points: Vec<TuplePoint> = Vec::with_capacity(n_points);
    let mut truncated = false;
    for i in 0..n_points {
        let t = if n_points == 1 { 0.0 } else { t_max * i as f64 / steps as f64 };
        let zt = flow_i(xi, t, z);
        match moment_component(&zt, xi) {
            Ok(m) => {
                grid.push(t);
                values.push(m);
                points.push(zt);
            }
            Err(e) if e.is_domain_exit() => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let displacements: Vec<f64> = points.windows(2).map(|w| w[1].distance(&w[0])).collect();
    let nondecreasing = values.windows(2).all(|w| w[1] >= w[0] - tol.slack);
    let strictly = values
        .windows(2)
        .zip(displacements.iter())
        .all(|(w, &d)| d <= tol.displacement || w[1] > w[0]);
    Ok(FlowReport {
        grid,
        values,
        displacements,
        nondecreasing,
        strictly_increasing_where_moving: strictly,
        truncated,
        tolerances: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ONE;
    use crate::geometry::Mat2;

    fn ii() -> Mat2 {
        Mat2::scalar(I)
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(&TuplePoint::repeat(ii(), 2)).unwrap(), 2.0);
        assert_eq!(phi(&TuplePoint::single(Mat2::scalar(c(0.0, 2.0)))).unwrap(), 0.25);
        let z = TuplePoint::single(Mat2::new(I, ONE, ZERO, I));
        assert!((phi(&z).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let out = TuplePoint::new(vec![ii(), Mat2::identity()]).unwrap();
        assert!(matches!(phi(&out), Err(Error::OutsideTube { component: 1, .. })));
    }

    #[test]
    fn dphi_examples() {
        let z = TuplePoint::single(ii());
        let herm = TangentVector::new(vec![Mat2::new(c(1.0, 0.0), c(2.0, 1.0), c(2.0, -1.0), c(-3.0, 0.0))]);
        assert_eq!(dphi(&z, &herm).unwrap(), 0.0);
        let v = TangentVector::new(vec![ii()]);
        assert_eq!(dphi(&z, &v).unwrap(), -2.0);
    }

    #[test]
    fn directional_derivative_examples() {
        let z = TuplePoint::single(Mat2::new(c(0.3, 1.0), ONE, ZERO, I));
        let first = |p: &TuplePoint| Ok(p.points()[0].get(0, 0).re);
        let d = directional_derivative(first, &z, &TangentVector::coordinate(1, 0)).unwrap();
        assert!((d.value - 1.0).abs() < 1e-10);
        let d0 = directional_derivative(phi, &z, &TangentVector::zero(1)).unwrap();
        assert_eq!(d0.value, 0.0);
    }

    #[test]
    fn moment_examples() {
        assert_eq!(moment_map(&TuplePoint::single(ii())).unwrap().norm(), 0.0);
        let p = Mat2::new(c(2.0, 0.0), c(0.5, 0.3), c(0.5, -0.3), c(1.0, 0.0));
        let m = moment_map(&TuplePoint::single(p.scale(I))).unwrap();
        assert!(m.norm() < 1e-14);
        let z = TuplePoint::single(Mat2::identity() + Mat2::diag(c(0.0, 2.0), c(0.0, 0.5)));
        let mu = moment_map(&z).unwrap();
        assert!((mu.0[0] - 3.0).abs() < 1e-12);
        let fd = moment_component_fd(&z, &AlgebraVector::basis(0)).unwrap();
        assert!((fd.value - 3.0).abs() < 1e-8);
    }

    #[test]
    fn levi_calibration() {
        // f(z) = |first entry|^2 on a one-dimensional probe
        let z = TuplePoint::single(Mat2::new(c(0.4, -0.2), ZERO, ZERO, ZERO));
        let f = |p: &TuplePoint| Ok(p.points()[0].get(0, 0).norm_sqr());
        let basis = [TangentVector::coordinate(1, 0)];
        let l = levi_form(f, &z, &basis, LEVI_STEP).unwrap();
        assert!((l.get(0, 0) - ONE).norm() < 1e-9);

        let lin = |p: &TuplePoint| Ok((p.points()[0].get(0, 1) * c(2.0, -1.0)).re);
        let basis = TangentVector::coordinate_basis(1);
        let l = levi_form(lin, &z, &basis, LEVI_STEP).unwrap();
        assert!(l.frobenius() < 1e-9);
    }

    #[test]
    fn levi_of_phi_is_positive_at_identity() {
        let z = TuplePoint::single(ii());
        let basis = TangentVector::coordinate_basis(1);
        let stencil = levi_form(phi, &z, &basis, LEVI_STEP).unwrap();
        let exact = levi_form_phi(&z, &basis).unwrap();
        assert!(stencil.min_eigenvalue() > 0.0);
        assert!(stencil.relative_deviation(&exact) < 1e-4);
        // along iI: φ = (1+x)^-2, Laplacian / 4 = 1.5
        let diag = TangentVector::new(vec![ii()]);
        let l = levi_form_phi(&z, &[diag]).unwrap();
        assert!((l.get(0, 0).re - 1.5).abs() < 1e-14);
    }

    #[test]
    fn omega_calibration_value() {
        let w = omega_calibration(ONE, I, c(0.3, -0.7)).unwrap();
        assert!((w - 4.0).abs() < 1e-8);
    }

    #[test]
    fn omega_is_antisymmetric() {
        let z = TuplePoint::single(Mat2::new(c(0.1, 1.2), c(0.3, 0.1), c(-0.2, 0.0), c(0.5, 0.9)));
        let v = TangentVector::new(vec![Mat2::new(ONE, c(0.2, 0.0), ZERO, c(0.0, 0.3))]);
        let w = TangentVector::new(vec![Mat2::new(c(0.0, 0.4), ONE, c(0.5, 0.1), ZERO)]);
        assert_eq!(omega_eval(&z, &v, &v).unwrap(), 0.0);
        let a = omega_eval(&z, &v, &w).unwrap();
        let b = omega_eval(&z, &w, &v).unwrap();
        assert!((a + b).abs() < 1e-12);
        assert!(omega_eval(&z, &v, &apply_j(&v)).unwrap() > 0.0);
    }

    #[test]
    fn flow_examples() {
        let z = TuplePoint::single(ii());
        let fixed = flow_monotonicity(&AlgebraVector::basis(3), &z, 1.0, 10).unwrap();
        assert!(fixed.values.iter().all(|v| v.abs() < 1e-12));
        assert!(fixed.verdict());

        let single = flow_monotonicity(&AlgebraVector::basis(0), &z, 0.0, 10).unwrap();
        assert_eq!(single.values.len(), 1);
        assert!(single.verdict());

        let moving = flow_monotonicity(&AlgebraVector::basis(0), &z, 0.5, 20).unwrap();
        assert!(moving.verdict());
        assert!(moving.values.last().unwrap() > moving.values.first().unwrap());
    }
}
