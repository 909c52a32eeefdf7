use proptest::prelude::*;

use tube_core::boundary::{normal_form, triangular_bounds_check};
use tube_core::lie::{act_complex, act_real, exp_algebra, flow_i, GroupPair};
use tube_core::psh::{flow_monotonicity, levi_form_phi, moment_map, phi};
use tube_core::quotient::{gram_map, kempf_ness_minimize, KempfNessOptions};
use tube_core::reduction::{orbit_minimize, ReductionOptions};
use tube_core::rng::{random_tube_tuple, sample_stream};
use tube_core::{in_tube, lorentz_product, AlgebraVector, FourVector, Mat2, TangentVector, TuplePoint, C64, I};

fn complex() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn matrix() -> impl Strategy<Value = Mat2> {
    [complex(), complex(), complex(), complex()].prop_map(Mat2::from_entries)
}

fn hermitian() -> impl Strategy<Value = Mat2> {
    matrix().prop_map(|m| (m + m.adjoint()).scale_re(0.5))
}

/// `R + iP` with `R` Hermitian and `P = AA† + εI` positive definite.
fn tube_point() -> impl Strategy<Value = Mat2> {
    (hermitian(), matrix(), 0.05..1.0f64).prop_map(|(r, a, eps)| {
        let p = a * a.adjoint() + Mat2::identity().scale_re(eps);
        r + p.scale(I)
    })
}

fn tube_tuple(max_n: usize) -> impl Strategy<Value = TuplePoint> {
    prop::collection::vec(tube_point(), 1..=max_n).prop_map(|v| TuplePoint::new(v).unwrap())
}

fn algebra(scale: f64) -> impl Strategy<Value = AlgebraVector> {
    prop::array::uniform6(-scale..scale).prop_map(AlgebraVector)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn determinant_is_the_lorentz_square(z in [complex(), complex(), complex(), complex()]) {
        let v = FourVector(z);
        let q = lorentz_product(&v, &v);
        prop_assert!((v.to_matrix().det() - q).norm() <= 1e-12 * (1.0 + q.norm()));
        let back = FourVector::from_matrix(&v.to_matrix());
        for k in 0..4 {
            prop_assert!((back.0[k] - z[k]).norm() <= 1e-14 * (1.0 + z[k].norm()));
        }
    }

    #[test]
    fn real_action_preserves_tube_and_phi(z in tube_tuple(3), xi in algebra(0.7)) {
        let g = exp_algebra(&xi, 1.0);
        let moved = act_real(&g, &z).unwrap();
        prop_assert!(moved.in_tube());
        prop_assert!(rel(phi(&moved).unwrap(), phi(&z).unwrap()) <= 1e-9);
    }

    #[test]
    fn gram_map_is_invariant(z in prop::collection::vec(matrix(), 1..4), a in algebra(0.5), b in algebra(0.5)) {
        let z = TuplePoint::new(z).unwrap();
        let p = GroupPair::exp(&a, &b);
        let g0 = gram_map(&z);
        let g1 = gram_map(&act_complex(&p, &z).unwrap());
        prop_assert!(g0.distance(&g1) <= 1e-9 * (1.0 + g0.frobenius()));
    }

    #[test]
    fn complex_action_composes(z in prop::collection::vec(matrix(), 1..4), a in algebra(0.5), b in algebra(0.5), c in algebra(0.5)) {
        let z = TuplePoint::new(z).unwrap();
        let p = GroupPair::exp(&a, &b);
        let q = GroupPair::exp(&c, &a);
        let nested = act_complex(&p, &act_complex(&q, &z).unwrap()).unwrap();
        let direct = act_complex(&p.compose(&q), &z).unwrap();
        prop_assert!(nested.distance(&direct) <= 1e-10 * (1.0 + direct.norm_sqr().sqrt()));
    }

    #[test]
    fn imaginary_tuples_lie_on_the_zero_level(a in prop::collection::vec((matrix(), 0.05..1.0f64), 1..4)) {
        let pts = a.into_iter().map(|(m, eps)| (m * m.adjoint() + Mat2::identity().scale_re(eps)).scale(I)).collect();
        let z = TuplePoint::new(pts).unwrap();
        prop_assert!(moment_map(&z).unwrap().norm() <= 1e-10 * (1.0 + phi(&z).unwrap()));
    }

    #[test]
    fn levi_form_is_positive_definite(z in tube_tuple(3)) {
        let basis = TangentVector::coordinate_basis(z.n());
        let levi = levi_form_phi(&z, &basis).unwrap();
        prop_assert!(levi.min_eigenvalue() > 0.0);
    }

    #[test]
    fn moment_component_increases_along_the_flow(z in tube_tuple(2), xi in algebra(1.0)) {
        prop_assume!(xi.norm() > 1e-3);
        let r = flow_monotonicity(&xi, &z, 0.5, 20).unwrap();
        prop_assert!(r.verdict());
        // the flow stays in the tube for these times or the report says why not
        prop_assert!(r.truncated || flow_i(&xi, 0.5, &z).in_tube());
    }

    #[test]
    fn normal_form_is_balanced_upper_triangular(w in tube_point()) {
        let nf = normal_form(&w).unwrap();
        prop_assert!(nf.reconstruction_error(&w) <= 1e-9);
        prop_assert!(nf.x.get(1, 0).norm() <= 1e-10 * (1.0 + w.max_abs()));
        let (a, d) = (nf.x.get(0, 0).norm(), nf.x.get(1, 1).norm());
        prop_assert!((a - d).abs() <= 1e-8 * a.max(d));
        prop_assert!(in_tube(&nf.x));
        let b = triangular_bounds_check(&nf.x).unwrap();
        prop_assert!(b.lower_holds && b.upper_holds);
    }

    #[test]
    fn kempf_ness_never_raises_the_norm(z in prop::collection::vec(matrix(), 1..4)) {
        let z = TuplePoint::new(z).unwrap();
        let r = kempf_ness_minimize(&z, &KempfNessOptions::default());
        prop_assert!(r.monotone);
        prop_assert!(r.achieved_norm_sq <= r.initial_norm_sq);
    }

    #[test]
    fn reduction_does_not_exceed_the_start(seed in any::<u64>(), n in 1usize..3) {
        let mut rng = sample_stream(seed, "properties", 0);
        let z = random_tube_tuple(&mut rng, n);
        let r = orbit_minimize(&z, &ReductionOptions::default()).unwrap();
        prop_assert!(r.phi_min <= phi(&z).unwrap() * (1.0 + 1e-12));
        prop_assert!(r.reduced_point.in_tube());
        if r.converged {
            prop_assert!(r.moment_norm <= ReductionOptions::default().moment_tol);
        }
    }

    #[test]
    fn sample_streams_are_reproducible(seed in any::<u64>(), index in 0u64..1000) {
        let mut a = sample_stream(seed, "suite", index);
        let mut b = sample_stream(seed, "suite", index);
        prop_assert_eq!(random_tube_tuple(&mut a, 2), random_tube_tuple(&mut b, 2));
    }
}
