use rand_pcg::Pcg32;
use serde_json::{json, Value};

use super::{rel, Ctx, Outcome, Status, SuiteDef};
use crate::boundary::{
    boundary_scan, normal_form, pair_transfer, triangular_bounds_check, BoundaryOptions, Parameter, SequenceSpec,
    Verdict,
};
use crate::error::{Error, Result};
use crate::geometry::{c, hermitian_im, lorentz_product, Mat2, TuplePoint, I, ONE, ZERO};
use crate::lie::{act_complex, act_real, adjoint, AlgebraVector, TangentVector};
use crate::psh::{
    dphi, directional_derivative, flow_monotonicity_with, levi_form, levi_form_phi, moment_component,
    moment_component_fd, moment_map, phi, levi_step, FlowTolerances, LEVI_STEP,
};
use crate::quotient::{
    gram_map, gram_rank, kempf_ness_minimize, saturation_probe, KempfNessOptions, OrbitClass, SaturationOptions,
    DEFAULT_RANK_TOL,
};
use crate::reduction::{
    big_psi, critical_iff_moment_zero, field_isotropy, lagrangian_check, orbit_minimize, section_levi_identity,
    ReductionOptions, SectionProbe,
};
use crate::rng::{
    random_algebra, random_four_vector, random_group_pair, random_imaginary_tuple, random_sl2, random_su2,
    random_tube_point, random_tube_tuple, random_tuple,
};

pub(crate) static SUITES: &[SuiteDef] = &[
    SuiteDef {
        name: "coordinate-identities",
        description: "det Z = <z,z>, coordinate round trips, invariance of phi and of the Gram map",
        default_samples: 10_000,
        min_n: 1,
        tolerances: &[
            ("det_identity", 1e-12),
            ("round_trip", 1e-14),
            ("im_det", 1e-12),
            ("phi_invariance", 1e-10),
            ("im_equivariance", 1e-10),
            ("gram_invariance", 1e-9),
            ("action_composition", 1e-10),
        ],
        allowed_inconclusive: 0.0,
        examples: no_examples,
        sample: coordinate_sample,
    },
    SuiteDef {
        name: "psh-levi",
        description: "strict plurisubharmonicity of phi: stencil and closed-form Levi forms",
        default_samples: 500,
        min_n: 1,
        tolerances: &[("stencil_vs_closed_form", 1e-3), ("dphi_oracle", 1e-6)],
        allowed_inconclusive: 0.0,
        examples: psh_examples,
        sample: psh_sample,
    },
    SuiteDef {
        name: "moment-oracle",
        description: "analytic moment map against finite differences, zero level, equivariance",
        default_samples: 1_000,
        min_n: 1,
        tolerances: &[("fd_agreement", 1e-6), ("zero_level", 1e-10), ("equivariance", 1e-6), ("calibration", 1e-5)],
        allowed_inconclusive: 0.0,
        examples: moment_examples,
        sample: moment_sample,
    },
    SuiteDef {
        name: "flow-monotone",
        description: "monotonicity of the moment component along the complexified flow",
        default_samples: 200,
        min_n: 1,
        tolerances: &[("slack", 1e-9), ("displacement", 1e-9)],
        allowed_inconclusive: 0.0,
        examples: flow_examples,
        sample: flow_sample,
    },
    SuiteDef {
        name: "reduce-minimum",
        description: "orbit minimization of phi, agreement across real translates, isotropy at the minimum",
        default_samples: 50,
        min_n: 1,
        tolerances: &[
            ("phi_min_unipotent", 1e-4),
            ("phi_min_scaled", 1e-6),
            ("moment", 1e-6),
            ("translate_agreement", 1e-5),
            ("isotropy", 1e-5),
            ("psi_invariance", 1e-4),
        ],
        allowed_inconclusive: 0.0,
        examples: reduce_examples,
        sample: reduce_sample,
    },
    SuiteDef {
        name: "levi-identity",
        description: "Levi form of the fiberwise minimum against that of phi on a transverse section",
        default_samples: 1,
        min_n: 1,
        tolerances: &[("deviation", 1e-3), ("min_eigenvalue", 1e-6), ("orthonormality", 1e-8)],
        allowed_inconclusive: 0.0,
        examples: levi_identity_examples,
        sample: levi_identity_sample,
    },
    SuiteDef {
        name: "lagrangian",
        description: "isotropy and dimension of the real orbit through reduced points; criticality",
        default_samples: 50,
        min_n: 1,
        tolerances: &[("isotropy", 1e-5), ("criticality", 1e-6)],
        allowed_inconclusive: 0.0,
        examples: lagrangian_examples,
        sample: lagrangian_sample,
    },
    SuiteDef {
        name: "kempf-ness",
        description: "norm minimization over the complex group and closed-orbit classification",
        default_samples: 200,
        min_n: 3,
        tolerances: &[("norm", 1e-6)],
        allowed_inconclusive: 0.05,
        examples: kempf_ness_examples,
        sample: kempf_ness_sample,
    },
    SuiteDef {
        name: "saturation-probe",
        description: "closed orbits in orbit closures of tube points meet the tube",
        default_samples: 50,
        min_n: 1,
        tolerances: &[("gram_distance", 1e-6)],
        allowed_inconclusive: 0.05,
        examples: saturation_examples,
        sample: saturation_sample,
    },
    SuiteDef {
        name: "normal-form",
        description: "unitary normal form with balancing, triangular bounds, pair transfer",
        default_samples: 1_000,
        min_n: 1,
        tolerances: &[
            ("reconstruction", 1e-9),
            ("lower_left", 1e-10),
            ("balance", 1e-8),
            ("star_action", 1e-12),
            ("trace_det", 1e-9),
        ],
        allowed_inconclusive: 0.0,
        examples: normal_form_examples,
        sample: normal_form_sample,
    },
    SuiteDef {
        name: "boundary-weak-exhaustion",
        description: "the reduced function grows past every threshold along sequences leaving the tube",
        default_samples: 10,
        min_n: 1,
        tolerances: &[("phi_exact", 1e-12)],
        allowed_inconclusive: 0.0,
        examples: weak_exhaustion_examples,
        sample: weak_exhaustion_sample,
    },
    SuiteDef {
        name: "boundary-mod-greal",
        description: "normalized representatives of bounded-phi sequences stay in a compact box",
        default_samples: 10,
        min_n: 1,
        tolerances: &[("compact_bound", 1e3), ("det_floor", 1e-6)],
        allowed_inconclusive: 0.0,
        examples: mod_greal_examples,
        sample: mod_greal_sample,
    },
];

fn no_examples(_: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    Vec::new()
}

fn ii() -> Mat2 {
    Mat2::scalar(I)
}

fn rows(m: &Mat2) -> Value {
    json!(m)
}

/// `‖a − b‖ / (1 + ‖b‖)` for tuples.
fn tuple_rel(a: &TuplePoint, b: &TuplePoint) -> f64 {
    a.distance(b) / (1.0 + b.norm_sqr().sqrt())
}

// coordinate-identities

fn coordinate_sample(ctx: &Ctx, rng: &mut Pcg32, index: usize) -> Result<Outcome> {
    let n = ctx.n_for(index, &[1, 2, 3]);
    let z = random_four_vector(rng);
    let m = z.to_matrix();
    let q = lorentz_product(&z, &z);
    let det_err = (m.det() - q).norm() / (1.0 + q.norm());
    let back = crate::geometry::FourVector::from_matrix(&m);
    let scale = 1.0 + z.0.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let round_trip = z.0.iter().zip(back.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
    let im = z.im();
    let im_det = hermitian_im(&m).det();
    let im_q = lorentz_product(&im, &im).re;
    let im_det_err = (im_det - im_q).abs() / (1.0 + im_q.abs());

    let tube = random_tube_tuple(rng, n);
    let det_bound = tube.iter().all(|p| hermitian_im(p).det() <= p.det().norm() * (1.0 + 1e-12));
    let g = random_sl2(rng, 0.5);
    let moved = act_real(&g, &tube)?;
    let stays = moved.in_tube();
    let phi_err = rel(phi(&moved)?, phi(&tube)?);
    let ga = g.adjoint();
    let im_eq = moved
        .iter()
        .zip(tube.iter())
        .map(|(a, b)| {
            let expect = g * hermitian_im(b).to_mat() * ga;
            (hermitian_im(a).to_mat() - expect).norm() / (1.0 + expect.norm())
        })
        .fold(0.0, f64::max);

    let w = random_tuple(rng, n);
    let p1 = random_group_pair(rng, 0.5);
    let p2 = random_group_pair(rng, 0.5);
    let gw = gram_map(&w);
    let gram_err = gram_map(&act_complex(&p1, &w)?).distance(&gw) / (1.0 + gw.frobenius());
    let nested = act_complex(&p1, &act_complex(&p2, &w)?)?;
    let composed = act_complex(&p1.compose(&p2), &w)?;
    let comp_err = tuple_rel(&nested, &composed);

    let ok = det_err <= ctx.tol("det_identity")
        && round_trip <= ctx.tol("round_trip")
        && im_det_err <= ctx.tol("im_det")
        && det_bound
        && stays
        && phi_err <= ctx.tol("phi_invariance")
        && im_eq <= ctx.tol("im_equivariance")
        && gram_err <= ctx.tol("gram_invariance")
        && comp_err <= ctx.tol("action_composition");
    Ok(Outcome::from_bool(
        ok,
        json!({
            "n": n,
            "det_identity": det_err,
            "round_trip": round_trip,
            "im_det": im_det_err,
            "det_im_below_abs_det": det_bound,
            "real_action_stays_in_tube": stays,
            "phi_invariance": phi_err,
            "im_equivariance": im_eq,
            "gram_invariance": gram_err,
            "action_composition": comp_err,
        }),
    ))
}

// psh-levi

fn psh_examples(ctx: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    let at_identity = (|| {
        let z = TuplePoint::single(ii());
        let basis = TangentVector::coordinate_basis(1);
        let stencil = levi_form(phi, &z, &basis, LEVI_STEP)?;
        let exact = levi_form_phi(&z, &basis)?;
        let dev = stencil.relative_deviation(&exact);
        let along = levi_form_phi(&z, &[TangentVector::new(vec![Mat2::identity()])])?.get(0, 0).re;
        Ok(Outcome::from_bool(
            dev <= ctx.tol("stencil_vs_closed_form") && stencil.min_eigenvalue() > 0.0 && (along - 1.5).abs() < 1e-12,
            json!({
                "stencil_min_eigenvalue": stencil.min_eigenvalue(),
                "closed_form_eigenvalues": exact.eigenvalues(),
                "deviation": dev,
                "levi_along_identity": along,
            }),
        ))
    })();
    vec![("identity", at_identity)]
}

fn psh_sample(ctx: &Ctx, rng: &mut Pcg32, index: usize) -> Result<Outcome> {
    let n = ctx.n_for(index, &[1, 2, 3]);
    let z = random_tube_tuple(rng, n);
    let basis = TangentVector::coordinate_basis(n);
    let stencil = levi_form(phi, &z, &basis, levi_step(&z))?;
    let exact = levi_form_phi(&z, &basis)?;
    let dev = stencil.relative_deviation(&exact);
    let v = TangentVector::new((0..n).map(|_| crate::rng::random_matrix(rng)).collect());
    let analytic = dphi(&z, &v)?;
    let fd = directional_derivative(phi, &z, &v)?;
    let dphi_err = rel(analytic, fd.value);
    let min_stencil = stencil.min_eigenvalue();
    let min_exact = exact.min_eigenvalue();
    let ok = min_stencil > 0.0
        && min_exact > 0.0
        && dev <= ctx.tol("stencil_vs_closed_form")
        && dphi_err <= ctx.tol("dphi_oracle");
    Ok(Outcome::from_bool(
        ok,
        json!({
            "n": n,
            "stencil_min_eigenvalue": min_stencil,
            "closed_form_min_eigenvalue": min_exact,
            "stencil_deviation": dev,
            "dphi_error": dphi_err,
        }),
    ))
}

// moment-oracle

fn moment_examples(ctx: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    let calibrated = (|| {
        let z = TuplePoint::single(Mat2::identity() + Mat2::diag(c(0.0, 2.0), c(0.0, 0.5)));
        let v = moment_component(&z, &AlgebraVector::basis(0))?;
        Ok(Outcome::from_bool((v.abs() - 3.0).abs() <= ctx.tol("calibration"), json!({ "mu_e1": v })))
    })();
    let zero = (|| {
        let z = TuplePoint::single(ii());
        let m = moment_map(&z)?;
        Ok(Outcome::from_bool(m.norm() <= ctx.tol("zero_level"), json!({ "moment": m })))
    })();
    vec![("calibrated-component", calibrated), ("identity-zero", zero)]
}

fn moment_sample(ctx: &Ctx, rng: &mut Pcg32, index: usize) -> Result<Outcome> {
    let n = ctx.n_for(index, &[1, 2, 3]);
    let z = random_tube_tuple(rng, n);
    let xi = random_algebra(rng, 1.0);
    let analytic = moment_component(&z, &xi)?;
    let fd = moment_component_fd(&z, &xi)?;
    let fd_err = rel(analytic, fd.value);

    let imag = random_imaginary_tuple(rng, n);
    let zero_norm = moment_map(&imag)?.norm();

    let g = random_sl2(rng, 0.5);
    let g_inv = g.inverse().ok_or_else(|| Error::Singular("g".into()))?;
    let lhs = moment_map(&act_real(&g, &z)?)?.pair(&xi);
    let rhs = moment_map(&z)?.pair(&adjoint(&g_inv, &xi)?);
    let eq_err = rel(lhs, rhs);

    let ok = fd_err <= ctx.tol("fd_agreement") && zero_norm <= ctx.tol("zero_level") && eq_err <= ctx.tol("equivariance");
    Ok(Outcome::from_bool(
        ok,
        json!({
            "n": n,
            "analytic": analytic,
            "finite_difference": fd.value,
            "fd_error": fd_err,
            "zero_level_norm": zero_norm,
            "equivariance_error": eq_err,
        }),
    ))
}

// flow-monotone

fn flow_tol(ctx: &Ctx) -> FlowTolerances {
    FlowTolerances { slack: ctx.tol("slack"), displacement: ctx.tol("displacement") }
}

fn flow_examples(ctx: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    let z = TuplePoint::single(ii());
    let fixed = flow_monotonicity_with(&AlgebraVector::basis(3), &z, 1.0, 20, flow_tol(ctx)).map(|r| {
        let still = r.values.iter().all(|v| v.abs() <= ctx.tol("slack"))
            && r.displacements.iter().all(|d| *d <= ctx.tol("displacement"));
        Outcome::from_bool(r.verdict() && still, json!(r))
    });
    let moving = flow_monotonicity_with(&AlgebraVector::basis(0), &z, 0.5, 20, flow_tol(ctx)).map(|r| {
        let strict = r.values.windows(2).all(|w| w[1] > w[0]);
        Outcome::from_bool(r.verdict() && strict, json!(r))
    });
    vec![("fixed-direction", fixed), ("moving-direction", moving)]
}

fn flow_sample(ctx: &Ctx, rng: &mut Pcg32, index: usize) -> Result<Outcome> {
    let n = ctx.n_for(index, &[1, 2]);
    let z = random_tube_tuple(rng, n);
    let xi = random_algebra(rng, 1.0);
    let tol = flow_tol(ctx);
    let generic = flow_monotonicity_with(&xi, &z, 1.0, 40, tol)?;

    // from a reduced point the component starts at zero and leaves it exactly
    // when the flow moves
    let reduced = orbit_minimize(&z, &ReductionOptions::default())?;
    let from_min = flow_monotonicity_with(&xi, &reduced.reduced_point, 1.0, 40, tol)?;
    let moved = from_min.displacements.iter().any(|d| *d > tol.displacement);
    let left_zero = from_min.values.iter().skip(1).any(|v| *v > tol.slack);
    let unique = reduced.converged && moved == left_zero;

    Ok(Outcome::from_bool(
        generic.verdict() && from_min.verdict() && unique,
        json!({
            "n": n,
            "generic": { "verdict": generic.verdict(), "truncated": generic.truncated,
                         "first": generic.values.first(), "last": generic.values.last() },
            "from_reduced": { "verdict": from_min.verdict(), "moved": moved, "left_zero": left_zero,
                              "last": from_min.values.last() },
        }),
    ))
}

// reduce-minimum

fn reduction_data(r: &crate::reduction::ReductionResult) -> Value {
    json!({
        "phi_min": r.phi_min,
        "moment_norm": r.moment_norm,
        "converged": r.converged,
        "iterations": r.iterations,
    })
}

fn reduce_examples(ctx: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    let opts = ReductionOptions::default();
    let case = |z: Mat2, expect: f64, key: &str| -> Result<Outcome> {
        let r = orbit_minimize(&TuplePoint::single(z), &opts)?;
        let ok = r.converged && r.moment_norm <= ctx.tol("moment") && (r.phi_min - expect).abs() <= ctx.tol(key);
        Ok(Outcome::from_bool(ok, reduction_data(&r)))
    };
    let scaled_down = (|| {
        // Ψ(iI / k) = k²
        let k = 3.0;
        let z = TuplePoint::single(Mat2::scalar(c(0.0, 1.0 / k)));
        let v = big_psi(&z, Some(&z), &opts)?;
        Ok(Outcome::from_bool((v - k * k).abs() <= ctx.tol("phi_min_scaled") * k * k, json!({ "psi": v })))
    })();
    vec![
        ("unipotent", case(Mat2::new(I, ONE, ZERO, I), 1.0, "phi_min_unipotent")),
        ("scaled-identity", case(Mat2::scalar(c(0.0, 2.0)), 0.25, "phi_min_scaled")),
        ("identity", case(ii(), 1.0, "phi_min_scaled")),
        ("inverse-scale", scaled_down),
    ]
}

fn reduce_sample(ctx: &Ctx, rng: &mut Pcg32, index: usize) -> Result<Outcome> {
    let n = ctx.n_for(index, &[1, 2]);
    let opts = ReductionOptions::default();
    let z = random_tube_tuple(rng, n);
    let z1 = act_real(&random_sl2(rng, 0.5), &z)?;
    let z2 = act_real(&random_sl2(rng, 0.5), &z)?;
    let r1 = orbit_minimize(&z1, &opts)?;
    let r2 = orbit_minimize(&z2, &opts)?;
    let agreement = (r1.phi_min - r2.phi_min).abs();
    let below = r1.phi_min <= phi(&z)? + 1e-9;

    let mut lag = Vec::new();
    for r in [&r1, &r2] {
        if r.converged {
            lag.push(lagrangian_check(r, ctx.tol("isotropy"))?);
        }
    }
    let lag_ok = lag.len() == 2 && lag.iter().all(|l| l.passed);

    let p = random_group_pair(rng, 0.5);
    let far = act_complex(&p, &z)?;
    let psi = big_psi(&far, Some(&z2), &opts)?;
    let psi_err = (psi - r1.phi_min).abs();

    let ok = r1.converged
        && r2.converged
        && r1.moment_norm <= ctx.tol("moment")
        && r2.moment_norm <= ctx.tol("moment")
        && agreement <= ctx.tol("translate_agreement")
        && below
        && lag_ok
        && psi_err <= ctx.tol("psi_invariance");
    Ok(Outcome::from_bool(
        ok,
        json!({
            "n": n,
            "first": reduction_data(&r1),
            "second": reduction_data(&r2),
            "agreement": agreement,
            "below_phi": below,
            "lagrangian": lag,
            "psi_invariance": psi_err,
        }),
    ))
}

// levi-identity

fn section_outcome(ctx: &Ctx, base: &TuplePoint) -> Result<Outcome> {
    let probe = SectionProbe::scaled(base, LEVI_STEP)?;
    let ortho = probe.orthonormality_error()?;
    let rep = section_levi_identity(&probe, &ReductionOptions::inner(), ctx.tol("deviation"), ctx.tol("min_eigenvalue"))?;
    let status = match rep.passed {
        Some(true) if ortho <= ctx.tol("orthonormality") => Status::Pass,
        Some(_) => Status::Fail,
        None => Status::Inconclusive,
    };
    Ok(Outcome { status, data: json!({ "orthonormality_error": ortho, "report": rep }) })
}

fn levi_identity_examples(ctx: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    let identity = section_outcome(ctx, &TuplePoint::single(ii()));
    let degenerate = (|| {
        let probe = SectionProbe::new(&TuplePoint::single(ii()), 0.0)?;
        let rep = section_levi_identity(&probe, &ReductionOptions::inner(), ctx.tol("deviation"), ctx.tol("min_eigenvalue"))?;
        Ok(Outcome::from_bool(rep.insufficient_stencil && rep.passed.is_none(), json!(rep)))
    })();
    vec![("identity", identity), ("zero-radius", degenerate)]
}

fn levi_identity_sample(ctx: &Ctx, rng: &mut Pcg32, index: usize) -> Result<Outcome> {
    let n = ctx.n_for(index, &[2]);
    let z = random_tube_tuple(rng, n);
    let r = orbit_minimize(&z, &ReductionOptions::inner())?;
    if !r.converged {
        return Err(Error::NotConverged(format!("base reduction stopped at {:e}", r.moment_norm)));
    }
    section_outcome(ctx, &r.reduced_point)
}

// lagrangian

fn lagrangian_examples(ctx: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    let identity = (|| {
        let r = orbit_minimize(&TuplePoint::single(ii()), &ReductionOptions::default())?;
        let rep = lagrangian_check(&r, ctx.tol("isotropy"))?;
        Ok(Outcome::from_bool(rep.passed && rep.orbit_dim == 3 && rep.complex_orbit_dim == 6, json!(rep)))
    })();
    let off_zero = (|| {
        let z = TuplePoint::single(Mat2::identity() + Mat2::diag(c(0.0, 2.0), c(0.0, 0.5)));
        let rep = critical_iff_moment_zero(&z, ctx.tol("criticality"))?;
        let ok = rep.passed && rep.moment_norm > 1e-3 && rep.orbit_gradient_norm > 1e-3;
        Ok(Outcome::from_bool(ok, json!(rep)))
    })();
    vec![("identity", identity), ("off-zero-level", off_zero)]
}

fn lagrangian_sample(ctx: &Ctx, rng: &mut Pcg32, index: usize) -> Result<Outcome> {
    let n = ctx.n_for(index, &[1, 2]);
    let z = random_tube_tuple(rng, n);
    let r = orbit_minimize(&z, &ReductionOptions::default())?;
    if !r.converged {
        return Err(Error::NotConverged(format!("reduction stopped at {:e}", r.moment_norm)));
    }
    let lag = lagrangian_check(&r, ctx.tol("isotropy"))?;
    let crit_min = critical_iff_moment_zero(&r.reduced_point, ctx.tol("criticality"))?;
    let crit_start = critical_iff_moment_zero(&z, ctx.tol("criticality"))?;
    let both_small = crit_min.moment_norm <= ctx.tol("criticality") && crit_min.orbit_gradient_norm <= ctx.tol("criticality");
    // reported only: away from the zero level the orbit is generically not isotropic
    let start_isotropy = field_isotropy(&z)?;
    Ok(Outcome::from_bool(
        lag.passed && crit_min.passed && both_small && crit_start.passed,
        json!({
            "n": n,
            "lagrangian": lag,
            "at_minimum": crit_min,
            "at_start": crit_start,
            "start_isotropy": start_isotropy,
        }),
    ))
}

// kempf-ness

fn kn_data(r: &crate::quotient::OrbitProbeReport) -> Value {
    json!({
        "classification": r.classification,
        "achieved_norm_sq": r.achieved_norm_sq,
        "initial_norm_sq": r.initial_norm_sq,
        "iterations": r.iterations,
        "gradient_norm": r.gradient_norm,
        "parameter_norm": r.parameter_norm,
        "monotone": r.monotone,
    })
}

fn kempf_ness_examples(ctx: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    let opts = KempfNessOptions::default();
    let diag = kempf_ness_minimize(&TuplePoint::single(Mat2::real(2.0, 0.0, 0.0, 1.0)), &opts);
    let nil = kempf_ness_minimize(&TuplePoint::single(Mat2::real(0.0, 1.0, 0.0, 0.0)), &opts);
    let zero = kempf_ness_minimize(&TuplePoint::single(Mat2::zero()), &opts);
    vec![
        (
            "diagonal",
            Ok(Outcome::from_bool(
                diag.classification == OrbitClass::Closed
                    && (diag.achieved_norm_sq - 4.0).abs() <= ctx.tol("norm")
                    && diag.monotone,
                kn_data(&diag),
            )),
        ),
        (
            "nilpotent",
            Ok(Outcome::from_bool(
                nil.classification == OrbitClass::NonClosed && nil.achieved_norm_sq <= ctx.tol("norm") && nil.monotone,
                kn_data(&nil),
            )),
        ),
        ("zero", Ok(Outcome::from_bool(zero.classification == OrbitClass::Closed, kn_data(&zero)))),
    ]
}

fn kempf_ness_sample(ctx: &Ctx, rng: &mut Pcg32, index: usize) -> Result<Outcome> {
    let n = ctx.n_for(index, &[3]);
    let z = random_tuple(rng, n);
    let rank = gram_rank(&gram_map(&z), DEFAULT_RANK_TOL)?;
    let r = kempf_ness_minimize(&z, &KempfNessOptions::default());
    let mut data = kn_data(&r);
    data["n"] = json!(n);
    data["gram_rank"] = json!(rank);
    let status = if rank < 3 || r.classification == OrbitClass::Inconclusive {
        Status::Inconclusive
    } else if r.classification == OrbitClass::Closed && r.monotone && r.achieved_norm_sq <= r.initial_norm_sq {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(Outcome { status, data })
}

// saturation-probe

fn saturation_outcome(ctx: &Ctx, z: &TuplePoint) -> Result<Outcome> {
    let rep = saturation_probe(z, &SaturationOptions::default())?;
    let g = gram_map(z);
    let gram_ok = rep.gram_distance <= ctx.tol("gram_distance") * (1.0 + g.frobenius());
    let status = match (gram_ok, rep.certified_in_extended_tube) {
        (false, _) => Status::Fail,
        (true, true) => Status::Pass,
        (true, false) => Status::Inconclusive,
    };
    let data = json!({
        "n": z.n(),
        "gram_rank": gram_rank(&g, DEFAULT_RANK_TOL)?,
        "status": rep.status,
        "certified_from": rep.certified_from,
        "gram_distance": rep.gram_distance,
        "witness_phi_min": rep.witness_phi_min,
        "kempf_ness": kn_data(&rep.kempf_ness),
    });
    Ok(Outcome { status, data })
}

fn saturation_examples(ctx: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    let identity = saturation_outcome(ctx, &TuplePoint::single(ii()));
    let degenerate = TuplePoint::new(vec![ii(), Mat2::new(I, ONE, ZERO, I)]);
    let rank_three = TuplePoint::new(vec![
        ii(),
        Mat2::diag(c(0.0, 2.0), c(0.0, 0.5)),
        Mat2::new(I, c(0.5, 0.0), c(0.5, 0.0), I),
    ]);
    vec![
        ("identity", identity),
        ("degenerate-plane", degenerate.and_then(|z| saturation_outcome(ctx, &z))),
        ("rank-three", rank_three.and_then(|z| saturation_outcome(ctx, &z))),
    ]
}

fn saturation_sample(ctx: &Ctx, rng: &mut Pcg32, index: usize) -> Result<Outcome> {
    let n = ctx.n_for(index, &[2]);
    saturation_outcome(ctx, &random_tube_tuple(rng, n))
}

// normal-form

fn normal_form_examples(ctx: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    let close = |a: &Mat2, b: &Mat2| (*a - *b).max_abs() <= 1e-12;
    let rotation = normal_form(&Mat2::new(I, ZERO, ONE, I)).map(|nf| {
        let ok = close(&nf.u, &Mat2::real(0.0, 1.0, -1.0, 0.0))
            && (nf.r - 1.0).abs() <= 1e-12
            && close(&nf.x, &Mat2::new(I, -ONE, ZERO, I));
        Outcome::from_bool(ok, json!(nf))
    });
    let balancing = normal_form(&Mat2::diag(c(0.0, 2.0), c(0.0, 0.5))).map(|nf| {
        let ok = (nf.r - 0.5f64.sqrt()).abs() <= 1e-12 && close(&nf.x, &ii());
        Outcome::from_bool(ok, json!(nf))
    });
    let fixed = normal_form(&Mat2::new(I, c(0.5, 0.0), ZERO, I)).map(|nf| {
        let ok = close(&nf.u, &Mat2::identity()) && (nf.r - 1.0).abs() <= 1e-12;
        Outcome::from_bool(ok, json!(nf))
    });
    let bounds = triangular_bounds_check(&Mat2::new(I, ONE, ZERO, I)).map(|b| {
        let ok = (b.quarter_offdiag_sq, b.im_product, b.abs_det) == (0.25, 1.0, 1.0) && b.lower_holds && b.upper_holds;
        Outcome::from_bool(ok, json!(b))
    });
    let boundary_case = Ok(match triangular_bounds_check(&Mat2::new(I, c(2.0, 0.0), ZERO, I)) {
        Err(Error::Precondition(msg)) => Outcome::from_bool(true, json!({ "rejected": msg })),
        other => Outcome::from_bool(false, json!({ "unexpected": format!("{other:?}") })),
    });
    let transfer = pair_transfer(&Mat2::scalar(c(0.0, 2.0)), &ii()).map(|p| {
        let ok = close(&p.x, &Mat2::scalar(c(2.0, 0.0)))
            && p.trace == c(4.0, 0.0)
            && p.det == c(4.0, 0.0)
            && p.eigenvalues == [c(2.0, 0.0), c(2.0, 0.0)];
        Outcome::from_bool(ok, json!(p))
    });
    let _ = ctx;
    vec![
        ("rotation", rotation),
        ("balancing", balancing),
        ("already-normal", fixed),
        ("triangular-bounds", bounds),
        ("triangular-boundary", boundary_case),
        ("pair-transfer", transfer),
    ]
}

fn normal_form_sample(ctx: &Ctx, rng: &mut Pcg32, _index: usize) -> Result<Outcome> {
    let w = random_tube_point(rng);
    let nf = normal_form(&w)?;
    let recon = nf.reconstruction_error(&w);
    let lower = nf.x.get(1, 0).norm();
    let (a, b) = (nf.x.get(0, 0).norm(), nf.x.get(1, 1).norm());
    let balance = (a - b).abs() / a.max(b);
    let bounds = triangular_bounds_check(&nf.x)?;

    let u = random_su2(rng);
    let single = TuplePoint::single(w);
    let star = act_real(&u, &single)?.points()[0];
    let conj = u * w * u.adjoint();
    let star_err = (star - conj).max_abs() / (1.0 + conj.max_abs());

    let z = random_tube_point(rng);
    let pt = pair_transfer(&z, &w)?;
    let eig_ok = pt.max_abs_eigenvalue <= pt.eigen_bound * (1.0 + 1e-12);
    let det_im = hermitian_im(&z).det();
    let positivity = pt.positivity.unwrap_or(f64::NAN);
    let positivity_ok = positivity > 0.0 && rel(positivity, det_im) <= 1e-9;
    let p = random_group_pair(rng, 0.5);
    let moved = act_complex(&p, &TuplePoint::new(vec![z, w])?)?;
    let pt2 = pair_transfer(&moved.points()[0], &moved.points()[1])?;
    let trace_err = (pt2.trace - pt.trace).norm() / (1.0 + pt.trace.norm());
    let det_err = (pt2.det - pt.det).norm() / (1.0 + pt.det.norm());

    let ok = recon <= ctx.tol("reconstruction")
        && lower <= ctx.tol("lower_left")
        && balance <= ctx.tol("balance")
        && crate::geometry::in_tube(&nf.x)
        && bounds.lower_holds
        && bounds.upper_holds
        && star_err <= ctx.tol("star_action")
        && eig_ok
        && positivity_ok
        && trace_err <= ctx.tol("trace_det")
        && det_err <= ctx.tol("trace_det");
    Ok(Outcome::from_bool(
        ok,
        json!({
            "reconstruction": recon,
            "lower_left": lower,
            "balance": balance,
            "r": nf.r,
            "bounds": bounds,
            "star_action": star_err,
            "eigen_bound_holds": eig_ok,
            "positivity": positivity,
            "det_im_z": det_im,
            "trace_equivariance": trace_err,
            "det_equivariance": det_err,
            "x": rows(&nf.x),
        }),
    ))
}

// boundary-weak-exhaustion

fn scan_summary(rep: &crate::boundary::BoundaryReport) -> Value {
    json!({
        "len": rep.entries.len(),
        "gram_converges": rep.gram_converges,
        "boundary_approached": rep.boundary_approached,
        "constant": rep.constant,
        "thresholds": rep.thresholds,
        "threshold_indices": rep.threshold_indices,
        "weak_exhaustion": rep.weak_exhaustion,
        "exhaustion_mod_real": rep.exhaustion_mod_real,
        "first_phi": rep.entries.first().map(|e| e.phi),
        "last_phi": rep.entries.last().map(|e| e.phi),
        "last_psi": rep.entries.last().and_then(|e| e.big_psi),
        "max_normalized_entry": rep.entries.iter().map(|e| e.normalized_max_abs).fold(0.0, f64::max),
        "min_normalized_det_im": rep.entries.iter().map(|e| e.normalized_min_det_im).fold(f64::INFINITY, f64::min),
    })
}

fn inverse_scale(base: &TuplePoint, k_max: usize) -> SequenceSpec {
    SequenceSpec::Curve {
        numerator: vec![base.map(|_| Mat2::zero()), base.clone()],
        denominator: None,
        k_max,
    }
}

fn weak_exhaustion_examples(ctx: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    let opts = BoundaryOptions::default();
    let scaled = boundary_scan(&inverse_scale(&TuplePoint::single(ii()), 40), &opts).map(|rep| {
        let exact = rep.entries.iter().all(|e| {
            let k2 = (e.k * e.k) as f64;
            (e.phi - k2).abs() <= ctx.tol("phi_exact") * k2
        });
        Outcome::from_bool(exact && rep.weak_exhaustion == Verdict::Holds, scan_summary(&rep))
    });
    let constant = boundary_scan(&SequenceSpec::List { points: vec![TuplePoint::single(ii()); 6] }, &opts).map(|rep| {
        let ok = rep.weak_exhaustion == Verdict::NotTriggered && rep.exhaustion_mod_real == Verdict::NotTriggered;
        Outcome::from_bool(ok, scan_summary(&rep))
    });
    vec![("inverse-scale", scaled), ("constant", constant)]
}

fn weak_exhaustion_sample(ctx: &Ctx, rng: &mut Pcg32, index: usize) -> Result<Outcome> {
    let n = ctx.n_for(index, &[1, 2]);
    let base = random_tube_tuple(rng, n);
    let opts = BoundaryOptions::default();
    let psi0 = big_psi(&base, None, &opts.reduction)?;
    let top = opts.thresholds.iter().copied().fold(0.0, f64::max);
    let k_max = ((2.0 * top / psi0).sqrt().ceil() as usize + 1).clamp(8, 400);
    let rep = boundary_scan(&inverse_scale(&base, k_max), &opts)?;
    let phi0 = phi(&base)?;
    let exact = rep.entries.iter().all(|e| {
        let expect = (e.k * e.k) as f64 * phi0;
        (e.phi - expect).abs() <= ctx.tol("phi_exact") * expect
    });
    let mut data = scan_summary(&rep);
    data["n"] = json!(n);
    data["psi_base"] = json!(psi0);
    Ok(Outcome::from_bool(exact && rep.weak_exhaustion == Verdict::Holds, data))
}

// boundary-mod-greal

fn mod_real_options(ctx: &Ctx) -> BoundaryOptions {
    BoundaryOptions { compact_bound: ctx.tol("compact_bound"), det_floor: ctx.tol("det_floor"), ..Default::default() }
}

fn mod_greal_examples(ctx: &Ctx) -> Vec<(&'static str, Result<Outcome>)> {
    let opts = mod_real_options(ctx);
    let spec = SequenceSpec::Translate {
        base: TuplePoint::single(ii()),
        generator: AlgebraVector::basis(0),
        parameter: Parameter::Log,
        step: 1.0,
        k_max: 20,
    };
    let boosts = boundary_scan(&spec, &opts).map(|rep| {
        let normalized = rep
            .entries
            .iter()
            .all(|e| (e.normalized.points()[0] - ii()).max_abs() <= 1e-9 && (e.phi - 1.0).abs() <= 1e-9);
        Outcome::from_bool(normalized && rep.exhaustion_mod_real == Verdict::Holds, scan_summary(&rep))
    });
    vec![("diagonal-boosts", boosts)]
}

fn mod_greal_sample(ctx: &Ctx, rng: &mut Pcg32, index: usize) -> Result<Outcome> {
    let n = ctx.n_for(index, &[1, 2]);
    let base = random_tube_tuple(rng, n);
    let generator = random_algebra(rng, 0.5);
    let spec = SequenceSpec::Translate { base, generator, parameter: Parameter::Log, step: 1.0, k_max: 20 };
    let rep = boundary_scan(&spec, &mod_real_options(ctx))?;
    let mut data = scan_summary(&rep);
    data["n"] = json!(n);
    Ok(Outcome::from_bool(rep.exhaustion_mod_real == Verdict::Holds, data))
}
