//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the lines always reach the output.
//!
//! Quantities with closed forms are recomputed here from matrix entries
//! rather than through the library, so each check compares two independent
//! computations. Runtime bounds are part of each criterion.

use std::time::{Duration, Instant};

use tube_core::boundary::{boundary_scan, BoundaryOptions, SequenceSpec, Verdict as ScanVerdict};
use tube_core::experiments::{run_suite, suite_names, ExperimentConfig};
use tube_core::lie::{act_complex, act_real, flow_i};
use tube_core::psh::{levi_form, levi_form_phi, levi_step, moment_component, moment_map};
use tube_core::quotient::{gram_map, gram_rank, kempf_ness_minimize, KempfNessOptions, OrbitClass, DEFAULT_RANK_TOL};
use tube_core::reduction::{lagrangian_check, orbit_minimize, section_levi_identity, ReductionOptions, SectionProbe};
use tube_core::rng::{
    random_algebra, random_four_vector, random_group_pair, random_imaginary_tuple, random_sl2, random_tube_tuple,
    random_tuple, sample_stream,
};
use tube_core::{AlgebraVector, Mat2, TangentVector, TuplePoint, C64, I, ONE, ZERO};

const SEED: u64 = 20240601;

struct Check {
    ok: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

// independent oracles

fn minkowski(z: &[C64; 4]) -> C64 {
    z[0] * z[0] - z[1] * z[1] - z[2] * z[2] - z[3] * z[3]
}

fn det2(m: &Mat2) -> C64 {
    m.0[0][0] * m.0[1][1] - m.0[0][1] * m.0[1][0]
}

/// `1 / det((Z − Z†) / 2i)` summed over components, from entries.
fn phi_oracle(z: &TuplePoint) -> f64 {
    z.iter()
        .map(|m| {
            let a = m.0[0][0].im;
            let d = m.0[1][1].im;
            let b = (m.0[0][1] - m.0[1][0].conj()) / c(0.0, 2.0);
            1.0 / (a * d - b.norm_sqr())
        })
        .sum()
}

fn gram_oracle(z: &TuplePoint) -> Vec<C64> {
    let p = z.points();
    let mut out = Vec::new();
    for a in p {
        for b in p {
            out.push((det2(&(*a + *b)) - det2(a) - det2(b)) * 0.5);
        }
    }
    out
}

fn real_action_oracle(g: &Mat2, z: &TuplePoint) -> TuplePoint {
    z.map(|m| *g * *m * g.adjoint())
}

fn rel_to(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn mixed_rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

// criteria

fn coordinate_identity() -> Check {
    let mut worst = 0.0_f64;
    for i in 0..10_000 {
        let mut rng = sample_stream(SEED, "acceptance-coordinates", i);
        let z = random_four_vector(&mut rng);
        let q = minkowski(&z.0);
        let err = (det2(&z.to_matrix()) - q).norm() / (1.0 + q.norm());
        worst = worst.max(err);
    }
    Check { ok: worst <= 1e-12, detail: format!("10000 samples, max scaled error {worst:.2e}") }
}

fn invariance() -> Check {
    let mut phi_worst = 0.0_f64;
    let mut gram_worst = 0.0_f64;
    for i in 0..1_000 {
        let mut rng = sample_stream(SEED, "acceptance-invariance", i);
        let n = 1 + (i as usize) % 3;
        let z = random_tube_tuple(&mut rng, n);
        let g = random_sl2(&mut rng, 0.5);
        let moved = act_real(&g, &z).expect("unimodular");
        let oracle_moved = real_action_oracle(&g, &z);
        let base = phi_oracle(&z);
        phi_worst = phi_worst
            .max(rel_to(tube_core::psh::phi(&moved).expect("in tube"), base))
            .max(rel_to(phi_oracle(&oracle_moved), base));

        let w = random_tuple(&mut rng, n);
        let p = random_group_pair(&mut rng, 0.5);
        let before = gram_oracle(&w);
        let after = gram_oracle(&act_complex(&p, &w).expect("unimodular"));
        let lib = gram_map(&act_complex(&p, &w).expect("unimodular"));
        let scale = before.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        let diff = before.iter().zip(&after).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let lib_diff = lib.entries().iter().zip(&before).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        gram_worst = gram_worst.max(diff / scale).max(lib_diff / scale);
    }
    Check {
        ok: phi_worst <= 1e-10 && gram_worst <= 1e-9,
        detail: format!("1000 samples, phi {phi_worst:.2e}, gram {gram_worst:.2e}"),
    }
}

fn levi_positivity() -> Check {
    let mut min_stencil = f64::INFINITY;
    let mut min_exact = f64::INFINITY;
    let mut count = 0;
    for n in 1..=3 {
        for i in 0..500 {
            let mut rng = sample_stream(SEED, &format!("acceptance-levi-{n}"), i);
            let z = random_tube_tuple(&mut rng, n);
            let basis = TangentVector::coordinate_basis(n);
            let oracle = |w: &TuplePoint| -> tube_core::Result<f64> {
                if w.in_tube() {
                    Ok(phi_oracle(w))
                } else {
                    Err(tube_core::Error::ProbeExitedDomain("stencil left the tube".into()))
                }
            };
            let stencil = levi_form(oracle, &z, &basis, levi_step(&z)).expect("stencil");
            let exact = levi_form_phi(&z, &basis).expect("closed form");
            min_stencil = min_stencil.min(stencil.min_eigenvalue() / stencil.frobenius());
            min_exact = min_exact.min(exact.min_eigenvalue() / exact.frobenius());
            count += 1;
        }
    }
    Check {
        ok: min_stencil > 0.0 && min_exact > 0.0,
        detail: format!("{count} points, min scaled eigenvalue stencil {min_stencil:.2e}, closed form {min_exact:.2e}"),
    }
}

fn moment_oracle() -> Check {
    let mut fd_worst = 0.0_f64;
    let mut zero_worst = 0.0_f64;
    for i in 0..1_000 {
        let mut rng = sample_stream(SEED, "acceptance-moment", i);
        let n = 1 + (i as usize) % 3;
        let z = random_tube_tuple(&mut rng, n);
        let xi = random_algebra(&mut rng, 1.0);
        let analytic = moment_component(&z, &xi).expect("in tube");
        // Richardson-extrapolated central difference of t ↦ φ(exp(itξ)·Z)
        let d = |h: f64| (phi_oracle(&flow_i(&xi, h, &z)) - phi_oracle(&flow_i(&xi, -h, &z))) / (2.0 * h);
        let h1 = levi_step(&z);
        let h2 = h1 / 2.0;
        let fd = (4.0 * d(h2) - d(h1)) / 3.0;
        fd_worst = fd_worst.max(mixed_rel(analytic, fd));

        let imag = random_imaginary_tuple(&mut rng, n);
        zero_worst = zero_worst.max(moment_map(&imag).expect("in tube").norm());
    }
    let z = TuplePoint::single(Mat2::identity() + Mat2::diag(c(0.0, 2.0), c(0.0, 0.5)));
    let cal = moment_component(&z, &AlgebraVector::basis(0)).expect("in tube");
    let ok = fd_worst <= 1e-6 && zero_worst <= 1e-10 && (cal - 3.0).abs() <= 1e-5;
    Check {
        ok,
        detail: format!("1000 samples, fd {fd_worst:.2e}, zero level {zero_worst:.2e}, calibration {cal:.8}"),
    }
}

fn flow_monotonicity() -> Check {
    let slack = 1e-9;
    let mut failures = 0;
    let mut strict_failures = 0;
    for i in 0..200 {
        let mut rng = sample_stream(SEED, "acceptance-flow", i);
        let n = 1 + (i as usize) % 2;
        let z = random_tube_tuple(&mut rng, n);
        let xi = random_algebra(&mut rng, 1.0);
        let steps = 40;
        let values: Vec<f64> = (0..=steps)
            .map_while(|k| {
                let w = flow_i(&xi, k as f64 / steps as f64, &z);
                w.in_tube().then(|| moment_component(&w, &xi).expect("in tube"))
            })
            .collect();
        if values.windows(2).any(|w| w[1] < w[0] - slack) {
            failures += 1;
        }
        // the flow moves Z whenever ξ ≠ 0, so the increase is strict
        if values.windows(2).any(|w| w[1] <= w[0]) {
            strict_failures += 1;
        }
    }
    let suite = run_suite(&ExperimentConfig::new("flow-monotone", SEED)).expect("suite runs");
    Check {
        ok: failures == 0 && strict_failures == 0 && suite.passed(),
        detail: format!(
            "200 pairs, {failures} decreasing, {strict_failures} not strict, suite {}/{} pass",
            suite.aggregate.pass_count, suite.aggregate.units
        ),
    }
}

fn minimum_principle_and_lagrangian() -> (Check, Check) {
    let opts = ReductionOptions::default();
    let unipotent = orbit_minimize(&TuplePoint::single(Mat2::new(I, ONE, ZERO, I)), &opts).expect("in tube");
    let scaled = orbit_minimize(&TuplePoint::single(Mat2::scalar(c(0.0, 2.0))), &opts).expect("in tube");
    let mut results = vec![unipotent.clone(), scaled.clone()];
    let mut agreement = 0.0_f64;
    let mut unconverged = 0;
    for i in 0..50 {
        let mut rng = sample_stream(SEED, "acceptance-reduce", i);
        let n = 1 + (i as usize) % 2;
        let z = random_tube_tuple(&mut rng, n);
        let mins: Vec<f64> = (0..2)
            .map(|_| {
                let t = act_real(&random_sl2(&mut rng, 0.5), &z).expect("unimodular");
                let r = orbit_minimize(&t, &opts).expect("in tube");
                if !r.converged {
                    unconverged += 1;
                }
                let v = r.phi_min;
                results.push(r);
                v
            })
            .collect();
        agreement = agreement.max((mins[0] - mins[1]).abs());
    }
    let ok6 = unipotent.converged
        && (unipotent.phi_min - 1.0).abs() <= 1e-4
        && unipotent.moment_norm <= 1e-6
        && (scaled.phi_min - 0.25).abs() <= 1e-6
        && agreement <= 1e-5
        && unconverged == 0;
    let six = Check {
        ok: ok6,
        detail: format!(
            "unipotent {:.8} (moment {:.1e}), scaled {:.10}, 50 starts agree to {agreement:.1e}, {unconverged} unconverged",
            unipotent.phi_min, unipotent.moment_norm, scaled.phi_min
        ),
    };

    let mut max_omega = 0.0_f64;
    let mut min_normal = f64::INFINITY;
    let mut checked = 0;
    for r in results.iter().filter(|r| r.converged) {
        let rep = lagrangian_check(r, 1e-5).expect("converged");
        max_omega = max_omega.max(rep.max_omega);
        min_normal = min_normal.min(rep.min_normal_hessian);
        checked += 1;
    }
    let seven = Check {
        ok: checked > 0 && max_omega <= 1e-5 && min_normal > 0.0,
        detail: format!("{checked} reduced points, max |omega| {max_omega:.2e}, min normal Hessian {min_normal:.3e}"),
    };
    (six, seven)
}

fn section_identity() -> Check {
    let inner = ReductionOptions::inner();
    let mut rng = sample_stream(SEED, "acceptance-section", 0);
    let start = random_tube_tuple(&mut rng, 2);
    let reduced = orbit_minimize(&start, &inner).expect("in tube");
    let mut parts = Vec::new();
    let mut ok = reduced.converged;
    for (label, base) in [("N=1", TuplePoint::single(Mat2::scalar(I))), ("N=2", reduced.reduced_point.clone())] {
        let probe = SectionProbe::scaled(&base, tube_core::psh::LEVI_STEP).expect("section");
        let rep = section_levi_identity(&probe, &inner, 1e-3, 1e-6).expect("identity");
        let dev = rep.relative_deviation.unwrap_or(f64::NAN);
        let eig = rep.min_eigenvalue.unwrap_or(f64::NAN);
        ok &= dev <= 1e-3 && eig >= -1e-6;
        parts.push(format!("{label} dim {} deviation {dev:.2e} min eigenvalue {eig:.3e}", rep.dimension));
    }
    Check { ok, detail: parts.join("; ") }
}

fn kempf_ness() -> Check {
    let opts = KempfNessOptions::default();
    let diag = kempf_ness_minimize(&TuplePoint::single(Mat2::real(2.0, 0.0, 0.0, 1.0)), &opts);
    let nil = kempf_ness_minimize(&TuplePoint::single(Mat2::real(0.0, 1.0, 0.0, 0.0)), &opts);
    let (mut closed, mut inconclusive, mut non_closed, mut low_rank) = (0, 0, 0, 0);
    for i in 0..200 {
        let mut rng = sample_stream(SEED, "acceptance-kempf-ness", i);
        let z = random_tuple(&mut rng, 3);
        if gram_rank(&gram_map(&z), DEFAULT_RANK_TOL).expect("positive tol") < 3 {
            low_rank += 1;
            continue;
        }
        match kempf_ness_minimize(&z, &opts).classification {
            OrbitClass::Closed => closed += 1,
            OrbitClass::Inconclusive => inconclusive += 1,
            OrbitClass::NonClosed => non_closed += 1,
        }
    }
    let ok = diag.classification == OrbitClass::Closed
        && (diag.achieved_norm_sq - 4.0).abs() <= 1e-6
        && nil.classification == OrbitClass::NonClosed
        && nil.achieved_norm_sq <= 1e-6
        && non_closed == 0
        && low_rank == 0;
    Check {
        ok,
        detail: format!(
            "diag {:.9} {:?}, nilpotent {:.1e} {:?}, 200 rank-3 trials: {closed} closed, {inconclusive} inconclusive, {non_closed} non-closed",
            diag.achieved_norm_sq, diag.classification, nil.achieved_norm_sq, nil.classification
        ),
    }
}

fn boundary_behaviour() -> Check {
    let base = TuplePoint::single(Mat2::scalar(I));
    let spec = SequenceSpec::Curve { numerator: vec![base.map(|_| Mat2::zero()), base.clone()], denominator: None, k_max: 40 };
    let rep = boundary_scan(&spec, &BoundaryOptions::default()).expect("scan");
    let exact = rep.entries.iter().map(|e| {
        let k2 = (e.k * e.k) as f64;
        rel_to(e.phi, k2)
    });
    let worst = exact.fold(0.0_f64, f64::max);
    let crossed = rep.threshold_indices.iter().all(Option::is_some) && rep.thresholds == vec![10.0, 100.0, 1000.0];
    let mod_real = run_suite(&ExperimentConfig::new("boundary-mod-greal", SEED)).expect("suite runs");
    let weak = run_suite(&ExperimentConfig::new("boundary-weak-exhaustion", SEED)).expect("suite runs");
    Check {
        ok: worst <= 1e-12
            && crossed
            && rep.weak_exhaustion == ScanVerdict::Holds
            && mod_real.passed()
            && weak.passed(),
        detail: format!(
            "phi = k^2 to {worst:.1e}, thresholds crossed at {:?}, compact box {}/{} sequences, weak exhaustion {}/{}",
            rep.threshold_indices,
            mod_real.aggregate.pass_count,
            mod_real.aggregate.units,
            weak.aggregate.pass_count,
            weak.aggregate.units
        ),
    }
}

fn determinism() -> (Check, Duration) {
    let mut mismatched = Vec::new();
    let mut first_pass = Duration::ZERO;
    let mut total = Duration::ZERO;
    for name in suite_names() {
        let cfg = ExperimentConfig::new(name, SEED);
        let t = Instant::now();
        let a = run_suite(&cfg).expect("suite runs");
        first_pass += t.elapsed();
        let t = Instant::now();
        let b = run_suite(&cfg).expect("suite runs");
        total += t.elapsed();
        if a.body_json() != b.body_json() {
            mismatched.push(name);
        }
    }
    let check = Check {
        ok: mismatched.is_empty(),
        detail: format!(
            "{} suites rerun, mismatched {:?}, full run {:.2}s",
            suite_names().len(),
            mismatched,
            first_pass.as_secs_f64()
        ),
    };
    (check, total + first_pass)
}

fn report(results: &mut Vec<bool>, id: usize, name: &str, limit: Option<Duration>, check: Check, elapsed: Duration) {
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let ok = check.ok && in_time;
    let bound = limit.map(|l| format!(" (limit {}s)", l.as_secs())).unwrap_or_default();
    println!(
        "criterion {id:>2} {} {name}: {} [{:.2}s{bound}]",
        if ok { "PASS" } else { "FAIL" },
        check.detail,
        elapsed.as_secs_f64()
    );
    results.push(ok);
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn main() {
    let mut results = Vec::new();
    let secs = Duration::from_secs;

    let (c, t) = timed(coordinate_identity);
    report(&mut results, 1, "coordinate identity", Some(secs(1)), c, t);
    let (c, t) = timed(invariance);
    report(&mut results, 2, "invariance", Some(secs(5)), c, t);
    let (c, t) = timed(levi_positivity);
    report(&mut results, 3, "strict plurisubharmonicity", Some(secs(60)), c, t);
    let (c, t) = timed(moment_oracle);
    report(&mut results, 4, "moment map oracle", Some(secs(10)), c, t);
    let (c, t) = timed(flow_monotonicity);
    report(&mut results, 5, "flow monotonicity", Some(secs(10)), c, t);
    let ((six, seven), t) = timed(minimum_principle_and_lagrangian);
    report(&mut results, 6, "minimum principle", Some(secs(60)), six, t);
    report(&mut results, 7, "lagrangian orbits", None, seven, Duration::ZERO);
    let (c, t) = timed(section_identity);
    report(&mut results, 8, "section levi identity", Some(secs(120)), c, t);
    let (c, t) = timed(kempf_ness);
    report(&mut results, 9, "kempf-ness", Some(secs(60)), c, t);
    let (c, t) = timed(boundary_behaviour);
    report(&mut results, 10, "boundary behaviour", Some(secs(30)), c, t);
    let ((c, _), t) = timed(determinism);
    report(&mut results, 11, "determinism", None, c, t);

    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria pass", results.len());
}
