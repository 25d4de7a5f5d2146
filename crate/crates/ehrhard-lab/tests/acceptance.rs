//! Acceptance suite: one test per release criterion, each printing a
//! single PASS/FAIL line (run with `--nocapture` to see them on success).
//! Tolerances and runtime budgets are pinned here and are part of the
//! contract; loosening them is a breaking change.

use std::time::Instant;

use ehrhard_lab::alpha::{
    check_alpha, find_certificate, phi_image_interval, phi_min_bruteforce, AlphaSpec,
};
use ehrhard_lab::bl::{
    bl_layout, bl_preservation_check, ehrhard_layout, kernel_structure, log_pde_residual_fn,
    rbl_layout, rbl_preservation_check, second_order_feasible, validate_bl_datum, BLDatum,
    BLEntry, GBLDatum, GaussianFn, MatrixData, SecondOrderOutcome,
};
use ehrhard_lab::field::{Bump, ScalarField};
use ehrhard_lab::grid::{Axis, Extension, GridFunction, ProbitField, RangeTag};
use ehrhard_lab::heat::{
    heat_evolve_grid, heat_evolve_point, heat_pde_residual_fn, probit_affine_evolute,
    probit_pde_residual, probit_transform,
};
use ehrhard_lab::lab::{
    build_counterexample, hypothesis_margin, preservation_check, random_feasible_instance,
    random_infeasible_spec, violation_at_origin,
};
use ehrhard_lab::regions::{ehrhard_deficit, RegionSet};
use ehrhard_lab::{phi, LabError, QuadratureRule, DEFAULT_SEED};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng_for(criterion: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ criterion)
}

/// Prints the verdict line and panics on any recorded failure or on a
/// blown runtime budget.
fn report(idx: usize, name: &str, started: Instant, budget_s: f64, mut failures: Vec<String>) {
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= budget_s {
        failures.push(format!("runtime {elapsed:.2}s exceeds budget {budget_s}s"));
    }
    if failures.is_empty() {
        println!("acceptance criterion {idx} ({name}): PASS ({elapsed:.2}s / {budget_s}s)");
    } else {
        println!("acceptance criterion {idx} ({name}): FAIL ({elapsed:.2}s / {budget_s}s)");
        for f in &failures {
            println!("  - {f}");
        }
        panic!("criterion {idx} ({name}): {} failure(s)", failures.len());
    }
}

/// 1. Equality cases: parallel half-spaces with Σα = 1 give zero deficit.
#[test]
fn criterion_1_parallel_half_space_equality() {
    let started = Instant::now();
    let mut rng = rng_for(1);
    let mut failures = Vec::new();
    for case in 0..100u64 {
        let a0 = rng.gen_range(0.05..0.95);
        let alphas = [a0, 1.0 - a0];
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let regions: Vec<RegionSet> = (0..2)
            .map(|_| RegionSet::HalfSpace {
                normal: vec![sign],
                offset: rng.gen_range(-2.0..2.0),
            })
            .collect();
        let rep = ehrhard_deficit(&alphas, &regions, 0, DEFAULT_SEED ^ case).unwrap();
        if !(rep.deficit.abs() <= 1e-8) {
            failures.push(format!("case {case}: |deficit| = {} > 1e-8", rep.deficit.abs()));
        }
    }
    report(1, "parallel half-space equality", started, 5.0, failures);
}

/// 2. Positivity on feasible 1D instances built from intervals, with
/// interval unions only on non-convex slots.
#[test]
fn criterion_2_feasible_interval_positivity() {
    let started = Instant::now();
    let mut rng = rng_for(2);
    let mut failures = Vec::new();
    for case in 0..100u64 {
        let spec = loop {
            let m = rng.gen_range(2..=3usize);
            let alpha: Vec<f64> = (0..m).map(|_| rng.gen_range(0.4..1.2)).collect();
            let i_conv: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.3)).collect();
            let s = AlphaSpec::new(alpha, i_conv).unwrap();
            if check_alpha(&s).feasible {
                break s;
            }
        };
        let regions: Vec<RegionSet> = (0..spec.m())
            .map(|i| {
                let a = rng.gen_range(-3.0..1.5);
                let len = rng.gen_range(0.2..1.2);
                let mut intervals = vec![(a, a + len)];
                if !spec.i_conv.contains(&i) && rng.gen_bool(0.6) {
                    let gap = rng.gen_range(0.3..1.0);
                    let len2 = rng.gen_range(0.2..1.2);
                    let b = a + len + gap;
                    intervals.push((b, b + len2));
                }
                RegionSet::BoxUnion { intervals }
            })
            .collect();
        let rep = ehrhard_deficit(&spec.alpha, &regions, 0, DEFAULT_SEED ^ case).unwrap();
        if !(rep.deficit.is_finite() && rep.deficit >= -1e-6) {
            failures.push(format!(
                "case {case}: deficit = {} (alpha {:?}, conv {:?})",
                rep.deficit, spec.alpha, spec.i_conv
            ));
        }
    }
    report(2, "feasible 1D interval positivity", started, 30.0, failures);
}

/// 3. Condition sharpness: infeasible weights admit a certified
/// counterexample; feasible smooth families keep the deficit nonnegative.
#[test]
fn criterion_3_condition_sharpness() {
    let started = Instant::now();
    let mut rng = rng_for(3);
    let mut failures = Vec::new();
    for case in 0..20 {
        let spec = random_infeasible_spec(&mut rng);
        let cex = build_counterexample(&spec, None).unwrap();
        let margin = hypothesis_margin(&cex.instance).unwrap().margin;
        if !(margin >= -1e-9) {
            failures.push(format!("infeasible case {case}: premise margin {margin} < -1e-9"));
        }
        let c10 = violation_at_origin(&cex.instance, 1.0).unwrap();
        if !(c10 <= -1e-3) {
            failures.push(format!("infeasible case {case}: C(1,0) = {c10} > -1e-3"));
        }
    }
    for case in 0..50 {
        let inst = random_feasible_instance(&mut rng);
        let summary = preservation_check(&inst, &[0.25, 1.0, 4.0]).unwrap();
        if !(summary.min_c >= -1e-4) {
            failures.push(format!("feasible case {case}: min C = {} < -1e-4", summary.min_c));
        }
    }
    report(3, "condition sharpness", started, 180.0, failures);
}

/// 4. Image-interval lemma against the brute-force sphere/ball oracle.
#[test]
fn criterion_4_lemma_oracle_agreement() {
    let started = Instant::now();
    let mut rng = rng_for(4);
    let mut failures = Vec::new();
    for case in 0..200 {
        let m = rng.gen_range(1..=4usize);
        let alpha: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.5)).collect();
        let k = rng.gen_range(0..=m);
        let interval = phi_image_interval(&alpha, k);
        let brute = phi_min_bruteforce(&alpha, k, 2, 720).unwrap();
        if !((interval.lo - brute).abs() <= 5e-3) {
            failures.push(format!(
                "case {case}: lemma lo {} vs brute {brute} (alpha {alpha:?}, k {k})",
                interval.lo
            ));
        }
        let sum: f64 = alpha.iter().sum();
        if interval.hi != sum {
            failures.push(format!("case {case}: hi {} != sum {sum}", interval.hi));
        }
    }
    report(4, "lemma vs brute-force oracle", started, 60.0, failures);
}

/// 5. Certificate completeness: no false verdict in either direction.
#[test]
fn criterion_5_certificate_completeness() {
    let started = Instant::now();
    let mut rng = rng_for(5);
    let mut failures = Vec::new();
    let mut accepted = 0usize;
    while accepted < 100 {
        let m = rng.gen_range(1..=4usize);
        let alpha: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..3.0)).collect();
        let i_conv: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.25)).collect();
        let spec = AlphaSpec::new(alpha, i_conv).unwrap();
        if !check_alpha(&spec).feasible {
            continue;
        }
        accepted += 1;
        match find_certificate(&spec, 1e-9) {
            Ok(cert) => {
                let r = &cert.residuals;
                if r.sum_norm > 1e-9
                    || r.unit_norm > 1e-9
                    || r.ball_excess > 1e-9
                    || r.lambda_min < -1e-9
                    || r.b_min_eigenvalue < -1e-9
                {
                    failures.push(format!(
                        "feasible {:?}/{:?}: residuals out of tolerance {r:?}",
                        spec.alpha, spec.i_conv
                    ));
                }
            }
            Err(e) => failures.push(format!(
                "false negative on feasible {:?}/{:?}: {e}",
                spec.alpha, spec.i_conv
            )),
        }
    }
    for case in 0..100 {
        let spec = random_infeasible_spec(&mut rng);
        if !matches!(find_certificate(&spec, 1e-9), Err(LabError::Infeasible(_))) {
            failures.push(format!(
                "false positive on infeasible case {case}: {:?}/{:?}",
                spec.alpha, spec.i_conv
            ));
        }
    }
    report(5, "certificate completeness", started, 60.0, failures);
}

/// 6. PDE identities: second-order refinement on the smooth family and
/// near-exactness on the closed-form families, for all three equations.
#[test]
fn criterion_6_pde_identities() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let points: Vec<Vec<f64>> = vec![vec![-0.6], vec![0.3], vec![0.7]];

    // heat equation d_t u = 1/2 lap u on the smooth family
    let rule96 = QuadratureRule::gauss_hermite(96);
    let f0 = |x: &[f64]| phi(1.0 - x[0] * x[0]);
    let coarse = heat_pde_residual_fn(&f0, 1, 0.25, 2e-3, 1.0 / 8.0, &points, &rule96)
        .unwrap()
        .max_abs;
    let fine = heat_pde_residual_fn(&f0, 1, 0.25, 1e-3, 1.0 / 16.0, &points, &rule96)
        .unwrap()
        .max_abs;
    if !(coarse >= 3.5 * fine) {
        failures.push(format!("heat refinement ratio {} < 3.5", coarse / fine));
    }
    // heat equation on the probit-affine closed form, evaluated without
    // quadrature
    {
        let (u, c, t, dt, h) = (0.4, 0.1, 1.0, 1e-3, 1.0 / 64.0);
        let ev = |tt: f64, xx: f64| probit_affine_evolute(&[u], c, tt, &[xx]);
        for x in [-1.0, 0.0, 1.5] {
            let dudt = (ev(t + dt, x) - ev(t - dt, x)) / (2.0 * dt);
            let lap = (ev(t, x + h) - 2.0 * ev(t, x) + ev(t, x - h)) / (h * h);
            let r = (dudt - 0.5 * lap).abs();
            if !(r <= 1e-6) {
                failures.push(format!("heat closed form residual {r} at x = {x}"));
            }
        }
    }

    // probit equation d_t F = 1/2 (lap F - F |grad F|^2) on the smooth
    // family under simultaneous refinement
    let rule64 = QuadratureRule::gauss_hermite(64);
    {
        let run = |spacing: f64, dt: f64| -> f64 {
            let count = (16.0 / spacing) as usize + 1;
            let field_at = |tt: f64| -> ProbitField {
                let g = GridFunction::from_fn(
                    vec![Axis::new(-8.0, spacing, count)],
                    RangeTag::Probability,
                    Extension::Constant,
                    |x| heat_evolve_point(&f0, 1, tt, x, &rule64).unwrap(),
                );
                probit_transform(&g).unwrap()
            };
            let t = 0.25;
            probit_pde_residual(&field_at(t - dt), &field_at(t), &field_at(t + dt), dt, 3.0)
                .unwrap()
                .max_abs
        };
        let coarse = run(1.0 / 8.0, 2e-3);
        let fine = run(1.0 / 16.0, 1e-3);
        if !(coarse >= 3.5 * fine) {
            failures.push(format!("probit refinement ratio {} < 3.5", coarse / fine));
        }
    }
    // probit equation on the probit-affine closed form
    {
        let (u, c, t, dt) = (0.4, 0.1, 1.0, 1e-3);
        let field_at = |tt: f64| -> ProbitField {
            let g = GridFunction::from_fn(
                vec![Axis::new(-4.0, 1.0 / 16.0, 129)],
                RangeTag::Probability,
                Extension::Constant,
                |x| probit_affine_evolute(&[u], c, tt, x),
            );
            probit_transform(&g).unwrap()
        };
        let rep =
            probit_pde_residual(&field_at(t - dt), &field_at(t), &field_at(t + dt), dt, 0.5)
                .unwrap();
        if !(rep.max_abs <= 1e-6) {
            failures.push(format!("probit closed form residual {}", rep.max_abs));
        }
    }

    // log equation 2 d_t U = lap U + |grad U|^2 on the smooth family
    {
        let g = |x: &[f64]| (-x[0] * x[0]).exp();
        let coarse = log_pde_residual_fn(&g, 1, 0.5, 2e-2, 1.0 / 16.0, &points, &rule96)
            .unwrap()
            .max_abs;
        let fine = log_pde_residual_fn(&g, 1, 0.5, 1e-2, 1.0 / 32.0, &points, &rule96)
            .unwrap()
            .max_abs;
        if !(coarse >= 3.5 * fine) {
            failures.push(format!("log refinement ratio {} < 3.5", coarse / fine));
        }
    }
    // log equation on the log-affine closed form
    {
        let g = |x: &[f64]| (0.7 * x[0] - 0.2).exp();
        let rep =
            log_pde_residual_fn(&g, 1, 0.5, 1e-3, 1.0 / 64.0, &points, &rule64).unwrap();
        if !(rep.max_abs <= 1e-6) {
            failures.push(format!("log-affine closed form residual {}", rep.max_abs));
        }
    }

    report(6, "PDE identities", started, 120.0, failures);
}

/// 7. Heat flow preserves probit-concavity of grid data.
#[test]
fn criterion_7_concavity_preservation() {
    let started = Instant::now();
    let mut rng = rng_for(7);
    let mut failures = Vec::new();
    // composite panels resolve the kinks of the piecewise-linear grid
    // interpolant; spectral rules lose too much accuracy on them, and that
    // error is amplified by 1/phi in probit scale
    let rule = QuadratureRule::composite_legendre(1200, 6.0);
    for case in 0..20 {
        let bumps: Vec<Bump> = (0..rng.gen_range(0..=2usize))
            .map(|_| Bump {
                weight: rng.gen_range(0.05..0.2),
                center: rng.gen_range(-1.0..1.0),
            })
            .collect();
        let field = ScalarField::ProbitConcave {
            slope: rng.gen_range(-0.5..0.5),
            offset: rng.gen_range(-0.5..0.5),
            bumps,
        };
        let g = field.to_grid(vec![Axis::new(-3.0, 1.0 / 16.0, 97)], Extension::AffineTail);
        for t in [0.5, 1.0, 2.0] {
            let evolved = heat_evolve_grid(&g, t, &rule).unwrap();
            let p = probit_transform(&evolved).unwrap();
            let d2 = p.max_second_difference_1d();
            if !(d2 <= 1e-6) {
                failures.push(format!("case {case}, t = {t}: max second difference {d2}"));
            }
        }
    }
    report(7, "probit-concavity preservation", started, 30.0, failures);
}

fn frame_datum(c: f64) -> BLDatum {
    let angles = [0.0f64, std::f64::consts::PI / 3.0, 2.0 * std::f64::consts::PI / 3.0];
    BLDatum {
        n: 2,
        entries: angles
            .iter()
            .map(|&th| BLEntry {
                c,
                b: MatrixData::from_rows(&[vec![th.cos(), th.sin()]]),
            })
            .collect(),
    }
}

fn layout_constraint_residual(datum: &GBLDatum, a: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for e in &datum.entries {
        let l = e.l.to_dmatrix();
        let ni = l.nrows();
        let res = &l * a * l.transpose() - DMatrix::identity(ni, ni);
        worst = worst.max(res.norm());
    }
    worst
}

/// 8. Brascamp-Lieb module: frame validation, preservation deficits,
/// kernel verdicts, and the second-order cross-check.
#[test]
fn criterion_8_brascamp_lieb() {
    let started = Instant::now();
    let mut failures = Vec::new();

    // exact validation of the 120-degree tight frame
    let frame = frame_datum(2.0 / 3.0);
    let v = validate_bl_datum(&frame);
    if !v.pass
        || v.row_orth_residual > 1e-12
        || v.decomposition_residual > 1e-12
        || v.trace_residual > 1e-12
    {
        failures.push(format!("frame validation residuals {v:?}"));
    }
    if validate_bl_datum(&frame_datum(1.0)).pass {
        failures.push("mis-weighted frame accepted".into());
    }

    // preservation deficits vs analytic values (both families below are
    // exact equality cases, analytic deficit 0)
    let iso: Vec<GaussianFn> = (0..3).map(|_| GaussianFn::centered(&[1.0])).collect();
    let rep = bl_preservation_check(&frame, &iso, &[0.25, 1.0, 4.0], 64, DEFAULT_SEED).unwrap();
    if !(rep.max_deficit.abs() <= 1e-4) {
        failures.push(format!("isotropic frame deficit {} != 0", rep.max_deficit));
    }
    let coord = BLDatum {
        n: 2,
        entries: vec![
            BLEntry { c: 1.0, b: MatrixData::from_rows(&[vec![1.0, 0.0]]) },
            BLEntry { c: 1.0, b: MatrixData::from_rows(&[vec![0.0, 1.0]]) },
        ],
    };
    let prod = vec![GaussianFn::centered(&[0.7]), GaussianFn::centered(&[2.3])];
    let rep = bl_preservation_check(&coord, &prod, &[0.25, 1.0, 4.0], 64, DEFAULT_SEED).unwrap();
    if !(rep.max_deficit.abs() <= 1e-4) {
        failures.push(format!("product deficit {} != 0", rep.max_deficit));
    }
    // matched log-affine reverse family: also an exact equality case
    let v0 = [0.6, -0.9];
    let matched: Vec<GaussianFn> = frame
        .entries
        .iter()
        .map(|e| {
            let a = e.b.to_dmatrix() * nalgebra::DVector::from_row_slice(&v0);
            GaussianFn::log_affine(a.as_slice().to_vec(), 0.3)
        })
        .collect();
    let rep =
        rbl_preservation_check(&frame, &matched, &[0.25, 1.0, 4.0], 64, DEFAULT_SEED).unwrap();
    if !(rep.min_deficit.abs() <= 1e-4) {
        failures.push(format!("matched log-affine deficit {} != 0", rep.min_deficit));
    }

    // kernel verdicts: reverse layout equal-norm exactly for isometries,
    // forward layout never equal-norm when some n_i < N
    let rot = |th: f64, s: f64| {
        MatrixData::from_rows(&[
            vec![s * th.cos(), -s * th.sin()],
            vec![s * th.sin(), s * th.cos()],
        ])
    };
    let iso_datum = BLDatum {
        n: 2,
        entries: vec![
            BLEntry { c: 0.5, b: rot(0.3, 1.0) },
            BLEntry { c: 0.5, b: rot(-1.1, 1.0) },
        ],
    };
    let k = kernel_structure(&rbl_layout(&iso_datum)).unwrap();
    if !k.equal_norm {
        failures.push(format!("isometric reverse layout spread {}", k.norm_spread));
    }
    let scaled_datum = BLDatum {
        n: 2,
        entries: vec![
            BLEntry { c: 1.0, b: rot(0.3, std::f64::consts::FRAC_1_SQRT_2) },
            BLEntry { c: 1.0, b: rot(-1.1, std::f64::consts::FRAC_1_SQRT_2) },
        ],
    };
    let k = kernel_structure(&rbl_layout(&scaled_datum)).unwrap();
    if k.equal_norm {
        failures.push("non-isometric reverse layout reported equal-norm".into());
    }
    let k = kernel_structure(&bl_layout(&frame)).unwrap();
    if k.equal_norm {
        failures.push("forward layout with n_i < N reported equal-norm".into());
    }

    // second-order cross-check against the weight certificate
    let spec = AlphaSpec::new(vec![1.0, 1.0], []).unwrap();
    let cert = find_certificate(&spec, 1e-9).unwrap();
    let (m, n) = (2usize, 1usize);
    let layout = ehrhard_layout(&spec.alpha, n);
    let mut a = DMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..m {
            for kk in 0..n {
                a[(i * n + kk, j * n + kk)] = cert.b[i][j];
            }
        }
    }
    let res = layout_constraint_residual(&layout, &a);
    if !(res <= 1e-8) {
        failures.push(format!("certificate matrix constraint residual {res}"));
    }
    let min_ev = a
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(min_ev >= -1e-9) {
        failures.push(format!("certificate matrix min eigenvalue {min_ev}"));
    }
    match second_order_feasible(&layout, 5000).unwrap() {
        SecondOrderOutcome::Feasible {
            constraint_residual,
            min_eigenvalue,
            ..
        } => {
            if constraint_residual > 1e-8 || min_eigenvalue < -1e-9 {
                failures.push(format!(
                    "projection witness out of tolerance: residual {constraint_residual}, \
                     min eigenvalue {min_eigenvalue}"
                ));
            }
        }
        other => failures.push(format!("second-order search returned {other:?}")),
    }

    report(8, "Brascamp-Lieb module", started, 120.0, failures);
}

/// 9. Epigraph lift measure agrees with the evolved value.
#[test]
fn criterion_9_epigraph_lift() {
    let started = Instant::now();
    let mut rng = rng_for(9);
    let mut failures = Vec::new();
    for case in 0..20 {
        let field = if rng.gen_bool(0.25) {
            ScalarField::ProbitAffine {
                slope: vec![rng.gen_range(-0.8..0.8)],
                offset: rng.gen_range(-0.5..0.5),
            }
        } else {
            let bumps: Vec<Bump> = (0..rng.gen_range(0..=3usize))
                .map(|_| Bump {
                    weight: rng.gen_range(0.05..0.3),
                    center: rng.gen_range(-2.0..2.0),
                })
                .collect();
            ScalarField::ProbitConcave {
                slope: rng.gen_range(-0.8..0.8),
                offset: rng.gen_range(-0.5..0.5),
                bumps,
            }
        };
        let t = rng.gen_range(0.25..2.0);
        let x = rng.gen_range(-1.5..1.5);
        match ehrhard_lab::lab::epigraph_lift(&field, t, &[x]) {
            Ok(lift) => {
                if !(lift.mismatch <= 1e-4) {
                    failures.push(format!("case {case}: mismatch {}", lift.mismatch));
                }
            }
            Err(e) => failures.push(format!("case {case}: lift failed: {e}")),
        }
    }
    report(9, "epigraph lift consistency", started, 60.0, failures);
}
