//! Acceptance harness. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::One;
use serde::Serialize;
use symop_core::det_eqs::{
    compare_solution_spaces, generate_det_system, instantiate, oracle_system, random_potential, Ansatz, DetSystem,
    Parity,
};
use symop_core::exact::{rat_int, GaussianRational, LaurentPoly, Rational};
use symop_core::killing::{ansatz_bounds, dimension_report, saturation_dims, solve_free};
use symop_core::lie::{
    check_row, default_sweep_cases, negative_sweep, Catalog, CheckOptions, LieError, RowReport, SweepReport,
};
use symop_core::report::{Report, Summary};
use symop_core::third_order::{
    compatibility_residual, exact_verify, family_residual, numeric_verify, ode_integrate, x_pow, ExactTime, Family,
    NumericPotential, NumericReport, NumericVerifyConfig, OdeOptions, PotentialFamily, ThirdOrderError,
};
use symop_core::weyl::{build_l, commutator_with_l, DiffOp};

const SEED: u64 = 42;
const SAMPLES: usize = 100;
const LIE_TOL: f64 = 1e-9;
const NEGATIVE_MEDIAN_FLOOR: f64 = 1e-2;
const SERIES_TOL: f64 = 1e-10;
const P214_RESIDUAL_TOL: f64 = 1e-8;
const E216_RESIDUAL_TOL: f64 = 1e-7;
const RANDOM_V_DEGREE: u32 = 3;
const RANDOM_V_SEED: u64 = 2024;

type Outcome = (bool, String);

fn fam(f: Family, w: &[i64]) -> PotentialFamily {
    PotentialFamily::new(f, w.iter().map(|&v| rat_int(v)).collect()).unwrap()
}

fn one() -> Rational {
    Rational::one()
}

fn criterion_1() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (n, m) in [(1, 1), (2, 1), (3, 1), (2, 2)] {
        let sys = generate_det_system(n, m, false);
        let ansatz = Ansatz {
            dim: m,
            bounds: ansatz_bounds(n, m, 1),
        };
        for (label, v) in [
            ("V=0", LaurentPoly::zero(m + 1)),
            ("V random", random_potential(m, RANDOM_V_DEGREE, RANDOM_V_SEED + n as u64)),
        ] {
            let a = instantiate(&sys, &ansatz, &v, &one()).unwrap();
            let b = oracle_system(n, m, &ansatz, &v, &one()).unwrap();
            let c = compare_solution_spaces(&a, &b).unwrap();
            ok &= c.pass;
            details.push(format!("({n},{m}) {label}: nullity {}/{}", c.nullity_a, c.nullity_b));
        }
    }
    (ok, details.join("; "))
}

fn chains_disjoint(sys: &DetSystem) -> bool {
    let even = DetSystem::referenced_ranks(sys.chain(Parity::Even));
    let odd = DetSystem::referenced_ranks(sys.chain(Parity::Odd));
    let all_chained = sys.equations.iter().all(|e| e.chain.is_some());
    even.iter().all(|r| r % 2 == 0) && odd.iter().all(|r| r % 2 == 1) && all_chained && !sys.has_time_derivatives()
}

fn criterion_2() -> Outcome {
    let mut checked = 0;
    let mut ok = true;
    for n in 0..=4 {
        for m in 1..=3 {
            ok &= chains_disjoint(&generate_det_system(n, m, true));
            checked += 1;
        }
    }
    (ok, format!("{checked} systems, even/odd rank sets disjoint and parity-pure"))
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for (n, m) in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (1, 3)] {
        let dims = saturation_dims(n, m, &one()).unwrap();
        let stable = dims.iter().all(|d| *d == dims[0]);
        let verified = solve_free(n, m, &one()).map(|b| b.len() == dims[0]).unwrap_or(false);
        ok &= stable && verified;
        details.push(format!("({n},{m}) dim {}", dims[0]));
    }
    let rep = dimension_report(2, 3).unwrap();
    let totals: Vec<usize> = rep.rows.iter().map(|r| r.computed).collect();
    let news: Vec<usize> = rep.rows.iter().map(|r| r.computed_new).collect();
    let formula: Vec<u64> = rep.rows.iter().map(|r| r.formula).collect();
    ok &= formula == vec![1, 9, 40] && rep.rows.iter().all(|r| r.saturated);
    details.push(format!(
        "m=3 totals {totals:?}, exact-order {news:?} vs N_n {formula:?} (total match {}, exact-order match {})",
        rep.rows.iter().all(|r| r.matches_total),
        rep.rows.iter().all(|r| r.matches_new)
    ));
    (ok, details.join("; "))
}

/// `Q = p³ + ¾{U, p}` with `p = -i∂_x`, written out by hand:
/// `i∂³ − (3i/2)U∂ − (3i/4)U'`.
fn hand_built_q(u: &LaurentPoly) -> DiffOp {
    let i = GaussianRational::i();
    let mut q = DiffOp::zero(2);
    q.add_term(vec![0, 3], LaurentPoly::constant(2, i.clone()));
    q.add_term(vec![0, 1], u.scale(&(&i * &GaussianRational::from_ratio(-3, 2))));
    q.add_term(vec![0, 0], u.diff(1, 1).scale(&(&i * &GaussianRational::from_ratio(-3, 4))));
    q
}

fn commutes(u: &LaurentPoly) -> bool {
    let v = u.scale(&GaussianRational::from_ratio(1, 2));
    let l = build_l(1, &one(), &v).unwrap();
    commutator_with_l(&l, &hand_built_q(u)).unwrap().is_zero()
}

fn unit_time() -> ExactTime {
    ExactTime::polynomial(LaurentPoly::one(2), LaurentPoly::zero(2), LaurentPoly::zero(2), LaurentPoly::zero(2))
}

fn criterion_4() -> Outcome {
    let f = fam(Family::W213, &[0]);
    let u = x_pow(-2, 2);
    let fr = family_residual(&f, &u).unwrap().is_zero();
    let cr = compatibility_residual(&u, &unit_time()).unwrap().is_zero();
    let hand = commutes(&u);
    let built = exact_verify(&f, &u).unwrap().pass;
    let bad = &x_pow(-2, 3) + &x_pow(1, 1);
    let neg_hand = !commutes(&bad);
    let neg_built = !exact_verify(&f, &bad).unwrap().pass;
    let ok = fr && cr && hand && built && neg_hand && neg_built;
    (
        ok,
        format!(
            "family residual zero {fr}, compatibility zero {cr}, [L,Q]=0 (hand-built {hand}, library {built}); corrupted U=3x^-2+x rejected {}",
            neg_hand && neg_built
        ),
    )
}

fn painleve_series(w2: f64, terms: usize) -> Vec<f64> {
    let mut u = vec![0.0; terms];
    for k in 0..terms - 2 {
        let conv: f64 = (0..=k).map(|i| u[i] * u[k - i]).sum();
        let src = if k == 1 { 8.0 * w2 } else { 0.0 };
        u[k + 2] = (3.0 * conv + src) / ((k + 2) * (k + 1)) as f64;
    }
    u
}

#[derive(Serialize)]
struct SeriesCheck {
    x: f64,
    series: f64,
    integrated: f64,
    difference: f64,
}

#[derive(Serialize)]
struct NumericResults {
    series: Option<SeriesCheck>,
    max_local_error: f64,
    reports: Vec<NumericReport>,
}

fn criterion_5_report() -> Report {
    let f = fam(Family::P214, &[1]);
    let sol = ode_integrate(&f, (0.0, 1.0), &[0.0, 0.0], &OdeOptions::default()).unwrap();
    let x = 0.1;
    let coeffs = painleve_series(1.0, 40);
    let series = coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let integrated = sol.u(x).unwrap();
    let sc = SeriesCheck {
        x,
        series,
        integrated,
        difference: (series - integrated).abs(),
    };
    let cfg = NumericVerifyConfig {
        tolerance: P214_RESIDUAL_TOL,
        ..Default::default()
    };
    let max_local_error = sol.max_local_error();
    let pot = NumericPotential::Ode(sol);
    let reports = numeric_verify(&f, &pot, &cfg).unwrap();
    let corrupted = NumericVerifyConfig {
        h1_scale: 1.01,
        ..cfg.clone()
    };
    let rejected = numeric_verify(&f, &pot, &corrupted).unwrap().iter().all(|r| !r.pass);
    let summary = Summary::from_checks(
        std::iter::once(("series agreement".to_string(), sc.difference <= SERIES_TOL))
            .chain(reports.iter().map(|r| (format!("residual {}", r.label), r.pass && r.points == 400)))
            .chain(std::iter::once(("corrupted operator rejected".to_string(), rejected))),
    );
    let results = NumericResults {
        series: Some(sc),
        max_local_error,
        reports,
    };
    Report::new("acceptance-5", &cfg, &results, summary).unwrap()
}

fn criterion_6_report() -> Report {
    let f = fam(Family::E216, &[-1, 0]);
    let sol = ode_integrate(&f, (0.0, 1.0), &[0.1, 0.3, -0.2], &OdeOptions::default()).unwrap();
    let cfg = NumericVerifyConfig {
        tolerance: E216_RESIDUAL_TOL,
        ..Default::default()
    };
    let max_local_error = sol.max_local_error();
    let reports = numeric_verify(&f, &NumericPotential::Ode(sol.clone()), &cfg).unwrap();
    let mut checks: Vec<(String, bool)> = reports.iter().map(|r| (format!("residual {}", r.label), r.pass)).collect();
    checks.push(("two operators".into(), reports.len() == 2));
    for w4 in [0, 1] {
        let g = fam(Family::E216, &[w4, 0]);
        let rejected = matches!(
            numeric_verify(&g, &NumericPotential::Ode(sol.clone()), &cfg),
            Err(ThirdOrderError::OmegaNotNegative(_))
        );
        checks.push((format!("omega4={w4} rejected"), rejected));
    }
    let results = NumericResults {
        series: None,
        max_local_error,
        reports,
    };
    Report::new("acceptance-6", &cfg, &results, Summary::from_checks(checks)).unwrap()
}

#[derive(Serialize)]
struct CatalogResults {
    rows: Vec<RowReport>,
    skipped: Vec<String>,
}

fn criterion_7_report() -> Report {
    let opts = CheckOptions {
        samples: SAMPLES,
        seed: SEED,
        tol: LIE_TOL,
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut ids = vec!["E".to_string()];
    ids.extend(Catalog::builtin().table_rows());
    for m in 1..=3 {
        for id in &ids {
            match check_row(id, m, &BTreeMap::new(), &opts) {
                Ok(r) => rows.push(r),
                Err(LieError::Constraint(msg)) => skipped.push(format!("{id} m={m}: {msg}")),
                Err(e) => panic!("row {id} m={m}: {e}"),
            }
        }
    }
    let summary = Summary::from_checks(rows.iter().map(|r| (format!("{} m={}", r.row, r.dim), r.pass)));
    Report::new("acceptance-7", &opts, &CatalogResults { rows, skipped }, summary).unwrap()
}

fn criterion_8_report() -> Report {
    let opts = CheckOptions {
        samples: SAMPLES,
        seed: SEED,
        tol: LIE_TOL,
        ..Default::default()
    };
    let sweep: SweepReport = negative_sweep(&default_sweep_cases(), &opts).unwrap();
    let mut checks: Vec<(String, bool)> = sweep
        .cases
        .iter()
        .map(|c| {
            let ok = if c.expect_fail {
                !c.passed_check && c.median_normalized >= NEGATIVE_MEDIAN_FLOOR
            } else {
                c.passed_check
            };
            (c.name.clone(), ok)
        })
        .collect();
    for row in ["2.6", "2.7", "2.8"] {
        let covered = sweep.cases.iter().any(|c| c.expect_fail && c.row == row);
        checks.push((format!("detuned case for row {row}"), covered));
    }
    let cubic = sweep
        .cases
        .iter()
        .any(|c| c.expect_fail && c.row == "2.7" && c.dim == 1 && c.name.contains("Pi"));
    checks.push(("Pi for cubic F at m=1".into(), cubic));
    Report::new("acceptance-8", &opts, &sweep, Summary::from_checks(checks)).unwrap()
}

fn describe(r: &Report) -> String {
    if r.pass() {
        format!("{} checks", r.summary.checks)
    } else {
        format!("{} checks, failed: {}", r.summary.checks, r.summary.failed.join(", "))
    }
}

fn detail_5(r: &Report) -> String {
    let s = &r.results["series"];
    let max = r.results["reports"].as_array().unwrap().iter().map(|q| q["max_residual"].as_f64().unwrap()).fold(0.0, f64::max);
    format!(
        "{}; |series - ode| at x=0.1 = {:.2e} (tol {SERIES_TOL:e}); max residual {max:.2e} (tol {P214_RESIDUAL_TOL:e})",
        describe(r),
        s["difference"].as_f64().unwrap()
    )
}

fn detail_6(r: &Report) -> String {
    let res: Vec<String> = r.results["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|q| format!("{} {:.2e}", q["label"].as_str().unwrap(), q["max_residual"].as_f64().unwrap()))
        .collect();
    format!("{}; {} (tol {E216_RESIDUAL_TOL:e})", describe(r), res.join(", "))
}

fn detail_7(r: &Report) -> String {
    let rows = r.results["rows"].as_array().unwrap();
    let max = rows.iter().map(|q| q["max_normalized"].as_f64().unwrap()).fold(0.0, f64::max);
    format!(
        "{}; {} row checks at m=1,2,3, max normalized residual {max:.2e} (tol {LIE_TOL:e}); row 2.4 uses the sign-corrected field, the printed field fails (see criterion 8)",
        describe(r),
        rows.len()
    )
}

fn detail_8(r: &Report) -> String {
    let meds: Vec<String> = r.results["cases"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["expect_fail"].as_bool().unwrap())
        .map(|c| format!("{} {:.2e}", c["name"].as_str().unwrap(), c["median_normalized"].as_f64().unwrap()))
        .collect();
    format!("{}; medians (floor {NEGATIVE_MEDIAN_FLOOR:e}): {}", describe(r), meds.join(", "))
}

struct Criterion {
    id: usize,
    limit: Duration,
    run: Box<dyn Fn() -> Outcome>,
}

fn from_report(build: fn() -> Report, detail: fn(&Report) -> String) -> Box<dyn Fn() -> Outcome> {
    Box::new(move || {
        let r = build();
        (r.pass(), detail(&r))
    })
}

fn criterion_9() -> Outcome {
    let builders: [(usize, fn() -> Report); 4] = [
        (5, criterion_5_report),
        (6, criterion_6_report),
        (7, criterion_7_report),
        (8, criterion_8_report),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (id, build) in builders {
        let a = build().with_timing(Duration::from_millis(1)).canonical_json();
        let b = build().with_timing(Duration::from_millis(2)).canonical_json();
        let same = a == b;
        ok &= same;
        details.push(format!("{id}: {} bytes {}", a.len(), if same { "identical" } else { "differ" }));
    }
    (ok, details.join("; "))
}

fn main() -> ExitCode {
    let criteria = vec![
        Criterion { id: 1, limit: Duration::from_secs(120), run: Box::new(criterion_1) },
        Criterion { id: 2, limit: Duration::from_secs(60), run: Box::new(criterion_2) },
        Criterion { id: 3, limit: Duration::from_secs(300), run: Box::new(criterion_3) },
        Criterion { id: 4, limit: Duration::from_secs(1), run: Box::new(criterion_4) },
        Criterion { id: 5, limit: Duration::from_secs(30), run: from_report(criterion_5_report, detail_5) },
        Criterion { id: 6, limit: Duration::from_secs(30), run: from_report(criterion_6_report, detail_6) },
        Criterion { id: 7, limit: Duration::from_secs(300), run: from_report(criterion_7_report, detail_7) },
        Criterion { id: 8, limit: Duration::from_secs(300), run: from_report(criterion_8_report, detail_8) },
        Criterion { id: 9, limit: Duration::from_secs(600), run: Box::new(criterion_9) },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| (c.run)()));
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => {
                let in_time = elapsed <= c.limit;
                let detail = if in_time {
                    detail
                } else {
                    format!("{detail}; over time limit {:?}", c.limit)
                };
                (pass && in_time, detail)
            }
            Err(_) => (false, "panicked".into()),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {}: {} [{:.2}s] {}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            detail
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
