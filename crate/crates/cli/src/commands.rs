//! Subcommand bodies. Each returns either a JSON report or plain text plus
//! a pass flag.

use std::collections::BTreeMap;

use serde::Serialize;
use symop_core::det_eqs::{compare_solution_spaces, generate_det_system, instantiate, oracle_system, Ansatz, SpaceComparison};
use symop_core::exact::{parse_rational, rat_int, Rational};
use symop_core::killing::{ansatz_bounds, dimension_report, saturation_dims, solve_free_at, DimensionReport};
use symop_core::lie::{
    check_request, default_sweep_cases, negative_sweep, Catalog, CheckOptions, EquationForm, RowReport, RowRequest,
    SweepReport, ThetaBinding,
};
use symop_core::report::{emit_detsystem, parse_potential, DetFormat, Report, Summary};
use symop_core::third_order::{
    exact_verify, numeric_verify, ode_integrate, ExactReport, Family, NumericPotential, NumericReport,
    NumericVerifyConfig, OdeOptions, PotentialFamily, ThirdOrderError,
};

use super::{CliError, DetOutput, DetgenArgs, FormArg, FreesolveArgs, LieCheckArgs, ThirdOrderArgs, VerifyArgs};

pub enum Rendered {
    Report(Box<Report>),
    Text { text: String, pass: bool },
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn report(command: &str, config: &impl Serialize, results: &impl Serialize, summary: Summary) -> Result<Rendered, CliError> {
    Ok(Rendered::Report(Box::new(Report::new(command, config, results, summary).map_err(usage)?)))
}

fn rational(s: &str, what: &str) -> Result<Rational, CliError> {
    parse_rational(s).ok_or_else(|| usage(format!("{what}: `{s}` is not a rational number")))
}

fn pair(v: &[f64], what: &str) -> Result<(f64, f64), CliError> {
    match v {
        [a, b] if a < b => Ok((*a, *b)),
        _ => Err(usage(format!("{what} expects two increasing values a,b"))),
    }
}

fn check_dim(m: usize) -> Result<(), CliError> {
    if m == 0 {
        Err(usage("dimension must be at least 1"))
    } else {
        Ok(())
    }
}

#[derive(Serialize)]
struct DetgenConfig<'a> {
    order: usize,
    dim: usize,
    stationary: bool,
    potential: &'a str,
    mass: &'a str,
    margin: u32,
}

#[derive(Serialize)]
struct DetgenResults {
    equations: usize,
    system: symop_core::det_eqs::DetSystem,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<SpaceComparison>,
}

pub fn detgen(a: &DetgenArgs) -> Result<Rendered, CliError> {
    check_dim(a.dim)?;
    let sys = generate_det_system(a.order, a.dim, a.stationary);
    if !a.check {
        return Ok(match a.format {
            DetOutput::Json => Rendered::Text {
                text: emit_detsystem(&sys, DetFormat::Json),
                pass: true,
            },
            DetOutput::Latex => Rendered::Text {
                text: emit_detsystem(&sys, DetFormat::Latex),
                pass: true,
            },
            DetOutput::Report => {
                let results = DetgenResults {
                    equations: sys.equations.len(),
                    system: sys,
                    oracle: None,
                };
                return report("detgen", &config(a), &results, Summary::from_checks::<&str>([]));
            }
        });
    }
    if a.stationary {
        return Err(usage("--check compares time-dependent systems; drop --stationary"));
    }
    let v = parse_potential(&a.potential, a.dim).map_err(usage)?;
    let mass = rational(&a.mass, "--mass")?;
    let ansatz = Ansatz {
        dim: a.dim,
        bounds: ansatz_bounds(a.order, a.dim, a.margin),
    };
    let lhs = instantiate(&sys, &ansatz, &v, &mass).map_err(usage)?;
    let rhs = oracle_system(a.order, a.dim, &ansatz, &v, &mass).map_err(usage)?;
    let cmp = compare_solution_spaces(&lhs, &rhs).map_err(usage)?;
    let summary = Summary::from_checks([("oracle solution space", cmp.pass)]);
    let results = DetgenResults {
        equations: sys.equations.len(),
        system: sys,
        oracle: Some(cmp),
    };
    report("detgen", &config(a), &results, summary)
}

fn config(a: &DetgenArgs) -> DetgenConfig<'_> {
    DetgenConfig {
        order: a.order,
        dim: a.dim,
        stationary: a.stationary,
        potential: &a.potential,
        mass: &a.mass,
        margin: a.margin,
    }
}

#[derive(Serialize)]
struct FreesolveConfig<'a> {
    order: usize,
    dim: usize,
    mass: &'a str,
}

#[derive(Serialize)]
struct FreesolveResults {
    dimension: usize,
    saturation_dims: Vec<usize>,
    saturated: bool,
    verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    operators: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counts: Option<DimensionReport>,
}

pub fn freesolve(a: &FreesolveArgs) -> Result<Rendered, CliError> {
    check_dim(a.dim)?;
    let mass = rational(&a.mass, "--mass")?;
    if mass == rat_int(0) {
        return Err(usage("--mass must be nonzero"));
    }
    let dims = saturation_dims(a.order, a.dim, &mass).map_err(usage)?;
    let saturated = dims.iter().all(|d| *d == dims[0]);
    let basis = solve_free_at(a.order, a.dim, &mass, 0).map_err(usage)?;
    let verify_error = basis.verify().err().map(|e| e.to_string());
    let counts = if a.counts {
        if mass != rat_int(1) {
            return Err(usage("--counts is tabulated at unit mass"));
        }
        Some(dimension_report(a.order, a.dim).map_err(usage)?)
    } else {
        None
    };
    let results = FreesolveResults {
        dimension: basis.len(),
        saturation_dims: dims,
        saturated,
        verified: verify_error.is_none(),
        verify_error,
        operators: (!a.no_operators).then(|| basis.operators.iter().map(|q| q.to_string()).collect()),
        counts,
    };
    let summary = Summary::from_checks([
        ("ansatz saturated", results.saturated),
        ("operators commute with L", results.verified),
    ]);
    let cfg = FreesolveConfig {
        order: a.order,
        dim: a.dim,
        mass: &a.mass,
    };
    report("freesolve", &cfg, &results, summary)
}

#[derive(Serialize)]
struct ThirdOrderConfig {
    family: PotentialFamily,
    potential: Option<String>,
    initial: Option<Vec<f64>>,
    interval: Option<(f64, f64)>,
    numeric: Option<NumericVerifyConfig>,
    ode: Option<OdeOptions>,
}

#[derive(Serialize)]
struct OdeSummary {
    interval: (f64, f64),
    nodes: usize,
    max_local_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    csv: Option<String>,
}

#[derive(Serialize)]
struct ThirdOrderResults {
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ExactReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    numeric: Vec<NumericReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ode: Option<OdeSummary>,
}

fn third_order_error(e: ThirdOrderError) -> CliError {
    match e {
        ThirdOrderError::BlowUp { .. } | ThirdOrderError::StepLimit { .. } => CliError::Failed(e.to_string()),
        other => usage(other),
    }
}

pub fn third_order(a: &ThirdOrderArgs) -> Result<Rendered, CliError> {
    let family: Family = a.family.parse().map_err(usage)?;
    let omega = a
        .omega
        .iter()
        .map(|w| rational(w, "--omega"))
        .collect::<Result<Vec<_>, _>>()?;
    let fam = PotentialFamily::new(family, omega).map_err(usage)?;
    let mut ncfg = NumericVerifyConfig {
        t_range: pair(&a.t_range, "--t-range")?,
        x_range: a.x_range.as_deref().map(|v| pair(v, "--x-range")).transpose()?,
        nt: a.nt,
        nx: a.nx,
        tolerance: a.tol,
        ..Default::default()
    };
    let mut results = ThirdOrderResults {
        exact: None,
        numeric: Vec::new(),
        ode: None,
    };
    let mut cfg = ThirdOrderConfig {
        family: fam.clone(),
        potential: a.potential.clone(),
        initial: a.initial.clone(),
        interval: None,
        numeric: None,
        ode: None,
    };
    let mut checks: Vec<(String, bool)> = Vec::new();
    if let Some(text) = &a.potential {
        let u = parse_potential(text, 1).map_err(usage)?;
        let exact = exact_verify(&fam, &u).map_err(third_order_error)?;
        checks.push(("exact".into(), exact.pass));
        results.exact = Some(exact);
        if a.numeric {
            if ncfg.x_range.is_none() {
                ncfg.x_range = Some((1.0, 2.0));
            }
            results.numeric = numeric_verify(&fam, &NumericPotential::Laurent(u), &ncfg).map_err(third_order_error)?;
            cfg.numeric = Some(ncfg);
        }
    } else if let Some(initial) = &a.initial {
        let interval = pair(
            a.interval.as_deref().ok_or_else(|| usage("--initial needs --interval a,b"))?,
            "--interval",
        )?;
        let opts = OdeOptions {
            tolerance: a.ode_tol,
            ..Default::default()
        };
        let sol = ode_integrate(&fam, interval, initial, &opts).map_err(third_order_error)?;
        let csv = match &a.csv {
            Some(p) => {
                std::fs::write(p, sol.to_csv()).map_err(|source| CliError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                Some(p.display().to_string())
            }
            None => None,
        };
        results.ode = Some(OdeSummary {
            interval: sol.interval(),
            nodes: sol.grid.len(),
            max_local_error: sol.max_local_error(),
            csv,
        });
        results.numeric = numeric_verify(&fam, &NumericPotential::Ode(sol), &ncfg).map_err(third_order_error)?;
        cfg.interval = Some(interval);
        cfg.numeric = Some(ncfg);
        cfg.ode = Some(opts);
    } else {
        return Err(usage("give either --potential or --initial with --interval"));
    }
    for r in &results.numeric {
        checks.push((format!("numeric {}", r.label), r.pass));
    }
    report("third-order", &cfg, &results, Summary::from_checks(checks))
}

fn form(f: FormArg) -> EquationForm {
    match f {
        FormArg::Schrodinger => EquationForm::Schrodinger,
        FormArg::Heat => EquationForm::Heat,
    }
}

#[derive(Serialize)]
struct LieConfig<'a> {
    table: Option<u32>,
    row: Option<&'a str>,
    dim: usize,
    params: &'a BTreeMap<String, String>,
    theta: Option<&'a str>,
    printed: bool,
    options: CheckOptions,
}

#[derive(Serialize)]
struct CatalogEntry {
    id: String,
    table: u32,
    citation: String,
    nonlinearity: String,
    fields: Vec<String>,
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    raw.iter()
        .map(|p| match p.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
            _ => Err(usage(format!("--param expects NAME=EXPR, got `{p}`"))),
        })
        .collect()
}

fn rows_of(cat: &Catalog, table: Option<u32>) -> Vec<String> {
    cat.table_rows()
        .into_iter()
        .filter(|id| table.is_none_or(|t| cat.row(id).map(|r| r.table == t).unwrap_or(false)))
        .collect()
}

pub fn lie_check(a: &LieCheckArgs) -> Result<Rendered, CliError> {
    check_dim(a.dim)?;
    let cat = Catalog::builtin();
    let params = parse_params(&a.params)?;
    let opts = CheckOptions {
        samples: a.samples,
        seed: a.seed,
        tol: a.tol,
        form: form(a.form),
    };
    if a.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let cfg = LieConfig {
        table: a.table,
        row: a.row.as_deref(),
        dim: a.dim,
        params: &params,
        theta: a.theta.as_deref(),
        printed: a.printed,
        options: opts,
    };
    if a.list {
        let entries: Vec<CatalogEntry> = rows_of(cat, a.table)
            .iter()
            .map(|id| {
                let r = cat.row(id).expect("listed row exists");
                CatalogEntry {
                    id: r.id.clone(),
                    table: r.table,
                    citation: r.citation.clone(),
                    nonlinearity: r.f.clone(),
                    fields: r.fields.iter().map(|f| f.label.clone()).collect(),
                }
            })
            .collect();
        return report("lie-check", &cfg, &entries, Summary::from_checks::<&str>([]));
    }
    if a.sweep {
        let sweep: SweepReport = negative_sweep(&default_sweep_cases(), &opts).map_err(usage)?;
        let summary = Summary::from_checks(sweep.cases.iter().map(|c| (c.name.clone(), c.as_expected)));
        return report("lie-check", &cfg, &sweep, summary);
    }
    let ids: Vec<String> = match &a.row {
        Some(id) => {
            let rec = cat.row(id).map_err(usage)?;
            if let Some(t) = a.table {
                if rec.table != t {
                    return Err(usage(format!("row {id} belongs to table {}, not {t}", rec.table)));
                }
            }
            vec![id.clone()]
        }
        None => rows_of(cat, a.table),
    };
    if ids.is_empty() {
        return Err(usage("no catalogue rows selected"));
    }
    let mut reports: Vec<RowReport> = Vec::new();
    for id in &ids {
        let mut req = RowRequest::new(id, a.dim);
        req.params = params.clone();
        req.printed = a.printed;
        if let Some(t) = &a.theta {
            req.theta = ThetaBinding::Concrete { expr: t.clone() };
        }
        reports.push(check_request(&req, &opts).map_err(usage)?);
    }
    let summary = Summary::from_checks(reports.iter().map(|r| (format!("row {} m={}", r.row, r.dim), r.pass)));
    if reports.len() == 1 {
        report("lie-check", &cfg, &reports[0], summary)
    } else {
        report("lie-check", &cfg, &reports, summary)
    }
}

#[derive(Serialize)]
struct VerifyConfig {
    samples: usize,
    seed: u64,
    quick: bool,
}

#[derive(Serialize)]
struct VerifyItem {
    name: String,
    pass: bool,
    detail: String,
}

fn item(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> VerifyItem {
    VerifyItem {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

pub fn verify(a: &VerifyArgs) -> Result<Rendered, CliError> {
    let mut items = Vec::new();
    let one = rat_int(1);

    for (n, m, pot) in [(1, 1, "x^2"), (2, 1, "x^3 - x"), (3, 1, "2*x^2"), (2, 2, "x1^2 + x1*x2")] {
        let sys = generate_det_system(n, m, false);
        let ansatz = Ansatz {
            dim: m,
            bounds: ansatz_bounds(n, m, 0),
        };
        let v = parse_potential(pot, m).map_err(usage)?;
        let cmp = instantiate(&sys, &ansatz, &v, &one)
            .and_then(|l| Ok((l, oracle_system(n, m, &ansatz, &v, &one)?)))
            .and_then(|(l, r)| compare_solution_spaces(&l, &r));
        let (pass, detail) = match cmp {
            Ok(c) => (c.pass, format!("nullity {} vs {}", c.nullity_a, c.nullity_b)),
            Err(e) => (false, e.to_string()),
        };
        items.push(item(format!("determining equations n={n} m={m} V={pot}"), pass, detail));
    }

    for (n, m) in [(1, 1), (2, 1), (1, 2), (1, 3)] {
        let (pass, detail) = match solve_free_at(n, m, &one, 0).and_then(|b| b.verify().map(|_| b.len())) {
            Ok(d) => {
                let sat = saturation_dims(n, m, &one).map(|v| v.iter().all(|x| *x == d)).unwrap_or(false);
                (sat, format!("dimension {d}"))
            }
            Err(e) => (false, e.to_string()),
        };
        items.push(item(format!("free symmetries n={n} m={m}"), pass, detail));
    }

    let w = PotentialFamily::new(Family::W213, vec![rat_int(0)]).map_err(usage)?;
    let u = parse_potential("2*x^-2", 1).map_err(usage)?;
    let (pass, detail) = match exact_verify(&w, &u) {
        Ok(r) => (r.pass, format!("family residual {}", r.family_residual)),
        Err(e) => (false, e.to_string()),
    };
    items.push(item("third order exact W213 U=2x^-2", pass, detail));

    let p = PotentialFamily::new(Family::P214, vec![one.clone()]).map_err(usage)?;
    let ode = ode_integrate(&p, (0.0, 1.0), &[0.0, 0.0], &OdeOptions::default())
        .and_then(|s| numeric_verify(&p, &NumericPotential::Ode(s), &NumericVerifyConfig::default()));
    let (pass, detail) = match ode {
        Ok(rs) => (
            rs.iter().all(|r| r.pass),
            format!("max residual {:e}", rs.iter().map(|r| r.max_residual).fold(0.0, f64::max)),
        ),
        Err(e) => (false, e.to_string()),
    };
    items.push(item("third order numeric P214", pass, detail));

    let opts = CheckOptions {
        samples: a.samples,
        seed: a.seed,
        ..Default::default()
    };
    let dims: &[usize] = if a.quick { &[1] } else { &[1, 2, 3] };
    for &m in dims {
        for id in Catalog::builtin().table_rows() {
            let (pass, detail) = match check_request(&RowRequest::new(&id, m), &opts) {
                Ok(r) => (r.pass, format!("max normalized residual {:e}", r.max_normalized)),
                Err(e) => (false, e.to_string()),
            };
            items.push(item(format!("lie row {id} m={m}"), pass, detail));
        }
    }
    let (pass, detail) = match negative_sweep(&default_sweep_cases(), &opts) {
        Ok(s) => (s.all_as_expected, format!("{} cases", s.cases.len())),
        Err(e) => (false, e.to_string()),
    };
    items.push(item("lie negative controls", pass, detail));

    let summary = Summary::from_checks(items.iter().map(|i| (i.name.clone(), i.pass)));
    let cfg = VerifyConfig {
        samples: a.samples,
        seed: a.seed,
        quick: a.quick,
    };
    report("verify", &cfg, &items, summary)
}
