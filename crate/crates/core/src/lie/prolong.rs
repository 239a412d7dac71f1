//! Second prolongation of point vector fields and the invariance check at
//! random on-shell jet points.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::catalog::{resolve, Catalog, FieldSpec, NonlinearitySpec, RowRequest, VectorFieldSpec};
use super::expr::{conj_swap, diff, eval, substitute_psi, AtomSource, FieldKind, Point, Var, E};
use super::LieError;

type C = Complex64;

const I: C = C::new(0.0, 1.0);
const ZERO: C = C::new(0.0, 0.0);

/// Which evolution equation the nonlinearity is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EquationForm {
    /// `iψ_t + Δψ + F = 0`.
    #[default]
    Schrodinger,
    /// `ψ_t + Δψ + F = 0`.
    Heat,
}

/// A sampled jet. `ψ*`-entries are the conjugates of the stored `ψ`-entries
/// and time derivatives are obtained on-shell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: C,
    /// `u_a`
    pub u1: Vec<C>,
    /// `u_ab`, symmetric
    pub u2: Vec<Vec<C>>,
    /// `u_abc`, symmetric
    pub u3: Vec<Vec<Vec<C>>>,
    pub theta: f64,
    pub theta1: Vec<f64>,
    /// Diagonal `θ_aa` with trace fixed by the row.
    pub theta2: Vec<f64>,
    pub eta0: C,
    pub eta0_1: Vec<C>,
    pub eta0_2: Vec<C>,
    /// Seed for opaque function values.
    pub atom_seed: u64,
}

fn uniform_c(rng: &mut ChaCha8Rng) -> C {
    C::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
}

impl JetPoint {
    /// Deterministic sample `index` of the run `seed`.
    pub fn sample(dim: usize, seed: u64, index: u64, spec: &NonlinearitySpec) -> Result<Self, LieError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut tries = 0;
        let u = loop {
            tries += 1;
            if tries > 1000 {
                return Err(LieError::Sampling(1000));
            }
            let r: f64 = rng.gen_range(0.5..=1.5);
            let a: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let z = C::from_polar(r, a);
            if !spec.re_guard || z.re.abs() >= 0.2 {
                break z;
            }
        };
        let t = rng.gen_range(-1.0..=1.0);
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let u1: Vec<C> = (0..dim).map(|_| uniform_c(&mut rng)).collect();
        let mut u2 = vec![vec![ZERO; dim]; dim];
        for a in 0..dim {
            for b in a..dim {
                let z = uniform_c(&mut rng);
                u2[a][b] = z;
                u2[b][a] = z;
            }
        }
        let mut u3 = vec![vec![vec![ZERO; dim]; dim]; dim];
        for a in 0..dim {
            for b in a..dim {
                for c in b..dim {
                    let z = uniform_c(&mut rng);
                    for (p, q, r) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                        u3[p][q][r] = z;
                    }
                }
            }
        }
        let theta = rng.gen_range(-1.0..=1.0);
        let theta1: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut theta2: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let rest: f64 = theta2[..dim - 1].iter().sum();
        theta2[dim - 1] = spec.theta_laplacian * theta - rest;
        let eta0 = uniform_c(&mut rng);
        let eta0_1 = (0..dim).map(|_| uniform_c(&mut rng)).collect();
        let eta0_2 = (0..dim).map(|_| uniform_c(&mut rng)).collect();
        let atom_seed = rng.gen();
        Ok(JetPoint {
            t,
            x,
            u,
            u1,
            u2,
            u3,
            theta,
            theta1,
            theta2,
            eta0,
            eta0_1,
            eta0_2,
            atom_seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

fn fnv(name: &str, deriv: &[u32]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut feed = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    };
    for b in name.bytes() {
        feed(b);
    }
    feed(0xff);
    for d in deriv {
        for b in d.to_le_bytes() {
            feed(b);
        }
    }
    h
}

struct Atoms<'a> {
    jet: &'a JetPoint,
    eta0_t: Option<C>,
}

/// Split a derivative multi-index over `(t, x_1..x_m)` into its time order
/// and the sorted list of spatial axes.
fn split(deriv: &[u32]) -> (u32, Vec<usize>) {
    let mut axes = Vec::new();
    for (a, k) in deriv.iter().enumerate().skip(1) {
        for _ in 0..*k {
            axes.push(a - 1);
        }
    }
    (deriv.first().copied().unwrap_or(0), axes)
}

impl AtomSource for Atoms<'_> {
    fn opaque(&self, name: &str, deriv: &[u32]) -> Result<C, LieError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.jet.atom_seed ^ fnv(name, deriv));
        Ok(uniform_c(&mut rng))
    }

    fn field(&self, kind: FieldKind, deriv: &[u32]) -> Result<C, LieError> {
        let j = self.jet;
        let (nt, axes) = split(deriv);
        let unreg = || LieError::UnregisteredDerivative(format!("{kind:?}{deriv:?}"));
        match kind {
            FieldKind::Theta => {
                if nt > 0 {
                    return Ok(ZERO);
                }
                let v = match axes.as_slice() {
                    [] => j.theta,
                    [a] => j.theta1[*a],
                    [a, b] if a == b => j.theta2[*a],
                    _ => return Err(unreg()),
                };
                Ok(C::new(v, 0.0))
            }
            FieldKind::Eta0 => match (nt, axes.as_slice()) {
                (0, []) => Ok(j.eta0),
                (0, [a]) => Ok(j.eta0_1[*a]),
                (0, [a, b]) if a == b => Ok(j.eta0_2[*a]),
                (1, []) => self.eta0_t.ok_or_else(|| LieError::Catalog("eta0 requires a linear nonlinearity".into())),
                _ => Err(unreg()),
            },
        }
    }
}

/// Symbolic partials needed for total derivatives up to second order.
#[derive(Debug, Clone)]
struct Partials {
    e: E,
    t: E,
    u: E,
    v: E,
    a: Vec<E>,
    aa: Vec<E>,
    au: Vec<E>,
    av: Vec<E>,
    uu: E,
    uv: E,
    vv: E,
}

impl Partials {
    fn new(e: &E, dim: usize) -> Result<Self, LieError> {
        let u = diff(e, Var::Psi)?;
        let v = diff(e, Var::PsiC)?;
        let mut a = Vec::new();
        let mut aa = Vec::new();
        let mut au = Vec::new();
        let mut av = Vec::new();
        for k in 1..=dim {
            let ea = diff(e, Var::X(k))?;
            aa.push(diff(&ea, Var::X(k))?);
            au.push(diff(&ea, Var::Psi)?);
            av.push(diff(&ea, Var::PsiC)?);
            a.push(ea);
        }
        Ok(Partials {
            e: e.clone(),
            t: diff(e, Var::T)?,
            uu: diff(&u, Var::Psi)?,
            uv: diff(&u, Var::PsiC)?,
            vv: diff(&v, Var::PsiC)?,
            u,
            v,
            a,
            aa,
            au,
            av,
        })
    }
}

#[derive(Debug, Clone)]
struct PreparedField {
    label: String,
    xi_t: Partials,
    xi: Vec<Partials>,
    eta: Partials,
    eta_c: Partials,
}

impl PreparedField {
    fn new(f: &VectorFieldSpec, dim: usize) -> Result<Self, LieError> {
        Ok(PreparedField {
            label: f.label.clone(),
            xi_t: Partials::new(&f.xi_t, dim)?,
            xi: f.xi.iter().map(|e| Partials::new(e, dim)).collect::<Result<_, _>>()?,
            eta: Partials::new(&f.eta, dim)?,
            eta_c: Partials::new(&f.eta_c, dim)?,
        })
    }
}

/// Nonlinearity with the derivatives used by the on-shell substitution.
#[derive(Debug, Clone)]
struct PreparedF {
    f: E,
    fu: E,
    fv: E,
    fc: E,
    fcu: E,
    fcv: E,
    at_eta0: Option<E>,
}

impl PreparedF {
    fn new(spec: &NonlinearitySpec) -> Result<Self, LieError> {
        let fc = conj_swap(&spec.f);
        let dim = spec.dim;
        let at_eta0 = if spec.linear {
            let e0 = super::expr::field(FieldKind::Eta0, dim + 1);
            Some(substitute_psi(&spec.f, &e0, &conj_swap(&e0)))
        } else {
            None
        };
        Ok(PreparedF {
            fu: diff(&spec.f, Var::Psi)?,
            fv: diff(&spec.f, Var::PsiC)?,
            fcu: diff(&fc, Var::Psi)?,
            fcv: diff(&fc, Var::PsiC)?,
            f: spec.f.clone(),
            fc,
            at_eta0,
        })
    }
}

/// Jet completed on-shell.
struct OnShell {
    fu: C,
    fv: C,
    fcu: C,
    fcv: C,
    u_t: C,
    v_t: C,
    u_ta: Vec<C>,
    v_ta: Vec<C>,
    eta0_t: Option<C>,
}

fn time_factor(form: EquationForm) -> (C, C) {
    match form {
        EquationForm::Schrodinger => (I, -I),
        EquationForm::Heat => (C::new(1.0, 0.0), C::new(1.0, 0.0)),
    }
}

/// `ψ_t` from `c·ψ_t + rhs = 0`.
fn solve_t(c: C, rhs: C) -> C {
    -rhs / c
}

fn point<'a>(jet: &'a JetPoint, atoms: &'a Atoms<'a>) -> Point<'a> {
    Point {
        t: jet.t,
        x: &jet.x,
        psi: jet.u,
        psic: jet.u.conj(),
        atoms,
    }
}

fn complete(f: &PreparedF, jet: &JetPoint, form: EquationForm) -> Result<OnShell, LieError> {
    let dim = jet.dim();
    let base = Atoms { jet, eta0_t: None };
    let p = point(jet, &base);
    let fval = eval(&f.f, &p)?;
    let fu = eval(&f.fu, &p)?;
    let fv = eval(&f.fv, &p)?;
    let fcval = eval(&f.fc, &p)?;
    let fcu = eval(&f.fcu, &p)?;
    let fcv = eval(&f.fcv, &p)?;
    let (cu, cv) = time_factor(form);
    let lap_u: C = (0..dim).map(|a| jet.u2[a][a]).sum();
    let u_t = solve_t(cu, lap_u + fval);
    let v_t = solve_t(cv, lap_u.conj() + fcval);
    let mut u_ta = Vec::with_capacity(dim);
    let mut v_ta = Vec::with_capacity(dim);
    for a in 0..dim {
        let lap_ua: C = (0..dim).map(|b| jet.u3[a][b][b]).sum();
        let ua = jet.u1[a];
        let va = ua.conj();
        u_ta.push(solve_t(cu, lap_ua + fu * ua + fv * va));
        v_ta.push(solve_t(cv, lap_ua.conj() + fcu * ua + fcv * va));
    }
    let eta0_t = match &f.at_eta0 {
        Some(e) => {
            let lap: C = jet.eta0_2.iter().sum();
            Some(solve_t(cu, lap + eval(e, &p)?))
        }
        None => None,
    };
    Ok(OnShell {
        fu,
        fv,
        fcu,
        fcv,
        u_t,
        v_t,
        u_ta,
        v_ta,
        eta0_t,
    })
}

/// Residuals of the prolonged field applied to both equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPair {
    pub r1: C,
    pub r2: C,
    /// Largest single prolongation term.
    pub scale: f64,
}

impl ResidualPair {
    pub fn normalized(&self) -> f64 {
        let r = self.r1.norm().max(self.r2.norm());
        if r == 0.0 {
            0.0
        } else {
            r / self.scale.max(f64::MIN_POSITIVE)
        }
    }
}

struct Eval<'a> {
    p: Point<'a>,
    jet: &'a JetPoint,
    sh: &'a OnShell,
}

impl Eval<'_> {
    fn at(&self, e: &E) -> Result<C, LieError> {
        eval(e, &self.p)
    }

    fn d_t(&self, q: &Partials) -> Result<C, LieError> {
        Ok(self.at(&q.t)? + self.sh.u_t * self.at(&q.u)? + self.sh.v_t * self.at(&q.v)?)
    }

    fn d_aa(&self, q: &Partials, a: usize) -> Result<C, LieError> {
        let ua = self.jet.u1[a];
        let va = ua.conj();
        let uaa = self.jet.u2[a][a];
        let vaa = uaa.conj();
        Ok(self.at(&q.aa[a])?
            + 2.0 * ua * self.at(&q.au[a])?
            + 2.0 * va * self.at(&q.av[a])?
            + ua * ua * self.at(&q.uu)?
            + 2.0 * ua * va * self.at(&q.uv)?
            + va * va * self.at(&q.vv)?
            + uaa * self.at(&q.u)?
            + vaa * self.at(&q.v)?)
    }
}

/// `c·η^t + Σ_a η^{aa}` for one dependent variable, with the list of terms.
fn prolonged(
    ev: &Eval<'_>,
    f: &PreparedField,
    eta: &Partials,
    conj: bool,
    c: C,
    terms: &mut Vec<f64>,
) -> Result<C, LieError> {
    let j = ev.jet;
    let dim = j.dim();
    let cj = |z: C| if conj { z.conj() } else { z };
    let (w_t, w_ta) = if conj {
        (ev.sh.v_t, &ev.sh.v_ta)
    } else {
        (ev.sh.u_t, &ev.sh.u_ta)
    };
    let mut push = |z: C| {
        terms.push(z.norm());
        z
    };
    let mut total = ZERO;
    total += push(c * ev.d_t(eta)?);
    total -= push(c * ev.at(&f.xi_t.t)? * w_t);
    for b in 0..dim {
        total -= push(c * ev.at(&f.xi[b].t)? * cj(j.u1[b]));
    }
    for a in 0..dim {
        total += push(ev.d_aa(eta, a)?);
        total -= push(ev.at(&f.xi_t.aa[a])? * w_t);
        total -= push(2.0 * ev.at(&f.xi_t.a[a])? * w_ta[a]);
        for b in 0..dim {
            total -= push(ev.at(&f.xi[b].aa[a])? * cj(j.u1[b]));
            total -= push(2.0 * ev.at(&f.xi[b].a[a])? * cj(j.u2[a][b]));
        }
    }
    Ok(total)
}

struct Sample {
    pair: ResidualPair,
    conj_err: f64,
    real_err: f64,
}

fn residual_prepared(
    f: &PreparedField,
    sh: &OnShell,
    jet: &JetPoint,
    form: EquationForm,
) -> Result<Sample, LieError> {
    let atoms = Atoms {
        jet,
        eta0_t: sh.eta0_t,
    };
    let ev = Eval {
        p: point(jet, &atoms),
        jet,
        sh,
    };
    let (cu, cv) = time_factor(form);
    let eta = ev.at(&f.eta.e)?;
    let eta_c = ev.at(&f.eta_c.e)?;
    let mut terms = Vec::new();
    let mut r1 = prolonged(&ev, f, &f.eta, false, cu, &mut terms)?;
    let a = eta * sh.fu;
    let b = eta_c * sh.fv;
    terms.extend([a.norm(), b.norm()]);
    r1 += a + b;
    let mut r2 = prolonged(&ev, f, &f.eta_c, true, cv, &mut terms)?;
    let a = eta * sh.fcu;
    let b = eta_c * sh.fcv;
    terms.extend([a.norm(), b.norm()]);
    r2 += a + b;
    let scale = terms.iter().cloned().fold(0.0, f64::max);
    Ok(Sample {
        pair: ResidualPair { r1, r2, scale },
        conj_err: (r2 - r1.conj()).norm() / scale.max(f64::MIN_POSITIVE),
        real_err: (eta_c - eta.conj()).norm() / (1.0 + eta.norm()),
    })
}

/// Evaluate the prolonged field on both equations at an on-shell jet point.
pub fn prolong_residual(
    x: &VectorFieldSpec,
    f: &NonlinearitySpec,
    jet: &JetPoint,
    form: EquationForm,
) -> Result<ResidualPair, LieError> {
    let pf = PreparedF::new(f)?;
    let sh = complete(&pf, jet, form)?;
    let field = PreparedField::new(x, f.dim)?;
    Ok(residual_prepared(&field, &sh, jet, form)?.pair)
}

/// `(ψ_t, ψ*_t)` after the on-shell substitution.
pub fn onshell_time_derivatives(f: &NonlinearitySpec, jet: &JetPoint, form: EquationForm) -> Result<(C, C), LieError> {
    let sh = complete(&PreparedF::new(f)?, jet, form)?;
    Ok((sh.u_t, sh.v_t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub form: EquationForm,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            samples: 100,
            seed: 1,
            tol: 1e-9,
            form: EquationForm::Schrodinger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldResult {
    pub label: String,
    pub max_normalized: f64,
    pub median_normalized: f64,
    pub max_abs: f64,
    /// Δ₂ residual equals the conjugate of the Δ₁ residual at every sample.
    pub conj_consistent: bool,
    /// `η_ψ*` is the conjugate of `η_ψ` at every sample.
    pub real_field: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReport {
    pub row: String,
    pub table: u32,
    pub citation: String,
    pub dim: usize,
    pub form: EquationForm,
    pub f: String,
    pub params: BTreeMap<String, C>,
    pub theta: String,
    pub theta_laplacian: f64,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub fields: Vec<FieldResult>,
    pub max_normalized: f64,
    pub pass: bool,
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Check every field of a resolved request at `opts.samples` jet points.
pub fn check_request(req: &RowRequest, opts: &CheckOptions) -> Result<RowReport, LieError> {
    let (spec, fields) = resolve(Catalog::builtin(), req)?;
    let pf = PreparedF::new(&spec)?;
    let prepared: Vec<PreparedField> = fields
        .iter()
        .map(|f| PreparedField::new(f, spec.dim))
        .collect::<Result<_, _>>()?;
    let per_sample: Vec<Vec<Sample>> = (0..opts.samples as u64)
        .into_par_iter()
        .map(|k| {
            let jet = JetPoint::sample(spec.dim, opts.seed, k, &spec)?;
            let sh = complete(&pf, &jet, opts.form)?;
            prepared
                .iter()
                .map(|f| residual_prepared(f, &sh, &jet, opts.form))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut results = Vec::new();
    for (i, f) in prepared.iter().enumerate() {
        let mut norms: Vec<f64> = per_sample.iter().map(|s| s[i].pair.normalized()).collect();
        let max_normalized = norms.iter().cloned().fold(0.0, f64::max);
        let max_abs = per_sample
            .iter()
            .map(|s| s[i].pair.r1.norm().max(s[i].pair.r2.norm()))
            .fold(0.0, f64::max);
        let conj_consistent = per_sample.iter().all(|s| s[i].conj_err <= 1e-9);
        let real_field = per_sample.iter().all(|s| s[i].real_err <= 1e-12);
        results.push(FieldResult {
            label: f.label.clone(),
            max_normalized,
            median_normalized: median(&mut norms),
            max_abs,
            conj_consistent,
            real_field,
            pass: max_normalized <= opts.tol,
        });
    }
    let max_normalized = results.iter().map(|r| r.max_normalized).fold(0.0, f64::max);
    Ok(RowReport {
        row: spec.row,
        table: spec.table,
        citation: spec.citation,
        dim: spec.dim,
        form: opts.form,
        f: spec.f_text,
        params: spec.params,
        theta: req.theta.describe(),
        theta_laplacian: spec.theta_laplacian,
        samples: opts.samples,
        seed: opts.seed,
        tol: opts.tol,
        pass: results.iter().all(|r| r.pass),
        fields: results,
        max_normalized,
    })
}

/// Check a catalog row with the given parameter values.
pub fn check_row(row: &str, dim: usize, params: &BTreeMap<String, String>, opts: &CheckOptions) -> Result<RowReport, LieError> {
    let mut req = RowRequest::new(row, dim);
    req.params = params.clone();
    check_request(&req, opts)
}

/// Which equation forms a request passes under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormVerdict {
    pub schrodinger: bool,
    pub heat: bool,
}

pub fn form_verdict(req: &RowRequest, opts: &CheckOptions) -> Result<FormVerdict, LieError> {
    let s = check_request(req, &CheckOptions { form: EquationForm::Schrodinger, ..*opts })?;
    let h = check_request(req, &CheckOptions { form: EquationForm::Heat, ..*opts })?;
    Ok(FormVerdict {
        schrodinger: s.pass,
        heat: h.pass,
    })
}

/// One perturbed (or control) check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCase {
    pub name: String,
    pub request: RowRequest,
    pub expect_fail: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub name: String,
    pub row: String,
    pub dim: usize,
    pub expect_fail: bool,
    pub passed_check: bool,
    pub max_normalized: f64,
    /// Largest per-field median of the normalized residual.
    pub median_normalized: f64,
    pub as_expected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub options: CheckOptions,
    pub cases: Vec<SweepOutcome>,
    pub all_as_expected: bool,
}

fn targeted(row: &str, dim: usize) -> RowRequest {
    let mut r = RowRequest::new(row, dim);
    r.skip_base = true;
    r.only_fields = Some(Vec::new());
    r
}

fn pi_field() -> FieldSpec {
    FieldSpec::simple("Pi", &[("1", "Pi")])
}

/// Detuned rows that must fail, each paired with its unperturbed control.
pub fn default_sweep_cases() -> Vec<SweepCase> {
    let mut cases = Vec::new();

    let mut r = targeted("2.8", 2);
    r.only_fields = Some(vec!["Pi".into()]);
    cases.push(SweepCase {
        name: "2.8 control: Pi".into(),
        request: r.clone(),
        expect_fail: false,
    });
    r.f_overrides.insert("gamma".into(), "4/m + 0.1".into());
    cases.push(SweepCase {
        name: "2.8 exponent 4/n + 0.1: Pi".into(),
        request: r,
        expect_fail: true,
    });

    let mut r = targeted("2.6", 2);
    r.only_fields = Some(vec!["M - gamma2 D".into()]);
    cases.push(SweepCase {
        name: "2.6 control: M - gamma2 D".into(),
        request: r.clone(),
        expect_fail: false,
    });
    r.field_overrides.insert("gamma2".into(), "gamma2 + 0.2".into());
    cases.push(SweepCase {
        name: "2.6 field uses gamma2 + 0.2".into(),
        request: r,
        expect_fail: true,
    });

    let mut r = targeted("2.7", 2);
    r.extra_fields.push(pi_field());
    cases.push(SweepCase {
        name: "2.7 with Pi added".into(),
        request: r,
        expect_fail: true,
    });

    let mut r = targeted("2.7", 1);
    r.params.insert("sigma".into(), "1".into());
    r.params.insert("gamma".into(), "2".into());
    r.extra_fields.push(pi_field());
    cases.push(SweepCase {
        name: "|psi|^2 psi, m = 1, with Pi".into(),
        request: r,
        expect_fail: true,
    });

    let mut r = targeted("2.4", 2);
    r.only_fields = Some(vec!["I + D + i(t Re sigma - r2 Im sigma/(2n))(d_psi - d_psic)".into()]);
    cases.push(SweepCase {
        name: "2.4 control: corrected field".into(),
        request: r.clone(),
        expect_fail: false,
    });
    r.printed = true;
    cases.push(SweepCase {
        name: "2.4 field with printed_terms sign".into(),
        request: r,
        expect_fail: true,
    });

    let mut r = targeted("2.3", 2);
    r.only_fields = Some(vec!["i theta (d_psi - d_psic)".into()]);
    cases.push(SweepCase {
        name: "2.3 control: harmonic theta".into(),
        request: r.clone(),
        expect_fail: false,
    });
    r.theta = super::catalog::ThetaBinding::Opaque {
        laplacian: Some("0.7".into()),
    };
    cases.push(SweepCase {
        name: "2.3 theta with Lap theta = 0.7 theta".into(),
        request: r,
        expect_fail: true,
    });

    cases
}

/// Run each case and compare the outcome with the expectation.
pub fn negative_sweep(cases: &[SweepCase], opts: &CheckOptions) -> Result<SweepReport, LieError> {
    let mut out = Vec::new();
    for case in cases {
        let rep = check_request(&case.request, opts)?;
        let median_normalized = rep.fields.iter().map(|f| f.median_normalized).fold(0.0, f64::max);
        out.push(SweepOutcome {
            name: case.name.clone(),
            row: case.request.row.clone(),
            dim: case.request.dim,
            expect_fail: case.expect_fail,
            passed_check: rep.pass,
            max_normalized: rep.max_normalized,
            median_normalized,
            as_expected: rep.pass != case.expect_fail,
        });
    }
    Ok(SweepReport {
        options: *opts,
        all_as_expected: out.iter().all(|c| c.as_expected),
        cases: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::catalog::{build_fields, catalog_lookup};
    use crate::lie::parse::Scope;

    fn lookup(row: &str, dim: usize) -> (NonlinearitySpec, Vec<VectorFieldSpec>) {
        catalog_lookup(row, dim, &BTreeMap::new()).unwrap()
    }

    fn field(v: &[VectorFieldSpec], label: &str) -> VectorFieldSpec {
        v.iter().find(|f| f.label == label).cloned().unwrap()
    }

    fn jet(spec: &NonlinearitySpec, k: u64) -> JetPoint {
        JetPoint::sample(spec.dim, 7, k, spec).unwrap()
    }

    #[test]
    fn onshell_examples() {
        let (free, _) = lookup("2.1", 1);
        let mut j = jet(&free, 0);
        j.u2[0][0] = C::new(1.0, 0.0);
        let (ut, vt) = onshell_time_derivatives(&free, &j, EquationForm::Schrodinger).unwrap();
        assert_eq!(ut, I);
        assert_eq!(vt, ut.conj());

        let mut p = BTreeMap::new();
        p.insert("sigma".to_string(), "1".to_string());
        p.insert("gamma".to_string(), "2".to_string());
        let (cubic, _) = catalog_lookup("2.7", 1, &p).unwrap();
        let mut j = jet(&cubic, 1);
        j.u = C::new(1.0, 0.0);
        j.u2[0][0] = ZERO;
        let (ut, _) = onshell_time_derivatives(&cubic, &j, EquationForm::Schrodinger).unwrap();
        assert!((ut - I).norm() < 1e-15);
    }

    #[test]
    fn base_fields_vanish_for_opaque_f() {
        for dim in 1..=3 {
            let (spec, fields) = lookup("E", dim);
            for f in &fields {
                for k in 0..20 {
                    let r = prolong_residual(f, &spec, &jet(&spec, k), EquationForm::Schrodinger).unwrap();
                    assert!(r.normalized() <= 1e-12, "{} {}", f.label, r.normalized());
                }
            }
        }
    }

    #[test]
    fn pi_fails_for_cubic_in_one_dimension() {
        let mut p = BTreeMap::new();
        p.insert("sigma".to_string(), "1".to_string());
        p.insert("gamma".to_string(), "2".to_string());
        let (spec, _) = catalog_lookup("2.7", 1, &p).unwrap();
        let pi = build_fields(&[pi_field()], &Scope::new(1)).unwrap().remove(0);
        let r = prolong_residual(&pi, &spec, &jet(&spec, 3), EquationForm::Schrodinger).unwrap();
        assert!(r.normalized() >= 0.01);
    }

    #[test]
    fn linearity_and_homogeneity() {
        let (spec, fields) = lookup("2.7", 2);
        let pi = build_fields(&[pi_field()], &Scope::new(2)).unwrap().remove(0);
        let g = field(&fields, "G1");
        let j = jet(&spec, 5);
        let form = EquationForm::Schrodinger;
        let a = prolong_residual(&pi, &spec, &j, form).unwrap();
        let b = prolong_residual(&g, &spec, &j, form).unwrap();
        let s = prolong_residual(&pi.sum(&g), &spec, &j, form).unwrap();
        assert!((s.r1 - a.r1 - b.r1).norm() <= 1e-12 * a.scale);
        let k = C::new(2.5, -1.0);
        let sc = prolong_residual(&pi.scaled(k), &spec, &j, form).unwrap();
        assert!((sc.r1 - k * a.r1).norm() <= 1e-12 * sc.scale);
        assert!(a.r1.norm() > 1e-3);
    }

    #[test]
    fn conjugate_residual_pairs() {
        let (spec, fields) = lookup("2.6", 2);
        for f in &fields {
            let r = prolong_residual(f, &spec, &jet(&spec, 2), EquationForm::Schrodinger).unwrap();
            assert!((r.r2 - r.r1.conj()).norm() <= 1e-12 * r.scale.max(1.0));
        }
    }

    #[test]
    fn spec_examples_pass() {
        let opts = CheckOptions::default();
        let r = check_row("2.8", 3, &BTreeMap::new(), &opts).unwrap();
        assert!(r.pass, "{r:#?}");
        let mut p = BTreeMap::new();
        p.insert("gamma1".to_string(), "1".to_string());
        p.insert("gamma2".to_string(), "1".to_string());
        let r = check_row("1.1", 2, &p, &opts).unwrap();
        assert!(r.pass, "{r:#?}");
    }

    #[test]
    fn deterministic_reports() {
        let opts = CheckOptions {
            samples: 16,
            ..Default::default()
        };
        let a = check_row("1.3", 2, &BTreeMap::new(), &opts).unwrap();
        let b = check_row("1.3", 2, &BTreeMap::new(), &opts).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
