//! The symmetry catalog: nonlinearities, parameter constraints and the
//! vector fields each row is claimed to admit.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::expr::{self as ex, conj_swap, depends_on_psi, var, FieldKind, Var, E};
use super::parse::{parse_constant, parse_expr, Scope};
use super::LieError;

const CATALOG_TOML: &str = include_str!("../../catalog/nls_symmetries.toml");

/// Supported catalog format version.
pub const CATALOG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConstraintRecord {
    pub lhs: String,
    pub op: String,
    #[serde(default)]
    pub rhs: Option<String>,
}

impl ConstraintRecord {
    pub fn describe(&self) -> String {
        match &self.rhs {
            Some(r) => format!("{} {} {}", self.lhs, self.op, r),
            None => format!("{} is {}", self.lhs, self.op),
        }
    }
}

/// A vector field as a list of `[coefficient, generator]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FieldSpec {
    pub label: String,
    pub terms: Vec<(String, String)>,
    #[serde(default)]
    pub per_axis: bool,
    #[serde(default)]
    pub per_pair: bool,
    /// Published form where it differs from `terms`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub printed_terms: Option<Vec<(String, String)>>,
}

impl FieldSpec {
    pub fn simple(label: &str, terms: &[(&str, &str)]) -> Self {
        FieldSpec {
            label: label.into(),
            terms: terms.iter().map(|(c, g)| (c.to_string(), g.to_string())).collect(),
            per_axis: false,
            per_pair: false,
            printed_terms: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RowRecord {
    pub id: String,
    pub table: u32,
    pub citation: String,
    #[serde(rename = "F")]
    pub f: String,
    #[serde(default)]
    pub opaque: Vec<String>,
    #[serde(default)]
    pub params: Vec<(String, String)>,
    #[serde(default)]
    pub derived: Vec<(String, String)>,
    #[serde(default)]
    pub constraints: Vec<ConstraintRecord>,
    #[serde(default)]
    pub theta_laplacian: Option<String>,
    #[serde(default)]
    pub re_guard: bool,
    #[serde(default)]
    pub linear: bool,
    pub fields: Vec<FieldSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Catalog {
    pub version: u32,
    pub rows: Vec<RowRecord>,
}

impl Catalog {
    pub fn parse(text: &str) -> Result<Self, LieError> {
        let c: Catalog = toml::from_str(text).map_err(|e| LieError::Catalog(e.to_string()))?;
        if c.version != CATALOG_VERSION {
            return Err(LieError::Catalog(format!("unsupported catalog version {}", c.version)));
        }
        Ok(c)
    }

    /// The catalog shipped with the crate.
    pub fn builtin() -> &'static Catalog {
        static CELL: OnceLock<Catalog> = OnceLock::new();
        CELL.get_or_init(|| Catalog::parse(CATALOG_TOML).expect("builtin catalog is valid"))
    }

    pub fn row(&self, id: &str) -> Result<&RowRecord, LieError> {
        self.rows
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| LieError::UnknownRow(id.into()))
    }

    /// Row ids of the classification tables (excluding the base row).
    pub fn table_rows(&self) -> Vec<String> {
        self.rows.iter().filter(|r| r.table > 0).map(|r| r.id.clone()).collect()
    }
}

/// How `theta` in field coefficients is realised.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaBinding {
    /// Opaque atom whose Hessian trace is `laplacian·θ`. Without an override
    /// the row's own value is used.
    Opaque { laplacian: Option<String> },
    /// Concrete expression in `x`.
    Concrete { expr: String },
}

impl Default for ThetaBinding {
    fn default() -> Self {
        ThetaBinding::Opaque { laplacian: None }
    }
}

impl ThetaBinding {
    /// Concrete instances solving `Δθ = δθ`.
    pub fn concrete_for(delta: f64) -> Vec<ThetaBinding> {
        let e = |s: String| ThetaBinding::Concrete { expr: s };
        if delta == 0.0 {
            vec![e("1".into()), e("x1".into())]
        } else if delta > 0.0 {
            vec![e(format!("exp({}*x1)", delta.sqrt()))]
        } else {
            vec![e(format!("cos({}*x1)", (-delta).sqrt()))]
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ThetaBinding::Opaque { laplacian: None } => "opaque".into(),
            ThetaBinding::Opaque { laplacian: Some(l) } => format!("opaque, Lap theta = ({l}) theta"),
            ThetaBinding::Concrete { expr } => expr.clone(),
        }
    }
}

/// A fully bound nonlinearity.
#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    pub row: String,
    pub table: u32,
    pub citation: String,
    pub dim: usize,
    pub f_text: String,
    pub f: E,
    pub params: BTreeMap<String, Complex64>,
    /// Trace of the Hessian of an opaque θ in units of θ.
    pub theta_laplacian: f64,
    /// Reject jet points with small `|Re ψ|`.
    pub re_guard: bool,
    pub linear: bool,
}

/// Components of a vector field `ξ^t∂_t + ξ^a∂_a + η∂_ψ + η̄∂_ψ*`.
#[derive(Debug, Clone)]
pub struct VectorFieldSpec {
    pub label: String,
    pub xi_t: E,
    pub xi: Vec<E>,
    pub eta: E,
    pub eta_c: E,
}

impl VectorFieldSpec {
    pub fn scaled(&self, s: Complex64) -> Self {
        let k = ex::konst(s);
        VectorFieldSpec {
            label: format!("({s})*{}", self.label),
            xi_t: ex::mul(k.clone(), self.xi_t.clone()),
            xi: self.xi.iter().map(|e| ex::mul(k.clone(), e.clone())).collect(),
            eta: ex::mul(k.clone(), self.eta.clone()),
            eta_c: ex::mul(k, self.eta_c.clone()),
        }
    }

    pub fn sum(&self, other: &Self) -> Self {
        VectorFieldSpec {
            label: format!("{} + {}", self.label, other.label),
            xi_t: ex::add(self.xi_t.clone(), other.xi_t.clone()),
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| ex::add(a.clone(), b.clone())).collect(),
            eta: ex::add(self.eta.clone(), other.eta.clone()),
            eta_c: ex::add(self.eta_c.clone(), other.eta_c.clone()),
        }
    }
}

struct Gen {
    xi_t: E,
    xi: Vec<E>,
    eta: E,
    eta_c: E,
}

fn zero() -> E {
    ex::real(0.0)
}

fn idx(s: &str) -> Option<usize> {
    s.parse::<usize>().ok().filter(|a| *a >= 1)
}

fn generator(name: &str, dim: usize) -> Result<Gen, LieError> {
    let psi = var(Var::Psi);
    let psic = var(Var::PsiC);
    let i = ex::konst(Complex64::new(0.0, 1.0));
    let x = |a: usize| var(Var::X(a));
    let t = var(Var::T);
    let mut g = Gen {
        xi_t: zero(),
        xi: vec![zero(); dim],
        eta: zero(),
        eta_c: zero(),
    };
    let bad = || LieError::UnknownGenerator(name.into());
    let check = |a: usize| if a > dim { Err(LieError::Dimension(a)) } else { Ok(a) };
    let phase_rot = |c: E| (ex::mul(ex::mul(i.clone(), c.clone()), psi.clone()), ex::neg(ex::mul(ex::mul(i.clone(), c), psic.clone())));
    match name {
        "P0" => g.xi_t = ex::real(1.0),
        "I" => {
            g.eta = psi.clone();
            g.eta_c = psic.clone();
        }
        "M" => (g.eta, g.eta_c) = phase_rot(ex::real(1.0)),
        "D" => {
            g.xi_t = t.clone();
            for a in 1..=dim {
                g.xi[a - 1] = ex::mul(ex::real(0.5), x(a));
            }
        }
        "Pi" => {
            g.xi_t = ex::mul(t.clone(), t.clone());
            let mut r2 = zero();
            for a in 1..=dim {
                g.xi[a - 1] = ex::mul(t.clone(), x(a));
                r2 = ex::add(r2, ex::mul(x(a), x(a)));
            }
            let scale = ex::mul(ex::real(-(dim as f64) / 2.0), t.clone());
            let (pe, pc) = phase_rot(ex::mul(ex::real(0.25), r2));
            g.eta = ex::add(ex::mul(scale.clone(), psi.clone()), pe);
            g.eta_c = ex::add(ex::mul(scale, psic.clone()), pc);
        }
        "DpsiMinus" => {
            g.eta = ex::real(1.0);
            g.eta_c = ex::real(-1.0);
        }
        "DpsiPlus" => {
            g.eta = ex::real(1.0);
            g.eta_c = ex::real(1.0);
        }
        "Eta0" => {
            let f = ex::field(FieldKind::Eta0, dim + 1);
            g.eta_c = conj_swap(&f);
            g.eta = f;
        }
        _ => {
            if let Some(a) = name.strip_prefix('P').and_then(idx) {
                g.xi[check(a)? - 1] = ex::real(1.0);
            } else if let Some(a) = name.strip_prefix('G').and_then(idx) {
                check(a)?;
                g.xi[a - 1] = t.clone();
                (g.eta, g.eta_c) = phase_rot(ex::mul(ex::real(0.5), x(a)));
            } else if let Some(rest) = name.strip_prefix('J') {
                let digits: Vec<usize> = rest.chars().filter_map(|c| c.to_digit(10).map(|d| d as usize)).collect();
                if digits.len() != 2 || rest.len() != 2 || digits[0] == 0 || digits[1] == 0 {
                    return Err(bad());
                }
                let (a, b) = (check(digits[0])?, check(digits[1])?);
                // x_a ∂_b − x_b ∂_a
                g.xi[b - 1] = ex::add(g.xi[b - 1].clone(), x(a));
                g.xi[a - 1] = ex::sub(g.xi[a - 1].clone(), x(b));
            } else {
                return Err(bad());
            }
        }
    }
    Ok(g)
}

fn expand(spec: &FieldSpec, dim: usize) -> Vec<(String, Vec<(String, String)>)> {
    let sub = |s: &str, a: usize, b: usize| s.replace("{a}", &a.to_string()).replace("{b}", &b.to_string());
    let mk = |a: usize, b: usize| {
        (
            sub(&spec.label, a, b),
            spec.terms.iter().map(|(c, g)| (sub(c, a, b), sub(g, a, b))).collect(),
        )
    };
    if spec.per_pair {
        let mut v = Vec::new();
        for a in 1..=dim {
            for b in a + 1..=dim {
                v.push(mk(a, b));
            }
        }
        v
    } else if spec.per_axis {
        (1..=dim).map(|a| mk(a, 0)).collect()
    } else {
        vec![mk(0, 0)]
    }
}

/// Build vector fields from specs in the given coefficient scope.
pub fn build_fields(specs: &[FieldSpec], scope: &Scope) -> Result<Vec<VectorFieldSpec>, LieError> {
    let dim = scope.dim;
    let mut out = Vec::new();
    for spec in specs {
        for (label, terms) in expand(spec, dim) {
            let mut v = VectorFieldSpec {
                label: label.clone(),
                xi_t: zero(),
                xi: vec![zero(); dim],
                eta: zero(),
                eta_c: zero(),
            };
            for (coef, gname) in &terms {
                let c = parse_expr(coef, scope)?;
                if depends_on_psi(&c) {
                    return Err(LieError::Catalog(format!("coefficient `{coef}` depends on psi")));
                }
                let g = generator(gname, dim)?;
                let m = |e: &E| ex::mul(c.clone(), e.clone());
                v.xi_t = ex::add(v.xi_t, m(&g.xi_t));
                for a in 0..dim {
                    v.xi[a] = ex::add(v.xi[a].clone(), m(&g.xi[a]));
                }
                v.eta = ex::add(v.eta, m(&g.eta));
                v.eta_c = ex::add(v.eta_c, m(&g.eta_c));
            }
            if depends_on_psi(&v.xi_t) || v.xi.iter().any(|e| depends_on_psi(e)) {
                return Err(LieError::PsiDependentXi(label));
            }
            out.push(v);
        }
    }
    Ok(out)
}

fn check_constraint(c: &ConstraintRecord, scope: &Scope) -> Result<(), LieError> {
    let lhs = parse_constant(&c.lhs, scope)?;
    let rhs = match &c.rhs {
        Some(r) => parse_constant(r, scope)?,
        None => Complex64::new(0.0, 0.0),
    };
    let close = |a: Complex64, b: Complex64| (a - b).norm() <= 1e-12 * (1.0 + a.norm().max(b.norm()));
    let is_real = |z: Complex64| z.im.abs() <= 1e-12 * (1.0 + z.re.abs());
    let ok = match c.op.as_str() {
        "real" => is_real(lhs),
        "==" => close(lhs, rhs),
        "!=" => !close(lhs, rhs),
        ">" => is_real(lhs) && is_real(rhs) && lhs.re > rhs.re && !close(lhs, rhs),
        "<" => is_real(lhs) && is_real(rhs) && lhs.re < rhs.re && !close(lhs, rhs),
        other => return Err(LieError::Catalog(format!("unknown constraint operator `{other}`"))),
    };
    if ok {
        Ok(())
    } else {
        Err(LieError::Constraint(c.describe()))
    }
}

/// A lookup request; the default checks the catalog row unchanged.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct RowRequest {
    pub row: String,
    pub dim: usize,
    /// User parameter values (expressions), applied before derived values.
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    /// Overrides visible only to `F`.
    #[serde(default)]
    pub f_overrides: BTreeMap<String, String>,
    /// Overrides visible only to the field coefficients.
    #[serde(default)]
    pub field_overrides: BTreeMap<String, String>,
    #[serde(default)]
    pub theta: ThetaBinding,
    #[serde(default)]
    pub extra_fields: Vec<FieldSpec>,
    /// Restrict the checked row fields to these labels (before expansion).
    #[serde(default)]
    pub only_fields: Option<Vec<String>>,
    /// Skip the base Euclid fields.
    #[serde(default)]
    pub skip_base: bool,
    /// Use the `printed_terms` variant of fields that carry one.
    #[serde(default)]
    pub printed: bool,
}

impl RowRequest {
    pub fn new(row: &str, dim: usize) -> Self {
        RowRequest {
            row: row.into(),
            dim,
            ..Default::default()
        }
    }
}

fn apply_overrides(scope: &Scope, ov: &BTreeMap<String, String>) -> Result<Scope, LieError> {
    let mut s = scope.clone();
    for (k, v) in ov {
        let z = parse_constant(v, scope)?;
        s.params.insert(k.clone(), z);
    }
    Ok(s)
}

/// Resolve a request against a catalog.
pub fn resolve(cat: &Catalog, req: &RowRequest) -> Result<(NonlinearitySpec, Vec<VectorFieldSpec>), LieError> {
    if req.dim == 0 {
        return Err(LieError::ZeroDimension);
    }
    let row = cat.row(&req.row)?;
    let mut scope = Scope::new(req.dim);
    for (k, v) in &row.params {
        let z = parse_constant(v, &scope)?;
        scope.params.insert(k.clone(), z);
    }
    for k in req.params.keys() {
        if !row.params.iter().any(|(p, _)| p == k) {
            return Err(LieError::UnknownParameter(k.clone()));
        }
    }
    for (k, v) in &req.params {
        let z = parse_constant(v, &scope)?;
        scope.params.insert(k.clone(), z);
    }
    for (k, v) in &row.derived {
        let z = parse_constant(v, &scope)?;
        scope.params.insert(k.clone(), z);
    }
    for c in &row.constraints {
        check_constraint(c, &scope)?;
    }

    let mut f_scope = apply_overrides(&scope, &req.f_overrides)?;
    f_scope.opaque = row.opaque.clone();
    let f = parse_expr(&row.f, &f_scope)?;

    let mut field_scope = apply_overrides(&scope, &req.field_overrides)?;
    let row_lap = match &row.theta_laplacian {
        Some(s) => parse_constant(s, &field_scope)?.re,
        None => 0.0,
    };
    let theta_laplacian = match &req.theta {
        ThetaBinding::Opaque { laplacian: Some(l) } => parse_constant(l, &field_scope)?.re,
        _ => row_lap,
    };
    field_scope.theta = Some(match &req.theta {
        ThetaBinding::Opaque { .. } => ex::field(FieldKind::Theta, req.dim + 1),
        ThetaBinding::Concrete { expr } => parse_expr(expr, &field_scope)?,
    });

    let mut specs: Vec<FieldSpec> = row
        .fields
        .iter()
        .filter(|s| req.only_fields.as_ref().is_none_or(|only| only.contains(&s.label)))
        .cloned()
        .map(|mut s| {
            if let (true, Some(p)) = (req.printed, s.printed_terms.take()) {
                s.terms = p;
                s.label = format!("{} [printed]", s.label);
            }
            s
        })
        .collect();
    specs.extend(req.extra_fields.iter().cloned());
    let mut fields = build_fields(&specs, &field_scope)?;
    if !req.skip_base && row.id != "E" {
        let base = cat.row("E")?;
        fields.extend(build_fields(&base.fields, &field_scope)?);
    }

    let spec = NonlinearitySpec {
        row: row.id.clone(),
        table: row.table,
        citation: row.citation.clone(),
        dim: req.dim,
        f_text: row.f.clone(),
        f,
        params: f_scope.params,
        theta_laplacian,
        re_guard: row.re_guard,
        linear: row.linear,
    };
    Ok((spec, fields))
}

/// Look up a row of the builtin catalog with the given parameter values.
pub fn catalog_lookup(
    row: &str,
    dim: usize,
    params: &BTreeMap<String, String>,
) -> Result<(NonlinearitySpec, Vec<VectorFieldSpec>), LieError> {
    let mut req = RowRequest::new(row, dim);
    req.params = params.clone();
    resolve(Catalog::builtin(), &req)
}
