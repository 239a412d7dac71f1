//! Complex expression trees in `t, x_a, ψ, ψ*` with symbolic differentiation.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::LieError;

/// Highest total derivative order registered for opaque functions.
pub const MAX_OPAQUE_ORDER: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    /// Spatial coordinate, 1-based.
    X(usize),
    Psi,
    PsiC,
}

/// Functions of `(t, x)` sampled at jet points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldKind {
    /// Real `θ(x)` with a trace constraint on its Hessian.
    Theta,
    /// A solution `η⁰(t, x)` of the linear equation.
    Eta0,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var(Var),
    Add(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    /// Real exponent; integer exponents are evaluated without branch cuts,
    /// others on the principal branch.
    Pow(Arc<Expr>, f64),
    Exp(Arc<Expr>),
    Log(Arc<Expr>),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
    /// Absolute value of a real-valued argument.
    Abs(Arc<Expr>),
    /// Sign of the real part (derivative of `Abs`).
    Sign(Arc<Expr>),
    /// Opaque function with independently sampled values and derivatives.
    Func {
        name: Arc<str>,
        args: Vec<Arc<Expr>>,
        deriv: Vec<u32>,
        conj: bool,
    },
    /// Sampled field with derivative multi-index over `(t, x_1..x_m)`.
    Field {
        kind: FieldKind,
        deriv: Vec<u32>,
        conj: bool,
    },
}

pub type E = Arc<Expr>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn konst(z: Complex64) -> E {
    Arc::new(Expr::Const(z))
}

pub fn real(v: f64) -> E {
    konst(c(v, 0.0))
}

pub fn var(v: Var) -> E {
    Arc::new(Expr::Var(v))
}

fn as_const(e: &Expr) -> Option<Complex64> {
    match e {
        Expr::Const(z) => Some(*z),
        _ => None,
    }
}

fn is_zero(e: &Expr) -> bool {
    as_const(e) == Some(c(0.0, 0.0))
}

fn is_one(e: &Expr) -> bool {
    as_const(e) == Some(c(1.0, 0.0))
}

pub fn add(a: E, b: E) -> E {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => konst(x + y),
        _ if is_zero(&a) => b,
        _ if is_zero(&b) => a,
        _ => Arc::new(Expr::Add(a, b)),
    }
}

pub fn sub(a: E, b: E) -> E {
    add(a, neg(b))
}

pub fn neg(a: E) -> E {
    match &*a {
        Expr::Const(z) => konst(-z),
        Expr::Neg(inner) => inner.clone(),
        _ => Arc::new(Expr::Neg(a)),
    }
}

pub fn mul(a: E, b: E) -> E {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => konst(x * y),
        _ if is_zero(&a) || is_zero(&b) => real(0.0),
        _ if is_one(&a) => b,
        _ if is_one(&b) => a,
        _ => Arc::new(Expr::Mul(a, b)),
    }
}

pub fn div(a: E, b: E) -> E {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) if y != c(0.0, 0.0) => konst(x / y),
        _ if is_zero(&a) => real(0.0),
        _ if is_one(&b) => a,
        _ => Arc::new(Expr::Div(a, b)),
    }
}

pub fn pow(a: E, p: f64) -> E {
    if p == 0.0 {
        return real(1.0);
    }
    if p == 1.0 {
        return a;
    }
    match as_const(&a) {
        Some(z) => konst(pow_value(z, p)),
        None => Arc::new(Expr::Pow(a, p)),
    }
}

pub fn exp(a: E) -> E {
    match as_const(&a) {
        Some(z) => konst(z.exp()),
        None => Arc::new(Expr::Exp(a)),
    }
}

pub fn log(a: E) -> E {
    match as_const(&a) {
        Some(z) if z != c(0.0, 0.0) => konst(z.ln()),
        _ => Arc::new(Expr::Log(a)),
    }
}

pub fn sin(a: E) -> E {
    match as_const(&a) {
        Some(z) => konst(z.sin()),
        None => Arc::new(Expr::Sin(a)),
    }
}

pub fn cos(a: E) -> E {
    match as_const(&a) {
        Some(z) => konst(z.cos()),
        None => Arc::new(Expr::Cos(a)),
    }
}

pub fn abs(a: E) -> E {
    match as_const(&a) {
        Some(z) => real(z.re.abs()),
        None => Arc::new(Expr::Abs(a)),
    }
}

fn sign(a: E) -> E {
    match as_const(&a) {
        Some(z) => real(z.re.signum()),
        None => Arc::new(Expr::Sign(a)),
    }
}

pub fn func(name: &str, args: Vec<E>) -> E {
    let n = args.len();
    Arc::new(Expr::Func {
        name: Arc::from(name),
        args,
        deriv: vec![0; n],
        conj: false,
    })
}

pub fn field(kind: FieldKind, nvars: usize) -> E {
    Arc::new(Expr::Field {
        kind,
        deriv: vec![0; nvars],
        conj: false,
    })
}

/// `(e + ē)/2` where `ē` is the conjugate-swapped expression.
pub fn re(e: E) -> E {
    mul(add(e.clone(), conj_swap(&e)), real(0.5))
}

/// `(e − ē)/(2i)`.
pub fn im(e: E) -> E {
    mul(sub(e.clone(), conj_swap(&e)), konst(c(0.0, -0.5)))
}

/// `|ψ| = (ψψ*)^{1/2}`.
pub fn rho() -> E {
    pow(mul(var(Var::Psi), var(Var::PsiC)), 0.5)
}

/// `φ = (i/2) ln(ψ*/ψ)`.
pub fn phase() -> E {
    mul(konst(c(0.0, 0.5)), log(div(var(Var::PsiC), var(Var::Psi))))
}

pub(crate) fn pow_value(z: Complex64, p: f64) -> Complex64 {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        z.powi(p as i32)
    } else {
        z.powf(p)
    }
}

/// Complex conjugate as a function: swaps `ψ ↔ ψ*`, conjugates constants
/// and toggles the conjugation flag of opaque atoms.
pub fn conj_swap(e: &E) -> E {
    let r = |x: &E| conj_swap(x);
    match &**e {
        Expr::Const(z) => konst(z.conj()),
        Expr::Var(Var::Psi) => var(Var::PsiC),
        Expr::Var(Var::PsiC) => var(Var::Psi),
        Expr::Var(_) => e.clone(),
        Expr::Add(a, b) => add(r(a), r(b)),
        Expr::Mul(a, b) => mul(r(a), r(b)),
        Expr::Neg(a) => neg(r(a)),
        Expr::Div(a, b) => div(r(a), r(b)),
        Expr::Pow(a, p) => pow(r(a), *p),
        Expr::Exp(a) => exp(r(a)),
        Expr::Log(a) => log(r(a)),
        Expr::Sin(a) => sin(r(a)),
        Expr::Cos(a) => cos(r(a)),
        Expr::Abs(a) => abs(r(a)),
        Expr::Sign(a) => sign(r(a)),
        Expr::Func { name, args, deriv, conj } => Arc::new(Expr::Func {
            name: name.clone(),
            args: args.iter().map(r).collect(),
            deriv: deriv.clone(),
            conj: !conj,
        }),
        Expr::Field { kind, deriv, conj } => Arc::new(Expr::Field {
            kind: *kind,
            deriv: deriv.clone(),
            conj: !conj,
        }),
    }
}

/// Partial derivative with respect to `v`.
pub fn diff(e: &E, v: Var) -> Result<E, LieError> {
    let d = |x: &E| diff(x, v);
    Ok(match &**e {
        Expr::Const(_) => real(0.0),
        Expr::Var(w) => real(if *w == v { 1.0 } else { 0.0 }),
        Expr::Add(a, b) => add(d(a)?, d(b)?),
        Expr::Mul(a, b) => add(mul(d(a)?, b.clone()), mul(a.clone(), d(b)?)),
        Expr::Neg(a) => neg(d(a)?),
        Expr::Div(a, b) => {
            let da = d(a)?;
            let db = d(b)?;
            sub(div(da, b.clone()), div(mul(a.clone(), db), mul(b.clone(), b.clone())))
        }
        Expr::Pow(a, p) => mul(mul(real(*p), pow(a.clone(), p - 1.0)), d(a)?),
        Expr::Exp(a) => mul(e.clone(), d(a)?),
        Expr::Log(a) => div(d(a)?, a.clone()),
        Expr::Sin(a) => mul(cos(a.clone()), d(a)?),
        Expr::Cos(a) => neg(mul(sin(a.clone()), d(a)?)),
        Expr::Abs(a) => mul(sign(a.clone()), d(a)?),
        Expr::Sign(_) => real(0.0),
        Expr::Func { name, args, deriv, conj } => {
            let mut acc = real(0.0);
            for (k, arg) in args.iter().enumerate() {
                let da = d(arg)?;
                if is_zero(&da) {
                    continue;
                }
                let mut nd = deriv.clone();
                nd[k] += 1;
                if nd.iter().sum::<u32>() > MAX_OPAQUE_ORDER {
                    return Err(LieError::UnregisteredDerivative(format!("{name}{nd:?}")));
                }
                let f = Arc::new(Expr::Func {
                    name: name.clone(),
                    args: args.clone(),
                    deriv: nd,
                    conj: *conj,
                });
                acc = add(acc, mul(f, da));
            }
            acc
        }
        Expr::Field { kind, deriv, conj } => {
            let slot = match v {
                Var::T => 0,
                Var::X(a) => a,
                Var::Psi | Var::PsiC => return Ok(real(0.0)),
            };
            if slot >= deriv.len() {
                return Ok(real(0.0));
            }
            let mut nd = deriv.clone();
            nd[slot] += 1;
            Arc::new(Expr::Field {
                kind: *kind,
                deriv: nd,
                conj: *conj,
            })
        }
    })
}

/// Values supplied by the jet point for opaque atoms.
pub trait AtomSource {
    fn opaque(&self, name: &str, deriv: &[u32]) -> Result<Complex64, LieError>;
    fn field(&self, kind: FieldKind, deriv: &[u32]) -> Result<Complex64, LieError>;
}

/// Numeric point for evaluation.
pub struct Point<'a> {
    pub t: f64,
    pub x: &'a [f64],
    pub psi: Complex64,
    pub psic: Complex64,
    pub atoms: &'a dyn AtomSource,
}

pub fn eval(e: &Expr, p: &Point<'_>) -> Result<Complex64, LieError> {
    Ok(match e {
        Expr::Const(z) => *z,
        Expr::Var(Var::T) => c(p.t, 0.0),
        Expr::Var(Var::X(a)) => c(*p.x.get(a - 1).ok_or(LieError::Dimension(*a))?, 0.0),
        Expr::Var(Var::Psi) => p.psi,
        Expr::Var(Var::PsiC) => p.psic,
        Expr::Add(a, b) => eval(a, p)? + eval(b, p)?,
        Expr::Mul(a, b) => eval(a, p)? * eval(b, p)?,
        Expr::Neg(a) => -eval(a, p)?,
        Expr::Div(a, b) => {
            let den = eval(b, p)?;
            if den == c(0.0, 0.0) {
                return Err(LieError::Singular("division by zero".into()));
            }
            eval(a, p)? / den
        }
        Expr::Pow(a, q) => {
            let z = eval(a, p)?;
            if z == c(0.0, 0.0) && *q < 0.0 {
                return Err(LieError::Singular("negative power of zero".into()));
            }
            pow_value(z, *q)
        }
        Expr::Exp(a) => eval(a, p)?.exp(),
        Expr::Log(a) => {
            let z = eval(a, p)?;
            if z == c(0.0, 0.0) {
                return Err(LieError::Singular("logarithm of zero".into()));
            }
            z.ln()
        }
        Expr::Sin(a) => eval(a, p)?.sin(),
        Expr::Cos(a) => eval(a, p)?.cos(),
        Expr::Abs(a) => c(eval(a, p)?.re.abs(), 0.0),
        Expr::Sign(a) => c(eval(a, p)?.re.signum(), 0.0),
        Expr::Func { name, deriv, conj, .. } => {
            let z = p.atoms.opaque(name, deriv)?;
            if *conj {
                z.conj()
            } else {
                z
            }
        }
        Expr::Field { kind, deriv, conj } => {
            let z = p.atoms.field(*kind, deriv)?;
            if *conj {
                z.conj()
            } else {
                z
            }
        }
    })
}

/// Substitute `ψ, ψ*` by other expressions.
pub fn substitute_psi(e: &E, psi: &E, psic: &E) -> E {
    let r = |x: &E| substitute_psi(x, psi, psic);
    match &**e {
        Expr::Var(Var::Psi) => psi.clone(),
        Expr::Var(Var::PsiC) => psic.clone(),
        Expr::Const(_) | Expr::Var(_) | Expr::Field { .. } => e.clone(),
        Expr::Add(a, b) => add(r(a), r(b)),
        Expr::Mul(a, b) => mul(r(a), r(b)),
        Expr::Neg(a) => neg(r(a)),
        Expr::Div(a, b) => div(r(a), r(b)),
        Expr::Pow(a, q) => pow(r(a), *q),
        Expr::Exp(a) => exp(r(a)),
        Expr::Log(a) => log(r(a)),
        Expr::Sin(a) => sin(r(a)),
        Expr::Cos(a) => cos(r(a)),
        Expr::Abs(a) => abs(r(a)),
        Expr::Sign(a) => sign(r(a)),
        Expr::Func { name, args, deriv, conj } => Arc::new(Expr::Func {
            name: name.clone(),
            args: args.iter().map(r).collect(),
            deriv: deriv.clone(),
            conj: *conj,
        }),
    }
}

/// True if the expression mentions `ψ` or `ψ*`.
pub fn depends_on_psi(e: &Expr) -> bool {
    match e {
        Expr::Var(Var::Psi) | Expr::Var(Var::PsiC) => true,
        Expr::Const(_) | Expr::Var(_) | Expr::Field { .. } => false,
        Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => depends_on_psi(a) || depends_on_psi(b),
        Expr::Neg(a)
        | Expr::Pow(a, _)
        | Expr::Exp(a)
        | Expr::Log(a)
        | Expr::Sin(a)
        | Expr::Cos(a)
        | Expr::Abs(a)
        | Expr::Sign(a) => depends_on_psi(a),
        Expr::Func { args, .. } => args.iter().any(|a| depends_on_psi(a)),
    }
}

fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}*i", z.im)
    } else {
        format!("({}{:+}*i)", z.re, z.im)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(z) => write!(f, "{}", fmt_complex(*z)),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Var(Var::X(a)) => write!(f, "x{a}"),
            Expr::Var(Var::Psi) => write!(f, "psi"),
            Expr::Var(Var::PsiC) => write!(f, "psic"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Div(a, b) => write!(f, "({a})/({b})"),
            Expr::Pow(a, p) => write!(f, "({a})^{p}"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Sign(a) => write!(f, "sign({a})"),
            Expr::Func { name, args, deriv, conj } => {
                let star = if *conj { "*" } else { "" };
                let d = if deriv.iter().all(|k| *k == 0) { String::new() } else { format!("_{deriv:?}") };
                let a: Vec<String> = args.iter().map(|x| x.to_string()).collect();
                write!(f, "{name}{star}{d}({})", a.join(", "))
            }
            Expr::Field { kind, deriv, conj } => {
                let star = if *conj { "*" } else { "" };
                let n = match kind {
                    FieldKind::Theta => "theta",
                    FieldKind::Eta0 => "eta0",
                };
                write!(f, "{n}{star}{deriv:?}")
            }
        }
    }
}
