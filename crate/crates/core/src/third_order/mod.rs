//! Third-order symmetry operators of the one-dimensional equation
//! `i∂_tψ = Hψ`, `H = ½(p² + U)`, i.e. `M = 1` and `V = U/2`.
//!
//! A candidate is `Q = Σ_{j≤3} [[..[h_j, p]₊..]₊` with `p = -i∂_x`. The
//! symmetry condition is equivalent to five equations on the `h_j`, and the
//! general solution is parametrized by four functions `a, b, c, d` of `t`
//! together with a compatibility condition on `U`.
//!
//! Two representations are supported. Exact coefficients are Laurent
//! polynomials in `(t, x)` times a common factor `e^{rate·t}`, and every
//! check is an identity of polynomials. Numeric coefficients come from time
//! jets and an integrated potential, and checks are pointwise.

mod numeric;
mod ode;

pub use numeric::{
    family_time_coeffs, numeric_residuals, numeric_verify, JetTerm, NumericCoeffs,
    NumericPotential, NumericReport, NumericVerifyConfig, PotentialJet, TimeCoeffs, TimeJet,
};
pub use ode::{ode_integrate, OdeOptions, OdeSolution};

use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{rat, rat_int, rat_to_f64, ExactError, GaussianRational, LaurentPoly, Monomial, Rational};
use crate::weyl::{build_l, commutator_with_l, p_form_operator, DiffOp, SymTensorField, WeylError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThirdOrderError {
    #[error("family {family} takes {expected} parameter(s), got {got}")]
    ParamCount { family: Family, expected: usize, got: usize },
    #[error("the oscillator-type pair needs omega4 < 0, got {0}")]
    OmegaNotNegative(String),
    #[error("exact mode needs -omega4 to be the square of a rational, got {0}")]
    IrrationalOmega(String),
    #[error("potential must be a function of x alone")]
    PotentialNotStatic,
    #[error("coefficients and potential use different representations")]
    MixedRepresentation,
    #[error("phi is not available but a time-dependent leading coefficient needs it")]
    MissingPhi,
    #[error("expected {expected} initial values, got {got}")]
    InitialData { expected: usize, got: usize },
    #[error("invalid interval [{from}, {to}]")]
    Interval { from: f64, to: f64 },
    #[error("solution exceeded |U| = {bound}; last safe abscissa {last_safe}")]
    BlowUp { last_safe: f64, bound: f64 },
    #[error("step limit reached at x = {x}")]
    StepLimit { x: f64 },
    #[error("x = {x} outside the solution interval [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Weyl(#[from] WeylError),
}

/// The four canonical potential families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    /// `U'' − 3U² + 3ω₁ = 0` (Weierstrass).
    W213,
    /// `U'' − 3U² − 8ω₂x = 0` (first Painlevé).
    P214,
    /// `(U'' − 3U²)' − 2ω₃(xU' + 2U) = 0`.
    E215,
    /// `φ''' − 3φ'² − 2ω₄(x²φ)' = ω₄²x⁴/3 + ω₅`, `U = φ'`.
    E216,
}

impl Family {
    pub fn param_count(self) -> usize {
        match self {
            Family::E216 => 2,
            _ => 1,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::W213 => &["omega1"],
            Family::P214 => &["omega2"],
            Family::E215 => &["omega3"],
            Family::E216 => &["omega4", "omega5"],
        }
    }

    pub fn all() -> [Family; 4] {
        [Family::W213, Family::P214, Family::E215, Family::E216]
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::W213 => "W213",
            Family::P214 => "P214",
            Family::E215 => "E215",
            Family::E216 => "E216",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "W213" => Ok(Family::W213),
            "P214" => Ok(Family::P214),
            "E215" => Ok(Family::E215),
            "E216" => Ok(Family::E216),
            _ => Err(format!("unknown family '{s}' (expected W213, P214, E215 or E216)")),
        }
    }
}

mod serde_rational_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(crate::exact::rat_to_string).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let strs: Vec<String> = Vec::deserialize(d)?;
        strs.iter()
            .map(|s| {
                crate::exact::parse_rational(s)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad rational '{s}'")))
            })
            .collect()
    }
}

/// A family with its parameters (`[ω₁]`, `[ω₂]`, `[ω₃]` or `[ω₄, ω₅]`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PotentialFamily {
    pub family: Family,
    #[serde(with = "serde_rational_vec")]
    pub omega: Vec<Rational>,
}

impl PotentialFamily {
    pub fn new(family: Family, omega: Vec<Rational>) -> Result<Self, ThirdOrderError> {
        let f = PotentialFamily { family, omega };
        f.check()?;
        Ok(f)
    }

    pub fn check(&self) -> Result<(), ThirdOrderError> {
        if self.omega.len() != self.family.param_count() {
            return Err(ThirdOrderError::ParamCount {
                family: self.family,
                expected: self.family.param_count(),
                got: self.omega.len(),
            });
        }
        Ok(())
    }

    pub fn omegas_f64(&self) -> Vec<f64> {
        self.omega.iter().map(rat_to_f64).collect()
    }

    /// `ω = √(−ω₄)` for E216.
    pub fn oscillator_frequency(&self) -> Result<f64, ThirdOrderError> {
        let w4 = &self.omega[0];
        if !w4.is_negative() {
            return Err(ThirdOrderError::OmegaNotNegative(crate::exact::rat_to_string(w4)));
        }
        Ok((-rat_to_f64(w4)).sqrt())
    }

    /// Exact `ω = √(−ω₄)` when it is rational.
    pub fn oscillator_frequency_exact(&self) -> Result<Rational, ThirdOrderError> {
        let w4 = &self.omega[0];
        if !w4.is_negative() {
            return Err(ThirdOrderError::OmegaNotNegative(crate::exact::rat_to_string(w4)));
        }
        let neg = -w4;
        let (n, d) = (neg.numer().clone(), neg.denom().clone());
        let (rn, rd) = (n.sqrt(), d.sqrt());
        if &rn * &rn != n || &rd * &rd != d {
            return Err(ThirdOrderError::IrrationalOmega(crate::exact::rat_to_string(w4)));
        }
        Ok(Rational::new(rn, rd))
    }
}

/// Sign choice for the oscillator-type pair `Q±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> i64 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Plus => "Q+",
            Branch::Minus => "Q-",
        }
    }
}

/// Exact time functions `a, b, c, d`, each a polynomial in `t` multiplied by
/// the common factor `e^{rate·t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTime {
    pub rate: GaussianRational,
    pub a: LaurentPoly,
    pub b: LaurentPoly,
    pub c: LaurentPoly,
    pub d: LaurentPoly,
}

impl ExactTime {
    pub fn polynomial(a: LaurentPoly, b: LaurentPoly, c: LaurentPoly, d: LaurentPoly) -> Self {
        ExactTime {
            rate: GaussianRational::zero(),
            a,
            b,
            c,
            d,
        }
    }

    /// Time derivative acting on the polynomial part, `f ↦ rate·f + ∂_t f`.
    fn dt(&self, f: &LaurentPoly) -> LaurentPoly {
        &f.scale(&self.rate) + &f.diff(0, 1)
    }

    fn dtn(&self, f: &LaurentPoly, k: usize) -> LaurentPoly {
        (0..k).fold(f.clone(), |acc, _| self.dt(&acc))
    }
}

/// Exact `h_0..h_3` (index = rank); the actual coefficients are
/// `e^{rate·t} h_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCoeffs {
    pub rate: GaussianRational,
    pub h: [LaurentPoly; 4],
}

impl ExactCoeffs {
    fn dt(&self, f: &LaurentPoly) -> LaurentPoly {
        &f.scale(&self.rate) + &f.diff(0, 1)
    }

    /// `Σ_j [[..[h_j, p]₊..]₊` (without the exponential factor).
    pub fn operator(&self) -> DiffOp {
        let tensors: Vec<SymTensorField> = (0..4)
            .map(|j| {
                let mut k = SymTensorField::zero(j, 1);
                k.set(&vec![1; j], self.h[j].clone());
                k
            })
            .collect();
        p_form_operator(&tensors)
    }
}

/// Coefficients in either representation.
#[derive(Debug, Clone)]
pub enum ThirdOrderCoeffs {
    Exact(ExactCoeffs),
    Numeric(NumericCoeffs),
}

/// Potential in either representation.
#[derive(Debug, Clone)]
pub enum Potential {
    Exact(LaurentPoly),
    Numeric(NumericPotential),
}

/// Residuals of the five determining equations, in the order
/// `h₃'`, `h₂' + 2ḣ₃`, `2ḣ₂ + h₁' − 6h₃U'`, `2ḣ₁ + h₀' − 4h₂U'`,
/// `ḣ₀ − h₁U' + h₃U'''`.
#[derive(Debug, Clone)]
pub enum Residuals {
    Exact(Vec<LaurentPoly>),
    /// One row per requested `(t, x)` point.
    Numeric(Vec<[Complex64; 5]>),
}

impl Residuals {
    pub fn all_zero_exact(&self) -> bool {
        match self {
            Residuals::Exact(r) => r.iter().all(|p| p.is_zero()),
            Residuals::Numeric(_) => false,
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Residuals::Exact(r) => {
                if r.iter().all(|p| p.is_zero()) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Residuals::Numeric(rows) => rows
                .iter()
                .flat_map(|r| r.iter().map(|z| z.norm()))
                .fold(0.0, f64::max),
        }
    }
}

fn check_static(u: &LaurentPoly) -> Result<(), ThirdOrderError> {
    if u.nvars() != 2 || u.depends_on(0) {
        return Err(ThirdOrderError::PotentialNotStatic);
    }
    Ok(())
}

fn exact_residuals(h: &ExactCoeffs, u: &LaurentPoly) -> Result<Vec<LaurentPoly>, ThirdOrderError> {
    check_static(u)?;
    let [h0, h1, h2, h3] = &h.h;
    let u1 = u.diff(1, 1);
    let u3 = u.diff(1, 3);
    let two = GaussianRational::from_int(2);
    let r1 = h3.diff(1, 1);
    let r2 = &h2.diff(1, 1) + &h.dt(h3).scale(&two);
    let r3 = &(&h.dt(h2).scale(&two) + &h1.diff(1, 1)) - &(h3 * &u1).scale(&GaussianRational::from_int(6));
    let r4 = &(&h.dt(h1).scale(&two) + &h0.diff(1, 1)) - &(h2 * &u1).scale(&GaussianRational::from_int(4));
    let r5 = &(&h.dt(h0) - &(h1 * &u1)) + &(h3 * &u3);
    Ok(vec![r1, r2, r3, r4, r5])
}

/// Residuals of the five determining equations. Exact inputs give exact
/// polynomial residuals (with the common exponential factor removed);
/// numeric inputs are evaluated at `points = [(t, x), ..]`.
pub fn third_order_residuals(
    h: &ThirdOrderCoeffs,
    u: &Potential,
    points: &[(f64, f64)],
) -> Result<Residuals, ThirdOrderError> {
    match (h, u) {
        (ThirdOrderCoeffs::Exact(h), Potential::Exact(u)) => Ok(Residuals::Exact(exact_residuals(h, u)?)),
        (ThirdOrderCoeffs::Numeric(h), Potential::Numeric(u)) => {
            let mut rows = Vec::with_capacity(points.len());
            for &(t, x) in points {
                let jet = u.jet(x)?;
                rows.push(numeric_residuals(h, &jet, t, x)?);
            }
            Ok(Residuals::Numeric(rows))
        }
        _ => Err(ThirdOrderError::MixedRepresentation),
    }
}

/// Left side of the compatibility condition
/// `aU'''' − (2äx² + 6aU + c − 2ḃx)U'' − 6(2äx + aU' − ḃ)U' − 12äU − 2(2a⁗x² − 2b⃛x + c̈)`.
pub fn compatibility_residual(u: &LaurentPoly, time: &ExactTime) -> Result<LaurentPoly, ThirdOrderError> {
    check_static(u)?;
    let x = LaurentPoly::var(2, 1);
    let x2 = x.pow(2);
    let g = |n: i64| GaussianRational::from_int(n);
    let (a, b, c) = (&time.a, &time.b, &time.c);
    let a2 = time.dtn(a, 2);
    let a4 = time.dtn(a, 4);
    let b1 = time.dtn(b, 1);
    let b3 = time.dtn(b, 3);
    let c2 = time.dtn(c, 2);
    let (u1, u2, u4) = (u.diff(1, 1), u.diff(1, 2), u.diff(1, 4));

    let coeff2 = &(&(&(&a2 * &x2).scale(&g(2)) + &(a * u).scale(&g(6))) + c) - &(&b1 * &x).scale(&g(2));
    let coeff1 = &(&(&a2 * &x).scale(&g(2)) + &(a * &u1)) - &b1;
    let tail = &(&(&a4 * &x2).scale(&g(2)) - &(&b3 * &x).scale(&g(2))) + &c2;
    let mut r = a * &u4;
    r = &r - &(&coeff2 * &u2);
    r = &r - &(&coeff1 * &u1).scale(&g(6));
    r = &r - &(&a2 * u).scale(&g(12));
    r = &r - &tail.scale(&g(2));
    Ok(r)
}

/// Coefficients `h_j` from `a, b, c, d`:
/// `h₃ = a`, `h₂ = −2ȧx + b`, `h₁ = 2äx² − 2ḃx + c + 6aU`,
/// `h₀ = −(4/3)a⃛x³ + 2b̈x² − 2ċx − 4ȧφ + 4(b − 2ȧx)U + d`, `φ = ∫U dx`
/// with zero integration constant.
pub fn coeffs_from_abc(time: &ExactTime, u: &LaurentPoly) -> Result<ExactCoeffs, ThirdOrderError> {
    check_static(u)?;
    let phi = u.antiderivative(1)?;
    let x = LaurentPoly::var(2, 1);
    let g = |n: i64| GaussianRational::from_int(n);
    let (a, b, c, d) = (&time.a, &time.b, &time.c, &time.d);
    let a1 = time.dtn(a, 1);
    let a2 = time.dtn(a, 2);
    let a3 = time.dtn(a, 3);
    let b1 = time.dtn(b, 1);
    let b2 = time.dtn(b, 2);
    let c1 = time.dtn(c, 1);

    let h3 = a.clone();
    let h2 = &(&a1 * &x).scale(&g(-2)) + b;
    let g1 = &(&(&a2 * &x.pow(2)).scale(&g(2)) - &(&b1 * &x).scale(&g(2))) + c;
    let h1 = &g1 + &(a * u).scale(&g(6));
    let mut h0 = (&a3 * &x.pow(3)).scale(&GaussianRational::real(rat(-4, 3)));
    h0 = &h0 + &(&b2 * &x.pow(2)).scale(&g(2));
    h0 = &h0 - &(&c1 * &x).scale(&g(2));
    h0 = &h0 - &(&a1 * &phi).scale(&g(4));
    let inner = b - &(&a1 * &x).scale(&g(2));
    h0 = &h0 + &(&inner * u).scale(&g(4));
    h0 = &h0 + d;
    Ok(ExactCoeffs {
        rate: time.rate.clone(),
        h: [h0, h1, h2, h3],
    })
}

/// Residual of the family's defining equation for an exact potential.
pub fn family_residual(fam: &PotentialFamily, u: &LaurentPoly) -> Result<LaurentPoly, ThirdOrderError> {
    fam.check()?;
    check_static(u)?;
    let w: Vec<GaussianRational> = fam.omega.iter().cloned().map(GaussianRational::real).collect();
    let x = LaurentPoly::var(2, 1);
    let g = |n: i64| GaussianRational::from_int(n);
    let base = &u.diff(1, 2) - &(u * u).scale(&g(3));
    Ok(match fam.family {
        Family::W213 => &base + &LaurentPoly::constant(2, w[0].clone() * g(3)),
        Family::P214 => &base - &x.scale(&(w[0].clone() * g(8))),
        Family::E215 => {
            let inner = &(&x * &u.diff(1, 1)) + &u.scale(&g(2));
            &base.diff(1, 1) - &inner.scale(&(w[0].clone() * g(2)))
        }
        Family::E216 => {
            let phi = u.antiderivative(1)?;
            let (w4, w5) = (&w[0], &w[1]);
            let mut r = &phi.diff(1, 3) - &(u * u).scale(&g(3));
            r = &r - &(&x.pow(2) * &phi).diff(1, 1).scale(&(w4.clone() * g(2)));
            r = &r - &x.pow(4).scale(&(w4 * w4 * GaussianRational::real(rat(1, 3))));
            &r - &LaurentPoly::constant(2, w5.clone())
        }
    })
}

/// Time coefficients of the operator attached to each family.
pub fn exact_time(fam: &PotentialFamily, branch: Option<Branch>) -> Result<ExactTime, ThirdOrderError> {
    fam.check()?;
    let one = LaurentPoly::one(2);
    let zero = LaurentPoly::zero(2);
    let t = LaurentPoly::var(2, 0);
    let w = GaussianRational::real(fam.omega[0].clone());
    Ok(match fam.family {
        Family::W213 => ExactTime::polynomial(one, zero.clone(), zero.clone(), zero),
        Family::P214 => ExactTime::polynomial(one, zero.clone(), zero, t.scale(&(w * GaussianRational::from_int(-8)))),
        Family::E215 => ExactTime::polynomial(one, t.scale(&-w), zero.clone(), zero),
        Family::E216 => {
            let om = fam.oscillator_frequency_exact()?;
            let eps = branch.unwrap_or(Branch::Plus).sign();
            ExactTime {
                rate: GaussianRational::new(Rational::zero(), om * rat_int(eps)),
                a: one,
                b: zero.clone(),
                c: zero.clone(),
                d: zero,
            }
        }
    })
}

/// A third-order operator `e^{rate·t}·op`, normalized so that its leading
/// part is `p³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactOperator {
    pub label: String,
    pub rate: GaussianRational,
    pub op: DiffOp,
}

fn operator_from_coeffs(label: &str, h: &ExactCoeffs) -> ExactOperator {
    ExactOperator {
        label: label.to_string(),
        rate: h.rate.clone(),
        op: h.operator().scale(&GaussianRational::real(rat(1, 8))),
    }
}

/// Explicit operators: one for W213, P214, E215 and the pair `Q±` for E216.
/// The pair is returned without its constant normalization `1/√24`.
pub fn build_operator(fam: &PotentialFamily, u: &LaurentPoly) -> Result<Vec<ExactOperator>, ThirdOrderError> {
    fam.check()?;
    if fam.family == Family::E216 {
        let mut out = Vec::new();
        for br in [Branch::Plus, Branch::Minus] {
            let time = exact_time(fam, Some(br))?;
            out.push(operator_from_coeffs(br.label(), &coeffs_from_abc(&time, u)?));
        }
        Ok(out)
    } else {
        let time = exact_time(fam, None)?;
        Ok(vec![operator_from_coeffs("Q", &coeffs_from_abc(&time, u)?)])
    }
}

/// `[L, e^{rate·t}A] e^{-rate·t} = [L, A] + i·rate·A` for `L = i∂_t − H`.
pub fn operator_commutator(u: &LaurentPoly, q: &ExactOperator) -> Result<DiffOp, ThirdOrderError> {
    check_static(u)?;
    let v = u.scale(&GaussianRational::from_ratio(1, 2));
    let l = build_l(1, &Rational::one(), &v)?;
    let c = commutator_with_l(&l, &q.op)?;
    Ok(c.add(&q.op.scale(&(GaussianRational::i() * q.rate.clone()))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactOperatorCheck {
    pub label: String,
    pub operator: String,
    pub commutator_zero: bool,
    pub determining_zero: bool,
    /// Printed commutator when nonzero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub family: PotentialFamily,
    pub potential: String,
    pub family_residual: String,
    pub family_residual_zero: bool,
    pub operators: Vec<ExactOperatorCheck>,
    pub pass: bool,
}

/// Exact verification: the family equation holds and every operator
/// commutes with `L`; the five determining equations are checked as an
/// independent route.
pub fn exact_verify(fam: &PotentialFamily, u: &LaurentPoly) -> Result<ExactReport, ThirdOrderError> {
    let fr = family_residual(fam, u)?;
    let ops = build_operator(fam, u)?;
    let branches: Vec<Option<Branch>> = if fam.family == Family::E216 {
        vec![Some(Branch::Plus), Some(Branch::Minus)]
    } else {
        vec![None]
    };
    let mut checks = Vec::new();
    for (q, br) in ops.iter().zip(branches) {
        let c = operator_commutator(u, q)?;
        let h = coeffs_from_abc(&exact_time(fam, br)?, u)?;
        let det = exact_residuals(&h, u)?;
        checks.push(ExactOperatorCheck {
            label: q.label.clone(),
            operator: q.op.to_string(),
            commutator_zero: c.is_zero(),
            determining_zero: det.iter().all(|p| p.is_zero()),
            residual: (!c.is_zero()).then(|| c.to_string()),
        });
    }
    let pass = fr.is_zero() && checks.iter().all(|c| c.commutator_zero && c.determining_zero);
    Ok(ExactReport {
        family: fam.clone(),
        potential: u.to_string(),
        family_residual: fr.to_string(),
        family_residual_zero: fr.is_zero(),
        operators: checks,
        pass,
    })
}

/// `x^k` in the `(t, x)` ring.
pub fn x_pow(k: i32, c: i64) -> LaurentPoly {
    LaurentPoly::term(2, Monomial(vec![0, k]), GaussianRational::from_int(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(f: Family, w: &[i64]) -> PotentialFamily {
        PotentialFamily::new(f, w.iter().map(|&v| rat_int(v)).collect()).unwrap()
    }

    fn abcd(a: LaurentPoly) -> ExactTime {
        ExactTime::polynomial(a, LaurentPoly::zero(2), LaurentPoly::zero(2), LaurentPoly::zero(2))
    }

    fn inverse_square() -> LaurentPoly {
        x_pow(-2, 2)
    }

    #[test]
    fn free_cubic_momentum() {
        let h = ExactCoeffs {
            rate: GaussianRational::zero(),
            h: [LaurentPoly::zero(2), LaurentPoly::zero(2), LaurentPoly::zero(2), LaurentPoly::one(2)],
        };
        let r = third_order_residuals(&ThirdOrderCoeffs::Exact(h), &Potential::Exact(LaurentPoly::zero(2)), &[]).unwrap();
        assert!(r.all_zero_exact());
    }

    #[test]
    fn linear_potential_breaks_third_equation() {
        let h = ExactCoeffs {
            rate: GaussianRational::zero(),
            h: [LaurentPoly::zero(2), LaurentPoly::zero(2), LaurentPoly::zero(2), LaurentPoly::one(2)],
        };
        let Residuals::Exact(r) = third_order_residuals(&ThirdOrderCoeffs::Exact(h), &Potential::Exact(x_pow(1, 1)), &[]).unwrap() else {
            panic!()
        };
        assert_eq!(r[2], LaurentPoly::from_int(2, -6));
    }

    #[test]
    fn inverse_square_coefficients() {
        let h = coeffs_from_abc(&abcd(LaurentPoly::one(2)), &inverse_square()).unwrap();
        assert_eq!(h.h[3], LaurentPoly::one(2));
        assert!(h.h[2].is_zero());
        assert_eq!(h.h[1], x_pow(-2, 12));
        assert!(h.h[0].is_zero());
        assert!(exact_residuals(&h, &inverse_square()).unwrap().iter().all(|r| r.is_zero()));
    }

    #[test]
    fn linear_a_free_coefficients() {
        let h = coeffs_from_abc(&abcd(LaurentPoly::var(2, 0)), &LaurentPoly::zero(2)).unwrap();
        assert_eq!(h.h[3], LaurentPoly::var(2, 0));
        assert_eq!(h.h[2], x_pow(1, -2));
        assert!(h.h[1].is_zero() && h.h[0].is_zero());
    }

    #[test]
    fn identity_direction() {
        let t = ExactTime::polynomial(LaurentPoly::zero(2), LaurentPoly::zero(2), LaurentPoly::zero(2), LaurentPoly::one(2));
        let h = coeffs_from_abc(&t, &x_pow(3, 5)).unwrap();
        assert_eq!(h.h[0], LaurentPoly::one(2));
        assert!(h.h[1].is_zero() && h.h[2].is_zero() && h.h[3].is_zero());
    }

    #[test]
    fn log_antiderivative_rejected() {
        assert!(matches!(
            coeffs_from_abc(&abcd(LaurentPoly::one(2)), &x_pow(-1, 1)),
            Err(ThirdOrderError::Exact(ExactError::LogarithmicAntiderivative))
        ));
    }

    #[test]
    fn compatibility_examples() {
        let one = abcd(LaurentPoly::one(2));
        assert!(compatibility_residual(&inverse_square(), &one).unwrap().is_zero());
        assert!(compatibility_residual(&LaurentPoly::zero(2), &abcd(LaurentPoly::from_int(2, 5))).unwrap().is_zero());
        assert_eq!(compatibility_residual(&x_pow(2, 1), &one).unwrap(), x_pow(2, -36));
    }

    #[test]
    fn compatibility_is_second_derivative_of_weierstrass() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let mut u = LaurentPoly::zero(2);
            for k in -3..=3 {
                if k == -1 {
                    continue;
                }
                u = &u + &x_pow(k, rng.gen_range(-4..=4));
            }
            let w1 = fam(Family::W213, &[rng.gen_range(-3..=3)]);
            let lhs = compatibility_residual(&u, &abcd(LaurentPoly::one(2))).unwrap();
            let rhs = family_residual(&w1, &u).unwrap().diff(1, 2);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn family_residual_examples() {
        assert!(family_residual(&fam(Family::W213, &[0]), &inverse_square()).unwrap().is_zero());
        assert!(family_residual(&fam(Family::W213, &[0]), &LaurentPoly::zero(2)).unwrap().is_zero());
        let r = family_residual(&fam(Family::P214, &[1]), &x_pow(1, 1)).unwrap();
        assert_eq!(r, &x_pow(2, -3) - &x_pow(1, 8));
        assert!(matches!(
            PotentialFamily::new(Family::E216, vec![rat_int(1)]),
            Err(ThirdOrderError::ParamCount { .. })
        ));
    }

    #[test]
    fn inverse_square_operator_normal_form() {
        let ops = build_operator(&fam(Family::W213, &[0]), &inverse_square()).unwrap();
        let i = GaussianRational::i();
        let mut want = DiffOp::zero(2);
        want.add_term(vec![0, 3], LaurentPoly::constant(2, i.clone()));
        want.add_term(vec![0, 1], x_pow(-2, 1).scale(&(i.clone() * GaussianRational::from_int(-3))));
        want.add_term(vec![0, 0], x_pow(-3, 1).scale(&(i * GaussianRational::from_int(3))));
        assert_eq!(ops[0].op, want);
    }

    #[test]
    fn free_operator_is_cubic_momentum() {
        let ops = build_operator(&fam(Family::W213, &[0]), &LaurentPoly::zero(2)).unwrap();
        let p = DiffOp::momentum(2, 1);
        assert_eq!(ops[0].op, p.compose(&p).compose(&p));
    }

    #[test]
    fn hamiltonian_identity() {
        // Q = 2pH + ½Up + (i/4)U'
        let u = inverse_square();
        let q = &build_operator(&fam(Family::W213, &[0]), &u).unwrap()[0].op;
        let p = DiffOp::momentum(2, 1);
        let h = p.compose(&p).add(&DiffOp::mul(u.clone())).scale(&GaussianRational::from_ratio(1, 2));
        let rhs = p
            .compose(&h)
            .scale(&GaussianRational::from_int(2))
            .add(&DiffOp::mul(u.clone()).compose(&p).scale(&GaussianRational::from_ratio(1, 2)))
            .add(&DiffOp::mul(u.diff(1, 1).scale(&GaussianRational::new(Rational::zero(), rat(1, 4)))));
        assert!(q.sub(&rhs).is_zero());
    }

    #[test]
    fn exact_verification_and_negative_control() {
        assert!(exact_verify(&fam(Family::W213, &[0]), &inverse_square()).unwrap().pass);
        assert!(exact_verify(&fam(Family::W213, &[0]), &LaurentPoly::zero(2)).unwrap().pass);
        let bad = exact_verify(&fam(Family::W213, &[0]), &x_pow(-2, 3)).unwrap();
        assert!(!bad.pass);
        assert!(bad.operators[0].residual.is_some());
    }

    #[test]
    fn inverse_square_carries_dilation_family() {
        for w in [-2, 1, 3] {
            let r = exact_verify(&fam(Family::E215, &[w]), &inverse_square()).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn harmonic_oscillator_pair() {
        let f = fam(Family::E216, &[-1, 2]);
        let r = exact_verify(&f, &x_pow(2, 1)).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.operators.len(), 2);
        let f4 = fam(Family::E216, &[-4, 2]);
        let r = exact_verify(&f4, &x_pow(2, 1)).unwrap();
        assert!(!r.family_residual_zero);
    }

    #[test]
    fn non_negative_omega4_is_rejected() {
        for w4 in [0, 1] {
            let f = fam(Family::E216, &[w4, 0]);
            assert!(matches!(
                build_operator(&f, &LaurentPoly::zero(2)),
                Err(ThirdOrderError::OmegaNotNegative(_))
            ));
            assert!(matches!(f.oscillator_frequency(), Err(ThirdOrderError::OmegaNotNegative(_))));
        }
        let f = fam(Family::E216, &[-2, 0]);
        assert!(matches!(build_operator(&f, &LaurentPoly::zero(2)), Err(ThirdOrderError::IrrationalOmega(_))));
        assert!((f.oscillator_frequency().unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mixed_representation_is_an_error() {
        let h = coeffs_from_abc(&abcd(LaurentPoly::one(2)), &LaurentPoly::zero(2)).unwrap();
        let sol = NumericPotential::Laurent(LaurentPoly::zero(2));
        assert!(matches!(
            third_order_residuals(&ThirdOrderCoeffs::Exact(h), &Potential::Numeric(sol), &[]),
            Err(ThirdOrderError::MixedRepresentation)
        ));
    }
}
