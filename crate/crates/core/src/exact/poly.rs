use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::scalar::{rat_int, GaussianRational, Rational};
use super::ExactError;

/// Exponent vector over `(t, x_1, .., x_m)`; slot 0 is `t`. Entries may be negative.
///
/// Ordered graded-lexicographically: total degree first, then the exponent
/// vectors compared slot by slot with `t` first.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(pub Vec<i32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> i64 {
        self.0.iter().map(|&e| e as i64).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Name of variable slot `i`: `t` for slot 0, `x<i>` otherwise.
pub fn var_name(slot: usize) -> String {
    if slot == 0 {
        "t".to_string()
    } else {
        format!("x{slot}")
    }
}

/// Sparse Laurent polynomial in `(t, x_1, .., x_m)` with Gaussian-rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    nvars: usize,
    terms: BTreeMap<Monomial, GaussianRational>,
}

impl LaurentPoly {
    pub fn zero(nvars: usize) -> Self {
        LaurentPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: GaussianRational) -> Self {
        Self::term(nvars, Monomial::one(nvars), c)
    }

    pub fn from_int(nvars: usize, n: i64) -> Self {
        Self::constant(nvars, GaussianRational::from_int(n))
    }

    pub fn one(nvars: usize) -> Self {
        Self::from_int(nvars, 1)
    }

    /// The coordinate function for slot `var` (0 = t).
    pub fn var(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        Self::term(nvars, Monomial(e), GaussianRational::one())
    }

    pub fn term(nvars: usize, mono: Monomial, c: GaussianRational) -> Self {
        assert_eq!(mono.nvars(), nvars, "monomial arity");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(mono, c);
        }
        LaurentPoly { nvars, terms }
    }

    pub fn from_terms(
        nvars: usize,
        it: impl IntoIterator<Item = (Monomial, GaussianRational)>,
    ) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in it {
            p.add_term(m, &c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> GaussianRational {
        self.terms.get(m).cloned().unwrap_or_else(GaussianRational::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: &GaussianRational) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(m.nvars(), self.nvars);
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_arity(&self, other: &Self) -> Result<(), ExactError> {
        if self.nvars != other.nvars {
            return Err(ExactError::ArityMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, ExactError> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, ExactError> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), &-c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, ExactError> {
        self.check_arity(other)?;
        let mut out = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), &(ca * cb));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        LaurentPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        self.scale(&GaussianRational::real(r.clone()))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.nvars);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Partial derivative of the given order with respect to slot `var`.
    pub fn diff(&self, var: usize, order: u32) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            let mut factor: i64 = 1;
            for k in 0..order as i64 {
                factor *= e as i64 - k;
                if factor == 0 {
                    break;
                }
            }
            if factor == 0 {
                continue;
            }
            let mut nm = m.clone();
            nm.0[var] -= order as i32;
            out.add_term(nm, &c.scale(&rat_int(factor)));
        }
        out
    }

    /// Mixed partial derivative `∂^α` where `alpha[v]` is the order in slot `v`.
    pub fn diff_multi(&self, alpha: &[u32]) -> Self {
        let mut out = self.clone();
        for (v, &k) in alpha.iter().enumerate() {
            if k > 0 {
                out = out.diff(v, k);
            }
        }
        out
    }

    /// Term-by-term antiderivative in slot `var` with zero integration constant.
    pub fn antiderivative(&self, var: usize) -> Result<Self, ExactError> {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == -1 {
                return Err(ExactError::LogarithmicAntiderivative);
            }
            let mut nm = m.clone();
            nm.0[var] += 1;
            out.add_term(nm, &c.scale(&Rational::new(1.into(), (e as i64 + 1).into())));
        }
        Ok(out)
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.terms.keys().any(|m| m.0[var] != 0)
    }

    pub fn max_degree(&self, var: usize) -> Option<i32> {
        self.terms.keys().map(|m| m.0[var]).max()
    }

    pub fn min_degree(&self, var: usize) -> Option<i32> {
        self.terms.keys().map(|m| m.0[var]).min()
    }

    /// True when every coefficient is real.
    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.is_real())
    }

    pub fn as_constant(&self) -> Option<GaussianRational> {
        match self.terms.len() {
            0 => Some(GaussianRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.0.iter().all(|&e| e == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Direct term-by-term evaluation at a complex point.
    pub fn eval(&self, point: &[Complex64]) -> Result<Complex64, ExactError> {
        if point.len() != self.nvars {
            return Err(ExactError::ArityMismatch {
                left: self.nvars,
                right: point.len(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut v = c.to_complex();
            for (slot, (&e, z)) in m.0.iter().zip(point).enumerate() {
                if e == 0 {
                    continue;
                }
                if e < 0 && *z == Complex64::new(0.0, 0.0) {
                    return Err(ExactError::Pole { var: var_name(slot) });
                }
                v *= z.powi(e);
            }
            acc += v;
        }
        Ok(acc)
    }

    /// Evaluate at real coordinates.
    pub fn eval_real(&self, point: &[f64]) -> Result<Complex64, ExactError> {
        let p: Vec<Complex64> = point.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.eval(&p)
    }

    /// Multiply by a single monomial (possibly with negative exponents).
    pub fn shift(&self, m: &Monomial) -> Self {
        LaurentPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, c)| (k.mul(m), c.clone())).collect(),
        }
    }

    /// Exact inverse when the polynomial is a single term.
    pub fn monomial_inverse(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        let inv = c.inv()?;
        Some(Self::term(
            self.nvars,
            Monomial(m.0.iter().map(|e| -e).collect()),
            inv,
        ))
    }

    /// Reinterpret the polynomial in a different number of variables, keeping
    /// the leading slots. Fails if a dropped slot is used.
    pub fn with_nvars(&self, nvars: usize) -> Result<Self, ExactError> {
        let mut out = Self::zero(nvars);
        for (m, c) in &self.terms {
            let mut e = vec![0; nvars];
            for (slot, &x) in m.0.iter().enumerate() {
                if slot < nvars {
                    e[slot] = x;
                } else if x != 0 {
                    return Err(ExactError::ArityMismatch {
                        left: self.nvars,
                        right: nvars,
                    });
                }
            }
            out.add_term(Monomial(e), c);
        }
        Ok(out)
    }
}

impl<'a> Add<&'a LaurentPoly> for &'a LaurentPoly {
    type Output = LaurentPoly;
    /// Panics on arity mismatch; use [`LaurentPoly::checked_add`] for user input.
    fn add(self, o: &LaurentPoly) -> LaurentPoly {
        self.checked_add(o).expect("LaurentPoly arity mismatch")
    }
}

impl<'a> Sub<&'a LaurentPoly> for &'a LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, o: &LaurentPoly) -> LaurentPoly {
        self.checked_sub(o).expect("LaurentPoly arity mismatch")
    }
}

impl<'a> Mul<&'a LaurentPoly> for &'a LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, o: &LaurentPoly) -> LaurentPoly {
        self.checked_mul(o).expect("LaurentPoly arity mismatch")
    }
}

impl Add for LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, o: LaurentPoly) -> LaurentPoly {
        &self + &o
    }
}

impl Sub for LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, o: LaurentPoly) -> LaurentPoly {
        &self - &o
    }
}

impl Mul for LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, o: LaurentPoly) -> LaurentPoly {
        &self * &o
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        self.scale(&-GaussianRational::one())
    }
}

impl Neg for LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        -&self
    }
}

fn fmt_coeff_factor(c: &GaussianRational) -> String {
    let s = c.to_string();
    if c.is_real() && !s.contains('/') {
        s
    } else if c.is_real() {
        format!("({s})")
    } else {
        s
    }
}

/// Text form accepted back by the potential parser: `3*t*x1^-2 - 1/2*x2`.
/// Terms print in descending graded-lex order.
impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let (neg, mag) = if c.is_real() && c.re < Rational::zero() {
                (true, -c)
            } else {
                (false, c.clone())
            };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let vars: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e != 0)
                .map(|(slot, &e)| {
                    if e == 1 {
                        var_name(slot)
                    } else {
                        format!("{}^{}", var_name(slot), e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{}", fmt_coeff_factor(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_coeff_factor(&mag), vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentPoly[{}]({})", self.nvars, self)
    }
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    nvars: usize,
    terms: Vec<(Monomial, GaussianRational)>,
}

impl Serialize for LaurentPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolyRepr {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = PolyRepr::deserialize(d)?;
        if r.terms.iter().any(|(m, _)| m.nvars() != r.nvars) {
            return Err(serde::de::Error::custom("monomial arity mismatch"));
        }
        Ok(LaurentPoly::from_terms(r.nvars, r.terms))
    }
}
