//! Normal-ordered linear differential operators with Laurent coefficients.
//!
//! An operator is stored as `Σ_α c_α(t, x) ∂^α` with every coefficient to the
//! left of every derivative; `α` runs over `(∂_t, ∂_{x_1}, .., ∂_{x_m})`.
//!
//! Momentum convention: `p_a = -i ∂_{x_a}`, so `p² = -Δ` and the free
//! Schrödinger operator is `L = i∂_t + Δ/(2M) - V`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{rat_int, GaussianRational, LaurentPoly, Monomial, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeylError {
    #[error("potential depends on t; L requires a stationary potential")]
    TimeDependentPotential,
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(String),
    #[error("candidate operator contains a time derivative")]
    TimeDerivativeInCandidate,
    #[error("dimension mismatch: {left} vs {right} variables")]
    DimensionMismatch { left: usize, right: usize },
}

/// Derivative multi-index `(k_t, k_1, .., k_m)`.
pub type DerivIndex = Vec<u32>;

#[derive(Clone, PartialEq, Eq)]
pub struct DiffOp {
    nvars: usize,
    terms: BTreeMap<DerivIndex, LaurentPoly>,
}

fn binomial(n: u32, k: u32) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i64 / (i + 1) as i64;
    }
    acc
}

/// All `γ ≤ α` componentwise, with the product of binomials `C(α, γ)`.
fn sub_indices(alpha: &[u32]) -> Vec<(DerivIndex, i64)> {
    let mut out = vec![(Vec::with_capacity(alpha.len()), 1i64)];
    for &a in alpha {
        let mut next = Vec::with_capacity(out.len() * (a as usize + 1));
        for (g, w) in &out {
            for k in 0..=a {
                let mut ng = g.clone();
                ng.push(k);
                next.push((ng, w * binomial(a, k)));
            }
        }
        out = next;
    }
    out
}

impl DiffOp {
    pub fn zero(nvars: usize) -> Self {
        DiffOp {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    /// Multiplication operator by `c`.
    pub fn mul(c: LaurentPoly) -> Self {
        let nvars = c.nvars();
        let mut op = Self::zero(nvars);
        op.add_term(vec![0; nvars], c);
        op
    }

    pub fn identity(nvars: usize) -> Self {
        Self::mul(LaurentPoly::one(nvars))
    }

    /// `∂` with respect to slot `slot` (0 = t).
    pub fn partial(nvars: usize, slot: usize) -> Self {
        let mut alpha = vec![0; nvars];
        alpha[slot] = 1;
        let mut op = Self::zero(nvars);
        op.add_term(alpha, LaurentPoly::one(nvars));
        op
    }

    /// `p_a = -i ∂_{x_a}` for spatial axis `a` (1-based).
    pub fn momentum(nvars: usize, a: usize) -> Self {
        Self::partial(nvars, a).scale(&-GaussianRational::i())
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn dim(&self) -> usize {
        self.nvars - 1
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DerivIndex, &LaurentPoly)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, alpha: &[u32]) -> LaurentPoly {
        self.terms
            .get(alpha)
            .cloned()
            .unwrap_or_else(|| LaurentPoly::zero(self.nvars))
    }

    pub fn add_term(&mut self, alpha: DerivIndex, c: LaurentPoly) {
        assert_eq!(alpha.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        let slot = self
            .terms
            .entry(alpha.clone())
            .or_insert_with(|| LaurentPoly::zero(c.nvars()));
        *slot = &*slot + &c;
        if slot.is_zero() {
            self.terms.remove(&alpha);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximal total derivative degree; `None` for the zero operator.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|a| a.iter().sum()).max()
    }

    pub fn has_time_derivative(&self) -> bool {
        self.terms.keys().any(|a| a[0] > 0)
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        let mut out = Self::zero(self.nvars);
        for (a, p) in &self.terms {
            out.add_term(a.clone(), p.scale(c));
        }
        out
    }

    pub fn add(&self, other: &DiffOp) -> DiffOp {
        assert_eq!(self.nvars, other.nvars, "DiffOp arity");
        let mut out = self.clone();
        for (a, p) in &other.terms {
            out.add_term(a.clone(), p.clone());
        }
        out
    }

    pub fn sub(&self, other: &DiffOp) -> DiffOp {
        self.add(&other.scale(&-GaussianRational::one()))
    }

    /// Left multiplication of every coefficient by `f`.
    pub fn premultiply(&self, f: &LaurentPoly) -> DiffOp {
        let mut out = Self::zero(self.nvars);
        for (a, p) in &self.terms {
            out.add_term(a.clone(), f * p);
        }
        out
    }

    /// Normal-ordered product `self ∘ other` via the generalized Leibniz rule.
    pub fn compose(&self, other: &DiffOp) -> DiffOp {
        assert_eq!(self.nvars, other.nvars, "DiffOp arity");
        let mut out = Self::zero(self.nvars);
        for (alpha, a) in &self.terms {
            let subs = sub_indices(alpha);
            for (beta, b) in &other.terms {
                for (gamma, w) in &subs {
                    let db = b.diff_multi(gamma);
                    if db.is_zero() {
                        continue;
                    }
                    let coeff = (a * &db).scale_rational(&rat_int(*w));
                    let idx: DerivIndex = alpha
                        .iter()
                        .zip(gamma)
                        .zip(beta)
                        .map(|((al, g), be)| al - g + be)
                        .collect();
                    out.add_term(idx, coeff);
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &DiffOp) -> DiffOp {
        self.compose(other).sub(&other.compose(self))
    }

    pub fn anticommutator(&self, other: &DiffOp) -> DiffOp {
        self.compose(other).add(&other.compose(self))
    }

    /// Apply to a function given as a Laurent polynomial.
    pub fn apply(&self, f: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero(self.nvars);
        for (a, c) in &self.terms {
            out = &out + &(c * &f.diff_multi(a));
        }
        out
    }

    /// Part of the operator of exactly the given derivative degree.
    pub fn homogeneous_part(&self, degree: u32) -> DiffOp {
        let mut out = Self::zero(self.nvars);
        for (a, p) in &self.terms {
            if a.iter().sum::<u32>() == degree {
                out.add_term(a.clone(), p.clone());
            }
        }
        out
    }

    /// Flattened exact coefficients keyed by (derivative index, monomial).
    pub fn flatten(&self) -> BTreeMap<(DerivIndex, Monomial), GaussianRational> {
        let mut out = BTreeMap::new();
        for (a, p) in &self.terms {
            for (m, c) in p.terms() {
                out.insert((a.clone(), m.clone()), c.clone());
            }
        }
        out
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(a, c)| {
                let d: Vec<String> = a
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(slot, &k)| {
                        let name = if slot == 0 {
                            "d_t".to_string()
                        } else {
                            format!("d_x{slot}")
                        };
                        if k == 1 {
                            name
                        } else {
                            format!("{name}^{k}")
                        }
                    })
                    .collect();
                if d.is_empty() {
                    format!("({c})")
                } else {
                    format!("({c})*{}", d.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffOp[{}]({})", self.nvars, self)
    }
}

#[derive(Serialize, Deserialize)]
struct OpTerm {
    deriv: DerivIndex,
    coeff: LaurentPoly,
}

#[derive(Serialize, Deserialize)]
struct OpRepr {
    nvars: usize,
    terms: Vec<OpTerm>,
}

impl Serialize for DiffOp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        OpRepr {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(a, c)| OpTerm {
                    deriv: a.clone(),
                    coeff: c.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiffOp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = OpRepr::deserialize(d)?;
        let mut op = DiffOp::zero(r.nvars);
        for t in r.terms {
            if t.deriv.len() != r.nvars || t.coeff.nvars() != r.nvars {
                return Err(serde::de::Error::custom("operator term arity mismatch"));
            }
            op.add_term(t.deriv, t.coeff);
        }
        Ok(op)
    }
}

/// Nondecreasing index tuples of length `rank` over `1..=dim`.
pub fn sorted_multi_indices(dim: usize, rank: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(rank);
    fn rec(dim: usize, rank: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == rank {
            out.push(cur.clone());
            return;
        }
        for a in start..=dim {
            cur.push(a);
            rec(dim, rank, a, cur, out);
            cur.pop();
        }
    }
    rec(dim, rank, 1, &mut cur, &mut out);
    out
}

/// Number of distinct orderings of a sorted multi-index: `j! / Π n_a!`.
pub fn multiplicity(idx: &[usize]) -> i64 {
    let mut counts: BTreeMap<usize, i64> = BTreeMap::new();
    for &a in idx {
        *counts.entry(a).or_default() += 1;
    }
    let fact = |n: i64| (1..=n).product::<i64>();
    fact(idx.len() as i64) / counts.values().map(|&c| fact(c)).product::<i64>()
}

/// Rank-`j` symmetric tensor over `m` spatial dimensions with Laurent components.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SymTensorField {
    rank: usize,
    dim: usize,
    components: BTreeMap<Vec<usize>, LaurentPoly>,
}

impl SymTensorField {
    pub fn zero(rank: usize, dim: usize) -> Self {
        let components = sorted_multi_indices(dim, rank)
            .into_iter()
            .map(|i| (i, LaurentPoly::zero(dim + 1)))
            .collect();
        SymTensorField {
            rank,
            dim,
            components,
        }
    }

    pub fn scalar(c: LaurentPoly) -> Self {
        let dim = c.nvars() - 1;
        let mut t = Self::zero(0, dim);
        t.set(&[], c);
        t
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Component lookup; the index order is irrelevant.
    pub fn get(&self, idx: &[usize]) -> &LaurentPoly {
        let mut k = idx.to_vec();
        k.sort_unstable();
        &self.components[&k]
    }

    pub fn set(&mut self, idx: &[usize], c: LaurentPoly) {
        assert_eq!(idx.len(), self.rank);
        assert_eq!(c.nvars(), self.dim + 1);
        let mut k = idx.to_vec();
        k.sort_unstable();
        assert!(k.iter().all(|&a| a >= 1 && a <= self.dim), "index out of range");
        self.components.insert(k, c);
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &LaurentPoly)> {
        self.components.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.components.values().all(|c| c.is_zero())
    }
}

/// Nested anticommutator `[[..[K, ∂_{a_1}]₊, ..]₊, ∂_{a_j}]₊` summed over all
/// index tuples. Rank 0 yields multiplication by the scalar component.
pub fn nested_anticommutator(k: &SymTensorField) -> DiffOp {
    let nvars = k.dim() + 1;
    let mut out = DiffOp::zero(nvars);
    for (idx, c) in k.components() {
        if c.is_zero() {
            continue;
        }
        let mut op = DiffOp::mul(c.clone());
        for &a in idx {
            op = op.anticommutator(&DiffOp::partial(nvars, a));
        }
        out = out.add(&op.scale(&GaussianRational::from_int(multiplicity(idx))));
    }
    out
}

/// `Q = Σ_j [[..[K_j, p]₊..]₊` with `p = -i∂`, i.e. `Σ_j (-i)^j` times the
/// ∂-form nested anticommutator. Tensors are given in rank order.
pub fn p_form_operator(tensors: &[SymTensorField]) -> DiffOp {
    let nvars = tensors.first().map_or(1, |t| t.dim() + 1);
    let mut out = DiffOp::zero(nvars);
    for k in tensors {
        let q = nested_anticommutator(k).scale(&GaussianRational::minus_i_pow(k.rank()));
        out = out.add(&q);
    }
    out
}

/// `L = i∂_t + Δ/(2M) - V`.
pub fn build_l(m: usize, mass: &Rational, v: &LaurentPoly) -> Result<DiffOp, WeylError> {
    if *mass <= Rational::zero() {
        return Err(WeylError::NonPositiveMass(crate::exact::rat_to_string(mass)));
    }
    let nvars = m + 1;
    if v.nvars() != nvars {
        return Err(WeylError::DimensionMismatch {
            left: nvars,
            right: v.nvars(),
        });
    }
    if v.depends_on(0) {
        return Err(WeylError::TimeDependentPotential);
    }
    let mut l = DiffOp::zero(nvars);
    let mut dt = vec![0; nvars];
    dt[0] = 1;
    l.add_term(dt, LaurentPoly::constant(nvars, GaussianRational::i()));
    let half_inv_mass = GaussianRational::real(Rational::one() / (mass * rat_int(2)));
    for a in 1..=m {
        let mut d2 = vec![0; nvars];
        d2[a] = 2;
        l.add_term(d2, LaurentPoly::constant(nvars, half_inv_mass.clone()));
    }
    l.add_term(vec![0; nvars], -v);
    Ok(l)
}

/// `[L, Q]`; `Q` must not contain `∂_t`. `Q` is a symmetry iff the result is zero.
pub fn commutator_with_l(l: &DiffOp, q: &DiffOp) -> Result<DiffOp, WeylError> {
    if l.nvars() != q.nvars() {
        return Err(WeylError::DimensionMismatch {
            left: l.nvars(),
            right: q.nvars(),
        });
    }
    if q.has_time_derivative() {
        return Err(WeylError::TimeDerivativeInCandidate);
    }
    Ok(l.commutator(q))
}
