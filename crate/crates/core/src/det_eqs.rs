//! Determining equations for `n`-th order symmetry operators of
//! `L = i∂_t + Δ/(2M) - V(x)` with `Q = Σ_j [[..[K_j, p]₊..]₊`.
//!
//! Equation of free rank `j` (components indexed by a sorted `A`, `|A| = j`):
//!
//! ```text
//! 2 ∂_t K_j^A + (1/M) ∂^{(a}K_{j-1}^{A∖a)}
//!     + Σ_{k>j, k-j odd} 4 (-1)^{(k-j+1)/2} C(k, j) K_k^{A b..} ∂_{b..}V = 0
//! ```
//!
//! for `j = 0..=n+1`, with `(…)` the averaging symmetrizer. The commutator
//! oracle below fixes the normalization of the potential coefficients. Each
//! potential term also stores the half-size factor `2 (-1)^{(k-j+1)/2} C(k, j)`
//! as `printed_coefficient`.
//!
//! In the stationary case the time derivatives drop, the equations are
//! multiplied by `M`, and the system splits into an even-rank and an odd-rank
//! chain.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{rat, rat_int, serde_rational, GaussianRational, LaurentPoly, Monomial, RationalMatrix, Rational};
use crate::weyl::{build_l, commutator_with_l, multiplicity, nested_anticommutator, sorted_multi_indices, DerivIndex, SymTensorField, WeylError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetError {
    #[error("potential depends on t")]
    TimeDependentPotential,
    #[error("ansatz covers ranks 0..={got}, system needs 0..={need}")]
    AnsatzRanks { got: usize, need: usize },
    #[error("unknown-count mismatch: {left} vs {right}")]
    UnknownCountMismatch { left: usize, right: usize },
    #[error("potential has {got} variables, expected {want}")]
    PotentialArity { got: usize, want: usize },
    #[error(transparent)]
    Weyl(#[from] WeylError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(rank: usize) -> Parity {
        if rank % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermKind {
    /// `∂_t K^A`.
    TimeDerivative,
    /// Averaged symmetrized gradient `∂^{(a}K^{A∖a)}`.
    SymGradient,
    /// `K^{A b_1..b_r} ∂_{b_1}..∂_{b_r} V`, summed over the `b`s.
    PotentialContraction { order: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetTerm {
    #[serde(with = "serde_rational")]
    pub coefficient: Rational,
    /// The coefficient is multiplied by `M^mass_power`.
    pub mass_power: i32,
    /// Rank of the referenced tensor symbol.
    pub rank: usize,
    #[serde(flatten)]
    pub kind: TermKind,
    /// Printed combinatorial coefficient, when it differs from `coefficient`.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rational")]
    pub printed_coefficient: Option<Rational>,
}

mod opt_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        r.as_ref().map(crate::exact::rat_to_string).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        match s {
            None => Ok(None),
            Some(s) => crate::exact::parse_rational(&s)
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom("bad rational")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetEquation {
    /// Sorted free indices (length = free rank).
    pub free: Vec<usize>,
    /// Chain membership for stationary systems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<Parity>,
    pub terms: Vec<DetTerm>,
}

impl DetEquation {
    pub fn free_rank(&self) -> usize {
        self.free.len()
    }

    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.terms.iter().map(|t| t.rank).collect();
        r.sort_unstable();
        r.dedup();
        r
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetSystem {
    pub order: usize,
    pub dim: usize,
    pub stationary: bool,
    pub equations: Vec<DetEquation>,
}

impl DetSystem {
    /// Equations of one stationary chain.
    pub fn chain(&self, parity: Parity) -> Vec<&DetEquation> {
        self.equations
            .iter()
            .filter(|e| e.chain == Some(parity))
            .collect()
    }

    /// Set of tensor ranks referenced by a collection of equations.
    pub fn referenced_ranks<'a>(eqs: impl IntoIterator<Item = &'a DetEquation>) -> Vec<usize> {
        let mut r: Vec<usize> = eqs.into_iter().flat_map(|e| e.ranks()).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    pub fn has_time_derivatives(&self) -> bool {
        self.equations
            .iter()
            .flat_map(|e| &e.terms)
            .any(|t| t.kind == TermKind::TimeDerivative)
    }
}

fn binom(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let mut acc: i64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i64 / (i + 1) as i64;
    }
    acc
}

/// Sign and magnitude of the potential term coupling rank `k` into free rank `j`.
fn potential_coefficient(k: usize, j: usize) -> (Rational, Rational) {
    let s = k - j;
    debug_assert!(s % 2 == 1);
    let sign: i64 = if ((s + 1) / 2) % 2 == 0 { 1 } else { -1 };
    let b = binom(k, j);
    (rat_int(4 * sign * b), rat_int(2 * sign * b))
}

/// Generate the determining system for order `n` in `m` spatial dimensions.
/// `n = 0` gives the trivial system of a scalar multiplier.
pub fn generate_det_system(n: usize, m: usize, stationary: bool) -> DetSystem {
    assert!(m >= 1, "dimension must be positive");
    let mut equations = Vec::new();
    for j in 0..=n + 1 {
        for free in sorted_multi_indices(m, j) {
            let mut terms = Vec::new();
            if j <= n && !stationary {
                terms.push(DetTerm {
                    coefficient: rat_int(2),
                    mass_power: 0,
                    rank: j,
                    kind: TermKind::TimeDerivative,
                    printed_coefficient: None,
                });
            }
            if j >= 1 {
                terms.push(DetTerm {
                    coefficient: Rational::one(),
                    mass_power: if stationary { 0 } else { -1 },
                    rank: j - 1,
                    kind: TermKind::SymGradient,
                    printed_coefficient: None,
                });
            }
            for k in (j + 1..=n).filter(|k| (k - j) % 2 == 1) {
                let (c, printed) = potential_coefficient(k, j);
                terms.push(DetTerm {
                    coefficient: c,
                    mass_power: if stationary { 1 } else { 0 },
                    rank: k,
                    kind: TermKind::PotentialContraction { order: k - j },
                    printed_coefficient: Some(printed),
                });
            }
            if terms.is_empty() {
                continue;
            }
            let chain = stationary.then(|| Parity::of(j + 1));
            equations.push(DetEquation { free, chain, terms });
        }
    }
    DetSystem {
        order: n,
        dim: m,
        stationary,
        equations,
    }
}

/// Full (not necessarily symmetric) rank-`j` tensor over all ordered index tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub rank: usize,
    pub dim: usize,
    pub comps: BTreeMap<Vec<usize>, LaurentPoly>,
}

impl Tensor {
    pub fn from_symmetric(k: &SymTensorField) -> Tensor {
        let mut comps = BTreeMap::new();
        for idx in all_tuples(k.dim(), k.rank()) {
            comps.insert(idx.clone(), k.get(&idx).clone());
        }
        Tensor {
            rank: k.rank(),
            dim: k.dim(),
            comps,
        }
    }

    /// `T^{a_1..a_j b} = ∂_b K^{a_1..a_j}`.
    pub fn gradient(k: &SymTensorField) -> Tensor {
        let mut comps = BTreeMap::new();
        for idx in all_tuples(k.dim(), k.rank() + 1) {
            let (b, rest) = idx.split_last().unwrap();
            comps.insert(idx.clone(), k.get(rest).diff(*b, 1));
        }
        Tensor {
            rank: k.rank() + 1,
            dim: k.dim(),
            comps,
        }
    }
}

fn all_tuples(dim: usize, rank: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..rank {
        out = out
            .into_iter()
            .flat_map(|t| {
                (1..=dim).map(move |a| {
                    let mut n = t.clone();
                    n.push(a);
                    n
                })
            })
            .collect();
    }
    out
}

fn distinct_permutations(idx: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = all_tuples_perm(idx);
    out.sort();
    out.dedup();
    out
}

fn all_tuples_perm(idx: &[usize]) -> Vec<Vec<usize>> {
    if idx.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..idx.len() {
        let mut rest = idx.to_vec();
        let a = rest.remove(i);
        for mut p in all_tuples_perm(&rest) {
            p.insert(0, a);
            out.push(p);
        }
    }
    out
}

/// Full symmetrization as the average over index permutations.
pub fn symmetrize(t: &Tensor) -> SymTensorField {
    let mut out = SymTensorField::zero(t.rank, t.dim);
    let nv = t.dim + 1;
    for idx in sorted_multi_indices(t.dim, t.rank) {
        let perms = distinct_permutations(&idx);
        let mut acc = LaurentPoly::zero(nv);
        for p in &perms {
            acc = &acc + &t.comps[p];
        }
        let avg = acc.scale_rational(&Rational::new(1.into(), (perms.len() as i64).into()));
        out.set(&idx, avg);
    }
    out
}

/// `∂^{(b}K^{a_1..a_j)}` with the averaging convention.
pub fn sym_gradient(k: &SymTensorField) -> SymTensorField {
    symmetrize(&Tensor::gradient(k))
}

/// Per-rank polynomial degree bounds of an ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankBounds {
    pub x_degree: u32,
    pub t_degree: u32,
}

/// One unknown: the coefficient of `t^{k} x^{μ}` in component `comp` of `K_rank`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unknown {
    pub rank: usize,
    pub comp: Vec<usize>,
    pub mono: Monomial,
}

/// Polynomial ansatz for tensors of ranks `0..bounds.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ansatz {
    pub dim: usize,
    pub bounds: Vec<RankBounds>,
}

fn x_monomials(dim: usize, max_deg: u32) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    let mut cur = vec![0i32; dim];
    fn rec(slot: usize, left: u32, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if slot == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[slot] = e as i32;
            rec(slot + 1, left - e, cur, out);
        }
        cur[slot] = 0;
    }
    rec(0, max_deg, &mut cur, &mut out);
    out
}

impl Ansatz {
    pub fn uniform(dim: usize, max_rank: usize, b: RankBounds) -> Self {
        Ansatz {
            dim,
            bounds: vec![b; max_rank + 1],
        }
    }

    pub fn max_rank(&self) -> usize {
        self.bounds.len() - 1
    }

    /// Deterministic enumeration of unknowns: rank, then component, then
    /// monomial in graded-lex order.
    pub fn unknowns(&self) -> Vec<Unknown> {
        let mut out = Vec::new();
        for (rank, b) in self.bounds.iter().enumerate() {
            let mut monos: Vec<Monomial> = Vec::new();
            for tk in 0..=b.t_degree {
                for xm in x_monomials(self.dim, b.x_degree) {
                    let mut e = vec![tk as i32];
                    e.extend(xm);
                    monos.push(Monomial(e));
                }
            }
            monos.sort();
            for comp in sorted_multi_indices(self.dim, rank) {
                for mono in &monos {
                    out.push(Unknown {
                        rank,
                        comp: comp.clone(),
                        mono: mono.clone(),
                    });
                }
            }
        }
        out
    }

    /// Tensors `K_0..K_n` for a coefficient vector over [`Ansatz::unknowns`].
    pub fn tensors(&self, coeffs: &[GaussianRational]) -> Vec<SymTensorField> {
        let unknowns = self.unknowns();
        assert_eq!(unknowns.len(), coeffs.len());
        let nv = self.dim + 1;
        let mut ts: Vec<SymTensorField> = (0..self.bounds.len())
            .map(|r| SymTensorField::zero(r, self.dim))
            .collect();
        for (u, c) in unknowns.iter().zip(coeffs) {
            if c.is_zero() {
                continue;
            }
            let cur = ts[u.rank].get(&u.comp).clone();
            let add = LaurentPoly::term(nv, u.mono.clone(), c.clone());
            ts[u.rank].set(&u.comp, &cur + &add);
        }
        ts
    }
}

fn mass_factor(mass: &Rational, power: i32) -> Rational {
    let mut f = Rational::one();
    for _ in 0..power.unsigned_abs() {
        f = if power > 0 { f * mass } else { f / mass };
    }
    f
}

/// Multiset difference `c ∖ a` if `a ⊆ c`.
fn multiset_minus(c: &[usize], a: &[usize]) -> Option<Vec<usize>> {
    let mut rest = c.to_vec();
    for x in a {
        let pos = rest.iter().position(|y| y == x)?;
        rest.remove(pos);
    }
    Some(rest)
}

/// Residual polynomial of one equation for a tensor set given by a single
/// unknown with unit coefficient.
fn equation_residual_for_unknown(
    eq: &DetEquation,
    u: &Unknown,
    v: &LaurentPoly,
    mass: &Rational,
) -> LaurentPoly {
    let nv = v.nvars();
    let j = eq.free_rank();
    let basis = LaurentPoly::term(nv, u.mono.clone(), GaussianRational::one());
    let mut acc = LaurentPoly::zero(nv);
    for term in eq.terms.iter().filter(|t| t.rank == u.rank) {
        let coeff = &term.coefficient * mass_factor(mass, term.mass_power);
        let contribution = match term.kind {
            TermKind::TimeDerivative => {
                if eq.free == u.comp {
                    basis.diff(0, 1)
                } else {
                    continue;
                }
            }
            TermKind::SymGradient => {
                let mut s = LaurentPoly::zero(nv);
                for i in 0..j {
                    let mut rest = eq.free.clone();
                    let a = rest.remove(i);
                    if rest == u.comp {
                        s = &s + &basis.diff(a, 1);
                    }
                }
                s.scale_rational(&Rational::new(1.into(), (j as i64).into()))
            }
            TermKind::PotentialContraction { .. } => match multiset_minus(&u.comp, &eq.free) {
                Some(beta) => {
                    let mut alpha = vec![0u32; nv];
                    for &b in &beta {
                        alpha[b] += 1;
                    }
                    (&basis * &v.diff_multi(&alpha))
                        .scale_rational(&rat_int(multiplicity(&beta)))
                }
                None => continue,
            },
        };
        acc = &acc + &contribution.scale_rational(&coeff);
    }
    acc
}

fn check_potential(v: &LaurentPoly, m: usize) -> Result<(), DetError> {
    if v.nvars() != m + 1 {
        return Err(DetError::PotentialArity {
            got: v.nvars(),
            want: m + 1,
        });
    }
    if v.depends_on(0) {
        return Err(DetError::TimeDependentPotential);
    }
    Ok(())
}

/// Linear system over the ansatz unknowns whose nullspace parametrizes all
/// symmetry operators within the ansatz.
pub fn instantiate(
    sys: &DetSystem,
    ansatz: &Ansatz,
    v: &LaurentPoly,
    mass: &Rational,
) -> Result<RationalMatrix, DetError> {
    check_potential(v, sys.dim)?;
    if ansatz.max_rank() < sys.order {
        return Err(DetError::AnsatzRanks {
            got: ansatz.max_rank(),
            need: sys.order,
        });
    }
    let unknowns = ansatz.unknowns();
    let mut cols = Vec::with_capacity(unknowns.len());
    for u in &unknowns {
        let mut entries = Vec::new();
        for (ei, eq) in sys.equations.iter().enumerate() {
            let r = equation_residual_for_unknown(eq, u, v, mass);
            for (mono, c) in r.terms() {
                entries.push(((ei, mono.clone()), c.clone()));
            }
        }
        cols.push(entries);
    }
    Ok(build_matrix(cols, unknowns.len()))
}

fn build_matrix<K: Ord>(cols: Vec<Vec<(K, GaussianRational)>>, ncols: usize) -> RationalMatrix {
    let mut rows: BTreeMap<K, Vec<(usize, GaussianRational)>> = BTreeMap::new();
    for (c, entries) in cols.into_iter().enumerate() {
        for (k, v) in entries {
            rows.entry(k).or_default().push((c, v));
        }
    }
    let mut m = RationalMatrix::new(0, ncols);
    for (_, r) in rows {
        m.push_row(r);
    }
    m
}

/// Independent route: build `Q` from each unknown with the nested
/// anticommutator, commute with `L` and equate every normal-ordered
/// coefficient to zero.
pub fn oracle_system(
    n: usize,
    m: usize,
    ansatz: &Ansatz,
    v: &LaurentPoly,
    mass: &Rational,
) -> Result<RationalMatrix, DetError> {
    check_potential(v, m)?;
    if ansatz.max_rank() < n {
        return Err(DetError::AnsatzRanks {
            got: ansatz.max_rank(),
            need: n,
        });
    }
    let l = build_l(m, mass, v)?;
    let nv = m + 1;
    let unknowns = ansatz.unknowns();
    let mut cols = Vec::with_capacity(unknowns.len());
    for u in &unknowns {
        let mut k = SymTensorField::zero(u.rank, m);
        k.set(&u.comp, LaurentPoly::term(nv, u.mono.clone(), GaussianRational::one()));
        let q = nested_anticommutator(&k).scale(&GaussianRational::minus_i_pow(u.rank));
        let r = commutator_with_l(&l, &q)?;
        let entries: Vec<((DerivIndex, Monomial), GaussianRational)> = r.flatten().into_iter().collect();
        cols.push(entries);
    }
    Ok(build_matrix(cols, unknowns.len()))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpaceComparison {
    pub unknowns: usize,
    pub rank_a: usize,
    pub rank_b: usize,
    pub nullity_a: usize,
    pub nullity_b: usize,
    pub pass: bool,
    /// Nullspace vector of one side that the other side does not annihilate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Witness {
    /// `"a"` if the vector lies in null(A) but not null(B), `"b"` otherwise.
    pub from: String,
    pub vector: Vec<GaussianRational>,
}

/// Rank equality plus mutual containment of nullspaces.
pub fn compare_solution_spaces(
    a: &RationalMatrix,
    b: &RationalMatrix,
) -> Result<SpaceComparison, DetError> {
    if a.cols() != b.cols() {
        return Err(DetError::UnknownCountMismatch {
            left: a.cols(),
            right: b.cols(),
        });
    }
    let (rank_a, null_a) = a.rref_nullspace();
    let (rank_b, null_b) = b.rref_nullspace();
    let mut witness = null_a
        .iter()
        .find(|v| !b.annihilates(v))
        .map(|v| Witness {
            from: "a".into(),
            vector: v.clone(),
        });
    if witness.is_none() {
        witness = null_b.iter().find(|v| !a.annihilates(v)).map(|v| Witness {
            from: "b".into(),
            vector: v.clone(),
        });
    }
    Ok(SpaceComparison {
        unknowns: a.cols(),
        rank_a,
        rank_b,
        nullity_a: null_a.len(),
        nullity_b: null_b.len(),
        pass: rank_a == rank_b && witness.is_none(),
        witness,
    })
}

/// Seeded dense polynomial in `x_1..x_m` of total degree `deg` with small
/// random rational coefficients (numerators in [-5, 5], denominators 1..4).
pub fn random_potential(m: usize, deg: u32, seed: u64) -> LaurentPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for xm in x_monomials(m, deg) {
        let mut e = vec![0];
        e.extend(xm);
        let num: i64 = rng.gen_range(-5..=5);
        let den: i64 = rng.gen_range(1..=4);
        let num = if num == 0 { 1 } else { num };
        terms.push((Monomial(e), GaussianRational::real(rat(num, den))));
    }
    LaurentPoly::from_terms(m + 1, terms)
}

impl fmt::Display for DetTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.coefficient.is_negative() { "-" } else { "+" };
        let mag = crate::exact::rat_to_string(&self.coefficient.abs());
        let mass = match self.mass_power {
            0 => String::new(),
            1 => "M*".into(),
            p => format!("M^{p}*"),
        };
        let body = match &self.kind {
            TermKind::TimeDerivative => format!("dt K{}", self.rank),
            TermKind::SymGradient => format!("Sym grad K{}", self.rank),
            TermKind::PotentialContraction { order } => {
                format!("K{}.grad^{}V", self.rank, order)
            }
        };
        write!(f, "{sign} {mag}*{mass}{body}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nv(m: usize) -> usize {
        m + 1
    }

    #[test]
    fn first_order_one_dim_has_three_equations() {
        let sys = generate_det_system(1, 1, false);
        assert_eq!(sys.equations.len(), 3);
        // j = 0: 2 K̇ - 4 K^x V'
        let e0 = &sys.equations[0];
        assert_eq!(e0.terms.len(), 2);
        assert_eq!(e0.terms[0].kind, TermKind::TimeDerivative);
        assert_eq!(e0.terms[1].coefficient, rat_int(-4));
        assert_eq!(e0.terms[1].printed_coefficient, Some(rat_int(-2)));
        // j = 1: 2 K̇^x + (1/M) ∂K
        let e1 = &sys.equations[1];
        assert_eq!(e1.terms[1].kind, TermKind::SymGradient);
        assert_eq!(e1.terms[1].mass_power, -1);
        // j = 2: ∂ K^x = 0
        let e2 = &sys.equations[2];
        assert_eq!(e2.terms.len(), 1);
        assert_eq!(e2.terms[0].rank, 1);
    }

    #[test]
    fn third_order_chain_matches_h_equations() {
        // V = U/2, M = 1: potential terms -12 h3 V' = -6 h3 U', -8 h2 V' = -4 h2 U'.
        let sys = generate_det_system(3, 1, false);
        assert_eq!(sys.equations.len(), 5);
        let j2 = &sys.equations[2];
        let pot: Vec<_> = j2.terms.iter().filter(|t| t.rank == 3).collect();
        assert_eq!(pot[0].coefficient, rat_int(-12));
        let j0 = &sys.equations[0];
        let c: Vec<(usize, Rational)> = j0
            .terms
            .iter()
            .filter(|t| matches!(t.kind, TermKind::PotentialContraction { .. }))
            .map(|t| (t.rank, t.coefficient.clone()))
            .collect();
        assert_eq!(c, vec![(1, rat_int(-4)), (3, rat_int(4))]);
    }

    #[test]
    fn stationary_chains_are_disjoint() {
        for n in 1..=4 {
            for m in 1..=2 {
                let sys = generate_det_system(n, m, true);
                assert!(!sys.has_time_derivatives());
                let even = DetSystem::referenced_ranks(sys.chain(Parity::Even));
                let odd = DetSystem::referenced_ranks(sys.chain(Parity::Odd));
                assert!(even.iter().all(|r| r % 2 == 0), "{even:?}");
                assert!(odd.iter().all(|r| r % 2 == 1), "{odd:?}");
            }
        }
        let sys = generate_det_system(2, 2, true);
        assert_eq!(DetSystem::referenced_ranks(sys.chain(Parity::Even)), vec![0, 2]);
    }

    #[test]
    fn ranks_stay_in_range() {
        for n in 1..=5 {
            let sys = generate_det_system(n, 2, false);
            for e in &sys.equations {
                for t in &e.terms {
                    assert!(t.rank <= n);
                }
            }
        }
    }

    #[test]
    fn symmetrize_examples() {
        // m = 1: trivial average.
        let mut k = SymTensorField::zero(1, 1);
        k.set(&[1], LaurentPoly::var(2, 1).pow(2));
        let s = sym_gradient(&k);
        assert_eq!(s.get(&[1, 1]), &LaurentPoly::var(2, 1).scale(&GaussianRational::from_int(2)));

        // m = 2, K = (x2, 0): component (1,2) is 1/2.
        let mut k = SymTensorField::zero(1, 2);
        k.set(&[1], LaurentPoly::var(nv(2), 2));
        let s = sym_gradient(&k);
        assert_eq!(s.get(&[1, 2]), &LaurentPoly::constant(3, GaussianRational::from_ratio(1, 2)));
        assert_eq!(s.get(&[2, 1]), s.get(&[1, 2]));

        // Rotation Killing vector.
        let mut k = SymTensorField::zero(1, 2);
        k.set(&[1], LaurentPoly::var(3, 2));
        k.set(&[2], -LaurentPoly::var(3, 1));
        assert!(sym_gradient(&k).is_zero());
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let mut t = Tensor {
            rank: 2,
            dim: 2,
            comps: BTreeMap::new(),
        };
        for (i, idx) in all_tuples(2, 2).into_iter().enumerate() {
            t.comps.insert(
                idx,
                LaurentPoly::var(3, i % 3).scale(&GaussianRational::from_int(i as i64 + 1)),
            );
        }
        let once = symmetrize(&t);
        let twice = symmetrize(&Tensor::from_symmetric(&once));
        assert_eq!(once, twice);
    }

    #[test]
    fn first_order_free_nullspace_dimension() {
        let sys = generate_det_system(1, 1, false);
        let ans = Ansatz::uniform(1, 1, RankBounds { x_degree: 2, t_degree: 2 });
        let v = LaurentPoly::zero(2);
        let a = instantiate(&sys, &ans, &v, &Rational::one()).unwrap();
        let (_, ns) = a.rref_nullspace();
        assert_eq!(ns.len(), 3);
        let b = oracle_system(1, 1, &ans, &v, &Rational::one()).unwrap();
        assert!(compare_solution_spaces(&a, &b).unwrap().pass);
    }

    #[test]
    fn linear_potential_keeps_accelerated_translation() {
        let sys = generate_det_system(1, 1, false);
        let ans = Ansatz::uniform(1, 1, RankBounds { x_degree: 2, t_degree: 2 });
        let v = LaurentPoly::var(2, 1);
        let a = instantiate(&sys, &ans, &v, &Rational::one()).unwrap();
        let b = oracle_system(1, 1, &ans, &v, &Rational::one()).unwrap();
        let cmp = compare_solution_spaces(&a, &b).unwrap();
        assert!(cmp.pass);
        // identity, accelerated translation p + t (force = -V' = -1), and boost-type t p + ...
        assert_eq!(cmp.nullity_a, 3);
    }

    #[test]
    fn higher_order_matches_oracle_on_random_potential() {
        for &(n, m, deg, xd) in &[(2usize, 1usize, 3u32, 3u32), (3, 1, 3, 4), (2, 2, 2, 2)] {
            let sys = generate_det_system(n, m, false);
            let ans = Ansatz::uniform(m, n, RankBounds { x_degree: xd, t_degree: 2 });
            let v = random_potential(m, deg, 7 + n as u64);
            let mass = rat(3, 2);
            let a = instantiate(&sys, &ans, &v, &mass).unwrap();
            let b = oracle_system(n, m, &ans, &v, &mass).unwrap();
            let cmp = compare_solution_spaces(&a, &b).unwrap();
            assert!(cmp.pass, "n={n} m={m}: {cmp:?}");
        }
    }

    #[test]
    fn zero_bounds_keep_identity() {
        let sys = generate_det_system(2, 1, false);
        let ans = Ansatz::uniform(1, 2, RankBounds { x_degree: 0, t_degree: 0 });
        let a = instantiate(&sys, &ans, &LaurentPoly::zero(2), &Rational::one()).unwrap();
        let (_, ns) = a.rref_nullspace();
        assert!(!ns.is_empty());
    }

    #[test]
    fn compare_detects_mismatch() {
        let z = RationalMatrix::new(2, 2);
        let id = RationalMatrix::identity(2);
        let cmp = compare_solution_spaces(&z, &id).unwrap();
        assert!(!cmp.pass);
        assert!(cmp.witness.is_some());
        assert!(compare_solution_spaces(&id, &id).unwrap().pass);
        assert!(matches!(
            compare_solution_spaces(&id, &RationalMatrix::identity(3)),
            Err(DetError::UnknownCountMismatch { .. })
        ));
    }

    #[test]
    fn time_dependent_potential_rejected() {
        let sys = generate_det_system(1, 1, false);
        let ans = Ansatz::uniform(1, 1, RankBounds { x_degree: 1, t_degree: 1 });
        let v = LaurentPoly::var(2, 0);
        assert_eq!(
            instantiate(&sys, &ans, &v, &Rational::one()),
            Err(DetError::TimeDependentPotential)
        );
    }
}
