//! Pointwise evaluation of the determining equations.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ode::{rhs, u_slot, OdeSolution};
use super::{Branch, Family, PotentialFamily, ThirdOrderError};
use crate::exact::LaurentPoly;

/// `c·t^k·e^{rate·t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JetTerm {
    pub coef: Complex64,
    pub power: u32,
    pub rate: Complex64,
}

/// A function of `t` given as a finite sum of [`JetTerm`]s, with exact
/// derivatives of any order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeJet {
    pub terms: Vec<JetTerm>,
}

fn falling(k: u32, i: u32) -> f64 {
    (0..i).map(|j| (k - j) as f64).product()
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).map(|j| (n - j) as f64 / (j + 1) as f64).product()
}

impl TimeJet {
    pub fn zero() -> Self {
        TimeJet::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: f64, power: u32) -> Self {
        TimeJet {
            terms: vec![JetTerm {
                coef: Complex64::new(c, 0.0),
                power,
                rate: Complex64::new(0.0, 0.0),
            }],
        }
    }

    pub fn exponential(rate: Complex64) -> Self {
        TimeJet {
            terms: vec![JetTerm {
                coef: Complex64::new(1.0, 0.0),
                power: 0,
                rate,
            }],
        }
    }

    /// `d^r/dt^r` at `t`.
    pub fn deriv(&self, t: f64, r: u32) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            let e = (term.rate * t).exp();
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..=r.min(term.power) {
                let tp = t.powi((term.power - i) as i32);
                s += term.rate.powu(r - i) * (binom(r, i) * falling(term.power, i) * tp);
            }
            acc += term.coef * e * s;
        }
        acc
    }
}

/// Numeric time functions `a, b, c, d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeCoeffs {
    pub a: TimeJet,
    pub b: TimeJet,
    pub c: TimeJet,
    pub d: TimeJet,
}

/// Numeric coefficients; `h1_scale` multiplies `h₁` (1 for the true
/// operator, other values for perturbation tests).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericCoeffs {
    pub time: TimeCoeffs,
    pub h1_scale: f64,
}

/// Values of `φ, U, U', U'', U'''` at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialJet {
    pub phi: Option<f64>,
    pub u: f64,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

/// A numerically evaluable potential.
#[derive(Debug, Clone)]
pub enum NumericPotential {
    /// Integrated family solution; higher derivatives come from the ODE.
    Ode(OdeSolution),
    /// Closed-form Laurent potential in `(t, x)`, differentiated exactly.
    Laurent(LaurentPoly),
}

impl NumericPotential {
    pub fn jet(&self, x: f64) -> Result<PotentialJet, ThirdOrderError> {
        match self {
            NumericPotential::Laurent(u) => {
                let ev = |p: &LaurentPoly| -> Result<f64, ThirdOrderError> { Ok(p.eval_real(&[0.0, x])?.re) };
                let phi = match u.antiderivative(1) {
                    Ok(p) => Some(ev(&p)?),
                    Err(_) => None,
                };
                Ok(PotentialJet {
                    phi,
                    u: ev(u)?,
                    u1: ev(&u.diff(1, 1))?,
                    u2: ev(&u.diff(1, 2))?,
                    u3: ev(&u.diff(1, 3))?,
                })
            }
            NumericPotential::Ode(sol) => {
                let y = sol.state_at(x)?;
                let fam = &sol.family;
                let w = fam.omegas_f64();
                let mut dy = vec![0.0; y.len()];
                rhs(fam.family, &w, x, &y, &mut dy);
                let s = u_slot(fam.family);
                let (u, u1) = (y[s], y[s + 1]);
                let u2 = match fam.family {
                    Family::E215 => y[2],
                    _ => dy[s + 1],
                };
                let u3 = match fam.family {
                    Family::W213 => 6.0 * u * u1,
                    Family::P214 => 6.0 * u * u1 + 8.0 * w[0],
                    Family::E215 => dy[2],
                    Family::E216 => {
                        let w4 = w[0];
                        6.0 * u * u1 + 2.0 * w4 * (2.0 * y[0] + 4.0 * x * u + x * x * u1) + 4.0 / 3.0 * w4 * w4 * x.powi(3)
                    }
                };
                let phi = (fam.family == Family::E216).then(|| y[0]);
                Ok(PotentialJet { phi, u, u1, u2, u3 })
            }
        }
    }

    pub fn interval(&self) -> Option<(f64, f64)> {
        match self {
            NumericPotential::Ode(s) => Some(s.interval()),
            NumericPotential::Laurent(_) => None,
        }
    }
}

/// The five residuals at `(t, x)`, from the closed-form derivatives of the
/// coefficient formulas.
pub fn numeric_residuals(h: &NumericCoeffs, jet: &PotentialJet, t: f64, x: f64) -> Result<[Complex64; 5], ThirdOrderError> {
    let tc = &h.time;
    let a = |r| tc.a.deriv(t, r);
    let b = |r| tc.b.deriv(t, r);
    let c = |r| tc.c.deriv(t, r);
    let d = |r| tc.d.deriv(t, r);
    let s = h.h1_scale;
    let (u, u1, u3) = (jet.u, jet.u1, jet.u3);
    let (x2, x3) = (x * x, x * x * x);
    let phi = match jet.phi {
        Some(p) => p,
        None if a(1).norm() == 0.0 && a(2).norm() == 0.0 => 0.0,
        None => return Err(ThirdOrderError::MissingPhi),
    };

    let h2 = -2.0 * a(1) * x + b(0);
    let h2x = -2.0 * a(1);
    let h2t = -2.0 * a(2) * x + b(1);
    let h1x = s * (4.0 * a(2) * x - 2.0 * b(1) + 6.0 * a(0) * u1);
    let h1t = s * (2.0 * a(3) * x2 - 2.0 * b(2) * x + c(1) + 6.0 * a(1) * u);
    let h1 = s * (2.0 * a(2) * x2 - 2.0 * b(1) * x + c(0) + 6.0 * a(0) * u);
    let h0x = -4.0 * a(3) * x2 + 4.0 * b(2) * x - 2.0 * c(1) - 12.0 * a(1) * u + 4.0 * (b(0) - 2.0 * a(1) * x) * u1;
    let h0t = -4.0 / 3.0 * a(4) * x3 + 2.0 * b(3) * x2 - 2.0 * c(2) * x - 4.0 * a(2) * phi
        + 4.0 * (b(1) - 2.0 * a(2) * x) * u
        + d(1);
    let h3 = a(0);
    let h3t = a(1);

    Ok([
        Complex64::new(0.0, 0.0),
        h2x + 2.0 * h3t,
        2.0 * h2t + h1x - 6.0 * h3 * u1,
        2.0 * h1t + h0x - 4.0 * h2 * u1,
        h0t - h1 * u1 + h3 * u3,
    ])
}

/// Numeric time coefficients of the family's operator(s).
pub fn family_time_coeffs(fam: &PotentialFamily, branch: Option<Branch>) -> Result<TimeCoeffs, ThirdOrderError> {
    fam.check()?;
    let w = fam.omegas_f64();
    let z = TimeJet::zero;
    Ok(match fam.family {
        Family::W213 => TimeCoeffs { a: TimeJet::constant(1.0), b: z(), c: z(), d: z() },
        Family::P214 => TimeCoeffs { a: TimeJet::constant(1.0), b: z(), c: z(), d: TimeJet::monomial(-8.0 * w[0], 1) },
        Family::E215 => TimeCoeffs { a: TimeJet::constant(1.0), b: TimeJet::monomial(-w[0], 1), c: z(), d: z() },
        Family::E216 => {
            let om = fam.oscillator_frequency()?;
            let eps = branch.unwrap_or(Branch::Plus).sign() as f64;
            TimeCoeffs { a: TimeJet::exponential(Complex64::new(0.0, eps * om)), b: z(), c: z(), d: z() }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericVerifyConfig {
    pub t_range: (f64, f64),
    /// Defaults to the solution interval.
    pub x_range: Option<(f64, f64)>,
    pub nt: usize,
    pub nx: usize,
    pub tolerance: f64,
    pub h1_scale: f64,
}

impl Default for NumericVerifyConfig {
    fn default() -> Self {
        NumericVerifyConfig {
            t_range: (0.0, 1.0),
            x_range: None,
            nt: 20,
            nx: 20,
            tolerance: 1e-8,
            h1_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericReport {
    pub label: String,
    pub points: usize,
    pub max_residual: f64,
    pub max_per_equation: [f64; 5],
    pub tolerance: f64,
    pub pass: bool,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Evaluate the five residuals on an `nt × nx` grid for each operator of the
/// family (two for E216) and report the maximum absolute residual.
pub fn numeric_verify(
    fam: &PotentialFamily,
    potential: &NumericPotential,
    cfg: &NumericVerifyConfig,
) -> Result<Vec<NumericReport>, ThirdOrderError> {
    fam.check()?;
    let (x0, x1) = match (cfg.x_range, potential.interval()) {
        (Some(r), _) => r,
        (None, Some(r)) => r,
        (None, None) => (1.0, 2.0),
    };
    let xs = linspace(x0, x1, cfg.nx);
    let ts = linspace(cfg.t_range.0, cfg.t_range.1, cfg.nt);
    let jets: Vec<PotentialJet> = xs
        .par_iter()
        .map(|&x| potential.jet(x))
        .collect::<Result<_, _>>()?;
    let branches: Vec<(String, Option<Branch>)> = if fam.family == Family::E216 {
        vec![("Q+".into(), Some(Branch::Plus)), ("Q-".into(), Some(Branch::Minus))]
    } else {
        vec![("Q".into(), None)]
    };
    let mut out = Vec::new();
    for (label, br) in branches {
        let h = NumericCoeffs {
            time: family_time_coeffs(fam, br)?,
            h1_scale: cfg.h1_scale,
        };
        let mut per = [0.0f64; 5];
        for (x, jet) in xs.iter().zip(&jets) {
            for &t in &ts {
                let r = numeric_residuals(&h, jet, t, *x)?;
                for k in 0..5 {
                    per[k] = per[k].max(r[k].norm());
                }
            }
        }
        let max_residual = per.iter().cloned().fold(0.0, f64::max);
        out.push(NumericReport {
            label,
            points: xs.len() * ts.len(),
            max_residual,
            max_per_equation: per,
            tolerance: cfg.tolerance,
            pass: max_residual <= cfg.tolerance,
        });
    }
    Ok(out)
}
