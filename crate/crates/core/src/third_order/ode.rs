//! Adaptive Dormand–Prince 5(4) integration of the potential ODEs.

use serde::{Deserialize, Serialize};

use super::{Family, PotentialFamily, ThirdOrderError};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub tolerance: f64,
    /// Abort when `|U|` exceeds this bound.
    pub blowup: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            tolerance: 1e-13,
            blowup: 1e8,
            max_steps: 1_000_000,
        }
    }
}

/// Right-hand side of the first-order system for a family.
///
/// State layouts: `[U, U']` for W213 and P214, `[U, U', U'']` for E215 and
/// `[φ, U, U']` for E216.
pub(crate) fn rhs(family: Family, w: &[f64], x: f64, y: &[f64], dy: &mut [f64]) {
    match family {
        Family::W213 => {
            dy[0] = y[1];
            dy[1] = 3.0 * y[0] * y[0] - 3.0 * w[0];
        }
        Family::P214 => {
            dy[0] = y[1];
            dy[1] = 3.0 * y[0] * y[0] + 8.0 * w[0] * x;
        }
        Family::E215 => {
            dy[0] = y[1];
            dy[1] = y[2];
            dy[2] = 6.0 * y[0] * y[1] + 2.0 * w[0] * (x * y[1] + 2.0 * y[0]);
        }
        Family::E216 => {
            let (w4, w5) = (w[0], w[1]);
            dy[0] = y[1];
            dy[1] = y[2];
            dy[2] = 3.0 * y[1] * y[1]
                + 2.0 * w4 * (2.0 * x * y[0] + x * x * y[1])
                + w4 * w4 * x.powi(4) / 3.0
                + w5;
        }
    }
}

pub(crate) fn state_len(f: Family) -> usize {
    match f {
        Family::W213 | Family::P214 => 2,
        Family::E215 | Family::E216 => 3,
    }
}

/// Index of `U` in the state vector.
pub(crate) fn u_slot(f: Family) -> usize {
    match f {
        Family::E216 => 1,
        _ => 0,
    }
}

/// Tabulated numeric solution with per-step local error estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSolution {
    pub family: PotentialFamily,
    pub options: OdeOptions,
    pub grid: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Local error estimate of the step ending at each node (0 at the start).
    pub local_error: Vec<f64>,
}

struct Stepper {
    family: Family,
    w: Vec<f64>,
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

impl Stepper {
    fn new(fam: &PotentialFamily, n: usize) -> Self {
        Stepper {
            family: fam.family,
            w: fam.omegas_f64(),
            k: vec![vec![0.0; n]; 7],
            tmp: vec![0.0; n],
        }
    }

    /// One trial step; returns the 5th-order update and the embedded error vector.
    fn step(&mut self, x: f64, y: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
        let n = y.len();
        for s in 0..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += h * a * self.k[j][i];
                }
                self.tmp[i] = acc;
            }
            rhs(self.family, &self.w, x + C[s] * h, &self.tmp, &mut self.k[s]);
        }
        let mut y5 = vec![0.0; n];
        let mut err = vec![0.0; n];
        for i in 0..n {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for s in 0..7 {
                s5 += B5[s] * self.k[s][i];
                s4 += B4[s] * self.k[s][i];
            }
            y5[i] = y[i] + h * s5;
            err[i] = h * (s5 - s4);
        }
        (y5, err)
    }
}

fn error_norm(y: &[f64], y1: &[f64], err: &[f64], tol: f64) -> f64 {
    y.iter()
        .zip(y1)
        .zip(err)
        .map(|((a, b), e)| e.abs() / (tol + tol * a.abs().max(b.abs())))
        .fold(0.0, f64::max)
}

/// Integrate from `x0` to `x1` (either direction). Returns the visited nodes.
fn integrate_nodes(
    fam: &PotentialFamily,
    x0: f64,
    y0: &[f64],
    x1: f64,
    opts: &OdeOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>), ThirdOrderError> {
    let us = u_slot(fam.family);
    let mut st = Stepper::new(fam, y0.len());
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    let mut xs = vec![x0];
    let mut ys = vec![y0.to_vec()];
    let mut errs = vec![0.0];
    if span == 0.0 {
        return Ok((xs, ys, errs));
    }
    let mut x = x0;
    let mut y = y0.to_vec();
    let mut h = (span * 1e-3).max(1e-12) * dir;
    let mut steps = 0usize;
    while (x1 - x) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(ThirdOrderError::StepLimit { x });
        }
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        let (y5, e) = st.step(x, &y, h);
        let norm = error_norm(&y, &y5, &e, opts.tolerance);
        if norm <= 1.0 {
            let last_safe = x;
            x = if (x + h - x1) * dir >= 0.0 { x1 } else { x + h };
            y = y5;
            if !y[us].is_finite() || y[us].abs() > opts.blowup {
                return Err(ThirdOrderError::BlowUp {
                    last_safe,
                    bound: opts.blowup,
                });
            }
            xs.push(x);
            ys.push(y.clone());
            errs.push(e.iter().fold(0.0, |m, v| m.max(v.abs())));
        }
        let factor = if norm.is_finite() {
            (0.9 * norm.max(1e-10).powf(-0.2)).clamp(0.2, 5.0)
        } else {
            0.2
        };
        h *= factor;
        if h.abs() < 1e-14 * x.abs().max(1.0) {
            return Err(ThirdOrderError::BlowUp {
                last_safe: x,
                bound: opts.blowup,
            });
        }
    }
    Ok((xs, ys, errs))
}

/// Solve the family's initial-value problem on `[x0, x1]` with data at `x0`.
pub fn ode_integrate(
    fam: &PotentialFamily,
    interval: (f64, f64),
    initial: &[f64],
    opts: &OdeOptions,
) -> Result<OdeSolution, ThirdOrderError> {
    fam.check()?;
    let need = state_len(fam.family);
    if initial.len() != need {
        return Err(ThirdOrderError::InitialData {
            expected: need,
            got: initial.len(),
        });
    }
    let (x0, x1) = interval;
    if !(x1 > x0) || !x0.is_finite() || !x1.is_finite() {
        return Err(ThirdOrderError::Interval { from: x0, to: x1 });
    }
    let (grid, states, local_error) = integrate_nodes(fam, x0, initial, x1, opts)?;
    Ok(OdeSolution {
        family: fam.clone(),
        options: *opts,
        grid,
        states,
        local_error,
    })
}

impl OdeSolution {
    pub fn interval(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    pub fn max_local_error(&self) -> f64 {
        self.local_error.iter().cloned().fold(0.0, f64::max)
    }

    /// State at `x`, obtained by re-integrating from the nearest node at or
    /// below `x`.
    pub fn state_at(&self, x: f64) -> Result<Vec<f64>, ThirdOrderError> {
        let (lo, hi) = self.interval();
        if x < lo || x > hi || x.is_nan() {
            return Err(ThirdOrderError::OutOfRange { x, lo, hi });
        }
        let i = match self.grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
            Ok(i) => return Ok(self.states[i].clone()),
            Err(i) => i - 1,
        };
        let (_, ys, _) = integrate_nodes(&self.family, self.grid[i], &self.states[i], x, &self.options)?;
        Ok(ys.last().unwrap().clone())
    }

    pub fn u(&self, x: f64) -> Result<f64, ThirdOrderError> {
        Ok(self.state_at(x)?[u_slot(self.family.family)])
    }

    pub fn u_prime(&self, x: f64) -> Result<f64, ThirdOrderError> {
        Ok(self.state_at(x)?[u_slot(self.family.family) + 1])
    }

    /// CSV with columns `x,U,dU` (plus `phi` for E216).
    pub fn to_csv(&self) -> String {
        let us = u_slot(self.family.family);
        let with_phi = self.family.family == Family::E216;
        let mut out = String::from(if with_phi { "x,U,dU,phi\n" } else { "x,U,dU\n" });
        for (x, y) in self.grid.iter().zip(&self.states) {
            if with_phi {
                out.push_str(&format!("{x:e},{:e},{:e},{:e}\n", y[us], y[us + 1], y[0]));
            } else {
                out.push_str(&format!("{x:e},{:e},{:e}\n", y[us], y[us + 1]));
            }
        }
        out
    }
}
