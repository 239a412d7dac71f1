//! Shared fixtures for the criterion benchmarks.

use num_traits::One;
use symop_core::det_eqs::{generate_det_system, instantiate, random_potential, Ansatz, DetSystem};
use symop_core::exact::{rat_int, LaurentPoly, RationalMatrix, Rational};
use symop_core::killing::ansatz_bounds;
use symop_core::third_order::{Family, PotentialFamily};

/// Determining system, ansatz and seeded cubic potential for `(n, m)`.
pub fn det_fixture(n: usize, m: usize) -> (DetSystem, Ansatz, LaurentPoly) {
    let sys = generate_det_system(n, m, false);
    let ansatz = Ansatz {
        dim: m,
        bounds: ansatz_bounds(n, m, 0),
    };
    (sys, ansatz, random_potential(m, 3, 7))
}

/// The instantiated linear system for `(n, m)` with zero potential.
pub fn free_matrix(n: usize, m: usize) -> RationalMatrix {
    let (sys, ansatz, _) = det_fixture(n, m);
    instantiate(&sys, &ansatz, &LaurentPoly::zero(m + 1), &Rational::one()).expect("fixture instantiates")
}

pub fn painleve() -> PotentialFamily {
    PotentialFamily::new(Family::P214, vec![rat_int(1)]).expect("valid family")
}
