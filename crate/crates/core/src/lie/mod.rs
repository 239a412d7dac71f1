//! Lie point symmetries of the nonlinear Schrödinger equation
//! `iψ_t + Δψ + F(ψ, ψ*) = 0`, checked through the second prolongation at
//! random on-shell jet points.

use thiserror::Error;

pub mod catalog;
pub mod expr;
pub mod parse;
pub mod prolong;

pub use catalog::{
    catalog_lookup, resolve, Catalog, FieldSpec, NonlinearitySpec, RowRecord, RowRequest, ThetaBinding, VectorFieldSpec,
};
pub use expr::{Expr, FieldKind, Var};
pub use parse::parse_expr;
pub use prolong::{
    check_request, check_row, default_sweep_cases, form_verdict, negative_sweep, prolong_residual, CheckOptions,
    EquationForm, FieldResult, FormVerdict, JetPoint, RowReport, SweepCase, SweepOutcome, SweepReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("no registered derivative for {0}")]
    UnregisteredDerivative(String),
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("coordinate x{0} out of range")]
    Dimension(usize),
    #[error("unknown row `{0}`")]
    UnknownRow(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter constraint violated: {0}")]
    Constraint(String),
    #[error("exponent must be a real constant, got `{0}`")]
    NonConstantExponent(String),
    #[error("spatial dimension must be at least 1")]
    ZeroDimension,
    #[error("field `{0}`: ξ must not depend on ψ")]
    PsiDependentXi(String),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("could not sample a jet point satisfying the row's domain after {0} attempts")]
    Sampling(usize),
}
