//! Differential polynomials in the curvature vector and formal fields.

pub mod calculus;
pub mod equiv;
pub mod eval;
pub mod expr;
pub mod grid;
pub mod text;

pub use calculus::{
    divergence_normal_form, dx_pow, dxi, dxi_ext, euler_operator, substitute, formal_integrate, frechet_derivative,
    is_total_derivative, linearize, partial, total_derivative, total_derivative_bounded,
    variational_derivative, DEFAULT_MAX_ORDER,
};
pub use equiv::equivalent_mod_divergence;
pub use eval::{evaluate_on_grid, evaluate_vector_on_grid, Evaluator, FieldData};
pub use expr::{rat, Atom, Expression, Family, Jet, Monomial, Rational, VectorExpression};
pub use grid::{GridFunction, SpectralGrid};
pub use text::{parse, print};
