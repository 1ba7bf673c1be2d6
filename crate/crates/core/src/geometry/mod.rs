//! Discrete flat-chart torus, metric fields, derivative stencils, closed-form
//! expressions and the Euclidean ball lattice.

pub mod ball;
pub mod diff;
pub mod expr;
pub mod fft;
pub mod field;
pub mod grid;
pub mod metric;
pub mod norms;

pub use ball::{mask_cutoff_rho, unit_ball_volume, BallDomain, BallField};
pub use diff::{Differentiator, StencilOrder};
pub use expr::{Expr, Jet, SymTensorExpr, TrigKind, TrigTerm};
pub use fft::GridFft;
pub use field::{ScalarField, SymTensorField};
pub use grid::PeriodicGrid;
pub use metric::{
    christoffels, covariant_hessian, exact_christoffels, exact_covariant_hessian,
    metric_compatibility_defect, tensor_field_from_expr, ChristoffelField, MetricField,
};
pub use norms::{integrate, lp_norm};
