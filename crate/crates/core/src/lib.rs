//! Numerical laboratory for Hessian-type equations `f(λ(χ + ∇²φ)) = e^b e^f`
//! on a flat-chart torus with variable metric.
//!
//! The geometry, operator, solver and ABP layers are generic over the
//! floating-point type ([`Real`]); the experiment labs work in `f64`.

pub mod abp;
pub mod error;
pub mod estimates;
pub mod fixture;
pub mod geometry;
pub mod gradient;
pub mod linalg;
pub mod operators;
pub mod scalar;
pub mod solver;
pub mod weak;

pub use error::{AbpError, GeometryError, LabError, OperatorError, SolverError};
pub use scalar::Real;

pub type Grid = geometry::PeriodicGrid<f64>;
pub type Field = geometry::ScalarField<f64>;
pub type TensorField = geometry::SymTensorField<f64>;
pub type Metric = geometry::MetricField<f64>;
