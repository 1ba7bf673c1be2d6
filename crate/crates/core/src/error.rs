use thiserror::Error;

/// Errors raised while building grids, metrics and fields.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("grid dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("axis {axis}: size {size} must be even and at least 8")]
    Size { axis: usize, size: usize },
    #[error("axis {axis}: period {period} must be positive and finite")]
    Period { axis: usize, period: f64 },
    #[error("metric is not positive definite at point {index} (grid coordinates {coords:?})")]
    NotPositiveDefinite { index: usize, coords: Vec<usize> },
    #[error("field value is not finite at point {index}")]
    NonFinite { index: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Errors raised by the eigenvalue operators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("eigenvalues {lambda:?} lie outside the cone (margin {margin})")]
    ConeViolation { lambda: Vec<f64>, margin: f64 },
    #[error("expected {expected} eigenvalues, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Errors raised by the Newton / continuity solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("cone violation at point {index} (grid coordinates {coords:?}): eigenvalues {lambda:?}, margin {margin}")]
    Cone {
        index: usize,
        coords: Vec<usize>,
        lambda: Vec<f64>,
        margin: f64,
    },
    #[error("Newton stagnated at t = {t} (damping floor reached); residual history {history:?}")]
    Stagnation { t: f64, history: Vec<f64> },
    #[error("Newton did not converge at t = {t} within {iterations} iterations; residual history {history:?}")]
    NonConvergence {
        t: f64,
        iterations: usize,
        history: Vec<f64>,
    },
    #[error("continuity path failed near t = {t} after {substeps} step bisections: {source}")]
    PathFailure {
        t: f64,
        substeps: usize,
        #[source]
        source: Box<SolverError>,
    },
    #[error("path bound violated at t = {t}: b_t = {b} exceeds max(f~ - f)^+ = {bound}")]
    PathBound { t: f64, b: f64, bound: f64 },
}

/// Errors raised by the ABP toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AbpError {
    #[error("ABP precondition violated: v(0) + eps = {center} + {epsilon} > boundary minimum {boundary_min}")]
    Precondition {
        center: f64,
        epsilon: f64,
        boundary_min: f64,
    },
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Errors raised by the experiment modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Abp(#[from] AbpError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("{name} violated: measured {measured} against bound {bound}")]
    BoundViolation {
        name: String,
        measured: f64,
        bound: f64,
    },
    #[error(
        "mollification level {level}: achieved L^nq error {achieved} does not meet target {target}"
    )]
    Schedule {
        level: usize,
        achieved: f64,
        target: f64,
    },
}
