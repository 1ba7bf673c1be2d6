//! Closed-form problem descriptions shared by the experiment labs and the CLI.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::LabError;
use crate::geometry::{Expr, PeriodicGrid, ScalarField, StencilOrder, SymTensorExpr};
use crate::operators::{Family, OperatorSpec};
use crate::solver::{solve_pair, Background, PathSolution, ProblemSpec, SolveOptions};

/// Geometry, operator and background tensor of a problem on `T^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub dim: usize,
    /// Common period of every axis.
    pub period: f64,
    /// Points per axis.
    pub size: usize,
    pub metric: SymTensorExpr,
    pub chi: SymTensorExpr,
    #[serde(flatten)]
    pub family: Family,
    pub sigma: f64,
    #[serde(default)]
    pub order: StencilOrder,
}

impl Fixture {
    /// Flat unit torus, `g = I`, `χ = chi_scale · I`.
    pub fn flat(dim: usize, size: usize, family: Family, chi_scale: f64, sigma: f64) -> Self {
        Self {
            dim,
            period: 1.0,
            size,
            metric: SymTensorExpr::identity(dim),
            chi: SymTensorExpr::scalar(dim, chi_scale),
            family,
            sigma,
            order: StencilOrder::default(),
        }
    }

    pub fn with_size(&self, size: usize) -> Self {
        Self {
            size,
            ..self.clone()
        }
    }

    pub fn grid(&self) -> Result<PeriodicGrid<f64>, LabError> {
        Ok(PeriodicGrid::uniform(self.dim, self.size, self.period)?)
    }

    pub fn operator(&self) -> Result<OperatorSpec<f64>, LabError> {
        Ok(OperatorSpec::new(self.family, self.dim, self.sigma)?)
    }

    pub fn background(&self) -> Result<Arc<Background<f64>>, LabError> {
        let grid = self.grid()?;
        Ok(Arc::new(Background::from_exprs(
            self.operator()?,
            &grid,
            &self.metric,
            &self.chi,
            self.order,
        )?))
    }
}

/// A right-hand side `e^f`, optionally relative to `F(χ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhsExpr {
    pub expr: Expr,
    /// When set, the field is `F(χ) · expr`.
    #[serde(default)]
    pub times_f_chi: bool,
}

impl RhsExpr {
    pub fn new(expr: Expr) -> Self {
        Self {
            expr,
            times_f_chi: false,
        }
    }

    pub fn relative(expr: Expr) -> Self {
        Self {
            expr,
            times_f_chi: true,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(Expr::Const(value))
    }

    pub fn field(&self, bg: &Background<f64>) -> Result<ScalarField<f64>, LabError> {
        let grid = bg.grid();
        self.expr.validate(grid.dim())?;
        let periods = grid.periods().to_vec();
        let base = ScalarField::from_fn(grid, |x| self.expr.eval(x, &periods))?;
        Ok(if self.times_f_chi {
            base.zip_map(&bg.f_chi(), |a, b| a * b)
        } else {
            base
        })
    }
}

/// Solves the pair equation for `rhs` on `bg`.
pub fn solve_rhs(
    bg: &Arc<Background<f64>>,
    rhs: ScalarField<f64>,
    opts: &SolveOptions,
) -> Result<PathSolution<f64>, LabError> {
    let prob = ProblemSpec::new(Arc::clone(bg), rhs)?;
    Ok(solve_pair(&prob, opts)?)
}
