//! Closed-form periodic expressions with exact first and second derivatives.
//!
//! Expressions are trigonometric-polynomial coefficient tables combined with
//! a handful of pointwise combinators. Evaluation carries a second-order jet
//! (value, gradient, Hessian) so manufactured right-hand sides and symbolic
//! Christoffel symbols are available without finite differences.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::GeometryError;

/// Sine or cosine factor of a trigonometric term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigKind {
    Sin,
    Cos,
}

/// `coeff · Π_a trig_a(2π modes[a] x_a / L_a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub coeff: f64,
    pub modes: Vec<i32>,
    pub kinds: Vec<TrigKind>,
}

impl TrigTerm {
    pub fn new(coeff: f64, modes: &[i32], kinds: &[TrigKind]) -> Self {
        Self {
            coeff,
            modes: modes.to_vec(),
            kinds: kinds.to_vec(),
        }
    }

    /// Constant term (all modes zero, cosine factors).
    pub fn constant(coeff: f64, dim: usize) -> Self {
        Self::new(coeff, &vec![0; dim], &vec![TrigKind::Cos; dim])
    }
}

/// Value, gradient and Hessian of a scalar function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            grad: [0.0; 3],
            hess: [[0.0; 3]; 3],
        }
    }

    fn add(&self, o: &Jet) -> Jet {
        let mut out = *self;
        out.value += o.value;
        for i in 0..3 {
            out.grad[i] += o.grad[i];
            for j in 0..3 {
                out.hess[i][j] += o.hess[i][j];
            }
        }
        out
    }

    fn mul(&self, o: &Jet) -> Jet {
        let mut out = Jet::constant(self.value * o.value);
        for i in 0..3 {
            out.grad[i] = self.grad[i] * o.value + self.value * o.grad[i];
            for j in 0..3 {
                out.hess[i][j] = self.hess[i][j] * o.value
                    + self.value * o.hess[i][j]
                    + self.grad[i] * o.grad[j]
                    + o.grad[i] * self.grad[j];
            }
        }
        out
    }

    fn scale(&self, s: f64) -> Jet {
        let mut out = *self;
        out.value *= s;
        for i in 0..3 {
            out.grad[i] *= s;
            for j in 0..3 {
                out.hess[i][j] *= s;
            }
        }
        out
    }

    /// Applies a scalar function `h` with derivatives `(h, h', h'')` evaluated at `self.value`.
    fn compose(&self, h: f64, dh: f64, d2h: f64) -> Jet {
        let mut out = Jet::constant(h);
        for i in 0..3 {
            out.grad[i] = dh * self.grad[i];
            for j in 0..3 {
                out.hess[i][j] = dh * self.hess[i][j] + d2h * self.grad[i] * self.grad[j];
            }
        }
        out
    }
}

/// A closed-form scalar expression on the chart torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Const(f64),
    Trig(Vec<TrigTerm>),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Max(Vec<Expr>),
    Min(Vec<Expr>),
    Abs(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
}

impl Expr {
    pub fn trig(terms: Vec<TrigTerm>) -> Self {
        Expr::Trig(terms)
    }

    /// Checks that every trigonometric term matches `dim`.
    pub fn validate(&self, dim: usize) -> Result<(), GeometryError> {
        match self {
            Expr::Const(c) => {
                if c.is_finite() {
                    Ok(())
                } else {
                    Err(GeometryError::Argument(format!("non-finite constant {c}")))
                }
            }
            Expr::Trig(terms) => {
                for t in terms {
                    if t.modes.len() != dim || t.kinds.len() != dim {
                        return Err(GeometryError::ShapeMismatch(format!(
                            "trig term has {} modes and {} kinds but dimension is {dim}",
                            t.modes.len(),
                            t.kinds.len()
                        )));
                    }
                    if !t.coeff.is_finite() {
                        return Err(GeometryError::Argument("non-finite coefficient".into()));
                    }
                }
                Ok(())
            }
            Expr::Sum(v) | Expr::Product(v) | Expr::Max(v) | Expr::Min(v) => {
                if v.is_empty() {
                    return Err(GeometryError::Argument("empty combinator".into()));
                }
                v.iter().try_for_each(|e| e.validate(dim))
            }
            Expr::Abs(e) | Expr::Exp(e) | Expr::Ln(e) => e.validate(dim),
        }
    }

    /// Largest absolute trigonometric mode per axis (band limit).
    pub fn max_mode(&self) -> i32 {
        match self {
            Expr::Const(_) => 0,
            Expr::Trig(terms) => terms
                .iter()
                .flat_map(|t| t.modes.iter().map(|m| m.abs()))
                .max()
                .unwrap_or(0),
            Expr::Sum(v) | Expr::Product(v) | Expr::Max(v) | Expr::Min(v) => {
                v.iter().map(Expr::max_mode).max().unwrap_or(0)
            }
            Expr::Abs(e) | Expr::Exp(e) | Expr::Ln(e) => e.max_mode(),
        }
    }

    /// True when the expression is smooth (no max/min/abs combinators).
    pub fn is_smooth(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Trig(_) => true,
            Expr::Sum(v) | Expr::Product(v) => v.iter().all(Expr::is_smooth),
            Expr::Max(_) | Expr::Min(_) | Expr::Abs(_) => false,
            Expr::Exp(e) | Expr::Ln(e) => e.is_smooth(),
        }
    }

    pub fn eval(&self, x: &[f64], periods: &[f64]) -> f64 {
        self.jet(x, periods).value
    }

    /// Second-order jet at `x`. Kinks (max/min/abs) take the one-sided branch.
    pub fn jet(&self, x: &[f64], periods: &[f64]) -> Jet {
        match self {
            Expr::Const(c) => Jet::constant(*c),
            Expr::Trig(terms) => {
                let mut acc = Jet::constant(0.0);
                for t in terms {
                    acc = acc.add(&trig_jet(t, x, periods));
                }
                acc
            }
            Expr::Sum(v) => v
                .iter()
                .fold(Jet::constant(0.0), |acc, e| acc.add(&e.jet(x, periods))),
            Expr::Product(v) => v
                .iter()
                .fold(Jet::constant(1.0), |acc, e| acc.mul(&e.jet(x, periods))),
            Expr::Max(v) => v
                .iter()
                .map(|e| e.jet(x, periods))
                .reduce(|a, b| if b.value > a.value { b } else { a })
                .expect("validated non-empty"),
            Expr::Min(v) => v
                .iter()
                .map(|e| e.jet(x, periods))
                .reduce(|a, b| if b.value < a.value { b } else { a })
                .expect("validated non-empty"),
            Expr::Abs(e) => {
                let j = e.jet(x, periods);
                if j.value < 0.0 {
                    j.scale(-1.0)
                } else {
                    j
                }
            }
            Expr::Exp(e) => {
                let j = e.jet(x, periods);
                let v = j.value.exp();
                j.compose(v, v, v)
            }
            Expr::Ln(e) => {
                let j = e.jet(x, periods);
                let v = j.value;
                j.compose(v.ln(), 1.0 / v, -1.0 / (v * v))
            }
        }
    }
}

fn trig_jet(t: &TrigTerm, x: &[f64], periods: &[f64]) -> Jet {
    let dim = t.modes.len();
    // per-axis factor value, first and second derivative
    let mut f = [1.0; 3];
    let mut df = [0.0; 3];
    let mut d2f = [0.0; 3];
    for a in 0..dim {
        let w = 2.0 * PI * t.modes[a] as f64 / periods[a];
        let (s, c) = (w * x[a]).sin_cos();
        match t.kinds[a] {
            TrigKind::Sin => {
                f[a] = s;
                df[a] = w * c;
                d2f[a] = -w * w * s;
            }
            TrigKind::Cos => {
                f[a] = c;
                df[a] = -w * s;
                d2f[a] = -w * w * c;
            }
        }
    }
    let prod_except = |skip: &[usize]| -> f64 {
        (0..dim)
            .filter(|a| !skip.contains(a))
            .map(|a| f[a])
            .product::<f64>()
    };
    let mut j = Jet::constant(t.coeff * prod_except(&[]));
    for a in 0..dim {
        j.grad[a] = t.coeff * df[a] * prod_except(&[a]);
        for b in 0..dim {
            j.hess[a][b] = if a == b {
                t.coeff * d2f[a] * prod_except(&[a])
            } else {
                t.coeff * df[a] * df[b] * prod_except(&[a, b])
            };
        }
    }
    j
}

/// A symmetric tensor given by closed-form components in row-major
/// upper-triangle order `(0,0), (0,1), …, (n-1,n-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTensorExpr {
    pub components: Vec<Expr>,
}

impl SymTensorExpr {
    pub fn new(components: Vec<Expr>) -> Self {
        Self { components }
    }

    /// `s · I` with constant `s`.
    pub fn scalar(dim: usize, s: f64) -> Self {
        let mut comps = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                comps.push(Expr::Const(if i == j { s } else { 0.0 }));
            }
        }
        Self { components: comps }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn dim(&self) -> usize {
        match self.components.len() {
            3 => 2,
            6 => 3,
            _ => 0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), GeometryError> {
        if self.components.len() != dim * (dim + 1) / 2 {
            return Err(GeometryError::ShapeMismatch(format!(
                "symmetric tensor in dimension {dim} needs {} components, got {}",
                dim * (dim + 1) / 2,
                self.components.len()
            )));
        }
        self.components.iter().try_for_each(|e| e.validate(dim))
    }

    /// Component jets as a dense `n×n` array (symmetric by construction).
    pub fn jets(&self, x: &[f64], periods: &[f64]) -> Vec<Vec<Jet>> {
        let dim = self.dim();
        let mut out = vec![vec![Jet::constant(0.0); dim]; dim];
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                let jt = self.components[k].jet(x, periods);
                out[i][j] = jt;
                out[j][i] = jt;
                k += 1;
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64], periods: &[f64]) -> Vec<f64> {
        self.components.iter().map(|e| e.eval(x, periods)).collect()
    }
}
