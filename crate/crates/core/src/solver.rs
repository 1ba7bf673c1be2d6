//! Damped Newton–Krylov solver for `F(χ + ∇²φ) = e^b · rhs` on the torus,
//! driven along the continuity path `rhs_t = rhs^t · F(χ)^{1−t}`.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, OperatorError, SolverError};
use crate::geometry::{
    christoffels, covariant_hessian, exact_covariant_hessian, tensor_field_from_expr,
    ChristoffelField, Differentiator, Expr, MetricField, PeriodicGrid, ScalarField, StencilOrder,
    SymTensorExpr, SymTensorField,
};
use crate::linalg::{gmres, SymMat};
use crate::operators::{cone_membership, spectrum_with_factor, OperatorSpec, SymmetricFunction};
use crate::scalar::Real;

/// Geometric and operator data shared by every right-hand side.
#[derive(Debug)]
pub struct Background<T: Real> {
    operator: OperatorSpec<T>,
    metric: MetricField<T>,
    christoffel: ChristoffelField<T>,
    chi: SymTensorField<T>,
    diff: Differentiator<T>,
    /// `F(χ)` per point, i.e. `e^{f̃}`.
    f_chi: Vec<T>,
}

impl<T: Real> Background<T> {
    /// Validates `λ(χ − σg) ∈ Γ` at every point and precomputes Christoffel
    /// symbols and `F(χ)`.
    pub fn new(
        operator: OperatorSpec<T>,
        metric: MetricField<T>,
        chi: SymTensorField<T>,
        order: StencilOrder,
    ) -> Result<Self, SolverError> {
        let grid = metric.grid().clone();
        if chi.grid() != &grid {
            return Err(GeometryError::ShapeMismatch("χ and metric grids differ".into()).into());
        }
        if operator.dim() != grid.dim() {
            return Err(SolverError::InvalidProblem(format!(
                "operator dimension {} does not match grid dimension {}",
                operator.dim(),
                grid.dim()
            )));
        }
        let diff = Differentiator::new(&grid, order);
        let christoffel = christoffels(&metric, &diff)?;
        let sigma = operator.sigma();
        let n = grid.dim();
        let mut f_chi = Vec::with_capacity(grid.len());
        for (idx, a) in chi.values().iter().enumerate() {
            let s = spectrum_with_factor(a, metric.chol_inv(idx));
            let shifted: Vec<T> = s.lambda.iter().map(|&l| l - sigma).collect();
            let st = cone_membership(&shifted);
            if !st.inside {
                return Err(SolverError::Cone {
                    index: idx,
                    coords: grid.coords(idx)[..n].to_vec(),
                    lambda: shifted.iter().map(|v| v.to_f64_lossy()).collect(),
                    margin: st.margin.to_f64_lossy(),
                });
            }
            f_chi.push(operator.value_unchecked(&s.lambda));
        }
        Ok(Self {
            operator,
            metric,
            christoffel,
            chi,
            diff,
            f_chi,
        })
    }

    /// Builds the background from closed-form metric and `χ`.
    pub fn from_exprs(
        operator: OperatorSpec<T>,
        grid: &PeriodicGrid<T>,
        metric: &SymTensorExpr,
        chi: &SymTensorExpr,
        order: StencilOrder,
    ) -> Result<Self, SolverError> {
        let g = MetricField::from_expr(grid, metric)?;
        let c = tensor_field_from_expr(grid, chi)?;
        Self::new(operator, g, c, order)
    }

    pub fn grid(&self) -> &PeriodicGrid<T> {
        self.metric.grid()
    }

    pub fn operator(&self) -> &OperatorSpec<T> {
        &self.operator
    }

    pub fn metric(&self) -> &MetricField<T> {
        &self.metric
    }

    pub fn christoffel(&self) -> &ChristoffelField<T> {
        &self.christoffel
    }

    pub fn chi(&self) -> &SymTensorField<T> {
        &self.chi
    }

    pub fn diff(&self) -> &Differentiator<T> {
        &self.diff
    }

    /// `F(χ)` per point.
    pub fn f_chi(&self) -> ScalarField<T> {
        ScalarField::from_raw(self.grid().clone(), self.f_chi.clone())
    }

    /// `χ + ∇²φ` per point.
    pub fn shifted_hessian(&self, phi: &ScalarField<T>) -> Result<SymTensorField<T>, SolverError> {
        let h = covariant_hessian(phi, &self.christoffel, &self.diff)?;
        Ok(SymTensorField::from_raw(
            self.grid().clone(),
            h.values()
                .iter()
                .zip(self.chi.values())
                .map(|(h, c)| h.add(c))
                .collect(),
        ))
    }
}

/// A problem `F(χ + ∇²φ) = e^b · rhs`.
#[derive(Debug, Clone)]
pub struct ProblemSpec<T: Real> {
    background: Arc<Background<T>>,
    rhs: ScalarField<T>,
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(background: Arc<Background<T>>, rhs: ScalarField<T>) -> Result<Self, SolverError> {
        if rhs.grid() != background.grid() {
            return Err(
                GeometryError::ShapeMismatch("rhs and background grids differ".into()).into(),
            );
        }
        if let Some(i) = rhs.values().iter().position(|&v| !(v > T::zero())) {
            return Err(SolverError::InvalidProblem(format!(
                "rhs must be strictly positive; value {} at point {i} (grid coordinates {:?})",
                rhs.get(i),
                &rhs.grid().coords(i)[..rhs.grid().dim()]
            )));
        }
        Ok(Self { background, rhs })
    }

    pub fn background(&self) -> &Arc<Background<T>> {
        &self.background
    }

    pub fn rhs(&self) -> &ScalarField<T> {
        &self.rhs
    }

    pub fn grid(&self) -> &PeriodicGrid<T> {
        self.background.grid()
    }

    /// Same background with a different right-hand side.
    pub fn with_rhs(&self, rhs: ScalarField<T>) -> Result<Self, SolverError> {
        Self::new(Arc::clone(&self.background), rhs)
    }

    /// `rhs_t = rhs^t · F(χ)^{1−t}`, i.e. `e^{t f + (1−t) f̃}`.
    pub fn path_rhs(&self, t: T) -> ScalarField<T> {
        let one = T::one();
        let vals = self
            .rhs
            .values()
            .iter()
            .zip(&self.background.f_chi)
            .map(|(&r, &fc)| {
                if t == one {
                    r
                } else if t == T::zero() {
                    fc
                } else {
                    (t * r.ln() + (one - t) * fc.ln()).exp()
                }
            })
            .collect();
        ScalarField::from_raw(self.grid().clone(), vals)
    }

    /// `max(f̃ − f)⁺`, the bound on `b_t` along the path.
    pub fn path_b_bound(&self) -> T {
        self.rhs
            .values()
            .iter()
            .zip(&self.background.f_chi)
            .map(|(&r, &fc)| fc.ln() - r.ln())
            .fold(T::zero(), T::max)
    }
}

/// The unknown pair `(φ, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair<T> {
    pub phi: ScalarField<T>,
    pub b: T,
}

impl<T: Real> SolutionPair<T> {
    pub fn zero(grid: &PeriodicGrid<T>) -> Self {
        Self {
            phi: ScalarField::zeros(grid),
            b: T::zero(),
        }
    }

    /// Shifts `φ` so that its grid maximum is exactly zero.
    pub fn normalized(&self) -> Self {
        let m = self.phi.max();
        Self {
            phi: self.phi.map(|v| v - m),
            b: self.b,
        }
    }
}

/// Newton / continuity controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub continuity_steps: usize,
    /// Residual ∞-norm at which Newton stops.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Smallest damping factor tried before declaring stagnation.
    pub damping_floor: f64,
    /// Relative residual target of the inner GMRES solve.
    pub linear_tol: f64,
    pub gmres_restart: usize,
    pub max_linear_iters: usize,
    /// Number of times a failing continuity step may be halved.
    pub max_bisections: u32,
    /// Absolute slack on the per-step path bound `b_t ≤ max(f̃ − f)⁺`.
    pub path_bound_slack: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            continuity_steps: 4,
            newton_tol: 1e-10,
            max_newton_iters: 40,
            damping_floor: 2f64.powi(-20),
            linear_tol: 1e-12,
            gmres_restart: 80,
            max_linear_iters: 800,
            max_bisections: 10,
            path_bound_slack: 1e-6,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidProblem(m.to_string()));
        if self.continuity_steps == 0 {
            return bad("continuity_steps must be at least 1");
        }
        if !(self.newton_tol > 0.0) || !(self.linear_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.damping_floor > 0.0 && self.damping_floor <= 1.0) {
            return bad("damping_floor must lie in (0, 1]");
        }
        if self.max_newton_iters == 0 || self.gmres_restart == 0 || self.max_linear_iters == 0 {
            return bad("iteration limits must be positive");
        }
        Ok(())
    }
}

/// One accepted continuity step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStep {
    pub t: f64,
    pub b_t: f64,
    pub newton_iters: usize,
    pub final_residual: f64,
}

/// Newton statistics for one fixed path point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub linear_iterations: usize,
    pub min_cone_margin: f64,
}

struct Assembly<T> {
    value: Vec<T>,
    deriv: Vec<SymMat<T>>,
    min_margin: T,
}

fn assemble<T: Real>(bg: &Background<T>, phi: &ScalarField<T>) -> Result<Assembly<T>, SolverError> {
    let a = bg.shifted_hessian(phi)?;
    let grid = bg.grid();
    let results: Vec<Result<(T, SymMat<T>, T), (usize, Vec<T>)>> = a
        .values()
        .par_iter()
        .enumerate()
        .map(
            |(idx, m)| match bg.operator.evaluate_with_factor(m, bg.metric.chol_inv(idx)) {
                Ok(pe) => {
                    let margin = pe.spectrum.lambda[pe.spectrum.lambda.len() - 1];
                    Ok((pe.value, pe.deriv, margin))
                }
                Err(_) => Err((idx, spectrum_with_factor(m, bg.metric.chol_inv(idx)).lambda)),
            },
        )
        .collect();
    let mut value = Vec::with_capacity(results.len());
    let mut deriv = Vec::with_capacity(results.len());
    let mut min_margin = T::infinity();
    let mut worst: Option<(usize, Vec<T>)> = None;
    for r in results {
        match r {
            Ok((v, d, m)) => {
                value.push(v);
                deriv.push(d);
                min_margin = min_margin.min(m);
            }
            Err((idx, lambda)) => {
                let m = cone_membership(&lambda).margin;
                if worst
                    .as_ref()
                    .is_none_or(|(_, l)| m < cone_membership(l).margin)
                {
                    worst = Some((idx, lambda));
                }
            }
        }
    }
    if let Some((idx, lambda)) = worst {
        return Err(SolverError::Cone {
            index: idx,
            coords: grid.coords(idx)[..grid.dim()].to_vec(),
            margin: cone_membership(&lambda).margin.to_f64_lossy(),
            lambda: lambda.iter().map(|v| v.to_f64_lossy()).collect(),
        });
    }
    Ok(Assembly {
        value,
        deriv,
        min_margin,
    })
}

/// Pointwise `F(χ + ∇²φ) − e^b · rhs`.
pub fn residual<T: Real>(
    prob: &ProblemSpec<T>,
    phi: &ScalarField<T>,
    b: T,
) -> Result<ScalarField<T>, SolverError> {
    let asm = assemble(&prob.background, phi)?;
    Ok(residual_from(&asm.value, prob.rhs.values(), b, prob.grid()))
}

fn residual_from<T: Real>(value: &[T], rhs: &[T], b: T, grid: &PeriodicGrid<T>) -> ScalarField<T> {
    let eb = b.exp();
    ScalarField::from_raw(
        grid.clone(),
        value.iter().zip(rhs).map(|(&v, &r)| v - eb * r).collect(),
    )
}

/// Linearized operator `δφ ↦ a^{ij}∂_{ij}δφ + b^k ∂_k δφ` with
/// `a = ∂F/∂A` and `b^k = −a^{ij} Γ^k_{ij}`.
struct Linearization<'a, T: Real> {
    bg: &'a Background<T>,
    a: Vec<SymMat<T>>,
    drift: Vec<[T; 3]>,
    /// `e^b · rhs` per point.
    w: Vec<T>,
    /// Fourier symbol of the constant-coefficient preconditioner.
    symbol: Vec<T>,
    w_mean: T,
}

impl<'a, T: Real> Linearization<'a, T> {
    fn new(bg: &'a Background<T>, a: Vec<SymMat<T>>, w: Vec<T>) -> Self {
        let grid = bg.grid();
        let n = grid.dim();
        let drift: Vec<[T; 3]> = a
            .par_iter()
            .enumerate()
            .map(|(p, ap)| {
                let gm = bg.christoffel.at(p);
                let mut d = [T::zero(); 3];
                for (k, dk) in d.iter_mut().enumerate().take(n) {
                    *dk = -ap.contract(&gm[k]);
                }
                d
            })
            .collect();
        let len = T::from_usize_lossy(grid.len());
        let mut mean = SymMat::zeros(n);
        for ap in &a {
            mean = mean.add(ap);
        }
        let mean = mean.scale(T::one() / len);
        let diff = &bg.diff;
        let fft = diff.fft();
        let symbol = (0..grid.len())
            .map(|idx| {
                let k = fft.wavenumbers(idx);
                let mut s = T::zero();
                for i in 0..n {
                    s += mean.get(i, i) * diff.second_symbol(i, k[i]);
                    for j in (i + 1)..n {
                        s -= T::lit(2.0)
                            * mean.get(i, j)
                            * diff.first_symbol(i, k[i])
                            * diff.first_symbol(j, k[j]);
                    }
                }
                s
            })
            .collect();
        let w_mean = w.iter().copied().sum::<T>() / len;
        Self {
            bg,
            a,
            drift,
            w,
            symbol,
            w_mean,
        }
    }

    /// `J δφ` on the grid.
    fn apply_field(&self, v: &[T]) -> Vec<T> {
        let diff = &self.bg.diff;
        let n = self.bg.grid().dim();
        let hess = diff.hessian(v);
        let grad = diff.gradient(v);
        (0..v.len())
            .into_par_iter()
            .map(|p| {
                let mut s = self.a[p].contract(&hess[p]);
                for k in 0..n {
                    s += self.drift[p][k] * grad[p][k];
                }
                s
            })
            .collect()
    }

    /// Bordered operator on `(δφ, δb)`: `[J δφ − w δb ; mean(δφ)]`.
    fn apply(&self, x: &[T], out: &mut [T]) {
        let n = self.w.len();
        let (phi, db) = (&x[..n], x[n]);
        let jv = self.apply_field(phi);
        for p in 0..n {
            out[p] = jv[p] - self.w[p] * db;
        }
        out[n] = phi.iter().copied().sum::<T>() / T::from_usize_lossy(n);
    }

    /// Exact inverse of the constant-coefficient, constant-weight approximation.
    fn precondition(&self, r: &[T], out: &mut [T]) {
        let n = self.w.len();
        let mean_r = r[..n].iter().copied().sum::<T>() / T::from_usize_lossy(n);
        let db = -mean_r / self.w_mean;
        let centred: Vec<T> = r[..n].iter().map(|&v| v - mean_r).collect();
        let fft = self.bg.diff.fft();
        let mut hat = fft.forward_real(&centred);
        for (idx, c) in hat.iter_mut().enumerate() {
            if idx == 0 {
                *c = Complex::new(T::zero(), T::zero());
            } else {
                *c /= self.symbol[idx];
            }
        }
        let phi = fft.inverse_real(hat);
        for p in 0..n {
            out[p] = phi[p] + r[n];
        }
        out[n] = db;
    }
}

fn inf_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Damped Newton on `(φ, b)` for a fixed right-hand side. `φ` is kept mean-zero
/// internally; the returned pair is not yet sup-normalized.
fn newton<T: Real>(
    prob: &ProblemSpec<T>,
    t: f64,
    warm: &SolutionPair<T>,
    opts: &SolveOptions,
) -> Result<(SolutionPair<T>, NewtonStats), SolverError> {
    let bg = &*prob.background;
    let grid = prob.grid();
    let n = grid.len();
    let rhs = prob.rhs.values();
    let mut phi = warm.phi.shifted(-warm.phi.mean());
    let mut b = warm.b;
    let mut asm = assemble(bg, &phi)?;
    let mut res = residual_from(&asm.value, rhs, b, grid);
    let mut rnorm = inf_norm(res.values());
    let mut history = vec![rnorm.to_f64_lossy()];
    let tol = T::lit(opts.newton_tol);
    let mut iterations = 0;
    let mut linear_iterations = 0;
    let mut min_margin = asm.min_margin;
    while rnorm > tol {
        if iterations >= opts.max_newton_iters {
            return Err(SolverError::NonConvergence {
                t,
                iterations,
                history,
            });
        }
        iterations += 1;
        let eb = b.exp();
        let w: Vec<T> = rhs.iter().map(|&r| eb * r).collect();
        let lin = Linearization::new(bg, asm.deriv, w);
        let mut rhs_vec: Vec<T> = res.values().iter().map(|&v| -v).collect();
        rhs_vec.push(T::zero());
        let mut x = vec![T::zero(); n + 1];
        let stats = gmres(
            |v, out| lin.apply(v, out),
            |v, out| lin.precondition(v, out),
            &rhs_vec,
            &mut x,
            T::lit(opts.linear_tol),
            opts.gmres_restart,
            opts.max_linear_iters,
        );
        linear_iterations += stats.iterations;
        // inexact Newton: an unconverged but descending direction is still used
        if !stats.converged && !(stats.relative_residual < T::lit(0.5)) {
            return Err(SolverError::NonConvergence {
                t,
                iterations,
                history,
            });
        }
        drop(lin);
        let mut alpha = T::one();
        let floor = T::lit(opts.damping_floor);
        loop {
            let trial_phi = ScalarField::from_raw(
                grid.clone(),
                phi.values()
                    .iter()
                    .zip(&x[..n])
                    .map(|(&p, &d)| p + alpha * d)
                    .collect(),
            );
            let trial_b = b + alpha * x[n];
            if let Ok(trial) = assemble(bg, &trial_phi) {
                let trial_res = residual_from(&trial.value, rhs, trial_b, grid);
                let trial_norm = inf_norm(trial_res.values());
                if trial_norm < rnorm && trial.min_margin > T::zero() {
                    phi = trial_phi;
                    b = trial_b;
                    asm = trial;
                    res = trial_res;
                    rnorm = trial_norm;
                    min_margin = min_margin.min(asm.min_margin);
                    history.push(rnorm.to_f64_lossy());
                    break;
                }
            }
            alpha *= T::lit(0.5);
            if alpha < floor {
                return Err(SolverError::Stagnation { t, history });
            }
        }
    }
    Ok((
        SolutionPair { phi, b },
        NewtonStats {
            iterations,
            residual_history: history,
            linear_iterations,
            min_cone_margin: min_margin.to_f64_lossy(),
        },
    ))
}

/// Solves the path equation at parameter `t` from a warm start. The returned
/// `φ` satisfies `sup φ = 0`.
pub fn solve_fixed_path_point<T: Real>(
    prob: &ProblemSpec<T>,
    t: f64,
    warm: &SolutionPair<T>,
    opts: &SolveOptions,
) -> Result<(SolutionPair<T>, NewtonStats), SolverError> {
    opts.validate()?;
    if !(0.0..=1.0).contains(&t) {
        return Err(SolverError::InvalidProblem(format!(
            "path parameter {t} outside [0, 1]"
        )));
    }
    let pt = prob.with_rhs(prob.path_rhs(T::lit(t)))?;
    let (pair, stats) = newton(&pt, t, warm, opts)?;
    Ok((pair.normalized(), stats))
}

/// Solution of the full continuity path.
#[derive(Debug, Clone)]
pub struct PathSolution<T> {
    pub pair: SolutionPair<T>,
    pub log: Vec<PathStep>,
    /// Residual ∞-norm of the returned pair at `t = 1`.
    pub residual: f64,
    /// Number of step bisections performed.
    pub bisections: u32,
}

/// Marches `t = 0 → 1` in `continuity_steps` increments, warm-starting each
/// Newton solve and halving failing steps. Checks `b_t ≤ max(f̃ − f)⁺` after
/// every step. The returned `φ` satisfies `sup φ = 0`.
pub fn solve_pair<T: Real>(
    prob: &ProblemSpec<T>,
    opts: &SolveOptions,
) -> Result<PathSolution<T>, SolverError> {
    opts.validate()?;
    let grid = prob.grid();
    let bound = prob.path_b_bound().to_f64_lossy();
    let base = 1.0 / opts.continuity_steps as f64;
    let min_step = base / 2f64.powi(opts.max_bisections as i32);
    let mut current = SolutionPair::zero(grid);
    let mut t = 0.0f64;
    let mut step = base;
    let mut log = Vec::new();
    let mut bisections = 0u32;
    let mut last_residual = 0.0;
    // Exact anchor: rhs_0 = F(χ), so (0, 0) solves the t = 0 problem.
    while t < 1.0 {
        let target = if t + step > 1.0 - 1e-14 {
            1.0
        } else {
            t + step
        };
        let pt = prob.with_rhs(prob.path_rhs(T::lit(target)))?;
        match newton(&pt, target, &current, opts) {
            Ok((pair, stats)) => {
                let b_t = pair.b.to_f64_lossy();
                if b_t > bound + opts.path_bound_slack {
                    return Err(SolverError::PathBound {
                        t: target,
                        b: b_t,
                        bound,
                    });
                }
                last_residual = *stats.residual_history.last().expect("non-empty history");
                log.push(PathStep {
                    t: target,
                    b_t,
                    newton_iters: stats.iterations,
                    final_residual: last_residual,
                });
                current = pair;
                t = target;
                step = (step * 2.0).min(base);
            }
            Err(e) => {
                step *= 0.5;
                bisections += 1;
                if step < min_step * (1.0 - 1e-12) {
                    return Err(SolverError::PathFailure {
                        t: target,
                        substeps: bisections as usize,
                        source: Box::new(e),
                    });
                }
            }
        }
    }
    Ok(PathSolution {
        pair: current.normalized(),
        log,
        residual: last_residual,
        bisections,
    })
}

/// `F(χ + ∇²φ*)` evaluated from closed forms (exact derivatives, no stencils),
/// so that `φ*` solves the discrete problem up to truncation error with `b = 0`.
pub fn manufactured_rhs<T: Real>(
    operator: &OperatorSpec<T>,
    grid: &PeriodicGrid<T>,
    metric: &SymTensorExpr,
    chi: &SymTensorExpr,
    phi: &Expr,
) -> Result<ScalarField<T>, SolverError> {
    let n = grid.dim();
    metric.validate(n)?;
    chi.validate(n)?;
    phi.validate(n)?;
    let periods: Vec<f64> = grid.periods().iter().map(|p| p.to_f64_lossy()).collect();
    let mut vals = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let x: Vec<f64> = grid.point(idx)[..n]
            .iter()
            .map(|v| v.to_f64_lossy())
            .collect();
        let h = exact_covariant_hessian(phi, metric, &x, &periods);
        let c = SymMat::from_upper(n, &chi.eval(&x, &periods));
        let g = SymMat::from_upper(n, &metric.eval(&x, &periods));
        let a = c.add(&h);
        let spec64 =
            OperatorSpec::<f64>::new(operator.family(), n, operator.sigma().to_f64_lossy())
                .map_err(|e| SolverError::InvalidProblem(e.to_string()))?;
        let v = spec64.tensor_eval(&a, &g).map_err(|e| match e {
            OperatorError::ConeViolation { lambda, margin } => SolverError::Cone {
                index: idx,
                coords: grid.coords(idx)[..n].to_vec(),
                lambda,
                margin,
            },
            other => SolverError::InvalidProblem(other.to_string()),
        })?;
        vals.push(T::lit(v));
    }
    Ok(ScalarField::new(grid.clone(), vals)?)
}
