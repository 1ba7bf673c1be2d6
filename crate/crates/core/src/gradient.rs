//! Interior gradient diagnostics: the auxiliary function
//! `G = ½ ln|∇φ|² + τ(φ) + ln ρ`, level sweeps over approximation sequences,
//! the Euclidean `99√n K/r` constant on closed-form convex solutions, and the
//! growth condition on right-hand sides `ψ(x, t, p)`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abp::grid_ball;
use crate::error::LabError;
use crate::geometry::{mask_cutoff_rho, ScalarField};
use crate::linalg::SymMat;
use crate::operators::{eigenvalues_wrt_metric, OperatorSpec, SymmetricFunction};
use crate::solver::{Background, SolveOptions};
use crate::weak::{weak_solve, MollifierSchedule};

/// `τ(φ) = −⅓ ln(2K − φ)` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tau {
    pub k: f64,
}

impl Tau {
    pub fn value(&self, phi: f64) -> f64 {
        -(2.0 * self.k - phi).ln() / 3.0
    }

    pub fn d1(&self, phi: f64) -> f64 {
        1.0 / (3.0 * (2.0 * self.k - phi))
    }

    pub fn d2(&self, phi: f64) -> f64 {
        let s = 2.0 * self.k - phi;
        1.0 / (3.0 * s * s)
    }
}

/// Gradients below this norm count as critical points, where `G = −∞`.
const CRITICAL_GRAD: f64 = 1e-14;

#[derive(Debug, Clone, Serialize)]
pub struct GradientProbe {
    pub center: usize,
    /// `sup |φ|` over the probe ball.
    pub k: f64,
    pub r: f64,
    /// `max ρ|∇φ|_g` over the ball.
    pub max_rho_grad: f64,
    pub rho_grad_at_center: f64,
    /// `max G`, absent when `∇φ` vanishes on the whole ball interior.
    pub g_max: Option<f64>,
    /// Torus index of the maximizer of `G`.
    pub g_argmax: Option<usize>,
    pub g_argmax_coords: Option<Vec<usize>>,
    /// `√(18 sup χ(ξ,ξ) K) + 36K/r` with `ξ` over `g`-unit vectors.
    pub threshold: f64,
    /// `ρ|∇φ|` at the maximizer of `G` exceeds the threshold.
    pub threshold_exceeded: bool,
    /// Smallest `g`-eigenvalue of `χ + ∇²φ` at the maximizer of `G`.
    pub x_nn: Option<f64>,
    /// `−|∇φ|²/(18K)` at the maximizer, the bound `x_nn` must respect past the threshold.
    pub x_nn_bound: Option<f64>,
    /// Present only when the threshold is exceeded.
    pub x_nn_holds: Option<bool>,
}

/// Slack for `X_nn ≤ −|∇φ|²/(18K)`, absorbing stencil error.
pub const X_NN_TOL: f64 = 1e-6;

/// Evaluates `G` on the ball of radius `r` about grid point `center`.
pub fn gradient_probe(
    bg: &Background<f64>,
    phi: &ScalarField<f64>,
    center: usize,
    r: f64,
) -> Result<GradientProbe, LabError> {
    let grid = bg.grid();
    let n = grid.dim();
    let g = bg.metric();
    let (domain, index) = grid_ball(grid, center, r)?;
    let rho = mask_cutoff_rho(&domain);
    let grad = bg.diff().gradient(phi.values());
    let grad_norm = |x: usize| {
        let inv = g.inv(x);
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += inv.get(a, b) * grad[x][a] * grad[x][b];
            }
        }
        s.max(0.0).sqrt()
    };
    let k = index.iter().map(|&x| phi.get(x).abs()).fold(0.0, f64::max);
    let tau = Tau { k };
    let mut max_rho_grad = 0.0f64;
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for (i, &x) in index.iter().enumerate() {
        let gn = grad_norm(x);
        let rg = rho.get(i) * gn;
        max_rho_grad = max_rho_grad.max(rg);
        if gn <= CRITICAL_GRAD || rho.get(i) <= 0.0 || k <= 0.0 {
            continue;
        }
        let val = gn.ln() + tau.value(phi.get(x)) + rho.get(i).ln();
        if best.is_none_or(|b| val > b.0) {
            best = Some((val, x, gn, rg));
        }
    }
    let chi_sup = index
        .iter()
        .map(|&x| {
            eigenvalues_wrt_metric(bg.chi().get(x), g.g(x))
                .map(|s| s.lambda[0])
                .unwrap_or(f64::NAN)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = (18.0 * chi_sup.max(0.0) * k).sqrt() + 36.0 * k / r;
    let (mut x_nn, mut x_nn_bound, mut x_nn_holds, mut exceeded) = (None, None, None, false);
    if let Some((_, x, gn, rg)) = best {
        let shifted = bg.shifted_hessian(phi)?;
        let spec = eigenvalues_wrt_metric(shifted.get(x), g.g(x))?;
        let low = *spec.lambda.last().expect("non-empty spectrum");
        let bound = -gn * gn / (18.0 * k);
        exceeded = rg > threshold;
        x_nn = Some(low);
        x_nn_bound = Some(bound);
        if exceeded {
            x_nn_holds = Some(low <= bound + X_NN_TOL * (1.0 + bound.abs()));
        }
    }
    Ok(GradientProbe {
        center,
        k,
        r,
        max_rho_grad,
        rho_grad_at_center: grad_norm(center),
        g_max: best.map(|b| b.0),
        g_argmax: best.map(|b| b.1),
        g_argmax_coords: best.map(|b| grid.coords(b.1)[..n].to_vec()),
        threshold,
        threshold_exceeded: exceeded,
        x_nn,
        x_nn_bound,
        x_nn_holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelProbe {
    pub level: usize,
    pub probe: GradientProbe,
}

/// `max ρ|∇φ|` across the levels of an approximation sequence.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSweep {
    pub rows: Vec<LevelProbe>,
    /// `max / min` of `max ρ|∇φ|` over levels.
    pub envelope_ratio: f64,
    pub pass: bool,
}

/// Allowed spread of `max ρ|∇φ|` across levels.
pub const LEVEL_ENVELOPE: f64 = 2.0;

/// Solves every level of the approximation sequence of `rough` and probes
/// the gradient on the same ball at each.
pub fn gradient_level_sweep(
    bg: &Arc<Background<f64>>,
    rough: &ScalarField<f64>,
    schedule: &MollifierSchedule,
    center: usize,
    r: f64,
    opts: &SolveOptions,
) -> Result<LevelSweep, LabError> {
    let sol = weak_solve(bg, rough, schedule, opts)?;
    let rows = sol
        .phis
        .par_iter()
        .enumerate()
        .map(|(i, phi)| {
            Ok(LevelProbe {
                level: i + 1,
                probe: gradient_probe(bg, phi, center, r)?,
            })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let hi = rows
        .iter()
        .map(|p| p.probe.max_rho_grad)
        .fold(0.0, f64::max);
    let lo = rows
        .iter()
        .map(|p| p.probe.max_rho_grad)
        .fold(f64::INFINITY, f64::min);
    let envelope_ratio = if hi == 0.0 { 1.0 } else { hi / lo };
    Ok(LevelSweep {
        rows,
        envelope_ratio,
        pass: envelope_ratio <= LEVEL_ENVELOPE,
    })
}

// ------------------------------------------------------------ Euclidean ball

/// `φ(x) = a·x + ½ xᵀAx` with `det A = 1`, an exact solution of
/// `det D²φ = 1` on every ball.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexMember {
    pub a: Vec<f64>,
    pub hessian: SymMat<f64>,
}

/// Forward residual allowed for a family member.
pub const MEMBER_RESIDUAL: f64 = 1e-12;

impl ConvexMember {
    pub fn new(a: Vec<f64>, hessian: SymMat<f64>) -> Result<Self, LabError> {
        if a.len() != hessian.dim() {
            return Err(LabError::Argument(
                "linear and quadratic parts differ in dimension".into(),
            ));
        }
        let res = (hessian.determinant() - 1.0).abs();
        if res > MEMBER_RESIDUAL || hessian.min_eigenvalue() <= 0.0 {
            return Err(LabError::Argument(format!(
                "member is not a convex solution of det D²φ = 1 (residual {res:.3e})"
            )));
        }
        Ok(Self { a, hessian })
    }

    fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            s += self.a[i] * x[i];
            for j in 0..n {
                s += 0.5 * self.hessian.get(i, j) * x[i] * x[j];
            }
        }
        s
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                self.a[i]
                    + (0..self.dim())
                        .map(|j| self.hessian.get(i, j) * x[j])
                        .sum::<f64>()
            })
            .collect()
    }

    fn is_identity(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.hessian.get(i, j) == if i == j { 1.0 } else { 0.0 }))
    }
}

/// Directions sampled per sphere when `sup |φ|` has no closed form.
const K_SAMPLES: usize = 4096;

/// `sup_{|y − c| ≤ r} |φ(y)|`. Closed form for `A = I`; otherwise sampled on
/// concentric spheres, which can only underestimate and so makes the
/// constant check stricter.
pub fn ball_sup_abs(member: &ConvexMember, center: &[f64], r: f64) -> f64 {
    let n = member.dim();
    let f0 = member.value(center);
    let p = member.gradient(center);
    let pn = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    if member.is_identity() {
        // φ(c + y) = φ(c) + p·y + |y|²/2
        let hi = f0 + pn * r + 0.5 * r * r;
        let lo = if pn <= r {
            f0 - 0.5 * pn * pn
        } else {
            f0 - pn * r + 0.5 * r * r
        };
        return hi.abs().max(lo.abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b);
    let mut best = f0.abs();
    let mut y = vec![0.0; n];
    for s in 0..K_SAMPLES {
        let mut dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if s < n {
            dir = (0..n).map(|i| if i == s { 1.0 } else { 0.0 }).collect();
        }
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        for t in [0.25, 0.5, 0.75, 1.0] {
            for (k, yk) in y.iter_mut().enumerate() {
                *yk = center[k] + t * r * dir[k] / norm;
            }
            best = best.max(member.value(&y).abs());
        }
    }
    // the interior minimum of the convex quadratic
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| member.hessian.get(i, j));
    if let Some(chol) = a.cholesky() {
        let step = chol.solve(&nalgebra::DVector::from_column_slice(&p));
        if step.norm() <= r {
            let y: Vec<f64> = (0..n).map(|k| center[k] - step[k]).collect();
            best = best.max(member.value(&y).abs());
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantRow {
    pub dim: usize,
    pub a_norm: f64,
    pub r: f64,
    pub k: f64,
    /// `|Dφ(c)| ρ(c)` with `ρ(c) = 1`.
    pub lhs: f64,
    /// `99√n K/r`.
    pub bound: f64,
    /// `bound / lhs` (infinite when `Dφ(c) = 0`).
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantReport {
    pub rows: Vec<ConstantRow>,
    pub min_margin: f64,
    pub violations: usize,
    pub pass: bool,
}

/// Parameter sweep for the Euclidean constant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstantSweep {
    pub dims: Vec<usize>,
    pub a_norms: Vec<f64>,
    pub radii: Vec<f64>,
    pub directions: usize,
    pub seed: u64,
}

impl Default for ConstantSweep {
    fn default() -> Self {
        let log = |lo: f64, hi: f64, m: usize| -> Vec<f64> {
            (0..m)
                .map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64))
                .collect()
        };
        let mut a_norms = vec![0.0];
        a_norms.extend(log(1e-2, 100.0, 17));
        Self {
            dims: vec![2, 3],
            a_norms,
            radii: log(0.1, 10.0, 13),
            directions: 4,
            seed: 99,
        }
    }
}

fn unit_hessians(n: usize) -> Vec<SymMat<f64>> {
    let mut out = vec![SymMat::identity(n)];
    let mut d = vec![1.0; n];
    d[0] = 4.0;
    d[n - 1] = 0.25;
    out.push(SymMat::diagonal(&d));
    // a sheared, non-diagonal member: [[2, 1], [1, 1]] has det 1
    let mut s = SymMat::identity(n);
    s.set(0, 0, 2.0);
    s.set(0, 1, 1.0);
    out.push(s);
    out
}

/// Checks `|Dφ(c)|ρ(c) ≤ 99√n K/r` for `φ = a·x + ½xᵀAx` over the sweep,
/// probing at `c = 0` and at a displaced centre (which changes the
/// effective linear part).
pub fn euclidean_constant_check(sweep: &ConstantSweep) -> Result<ConstantReport, LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(sweep.seed);
    let mut jobs = Vec::new();
    for &n in &sweep.dims {
        if !(2..=3).contains(&n) {
            return Err(LabError::Argument(format!("dimension {n} not supported")));
        }
        for hess in unit_hessians(n) {
            for &a_norm in &sweep.a_norms {
                for _ in 0..sweep.directions.max(1) {
                    let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                    let a: Vec<f64> = dir.iter().map(|v| a_norm * v / norm).collect();
                    let member = ConvexMember::new(a, hess)?;
                    let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    for &r in &sweep.radii {
                        jobs.push((member.clone(), vec![0.0; n], r));
                        jobs.push((member.clone(), center.clone(), r));
                    }
                }
            }
        }
    }
    let rows: Vec<ConstantRow> = jobs
        .par_iter()
        .map(|(member, center, r)| {
            let n = member.dim();
            let k = ball_sup_abs(member, center, *r);
            let lhs = member
                .gradient(center)
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            let bound = 99.0 * (n as f64).sqrt() * k / r;
            ConstantRow {
                dim: n,
                a_norm: member.a.iter().map(|v| v * v).sum::<f64>().sqrt(),
                r: *r,
                k,
                lhs,
                bound,
                margin: if lhs == 0.0 {
                    f64::INFINITY
                } else {
                    bound / lhs
                },
            }
        })
        .collect();
    let violations = rows.iter().filter(|r| r.lhs > r.bound).count();
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(ConstantReport {
        rows,
        min_margin,
        violations,
        pass: violations == 0,
    })
}

// ---------------------------------------------------------- growth condition

/// Declared bounds of a right-hand side `ψ(x, t, p)`:
/// `|d^Hψ| ≤ horizontal`, `|∂ψ/∂t| ≤ t_coeff`, and a gradient part
/// `grad_coeff·|p|^grad_power`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PsiSpec {
    pub horizontal: f64,
    pub t_coeff: f64,
    pub grad_coeff: f64,
    pub grad_power: f64,
}

impl PsiSpec {
    /// `ψ = e^b e^{f(x)}` with `|d e^f| ≤ horizontal`.
    pub fn exponential(horizontal: f64) -> Self {
        Self {
            horizontal,
            ..Default::default()
        }
    }

    /// `|d^Hψ| + |ψ_t||ω| + |ψ_ω||ω|²` at `|ω| = w`.
    pub fn growth_lhs(&self, w: f64) -> f64 {
        let grad = if self.grad_coeff == 0.0 {
            0.0
        } else {
            self.grad_coeff * self.grad_power * w.powf(self.grad_power + 1.0)
        };
        self.horizontal + self.t_coeff * w + grad
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    /// `(|ω|, lhs/|ω|³)` samples.
    pub samples: Vec<(f64, f64)>,
    /// Log-log slope of the ratio over the top two decades.
    pub tail_slope: f64,
    pub pass: bool,
    /// Largest-`|ω|` sample, reported when the check fails.
    pub witness: Option<(f64, f64)>,
}

pub const GROWTH_MAX_OMEGA: f64 = 1e6;
/// The ratio must fall at least this fast (log-log) to count as `o(|ω|³)`.
pub const GROWTH_SLOPE: f64 = -0.1;

/// Empirical `o(|ω|³)` check of the declared growth on `|ω| ∈ [1, 10⁶]`.
pub fn growth_condition_check(psi: &PsiSpec) -> GrowthReport {
    let per_decade = 10;
    let m = 6 * per_decade;
    let samples: Vec<(f64, f64)> = (0..=m)
        .map(|i| {
            let w = 10f64.powf(i as f64 / per_decade as f64);
            (w, psi.growth_lhs(w) / w.powi(3))
        })
        .collect();
    let tail = &samples[samples.len() - 2 * per_decade - 1..];
    let (w0, r0) = tail[0];
    let (w1, r1) = tail[tail.len() - 1];
    let tail_slope = if r0 == 0.0 && r1 == 0.0 {
        f64::NEG_INFINITY
    } else {
        (r1.ln() - r0.ln()) / (w1.ln() - w0.ln())
    };
    let decreasing = tail.windows(2).all(|w| w[1].1 <= w[0].1);
    let pass = decreasing && tail_slope < GROWTH_SLOPE;
    GrowthReport {
        witness: (!pass).then_some((w1, r1)),
        samples,
        tail_slope,
        pass,
    }
}

/// Constants `L, ε` with `f(L𝟏) = L f(𝟏) > sup ψ + ε`, taking
/// `L = 4 sup ψ / f(𝟏)` and `ε = f(𝟏)L/2`.
pub fn diagonal_escape_constants(op: &OperatorSpec<f64>, sup_psi: f64) -> (f64, f64) {
    let f1 = op.f_one();
    let l = (4.0 * sup_psi / f1).max(f64::MIN_POSITIVE.sqrt());
    (l, 0.5 * f1 * l)
}

/// `Σ f_i λ_i`, which equals `f(λ)` for degree-one homogeneous `f`.
pub fn euler_sum<F: SymmetricFunction<f64>>(f: &F, lambda: &[f64]) -> f64 {
    f.grad_unchecked(lambda)
        .iter()
        .zip(lambda)
        .map(|(a, b)| a * b)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::Fixture;
    use crate::operators::Family;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn tau_identities() {
        for (k, phi) in [(1.0, 0.3), (2.5, -2.5), (0.1, 0.1), (7.0, -3.0)] {
            let t = Tau { k };
            let s = 2.0 * k - phi;
            assert_relative_eq!(
                t.d2(phi) - 2.0 * t.d1(phi).powi(2),
                t.d1(phi).powi(2),
                max_relative = 1e-14
            );
            assert_relative_eq!(t.d1(phi).powi(2), 1.0 / (9.0 * s * s), max_relative = 1e-14);
            let h = 1e-5;
            let fd1 = (t.value(phi + h) - t.value(phi - h)) / (2.0 * h);
            let h2 = 1e-3 * t.k;
            let fd2 = (t.value(phi + h2) - 2.0 * t.value(phi) + t.value(phi - h2)) / (h2 * h2);
            assert_relative_eq!(fd1, t.d1(phi), max_relative = 1e-8);
            assert_relative_eq!(fd2, t.d2(phi), max_relative = 1e-4);
        }
    }

    fn torus(size: usize) -> Arc<Background<f64>> {
        let mut fx = Fixture::flat(2, size, Family::MongeAmpere, 1.0, 0.5);
        fx.period = 4.0;
        fx.background().unwrap()
    }

    #[test]
    fn zero_function_has_no_gradient() {
        let bg = torus(32);
        let p = gradient_probe(&bg, &ScalarField::zeros(bg.grid()), 0, 1.0).unwrap();
        assert_eq!(p.max_rho_grad, 0.0);
        assert!(p.g_max.is_none() && p.g_argmax.is_none());
    }

    #[test]
    fn linear_function_peaks_at_center() {
        let bg = torus(64);
        // a·x is not periodic; this sine has slope a at the centre and
        // ρ|∇φ| = a cos(πx/2)(1 − |x|²/r²) peaks there
        let a = 0.7;
        let phi = ScalarField::from_fn(bg.grid(), |x| {
            a * 2.0 / std::f64::consts::PI * (std::f64::consts::PI * x[0] / 2.0).sin()
        })
        .unwrap();
        let p = gradient_probe(&bg, &phi, 0, 0.5).unwrap();
        assert_relative_eq!(p.rho_grad_at_center, a, max_relative = 1e-5);
        assert_relative_eq!(p.max_rho_grad, p.rho_grad_at_center, max_relative = 1e-15);
    }

    #[test]
    fn probe_rejects_wrapping_ball() {
        let bg = torus(16);
        assert!(gradient_probe(&bg, &ScalarField::zeros(bg.grid()), 0, 2.0).is_err());
    }

    #[test]
    fn closed_form_sup_for_identity_matches_sampling() {
        let member = ConvexMember::new(vec![0.6, -0.8], SymMat::identity(2)).unwrap();
        for (c, r) in [([0.0, 0.0], 0.5), ([0.3, 0.1], 2.0), ([-1.0, 0.4], 0.1)] {
            let exact = ball_sup_abs(&member, &c, r);
            // sampled value through a non-identity path with the same member
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let mut best: f64 = 0.0;
            for _ in 0..200_000 {
                let y: [f64; 2] = [rng.gen_range(-r..r), rng.gen_range(-r..r)];
                if y[0] * y[0] + y[1] * y[1] <= r * r {
                    best = best.max(member.value(&[c[0] + y[0], c[1] + y[1]]).abs());
                }
            }
            assert!(best <= exact * (1.0 + 1e-12));
            assert_relative_eq!(best, exact, max_relative = 2e-2);
        }
    }

    #[test]
    fn non_solution_member_is_rejected() {
        assert!(ConvexMember::new(vec![0.0, 0.0], SymMat::scalar(2, 2.0)).is_err());
    }

    #[test]
    fn unit_distance_example() {
        let member = ConvexMember::new(vec![1.0, 0.0], SymMat::identity(2)).unwrap();
        let k = ball_sup_abs(&member, &[0.0, 0.0], 1.0);
        assert_relative_eq!(k, 1.5, max_relative = 1e-15);
        assert!(1.0 <= 99.0 * 2f64.sqrt() * k);
    }

    #[test]
    fn constant_sweep_never_violates() {
        let rep = euclidean_constant_check(&ConstantSweep::default()).unwrap();
        assert!(rep.pass);
        assert!(rep.min_margin > 1.0 && rep.min_margin.is_finite());
    }

    #[test]
    fn growth_examples() {
        assert!(growth_condition_check(&PsiSpec::exponential(3.0)).pass);
        let quad = growth_condition_check(&PsiSpec {
            grad_coeff: 1.0,
            grad_power: 2.0,
            ..Default::default()
        });
        assert!(!quad.pass);
        let (w, ratio) = quad.witness.unwrap();
        assert_eq!(w, GROWTH_MAX_OMEGA);
        assert_relative_eq!(ratio, 2.0, max_relative = 1e-12);
        assert!(
            growth_condition_check(&PsiSpec {
                grad_coeff: 1.0,
                grad_power: 1.5,
                t_coeff: 2.0,
                ..Default::default()
            })
            .pass
        );
    }

    #[test]
    fn diagonal_escape_constants_exceed_sup() {
        let op = OperatorSpec::new(Family::HessianQuotient { k: 1 }, 3, 0.5).unwrap();
        for sup in [0.1, 1.0, 40.0] {
            let (l, eps) = diagonal_escape_constants(&op, sup);
            assert!(l * op.f_one() > sup + eps);
        }
    }

    proptest! {
        #[test]
        fn euler_identity(lam in proptest::collection::vec(0.01f64..10.0, 3), k in 0usize..3) {
            for family in [Family::MongeAmpere, Family::HessianQuotient { k }] {
                let op = OperatorSpec::new(family, 3, 0.5).unwrap();
                let s = euler_sum(&op, &lam);
                prop_assert!(s >= 0.0);
                prop_assert!((s - op.value_unchecked(&lam)).abs() <= 1e-12 * (1.0 + s));
            }
        }
    }
}
