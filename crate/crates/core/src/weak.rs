//! Weak solutions for rough right-hand sides: band-limited positive
//! approximations, Cauchy-rate certificates for the solution sequence, and
//! quadratic-test-function viscosity probes.
//!
//! On a fixed grid every sequence converges trivially, so the certificate's
//! content is the measured Cauchy rate, not a compactness argument.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::LabError;
use crate::estimates::trace_chi;
use crate::geometry::{integrate, lp_norm, PeriodicGrid, ScalarField};
use crate::linalg::SymMat;
use crate::operators::{eigenvalues_wrt_metric, SymmetricFunction};
use crate::solver::{
    solve_fixed_path_point, solve_pair, Background, ProblemSpec, SolutionPair, SolveOptions,
};

/// Spectral low-pass profile as a function of `|k|/cutoff`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterShape {
    /// Indicator of `|k| ≤ cutoff`.
    #[default]
    Sharp,
    /// Flat to `cutoff/2`, cosine taper to zero at `cutoff`.
    RaisedCosine,
    /// Flat to `cutoff/2`, Gaussian taper, truncated at `cutoff`.
    Gaussian,
}

impl FilterShape {
    fn weight(self, k: f64, cutoff: f64) -> f64 {
        if k > cutoff {
            return 0.0;
        }
        let half = 0.5 * cutoff;
        match self {
            FilterShape::Sharp => 1.0,
            _ if k <= half => 1.0,
            FilterShape::RaisedCosine => {
                0.5 * (1.0 + (std::f64::consts::PI * (k - half) / half).cos())
            }
            FilterShape::Gaussian => (-(4.0 * (k - half) / cutoff).powi(2) * 4.0).exp(),
        }
    }
}

/// Level `i = 1..=levels` uses cutoff `base_cutoff · growth^{i−1}` (in Fourier
/// modes) and floor `floor · 2^{−i}`; a level that misses its target
/// `‖e^{f_i} − e^f‖_{L^{nq}} < 2^{−i}` doubles its cutoff and halves its floor
/// up to `max_refinements` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MollifierSchedule {
    pub levels: usize,
    pub base_cutoff: f64,
    pub growth: f64,
    pub floor: f64,
    pub shape: FilterShape,
    pub q: f64,
    pub max_refinements: usize,
}

impl Default for MollifierSchedule {
    fn default() -> Self {
        Self {
            levels: 6,
            base_cutoff: 2.0,
            growth: 2.0,
            floor: 0.05,
            shape: FilterShape::Sharp,
            q: 2.0,
            max_refinements: 12,
        }
    }
}

impl MollifierSchedule {
    pub fn validate(&self) -> Result<(), LabError> {
        if self.levels < 3 {
            return Err(LabError::Argument(format!(
                "schedule needs at least 3 levels, got {}",
                self.levels
            )));
        }
        if !(self.base_cutoff > 0.0)
            || !(self.growth >= 1.0)
            || !(self.floor > 0.0)
            || !(self.q > 1.0)
        {
            return Err(LabError::Argument(format!(
                "schedule needs base_cutoff > 0, growth >= 1, floor > 0, q > 1; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// One emitted approximation `e^{f_i}`.
#[derive(Debug, Clone, Serialize)]
pub struct MollifiedLevel {
    pub level: usize,
    #[serde(skip)]
    pub field: ScalarField<f64>,
    pub cutoff: f64,
    pub floor: f64,
    /// `‖e^{f_i} − e^f‖_{L^{nq}}`.
    pub error: f64,
    pub target: f64,
    pub refinements: usize,
    /// `‖e^{nf_i}‖_{L^q} / ‖e^{nf}‖_{L^q}` (at most 2 for large `i`).
    pub power_ratio: f64,
    /// `∫e^{f_i} / ∫e^f` (at least ½ for large `i`).
    pub mass_ratio: f64,
    /// `∫e^{f_i} ≤ ∫e^f + 2^{−i} vol^{(nq−1)/(nq)}`.
    pub mass_upper_holds: bool,
}

impl MollifiedLevel {
    pub fn derived_bounds_hold(&self) -> bool {
        self.power_ratio <= 2.0 && self.mass_ratio >= 0.5 && self.mass_upper_holds
    }
}

fn low_pass(
    spectrum: &[num_complex::Complex<f64>],
    bg_fft: &crate::geometry::GridFft<f64>,
    shape: FilterShape,
    cutoff: f64,
) -> Vec<f64> {
    let data = spectrum
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            let k = bg_fft.wavenumbers(idx);
            let norm = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
            c * shape.weight(norm, cutoff)
        })
        .collect();
    bg_fft.inverse_real(data)
}

/// Band-limited, strictly positive approximations of a non-negative `rough`
/// right-hand side, one per schedule level.
pub fn mollify_sequence(
    bg: &Background<f64>,
    rough: &ScalarField<f64>,
    schedule: &MollifierSchedule,
) -> Result<Vec<MollifiedLevel>, LabError> {
    schedule.validate()?;
    let g = bg.metric();
    if rough.grid() != bg.grid() {
        return Err(LabError::Argument(
            "rough rhs and background grids differ".into(),
        ));
    }
    if let Some(i) = rough.values().iter().position(|&v| v < 0.0) {
        return Err(LabError::Argument(format!(
            "rough rhs is negative at point {i}"
        )));
    }
    let mass = integrate(rough, g)?;
    if !(mass > 0.0) {
        return Err(LabError::Argument("rough rhs has zero integral".into()));
    }
    let n = bg.grid().dim() as f64;
    let nq = n * schedule.q;
    let power = lp_norm(rough, nq, g)?.powf(n);
    let vol = g.volume();
    let fft = bg.diff().fft();
    let spectrum = fft.forward_real(rough.values());
    let mut out = Vec::with_capacity(schedule.levels);
    let mut cutoff = schedule.base_cutoff;
    let mut floor = schedule.floor;
    for level in 1..=schedule.levels {
        let target = 0.5f64.powi(level as i32);
        if level > 1 {
            cutoff *= schedule.growth;
            floor *= 0.5;
        }
        let mut refinements = 0;
        loop {
            let vals: Vec<f64> = low_pass(&spectrum, fft, schedule.shape, cutoff)
                .into_iter()
                .map(|v| v.max(floor))
                .collect();
            let field = ScalarField::new(bg.grid().clone(), vals)?;
            let error = lp_norm(&field.sub(rough), nq, g)?;
            if error < target {
                let m_i = integrate(&field, g)?;
                out.push(MollifiedLevel {
                    level,
                    power_ratio: lp_norm(&field, nq, g)?.powf(n) / power,
                    mass_ratio: m_i / mass,
                    mass_upper_holds: m_i <= mass + target * vol.powf((nq - 1.0) / nq),
                    field,
                    cutoff,
                    floor,
                    error,
                    target,
                    refinements,
                });
                break;
            }
            if refinements == schedule.max_refinements {
                return Err(LabError::Schedule {
                    level,
                    achieved: error,
                    target,
                });
            }
            refinements += 1;
            cutoff *= 2.0;
            floor *= 0.5;
        }
    }
    Ok(out)
}

/// `‖∇φ‖²_{L²}` against `‖φ‖_∞ ∫S₁(λ(χ)) dvol` for one level.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyRow {
    pub grad_l2_sq: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Geometric Cauchy certificate for the level sequence.
#[derive(Debug, Clone, Serialize)]
pub struct WeakCertificate {
    pub levels: usize,
    pub b_per_level: Vec<f64>,
    pub residual_per_level: Vec<f64>,
    /// `cauchy_table[k][l − k − 1] = ‖φ_l − φ_k‖_∞` for `l > k` (0-based levels).
    pub cauchy_table: Vec<Vec<f64>>,
    /// `gap_k = max_{l > k} ‖φ_l − φ_k‖_∞`.
    pub gaps: Vec<f64>,
    /// Smallest `C` with `gap_k ≤ C·2^{−k}` (1-based `k`).
    #[serde(rename = "fitted_C")]
    pub fitted_c: f64,
    /// Least-squares slope of `log₂ gap_k` against `k` over gaps above the noise floor.
    pub decay_slope: Option<f64>,
    /// `C·2^{−K}/(1 − ½)`: distance of the finest level to the limit.
    pub tail_bound: f64,
    pub energy: Vec<EnergyRow>,
    pub pass: bool,
}

/// Gaps below this are treated as converged.
pub const CAUCHY_NOISE_FLOOR: f64 = 1e-11;
/// Slowest admissible decay exponent (`2^{−k/2}`).
pub const CAUCHY_MIN_RATE: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct WeakSolution {
    /// Finest-level pair, the representative of the weak solution.
    pub pair: SolutionPair<f64>,
    pub certificate: WeakCertificate,
    pub levels: Vec<MollifiedLevel>,
    pub phis: Vec<ScalarField<f64>>,
}

fn energy_row(
    bg: &Background<f64>,
    phi: &ScalarField<f64>,
    s1_integral: f64,
) -> Result<EnergyRow, LabError> {
    let g = bg.metric();
    let n = bg.grid().dim();
    let grad = bg.diff().gradient(phi.values());
    let dens: Vec<f64> = (0..bg.grid().len())
        .map(|x| {
            let inv = g.inv(x);
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += inv.get(a, b) * grad[x][a] * grad[x][b];
                }
            }
            s
        })
        .collect();
    let grad_l2_sq = integrate(&ScalarField::new(bg.grid().clone(), dens)?, g)?;
    let bound = phi.max_abs() * s1_integral;
    Ok(EnergyRow {
        grad_l2_sq,
        bound,
        holds: grad_l2_sq <= bound * (1.0 + 1e-6) + 1e-14,
    })
}

/// Builds the certificate from a sequence of level solutions.
pub fn certify(
    bg: &Background<f64>,
    pairs: &[SolutionPair<f64>],
    residuals: &[f64],
) -> Result<WeakCertificate, LabError> {
    let levels = pairs.len();
    let cauchy_table: Vec<Vec<f64>> = (0..levels)
        .map(|k| {
            ((k + 1)..levels)
                .map(|l| pairs[l].phi.sub(&pairs[k].phi).max_abs())
                .collect()
        })
        .collect();
    let gaps: Vec<f64> = cauchy_table
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .collect();
    let fitted_c = gaps
        .iter()
        .enumerate()
        .map(|(k, &gap)| gap * 2f64.powi(k as i32 + 1))
        .fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = gaps
        .iter()
        .enumerate()
        .filter(|(_, &gap)| gap > CAUCHY_NOISE_FLOOR)
        .map(|(k, &gap)| ((k + 1) as f64, gap.log2()))
        .collect();
    let decay_slope = (pts.len() >= 2).then(|| {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let s1_integral = integrate(&trace_chi(bg), bg.metric())?;
    let energy = pairs
        .iter()
        .map(|p| energy_row(bg, &p.phi, s1_integral))
        .collect::<Result<Vec<_>, _>>()?;
    let limit_normalized = pairs.last().is_some_and(|p| p.phi.max() == 0.0);
    let geometric = decay_slope.is_none_or(|s| s <= -CAUCHY_MIN_RATE);
    Ok(WeakCertificate {
        levels,
        b_per_level: pairs.iter().map(|p| p.b).collect(),
        residual_per_level: residuals.to_vec(),
        cauchy_table,
        gaps,
        fitted_c,
        decay_slope,
        tail_bound: fitted_c * 0.5f64.powi(levels as i32) * 2.0,
        energy,
        pass: geometric && limit_normalized,
    })
}

/// Solves every level of the mollified sequence (warm-starting from the
/// previous level) and certifies the Cauchy rate.
pub fn weak_solve(
    bg: &Arc<Background<f64>>,
    rough: &ScalarField<f64>,
    schedule: &MollifierSchedule,
    opts: &SolveOptions,
) -> Result<WeakSolution, LabError> {
    let levels = mollify_sequence(bg, rough, schedule)?;
    let mut pairs: Vec<SolutionPair<f64>> = Vec::with_capacity(levels.len());
    let mut residuals = Vec::with_capacity(levels.len());
    for lvl in &levels {
        let prob = ProblemSpec::new(Arc::clone(bg), lvl.field.clone())?;
        let warm = pairs
            .last()
            .and_then(|prev| solve_fixed_path_point(&prob, 1.0, prev, opts).ok());
        let (pair, res) = match warm {
            Some((pair, stats)) => (pair, stats.residual_history.last().copied().unwrap_or(0.0)),
            None => {
                let s = solve_pair(&prob, opts)?;
                (s.pair, s.residual)
            }
        };
        pairs.push(pair);
        residuals.push(res);
    }
    let certificate = certify(bg, &pairs, &residuals)?;
    let phis = pairs.iter().map(|p| p.phi.clone()).collect();
    let pair = pairs.pop().expect("at least three levels");
    Ok(WeakSolution {
        pair,
        certificate,
        levels,
        phis,
    })
}

// ---------------------------------------------------------------- viscosity

/// Seeded distinct sample points on the grid.
pub fn sample_points(grid: &PeriodicGrid<f64>, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = sample(&mut rng, grid.len(), count.min(grid.len())).into_vec();
    pts.sort_unstable();
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SuperBranch {
    /// `λ(χ + ∇²u) ∉ Γ`.
    OutsideCone,
    /// `F(χ + ∇²u) ≤ e^b rhs + tol`.
    Value,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViscosityRow {
    pub index: usize,
    pub coords: Vec<usize>,
    /// `e^b rhs(x)`.
    pub target: f64,
    /// `F(χ + ∇²u)` for the quadratic touching from above (0 outside the cone).
    pub sub_value: f64,
    /// `F(χ + ∇²u)` for the quadratic touching from below, if inside the cone.
    pub super_value: Option<f64>,
    pub sub_ok: bool,
    pub super_branch: SuperBranch,
}

impl ViscosityRow {
    /// Largest deviation of the probe values from the target.
    pub fn deviation(&self) -> f64 {
        let s = (self.sub_value - self.target).abs();
        self.super_value
            .map_or(s, |v| s.max((v - self.target).abs()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViscosityReport {
    pub tol: f64,
    pub probe_radius: usize,
    pub rows: Vec<ViscosityRow>,
    pub skipped: Vec<usize>,
    pub warnings: Vec<String>,
    pub sub_pass: usize,
    pub super_pass: usize,
    pub pass: bool,
}

struct QuadraticFit {
    grad: [f64; 3],
    hess: SymMat<f64>,
    /// Euclidean-curvature shifts making the quadratic touch from above / below.
    mu_up: f64,
    mu_lo: f64,
}

fn fit_quadratic(phi: &ScalarField<f64>, x: usize, radius: usize) -> Option<QuadraticFit> {
    let grid = phi.grid();
    let n = grid.dim();
    let r = radius as isize;
    let mut pts: Vec<([f64; 3], f64)> = Vec::new();
    let span = -r..=r;
    for a in span.clone() {
        for b in span.clone() {
            for c in if n == 3 { span.clone() } else { 0..=0 } {
                let o = [a, b, c];
                let q2: isize = o[..n].iter().map(|v| v * v).sum();
                if q2 == 0 || q2 > r * r {
                    continue;
                }
                let y = grid.shift_by(x, &o[..n]);
                let mut d = [0.0; 3];
                for k in 0..n {
                    d[k] = o[k] as f64 * grid.spacing()[k];
                }
                pts.push((d, phi.get(y) - phi.get(x)));
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let unknowns = n + pairs.len();
    if pts.len() < unknowns {
        return None;
    }
    let mut m = DMatrix::<f64>::zeros(pts.len(), unknowns);
    let mut rhs = DVector::<f64>::zeros(pts.len());
    for (row, (d, v)) in pts.iter().enumerate() {
        for k in 0..n {
            m[(row, k)] = d[k];
        }
        for (col, &(i, j)) in pairs.iter().enumerate() {
            m[(row, n + col)] = if i == j {
                0.5 * d[i] * d[i]
            } else {
                d[i] * d[j]
            };
        }
        rhs[row] = *v;
    }
    let sol = m.svd(true, true).solve(&rhs, 1e-14).ok()?;
    let mut grad = [0.0; 3];
    grad[..n].copy_from_slice(&sol.as_slice()[..n]);
    let mut hess = SymMat::zeros(n);
    for (col, &(i, j)) in pairs.iter().enumerate() {
        hess.set(i, j, sol[n + col]);
    }
    let quad = |d: &[f64; 3]| {
        let mut s = 0.0;
        for i in 0..n {
            s += grad[i] * d[i];
            for j in 0..n {
                s += 0.5 * hess.get(i, j) * d[i] * d[j];
            }
        }
        s
    };
    let mut mu_up = f64::NEG_INFINITY;
    let mut mu_lo = f64::INFINITY;
    for (d, v) in &pts {
        let r2: f64 = d[..n].iter().map(|t| t * t).sum();
        let mu = 2.0 * (v - quad(d)) / r2;
        mu_up = mu_up.max(mu);
        mu_lo = mu_lo.min(mu);
    }
    Some(QuadraticFit {
        grad,
        hess,
        mu_up,
        mu_lo,
    })
}

/// Quadratic probes of the viscosity inequalities at `samples`.
///
/// A quadratic `Q` with `Q(x) = φ(x)` is least-squares fitted over the chart
/// ball of `probe_radius` cells, then shifted by `μ|y − x|²/2` so that it
/// touches `φ` from above (subsolution test) or below (supersolution test) on
/// that ball. Quadratics under-approximate the class of C² test functions.
pub fn viscosity_check(
    bg: &Background<f64>,
    phi: &ScalarField<f64>,
    b: f64,
    rhs: &ScalarField<f64>,
    samples: &[usize],
    probe_radius: usize,
    tol: f64,
) -> Result<ViscosityReport, LabError> {
    let grid = bg.grid();
    let n = grid.dim();
    let op = bg.operator();
    let g = bg.metric();
    let gamma = bg.christoffel();
    let eb = b.exp();
    let results: Vec<Result<Option<ViscosityRow>, LabError>> = samples
        .par_iter()
        .map(|&x| {
            let Some(fit) = fit_quadratic(phi, x, probe_radius) else {
                return Ok(None);
            };
            let covariant = |mu: f64| {
                let mut h = fit.hess;
                for i in 0..n {
                    h.set(i, i, h.get(i, i) + mu);
                    for j in i..n {
                        let drift: f64 = (0..n)
                            .map(|k| gamma.get(x, k).get(i, j) * fit.grad[k])
                            .sum();
                        h.set(i, j, h.get(i, j) - drift);
                    }
                }
                bg.chi().get(x).add(&h)
            };
            let target = eb * rhs.get(x);
            let up = eigenvalues_wrt_metric(&covariant(fit.mu_up), g.g(x))?;
            let sub_value = if op.in_cone(&up.lambda) {
                op.value_unchecked(&up.lambda)
            } else {
                0.0
            };
            let lo = eigenvalues_wrt_metric(&covariant(fit.mu_lo), g.g(x))?;
            let (super_value, super_branch) = if op.in_cone(&lo.lambda) {
                let v = op.value_unchecked(&lo.lambda);
                (
                    Some(v),
                    if v <= target + tol {
                        SuperBranch::Value
                    } else {
                        SuperBranch::Failed
                    },
                )
            } else {
                (None, SuperBranch::OutsideCone)
            };
            Ok(Some(ViscosityRow {
                index: x,
                coords: grid.coords(x)[..n].to_vec(),
                target,
                sub_value,
                super_value,
                sub_ok: sub_value >= target - tol,
                super_branch,
            }))
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (r, &x) in results.into_iter().zip(samples) {
        match r? {
            Some(row) => rows.push(row),
            None => skipped.push(x),
        }
    }
    let warnings = skipped
        .iter()
        .map(|x| format!("sample {x} skipped: too few probe points for a quadratic fit"))
        .collect();
    let sub_pass = rows.iter().filter(|r| r.sub_ok).count();
    let super_pass = rows
        .iter()
        .filter(|r| r.super_branch != SuperBranch::Failed)
        .count();
    let pass = !rows.is_empty() && sub_pass == rows.len() && super_pass == rows.len();
    Ok(ViscosityReport {
        tol,
        probe_radius,
        rows,
        skipped,
        warnings,
        sub_pass,
        super_pass,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::Fixture;
    use crate::geometry::{Expr, TrigKind, TrigTerm};
    use crate::operators::Family;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn flat(size: usize) -> Arc<Background<f64>> {
        Fixture::flat(2, size, Family::MongeAmpere, 1.0, 0.5)
            .background()
            .unwrap()
    }

    #[test]
    fn filter_profiles() {
        for shape in [
            FilterShape::Sharp,
            FilterShape::RaisedCosine,
            FilterShape::Gaussian,
        ] {
            assert_eq!(shape.weight(1.0, 4.0), 1.0);
            assert_eq!(shape.weight(4.5, 4.0), 0.0);
        }
        assert_relative_eq!(
            FilterShape::RaisedCosine.weight(3.0, 4.0),
            0.5,
            epsilon = 1e-15
        );
        assert!(FilterShape::Gaussian.weight(3.0, 4.0) < 1.0);
    }

    #[test]
    fn band_limited_rhs_is_reproduced() {
        let bg = flat(32);
        let rough = ScalarField::from_fn(bg.grid(), |x| {
            2.0 + (2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).cos()
        })
        .unwrap();
        let levels = mollify_sequence(&bg, &rough, &MollifierSchedule::default()).unwrap();
        // band is |k| = √5 < 4: exact from the second level on
        for l in &levels[1..] {
            assert!(l.error < 1e-12, "{:?}", l.error);
        }
    }

    #[test]
    fn zero_set_is_floored_and_targets_met() {
        let bg = flat(64);
        let rough = ScalarField::from_fn(bg.grid(), |x| (2.0 * PI * x[0]).sin().max(0.0)).unwrap();
        let schedule = MollifierSchedule {
            levels: 6,
            ..Default::default()
        };
        let levels = mollify_sequence(&bg, &rough, &schedule).unwrap();
        for l in &levels {
            assert!(l.field.min() >= l.floor && l.floor > 0.0);
            assert!(l.error < l.target);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let bg = flat(16);
        let zero = ScalarField::zeros(bg.grid());
        assert!(matches!(
            mollify_sequence(&bg, &zero, &MollifierSchedule::default()),
            Err(LabError::Argument(_))
        ));
        let neg = ScalarField::constant(bg.grid(), -1.0);
        assert!(mollify_sequence(&bg, &neg, &MollifierSchedule::default()).is_err());
        let short = MollifierSchedule {
            levels: 2,
            ..Default::default()
        };
        assert!(short.validate().is_err());
    }

    #[test]
    fn unreachable_target_reports_achieved_error() {
        let bg = flat(16);
        let rough =
            ScalarField::from_fn(bg.grid(), |x| if x[0] < 0.5 { 0.0 } else { 4.0 }).unwrap();
        let schedule = MollifierSchedule {
            levels: 3,
            base_cutoff: 0.5,
            growth: 1.0,
            max_refinements: 0,
            ..Default::default()
        };
        match mollify_sequence(&bg, &rough, &schedule) {
            Err(LabError::Schedule {
                level,
                achieved,
                target,
            }) => {
                assert_eq!(level, 1);
                assert!(achieved >= target);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_solution_probes_reduce_to_equality() {
        let bg = flat(16);
        // φ = 0 solves F(χ) = e^b · F(χ)e^{-b}
        let b: f64 = 0.3;
        let rhs = bg.f_chi().scaled((-b).exp());
        let phi = ScalarField::zeros(bg.grid());
        let pts = sample_points(bg.grid(), 10, 7);
        let rep = viscosity_check(&bg, &phi, b, &rhs, &pts, 2, 1e-12).unwrap();
        assert!(rep.pass);
        for r in &rep.rows {
            assert!(r.deviation() < 1e-12);
        }
    }

    #[test]
    fn flat_ridge_exercises_outside_cone_branch() {
        let bg = flat(32);
        // χ_xx + φ_xx = 1 − 1.5 cos(2πx) is negative on the ridge x = 0
        let phi = ScalarField::from_fn(bg.grid(), |x| {
            1.5 * (2.0 * PI * x[0]).cos() / (4.0 * PI * PI)
        })
        .unwrap();
        let rhs = ScalarField::constant(bg.grid(), 1.0);
        let ridge: Vec<usize> = (0..32).map(|j| bg.grid().index(&[0, j])).collect();
        let rep = viscosity_check(&bg, &phi, 0.0, &rhs, &ridge, 2, 1e-6).unwrap();
        assert!(rep
            .rows
            .iter()
            .all(|r| r.super_branch == SuperBranch::OutsideCone));
    }

    #[test]
    fn sample_points_are_deterministic() {
        let grid = PeriodicGrid::uniform(2, 16, 1.0).unwrap();
        let a = sample_points(&grid, 64, 42);
        assert_eq!(a, sample_points(&grid, 64, 42));
        assert_eq!(a.len(), 64);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn smooth_rhs_gives_trivial_certificate() {
        let bg = flat(16);
        let rough = ScalarField::from_fn(bg.grid(), |x| {
            Expr::Exp(Box::new(Expr::trig(vec![TrigTerm::new(
                0.3,
                &[1, 1],
                &[TrigKind::Sin, TrigKind::Cos],
            )])))
            .eval(x, &[1.0, 1.0])
        })
        .unwrap();
        let schedule = MollifierSchedule {
            levels: 4,
            ..Default::default()
        };
        let sol = weak_solve(&bg, &rough, &schedule, &SolveOptions::default()).unwrap();
        assert!(sol.certificate.pass, "{:?}", sol.certificate);
        assert!(sol.certificate.energy.iter().all(|e| e.holds));
        assert_eq!(sol.pair.phi.max(), 0.0);
    }
}
