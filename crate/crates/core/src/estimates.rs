//! Measured constants of the a priori estimates: L∞ bound, stability
//! exponent, b-bounds, uniqueness of b and equicontinuity.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::abp::{abp_constant, default_epsilon};
use crate::error::LabError;
use crate::fixture::{solve_rhs, Fixture, RhsExpr};
use crate::geometry::{integrate, lp_norm, Expr, MetricField, ScalarField};
use crate::solver::{residual, Background, ProblemSpec, SolutionPair, SolveOptions};
use crate::weak::{weak_solve, MollifierSchedule};

/// Exponent `p(q−1)/(nq + p(q−1))` of the stability estimate.
pub fn stability_exponent(n: usize, p: f64, q: f64) -> f64 {
    let a = p * (q - 1.0);
    a / (n as f64 * q + a)
}

fn check_pq(p: f64, q: f64) -> Result<(), LabError> {
    if !(p > 0.0 && p.is_finite()) || !(q > 1.0 && q.is_finite()) {
        return Err(LabError::Argument(format!(
            "need p > 0 and q > 1, got p = {p}, q = {q}"
        )));
    }
    Ok(())
}

/// `S₁(λ_g(χ)) = tr_g χ` per point.
pub fn trace_chi(bg: &Background<f64>) -> ScalarField<f64> {
    let g = bg.metric();
    let vals = (0..bg.grid().len())
        .map(|i| g.inv(i).contract(bg.chi().get(i)))
        .collect::<Vec<_>>();
    ScalarField::new(bg.grid().clone(), vals).expect("finite trace")
}

/// `Δφ = tr_g ∇²φ` with the solver's covariant Hessian.
pub fn laplacian_trace(
    bg: &Background<f64>,
    phi: &ScalarField<f64>,
) -> Result<ScalarField<f64>, LabError> {
    let shifted = bg.shifted_hessian(phi)?;
    let g = bg.metric();
    let vals = (0..phi.grid().len())
        .map(|i| g.inv(i).contract(&shifted.get(i).sub(bg.chi().get(i))))
        .collect();
    Ok(ScalarField::new(phi.grid().clone(), vals)?)
}

/// `Δφ = |g|^{-1/2} ∂_i(|g|^{1/2} g^{ij} ∂_j φ)`. Its `dvol`-integral vanishes
/// to round-off for every periodic difference operator.
pub fn laplacian_divergence(
    bg: &Background<f64>,
    phi: &ScalarField<f64>,
) -> Result<ScalarField<f64>, LabError> {
    let grid = phi.grid();
    let n = grid.dim();
    let g = bg.metric();
    let grad = bg.diff().gradient(phi.values());
    let mut out = vec![0.0; grid.len()];
    for i in 0..n {
        let flux: Vec<f64> = (0..grid.len())
            .map(|x| {
                let inv = g.inv(x);
                g.det(x).sqrt() * (0..n).map(|j| inv.get(i, j) * grad[x][j]).sum::<f64>()
            })
            .collect();
        for (o, d) in out.iter_mut().zip(bg.diff().first(&flux, i)) {
            *o += d;
        }
    }
    for (x, o) in out.iter_mut().enumerate() {
        *o /= g.det(x).sqrt();
    }
    Ok(ScalarField::new(grid.clone(), out)?)
}

/// `‖u‖_{L^p}` of a field on the metric volume.
fn norm(u: &ScalarField<f64>, p: f64, g: &MetricField<f64>) -> Result<f64, LabError> {
    Ok(lp_norm(u, p, g)?)
}

// ---------------------------------------------------------------- L∞ bound

#[derive(Debug, Clone, Serialize)]
pub struct LinfRow {
    pub size: usize,
    pub member: usize,
    /// `‖e^{f+b}‖_{L^{nq}}`.
    pub lnq_norm: f64,
    /// `∫ e^{n(f+b)} (1 + n|f+b|)^p dvol`.
    pub entropy: f64,
    /// `‖φ‖_∞` with `sup φ = 0`.
    pub sup_norm: f64,
    pub b: f64,
    pub residual: f64,
    /// `‖φ‖_∞ / (1 + entropy)`.
    pub ratio: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinfReport {
    pub q: f64,
    pub p: f64,
    pub rows: Vec<LinfRow>,
    /// Largest `‖φ‖_∞/(1 + entropy)` over converged rows.
    pub fitted_c: f64,
    /// Ten times the family maximum of the ratio at the coarsest size.
    pub envelope: f64,
    /// Per member, the largest relative change of `‖φ‖_∞` between consecutive sizes.
    pub refinement_change: Vec<f64>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

/// Slack factor on the L∞ envelope.
pub const LINF_SLACK: f64 = 10.0;

/// Solves each member of `family` at every size and tabulates `‖φ‖_∞`
/// against the integral functionals of the absorbed right-hand side `e^{f+b}`.
pub fn linf_experiment(
    fixture: &Fixture,
    sizes: &[usize],
    family: &[RhsExpr],
    q: f64,
    p: f64,
    opts: &SolveOptions,
) -> Result<LinfReport, LabError> {
    check_pq(p, q)?;
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let n = fixture.dim as f64;
    let mut rows = Vec::new();
    for &size in &sizes {
        let bg = fixture.with_size(size).background()?;
        let found: Vec<LinfRow> = family
            .par_iter()
            .enumerate()
            .map(|(member, rhs)| -> Result<LinfRow, LabError> {
                let field = rhs.field(&bg)?;
                let mut row = LinfRow {
                    size,
                    member,
                    lnq_norm: f64::NAN,
                    entropy: f64::NAN,
                    sup_norm: f64::NAN,
                    b: f64::NAN,
                    residual: f64::NAN,
                    ratio: f64::NAN,
                    error: None,
                };
                match solve_rhs(&bg, field.clone(), opts) {
                    Ok(sol) => {
                        let absorbed = field.scaled(sol.pair.b.exp());
                        let g = bg.metric();
                        row.lnq_norm = norm(&absorbed, n * q, g)?;
                        let dens = absorbed.map(|e| {
                            let f = e.ln();
                            (n * f).exp() * (1.0 + n * f.abs()).powf(p)
                        });
                        row.entropy = integrate(&dens, g)?;
                        row.sup_norm = sol.pair.phi.max_abs();
                        row.b = sol.pair.b;
                        row.residual = sol.residual;
                        row.ratio = row.sup_norm / (1.0 + row.entropy);
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
                Ok(row)
            })
            .collect::<Result<_, _>>()?;
        rows.extend(found);
    }
    let mut warnings = Vec::new();
    for r in rows.iter().filter(|r| r.error.is_some()) {
        warnings.push(format!(
            "size {} member {} excluded: {}",
            r.size,
            r.member,
            r.error.as_deref().unwrap_or_default()
        ));
    }
    let ok: Vec<&LinfRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let fitted_c = ok.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let coarse = sizes.first().copied().unwrap_or(0);
    let envelope = LINF_SLACK
        * ok.iter()
            .filter(|r| r.size == coarse)
            .map(|r| r.ratio)
            .fold(0.0, f64::max);
    let refinement_change = (0..family.len())
        .map(|m| {
            let seq: Vec<f64> = sizes
                .iter()
                .filter_map(|&s| {
                    ok.iter()
                        .find(|r| r.size == s && r.member == m)
                        .map(|r| r.sup_norm)
                })
                .collect();
            seq.windows(2)
                .map(|w| (w[1] - w[0]).abs() / w[1].abs().max(1e-300))
                .filter(|c| c.is_finite())
                .fold(0.0, f64::max)
        })
        .collect();
    let pass = !ok.is_empty() && ok.iter().all(|r| r.ratio <= envelope);
    Ok(LinfReport {
        q,
        p,
        rows,
        fitted_c,
        envelope,
        refinement_change,
        warnings,
        pass,
    })
}

// ---------------------------------------------------------------- stability

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityBranch {
    /// `‖(φ₂−φ₁)⁺‖ = 0`: then `φ₂ − φ₁ ≤ 0`.
    Zero,
    /// `r ≥ ½`: then `φ₂ − φ₁ ≤ −φ₁ ≤ 2‖φ₁‖_∞ r`.
    Large,
    /// `0 < r < ½`: the ratio `sup(φ₂−φ₁)/r` is measured.
    Regular,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRow {
    pub delta: f64,
    pub sup_diff: f64,
    /// `‖(φ₂−φ₁)⁺‖_{L^p}`.
    pub lp_norm_pos: f64,
    /// `‖(φ₂−φ₁)⁺‖_{L^p}^{exponent}`.
    pub r: f64,
    pub branch: StabilityBranch,
    /// `sup(φ₂−φ₁)/r` on the regular branch.
    pub ratio: Option<f64>,
    /// Branch bound on `sup(φ₂−φ₁)` for the degenerate branches.
    pub bound: Option<f64>,
    pub holds: bool,
    pub residuals: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub exponent: f64,
    pub rows: Vec<StabilityRow>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// `max_ratio / min_ratio` over regular rows (1 when fewer than two).
    pub spread: f64,
    pub pass: bool,
}

/// Largest admissible ratio spread across the δ-grid.
pub const STABILITY_SPREAD: f64 = 50.0;

/// Classifies one pair `(φ₁, φ₂)` (both with `sup = 0`).
pub fn stability_row(
    phi1: &ScalarField<f64>,
    phi2: &ScalarField<f64>,
    g: &MetricField<f64>,
    p: f64,
    exponent: f64,
) -> Result<StabilityRow, LabError> {
    let diff = phi2.sub(phi1);
    let sup_diff = diff.max();
    let pos = diff.map(|v| v.max(0.0));
    // quasi-norm for p < 1
    let lp_norm_pos = if p >= 1.0 {
        norm(&pos, p, g)?
    } else {
        integrate(&pos.map(|v| v.powf(p)), g)?.powf(1.0 / p)
    };
    let r = lp_norm_pos.powf(exponent);
    let (branch, ratio, bound, holds) = if lp_norm_pos == 0.0 {
        (StabilityBranch::Zero, None, Some(0.0), sup_diff <= 0.0)
    } else if r >= 0.5 {
        let bound = 2.0 * phi1.max_abs() * r;
        (StabilityBranch::Large, None, Some(bound), sup_diff <= bound)
    } else {
        let ratio = sup_diff / r;
        (
            StabilityBranch::Regular,
            Some(ratio),
            None,
            ratio.is_finite(),
        )
    };
    Ok(StabilityRow {
        delta: f64::NAN,
        sup_diff,
        lp_norm_pos,
        r,
        branch,
        ratio,
        bound,
        holds,
        residuals: [f64::NAN; 2],
    })
}

/// Compares the solution for `e^f` with the solutions for `e^{f+δη}` along
/// `deltas`. Both problems are solved as pairs and the constants are folded
/// into the right-hand sides, so each `φ` solves `F(χ+∇²φ) = e^{f_i}` with
/// `sup φ = 0`.
#[allow(clippy::too_many_arguments)]
pub fn stability_experiment(
    fixture: &Fixture,
    f: &RhsExpr,
    eta: &Expr,
    deltas: &[f64],
    p: f64,
    q: f64,
    opts: &SolveOptions,
) -> Result<StabilityReport, LabError> {
    check_pq(p, q)?;
    let bg = fixture.background()?;
    let n = fixture.dim;
    let exponent = stability_exponent(n, p, q);
    let base_rhs = f.field(&bg)?;
    let base = solve_rhs(&bg, base_rhs.clone(), opts)?;
    eta.validate(n)?;
    let periods = bg.grid().periods().to_vec();
    let eta_field = ScalarField::from_fn(bg.grid(), |x| eta.eval(x, &periods))?;
    let rows: Vec<StabilityRow> = deltas
        .par_iter()
        .map(|&delta| -> Result<StabilityRow, LabError> {
            let (phi2, res2) = if delta == 0.0 {
                (base.pair.phi.clone(), base.residual)
            } else {
                let rhs2 = base_rhs.zip_map(&eta_field, |r, e| r * (delta * e).exp());
                let s = solve_rhs(&bg, rhs2, opts)?;
                (s.pair.phi, s.residual)
            };
            let mut row = stability_row(&base.pair.phi, &phi2, bg.metric(), p, exponent)?;
            row.delta = delta;
            row.residuals = [base.residual, res2];
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if ratios.len() < 2 {
        1.0
    } else if min_ratio > 0.0 {
        max_ratio / min_ratio
    } else {
        f64::INFINITY
    };
    let pass = rows.iter().all(|r| r.holds) && spread <= STABILITY_SPREAD;
    Ok(StabilityReport {
        n,
        p,
        q,
        exponent,
        rows,
        max_ratio,
        min_ratio,
        spread,
        pass,
    })
}

// ---------------------------------------------------------------- b-bounds

#[derive(Debug, Clone, Serialize)]
pub struct BBoundsReport {
    /// `(f_{λ₁}(𝟏)∫S₁(λ(χ)) dvol + f(𝟏) vol) / ∫e^f dvol`.
    pub upper_bound: f64,
    pub measured_eb: f64,
    /// `upper_bound / e^b`.
    pub margin: f64,
    pub strict_upper_holds: bool,
    /// Smallest `Δφ − [(e^b e^f − f(𝟏))/f_{λ₁}(𝟏) − S₁(λ(χ)) + n]` over the grid.
    pub laplacian_min_slack: f64,
    /// Tolerance allowed on the pointwise inequality (residual-driven).
    pub laplacian_tolerance: f64,
    /// `∫ Δφ dvol` with the divergence-form Laplacian.
    pub laplacian_integral: f64,
    /// `∫ tr_g ∇²φ dvol` (non-divergence form; truncation-size).
    pub laplacian_integral_trace: f64,
    /// `c₀εⁿ / (e^{nb} ∫ e^{nf} dvol)` with `ε = σ/(8 + C(g))`.
    pub implied_lower_constant: f64,
    pub residual: f64,
    pub pass: bool,
}

/// Tolerance on `∫Δφ dvol`.
pub const LAPLACIAN_INTEGRAL_TOL: f64 = 1e-8;

/// Checks the upper bound on `e^b` and the integrated Laplacian inequality
/// for a solved pair. A violated strict upper bound is a hard error.
pub fn b_bounds_check(
    bg: &Arc<Background<f64>>,
    rhs: &ScalarField<f64>,
    pair: &SolutionPair<f64>,
) -> Result<BBoundsReport, LabError> {
    let op = bg.operator();
    let g = bg.metric();
    let n = bg.grid().dim();
    let f_one = op.f_one();
    let f1_one = op.f_grad_one();
    let s1 = trace_chi(bg);
    let upper_bound = (f1_one * integrate(&s1, g)? + f_one * g.volume()) / integrate(rhs, g)?;
    let measured_eb = pair.b.exp();
    let strict_upper_holds = measured_eb < upper_bound;
    if !strict_upper_holds {
        return Err(LabError::BoundViolation {
            name: "upper bound on e^b".into(),
            measured: measured_eb,
            bound: upper_bound,
        });
    }
    let prob = ProblemSpec::new(Arc::clone(bg), rhs.clone())?;
    let res = residual(&prob, &pair.phi, pair.b)?.max_abs();
    let lap = laplacian_trace(bg, &pair.phi)?;
    let laplacian_min_slack = (0..rhs.grid().len())
        .map(|i| lap.get(i) - ((measured_eb * rhs.get(i) - f_one) / f1_one - s1.get(i) + n as f64))
        .fold(f64::INFINITY, f64::min);
    let laplacian_tolerance = res / f1_one + 1e-10 * (1.0 + s1.max_abs());
    let laplacian_integral = integrate(&laplacian_divergence(bg, &pair.phi)?, g)?;
    let laplacian_integral_trace = integrate(&lap, g)?;
    let eps = default_epsilon(op.sigma(), bg.christoffel());
    let enf = rhs.map(|e| (n as f64 * (pair.b + e.ln())).exp());
    let implied_lower_constant = abp_constant(n) * eps.powi(n as i32) / integrate(&enf, g)?;
    let pass = strict_upper_holds
        && laplacian_min_slack >= -laplacian_tolerance
        && laplacian_integral.abs() <= LAPLACIAN_INTEGRAL_TOL;
    Ok(BBoundsReport {
        upper_bound,
        measured_eb,
        margin: upper_bound / measured_eb,
        strict_upper_holds,
        laplacian_min_slack,
        laplacian_tolerance,
        laplacian_integral,
        laplacian_integral_trace,
        implied_lower_constant,
        residual: res,
        pass,
    })
}

// ---------------------------------------------------------------- equicontinuity

/// Grid multiples at which the modulus of continuity is tabulated.
pub const MODULUS_STEPS: [usize; 3] = [4, 2, 1];

#[derive(Debug, Clone, Serialize)]
pub struct EquicontinuityRow {
    pub member: usize,
    /// `‖e^f‖_{L^{nq}} / ‖e^f‖_{L¹}`.
    pub class_ratio: f64,
    /// `ω(h)` at `h ∈ {4, 2, 1}·spacing`.
    pub moduli: [f64; 3],
    pub sup_norm: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquicontinuityReport {
    pub k_class: f64,
    pub h: [f64; 3],
    pub rows: Vec<EquicontinuityRow>,
    /// Family maximum of `ω(h)`.
    pub envelope: [f64; 3],
    pub pass: bool,
}

/// Modulus of continuity `ω(h) = max_{d(x,y) ≤ h} |φ(x) − φ(y)|` for each `h`,
/// with `d` the length of the straight chart segment (trapezoid rule on the
/// two endpoint metrics).
pub fn modulus_of_continuity(phi: &ScalarField<f64>, g: &MetricField<f64>, hs: &[f64]) -> Vec<f64> {
    let grid = phi.grid();
    let n = grid.dim();
    let spacing = grid.spacing()[0];
    let lmin = g.equivalence_constants().0;
    let hmax = hs.iter().copied().fold(0.0, f64::max);
    let reach = (hmax / (lmin.sqrt() * spacing)).ceil() as isize;
    let mut offsets = Vec::new();
    let span = -reach..=reach;
    for a in span.clone() {
        for b in span.clone() {
            for c in if n == 3 { span.clone() } else { 0..=0 } {
                let o = [a, b, c];
                if o[..n].iter().any(|&v| v != 0) && o[..n] > [0; 3][..n] {
                    offsets.push(o);
                }
            }
        }
    }
    let local: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let mut best = vec![0.0f64; hs.len()];
            for o in &offsets {
                let y = grid.shift_by(x, &o[..n]);
                let d: Vec<f64> = (0..n).map(|a| o[a] as f64 * grid.spacing()[a]).collect();
                let len = |idx: usize| {
                    let m = g.g(idx);
                    let mut s = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            s += m.get(a, b) * d[a] * d[b];
                        }
                    }
                    s.sqrt()
                };
                let dist = 0.5 * (len(x) + len(y));
                let jump = (phi.get(x) - phi.get(y)).abs();
                for (k, &h) in hs.iter().enumerate() {
                    if dist <= h * (1.0 + 1e-12) {
                        best[k] = best[k].max(jump);
                    }
                }
            }
            best
        })
        .collect();
    (0..hs.len())
        .map(|k| local.iter().map(|b| b[k]).fold(0.0, f64::max))
        .collect()
}

/// Solves each member of a right-hand-side family from the class
/// `R_K = {‖e^f‖_{L^{nq}}/‖e^f‖_{L¹} < K}` and tabulates moduli of continuity.
pub fn equicontinuity_probe(
    fixture: &Fixture,
    family: &[RhsExpr],
    q: f64,
    k_class: f64,
    opts: &SolveOptions,
) -> Result<EquicontinuityReport, LabError> {
    check_pq(1.0, q)?;
    let bg = fixture.background()?;
    let g = bg.metric();
    let n = fixture.dim as f64;
    let spacing = bg.grid().spacing()[0];
    let h = MODULUS_STEPS.map(|m| m as f64 * spacing);
    let fields: Vec<ScalarField<f64>> = family
        .iter()
        .map(|r| r.field(&bg))
        .collect::<Result<_, _>>()?;
    for (member, f) in fields.iter().enumerate() {
        let ratio = norm(f, n * q, g)? / norm(f, 1.0, g)?;
        if !(ratio < k_class) {
            return Err(LabError::Argument(format!(
                "member {member} is outside the class R_K: norm ratio {ratio} >= K = {k_class}"
            )));
        }
    }
    let rows: Vec<EquicontinuityRow> = fields
        .into_par_iter()
        .enumerate()
        .map(|(member, f)| -> Result<EquicontinuityRow, LabError> {
            let class_ratio = norm(&f, n * q, g)? / norm(&f, 1.0, g)?;
            let sol = solve_rhs(&bg, f, opts)?;
            let m = modulus_of_continuity(&sol.pair.phi, g, &h);
            Ok(EquicontinuityRow {
                member,
                class_ratio,
                moduli: [m[0], m[1], m[2]],
                sup_norm: sol.pair.phi.max_abs(),
                residual: sol.residual,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut envelope = [0.0f64; 3];
    for r in &rows {
        for k in 0..3 {
            envelope[k] = envelope[k].max(r.moduli[k]);
        }
    }
    let finite = envelope.iter().all(|v| v.is_finite());
    let monotone = envelope[0] >= envelope[1] && envelope[1] >= envelope[2];
    Ok(EquicontinuityReport {
        k_class,
        h,
        rows,
        envelope,
        pass: finite && monotone,
    })
}

/// Gap between the two approximation sequences at one level.
#[derive(Debug, Clone, Serialize)]
pub struct BGapRow {
    pub level: usize,
    pub b: f64,
    pub b_alt: f64,
    pub gap: f64,
    /// `‖φ_i − φ̃_i‖_∞`.
    pub phi_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BUniquenessReport {
    pub rows: Vec<BGapRow>,
    pub final_gap: f64,
    pub final_phi_gap: f64,
    pub non_increasing: bool,
    pub pass: bool,
}

/// Final gap allowed between the two sequences.
pub const B_GAP_TOL: f64 = 1e-3;
/// Increases below this count as round-off when checking monotonicity.
pub const B_GAP_NOISE: f64 = 1e-10;

/// Solves two independent approximation sequences of `rough` and compares
/// their `b` level by level.
pub fn b_uniqueness_probe(
    bg: &Arc<Background<f64>>,
    rough: &ScalarField<f64>,
    schedule: &MollifierSchedule,
    alt: &MollifierSchedule,
    opts: &SolveOptions,
) -> Result<BUniquenessReport, LabError> {
    let (a, b) = rayon::join(
        || weak_solve(bg, rough, schedule, opts),
        || weak_solve(bg, rough, alt, opts),
    );
    let (a, b) = (a?, b?);
    let rows: Vec<BGapRow> = a
        .certificate
        .b_per_level
        .iter()
        .zip(&b.certificate.b_per_level)
        .zip(a.phis.iter().zip(&b.phis))
        .enumerate()
        .map(|(i, ((&ba, &bb), (pa, pb)))| BGapRow {
            level: i + 1,
            b: ba,
            b_alt: bb,
            gap: (ba - bb).abs(),
            phi_gap: pa.sub(pb).max_abs(),
        })
        .collect();
    let non_increasing = rows.windows(2).all(|w| w[1].gap <= w[0].gap + B_GAP_NOISE);
    let last = rows.last().expect("schedules have at least three levels");
    let (final_gap, final_phi_gap) = (last.gap, last.phi_gap);
    Ok(BUniquenessReport {
        pass: non_increasing && final_gap <= B_GAP_TOL,
        rows,
        final_gap,
        final_phi_gap,
        non_increasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{TrigKind, TrigTerm};
    use crate::operators::Family;
    use proptest::prelude::*;

    fn sinsin(amp: f64) -> Expr {
        Expr::trig(vec![TrigTerm::new(
            amp,
            &[1, 1],
            &[TrigKind::Sin, TrigKind::Sin],
        )])
    }

    fn ma_fixture(size: usize) -> Fixture {
        Fixture::flat(2, size, Family::MongeAmpere, 1.0, 0.5)
    }

    #[test]
    fn exponent_arithmetic() {
        assert_eq!(stability_exponent(2, 2.0, 2.0), 1.0 / 3.0);
        assert_eq!(stability_exponent(2, 1.0, 2.0), 1.0 / 5.0);
        assert_eq!(stability_exponent(3, 3.0, 2.0), 1.0 / 3.0);
    }

    proptest! {
        #[test]
        fn exponent_lies_in_unit_interval(n in 2usize..4, p in 0.01f64..10.0, q in 1.001f64..10.0) {
            let e = stability_exponent(n, p, q);
            prop_assert!(e > 0.0 && e < 1.0);
            // increasing in p
            prop_assert!(stability_exponent(n, p * 1.5, q) > e);
        }
    }

    #[test]
    fn divergence_laplacian_integrates_to_zero() {
        let mut fx = ma_fixture(16);
        fx.metric = crate::geometry::SymTensorExpr::new(vec![
            Expr::Sum(vec![Expr::Const(1.0), sinsin(0.2)]),
            Expr::Const(0.1),
            Expr::Const(1.3),
        ]);
        let bg = fx.background().unwrap();
        let phi = ScalarField::from_fn(bg.grid(), |x| {
            (6.0 * x[0]).sin().exp() * (2.0 * std::f64::consts::PI * x[1]).cos()
        })
        .unwrap();
        let lap = laplacian_divergence(&bg, &phi).unwrap();
        assert!(integrate(&lap, bg.metric()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn closed_form_b_bounds() {
        let fx = ma_fixture(16);
        let bg = fx.background().unwrap();
        for kappa in [1.0, 0.5, 4.0] {
            let rhs = ScalarField::constant(bg.grid(), kappa);
            let sol = solve_rhs(&bg, rhs.clone(), &SolveOptions::default()).unwrap();
            let r = b_bounds_check(&bg, &rhs, &sol.pair).unwrap();
            assert!((r.measured_eb - 1.0 / kappa).abs() < 1e-10);
            assert!((r.upper_bound - 2.0 / kappa).abs() < 1e-12);
            assert!((r.margin - 2.0).abs() < 1e-9);
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn violated_upper_bound_is_a_hard_error() {
        let fx = ma_fixture(8);
        let bg = fx.background().unwrap();
        let rhs = ScalarField::constant(bg.grid(), 1.0);
        let fake = SolutionPair {
            phi: ScalarField::zeros(bg.grid()),
            b: 2f64.ln(),
        };
        assert!(matches!(
            b_bounds_check(&bg, &rhs, &fake),
            Err(LabError::BoundViolation { .. })
        ));
    }

    #[test]
    fn stability_branches() {
        let grid = crate::geometry::PeriodicGrid::uniform(2, 8, 1.0).unwrap();
        let g = MetricField::identity(&grid);
        let phi = ScalarField::from_fn(&grid, |x| -x[0] * (1.0 - x[0])).unwrap();
        let zero = stability_row(&phi, &phi, &g, 2.0, 1.0 / 3.0).unwrap();
        assert_eq!(zero.branch, StabilityBranch::Zero);
        assert!(zero.holds);
        let other = phi.map(|v| 0.5 * v);
        let regular = stability_row(&phi, &other, &g, 2.0, 1.0 / 3.0).unwrap();
        assert_eq!(regular.branch, StabilityBranch::Regular);
        // a tiny exponent pushes r above one half
        let large = stability_row(&phi, &other, &g, 1.0, stability_exponent(2, 1.0, 1.01)).unwrap();
        assert_eq!(large.branch, StabilityBranch::Large);
        assert!(large.holds);
    }

    #[test]
    fn trivial_linf_row() {
        let fx = ma_fixture(16);
        let rep = linf_experiment(
            &fx,
            &[16],
            &[RhsExpr::relative(Expr::Const(1.0))],
            2.0,
            1.0,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert!(rep.rows[0].sup_norm < 1e-12);
        assert!(rep.pass);
    }

    #[test]
    fn modulus_of_linear_ramp() {
        let grid = crate::geometry::PeriodicGrid::uniform(2, 16, 1.0).unwrap();
        let g = MetricField::identity(&grid);
        let phi =
            ScalarField::from_fn(&grid, |x| (2.0 * std::f64::consts::PI * x[0]).sin()).unwrap();
        let h = 1.0 / 16.0;
        let m = modulus_of_continuity(&phi, &g, &[4.0 * h, h]);
        assert!(m[0] > m[1] && m[1] > 0.0);
        let flat = ScalarField::constant(&grid, 3.0);
        assert_eq!(modulus_of_continuity(&flat, &g, &[h]), vec![0.0]);
    }

    #[test]
    fn class_violation_is_rejected() {
        let fx = ma_fixture(16);
        let spike = RhsExpr::new(Expr::Exp(Box::new(sinsin(6.0))));
        let err =
            equicontinuity_probe(&fx, &[spike], 2.0, 1.5, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, LabError::Argument(_)));
    }

    #[test]
    fn identical_schedules_have_zero_gap() {
        let bg = ma_fixture(16).background().unwrap();
        let rough = RhsExpr::new(Expr::Sum(vec![
            Expr::Const(1.0),
            Expr::Abs(Box::new(sinsin(0.5))),
        ]))
        .field(&bg)
        .unwrap();
        let sched = MollifierSchedule {
            levels: 3,
            ..Default::default()
        };
        let r = b_uniqueness_probe(&bg, &rough, &sched, &sched, &SolveOptions::default()).unwrap();
        assert!(r
            .rows
            .iter()
            .all(|row| row.gap == 0.0 && row.phi_gap == 0.0));
        assert!(r.pass);
    }
}
