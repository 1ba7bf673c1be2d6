//! The three subcommands and the experiment dispatch.

use std::path::{Path, PathBuf};
use std::time::Instant;

use hessian_lab::abp::{abp_check, paraboloid_fixture, random_convex_fixture, QUADRATURE_SLACK};
use hessian_lab::estimates::{
    b_bounds_check, b_uniqueness_probe, equicontinuity_probe, linf_experiment,
    stability_experiment, StabilityBranch,
};
use hessian_lab::fixture::solve_rhs;
use hessian_lab::geometry::{BallDomain, ScalarField};
use hessian_lab::gradient::{
    euclidean_constant_check, gradient_level_sweep, growth_condition_check,
};
use hessian_lab::operators::{
    check_conditions, check_csubsolution, AsymmetricCounterexample, ConditionReport, Family,
};
use hessian_lab::weak::{sample_points, viscosity_check, weak_solve, SuperBranch};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, RunConfig};
use crate::error::CliError;
use crate::report::{coords, input_hash, num, opt, Check, Emitter, RunReport, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    VerifyConditions,
    Experiment,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::VerifyConditions => "verify-conditions",
            Command::Experiment => "experiment",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Default output directory when neither `--out` nor `output.dir` is given.
pub const DEFAULT_OUT: &str = "hessian-lab-out";

/// Loads and validates the config, runs `cmd` and writes every output plus
/// `report.json`.
pub fn run(cmd: Command, opts: &RunOptions) -> Result<RunReport, CliError> {
    let (mut cfg, bytes) = RunConfig::load(&opts.config)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let base = opts
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    cfg.validate(&base)?;
    let mut inputs = vec![bytes];
    for f in cfg.input_files(&base) {
        inputs.push(std::fs::read(&f).map_err(|e| CliError::io(&f, e))?);
    }
    let hash = input_hash(&inputs.iter().map(Vec::as_slice).collect::<Vec<_>>());
    let out = opts
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let report = RunReport {
        command: cmd.name().into(),
        config: cfg.clone(),
        input_hash: hash,
        seed: cfg.seed,
        rng: "ChaCha8".into(),
        threads: opts.threads,
        outputs: Vec::new(),
        checks: Vec::new(),
        warnings: Vec::new(),
        timings: Default::default(),
        pass: true,
    };
    let mut em = Emitter::new(&out, report)?;
    let body = |em: &mut Emitter| -> Result<(), CliError> {
        let start = Instant::now();
        match cmd {
            Command::Solve => cmd_solve(&cfg, &base, em)?,
            Command::VerifyConditions => cmd_verify_conditions(&cfg, &base, em)?,
            Command::Experiment => cmd_experiment(&cfg, &base, em)?,
        }
        em.time("total", start.elapsed().as_secs_f64());
        Ok(())
    };
    match opts.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?
            .install(|| body(&mut em))?,
        None => body(&mut em)?,
    }
    em.finish()
}

// ---------------------------------------------------------------- solve

#[derive(Serialize)]
struct SolveRow {
    size: usize,
    b: f64,
    residual: f64,
    bisections: u32,
    sup_norm: f64,
    error: Option<f64>,
    order: Option<f64>,
    b_bounds: hessian_lab::estimates::BBoundsReport,
}

/// Solves the pair equation at every configured size.
pub fn cmd_solve(cfg: &RunConfig, base: &Path, em: &mut Emitter) -> Result<(), CliError> {
    let mut path = Table::new(&["size", "t", "b_t", "newton_iters", "final_residual"]);
    let mut table = Table::new(&[
        "size",
        "b",
        "residual",
        "bisections",
        "sup_norm",
        "error",
        "order",
    ]);
    let mut rows: Vec<SolveRow> = Vec::new();
    for &size in &cfg.geometry.sizes {
        let bg = cfg.fixture(size).background()?;
        let rhs = cfg.rhs_field(&bg, base)?;
        let start = Instant::now();
        let sol = solve_rhs(&bg, rhs.clone(), &cfg.solver)?;
        em.time(&format!("solve_{size}"), start.elapsed().as_secs_f64());
        for step in &sol.log {
            path.push(vec![
                size.to_string(),
                num(step.t),
                num(step.b_t),
                step.newton_iters.to_string(),
                num(step.final_residual),
            ]);
        }
        let mut buf = Vec::new();
        sol.pair.phi.write_binary(&mut buf)?;
        em.bytes(&format!("phi_{size}.bin"), &buf, "field")?;
        let error = cfg
            .exact_field(bg.grid())?
            .map(|ex| sol.pair.phi.sub(&ex).max_abs());
        let order = match (rows.last(), error) {
            (Some(prev), Some(e)) => prev
                .error
                .map(|pe| (pe / e).ln() / (size as f64 / prev.size as f64).ln()),
            _ => None,
        };
        let bb = b_bounds_check(&bg, &rhs, &sol.pair)?;
        table.push(vec![
            size.to_string(),
            num(sol.pair.b),
            num(sol.residual),
            sol.bisections.to_string(),
            num(sol.pair.phi.max_abs()),
            opt(error),
            opt(order),
        ]);
        em.check(Check::new(
            &format!("b_bounds.strict_upper[{size}]"),
            bb.strict_upper_holds,
            format!(
                "e^b = {} < bound {}",
                num(bb.measured_eb),
                num(bb.upper_bound)
            ),
        ));
        em.check(Check::new(
            &format!("b_bounds.laplacian_integral[{size}]"),
            bb.laplacian_integral.abs() <= hessian_lab::estimates::LAPLACIAN_INTEGRAL_TOL,
            format!("∫Δφ dvol = {}", num(bb.laplacian_integral)),
        ));
        rows.push(SolveRow {
            size,
            b: sol.pair.b,
            residual: sol.residual,
            bisections: sol.bisections,
            sup_norm: sol.pair.phi.max_abs(),
            error,
            order,
            b_bounds: bb,
        });
    }
    em.csv("solve.csv", &table)?;
    em.csv("solve_path.csv", &path)?;
    em.json("solve.json", &rows)?;
    Ok(())
}

// ---------------------------------------------------------------- conditions

fn condition_rows(table: &mut Table, family: &str, rep: &ConditionReport) {
    for v in &rep.verdicts {
        table.push(vec![
            family.into(),
            v.name.clone(),
            v.pass.to_string(),
            num(v.measured),
            v.witness
                .as_ref()
                .map(|w| w.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";"))
                .unwrap_or_default(),
        ]);
    }
}

#[derive(Serialize)]
struct ConditionsSummary {
    operator: ConditionReport,
    counterexample: Option<ConditionReport>,
    csubsolution: Option<hessian_lab::operators::CSubsolutionReport>,
}

/// Randomized structural-condition suite for the configured operator.
pub fn cmd_verify_conditions(
    cfg: &RunConfig,
    base: &Path,
    em: &mut Emitter,
) -> Result<(), CliError> {
    let conds = cfg.conditions.clone().unwrap_or_default();
    let fixture = cfg.fixture(cfg.first_size());
    let op = fixture.operator()?;
    let rep = check_conditions(&op, conds.samples, cfg.seed);
    let mut table = Table::new(&["family", "condition", "pass", "measured", "witness"]);
    condition_rows(&mut table, "operator", &rep);
    for v in &rep.verdicts {
        em.check(Check::new(
            &format!("conditions.{}", v.name),
            v.pass,
            num(v.measured),
        ));
    }
    if op.family() == Family::MongeAmpere {
        let n = cfg.geometry.dim as f64;
        let target = n.powf(-n);
        let dev = (rep.product_min - target)
            .abs()
            .max((rep.product_max - target).abs());
        em.check(Check::new(
            "conditions.product_identity",
            dev <= 1e-12,
            format!("max |Π f_i − n^-n| = {}", num(dev)),
        ));
        em.check(Check::new(
            "conditions.gradient_sum_equality_at_one",
            (rep.grad_sum_at_one - rep.grad_sum_floor).abs() <= 1e-12,
            format!(
                "Σ f_i(1) = {} vs n c^(1/n) = {}",
                num(rep.grad_sum_at_one),
                num(rep.grad_sum_floor)
            ),
        ));
    }
    let counter = conds.counterexample.as_ref().map(|w| {
        let r = check_conditions(
            &AsymmetricCounterexample::new(w.clone()),
            conds.samples,
            cfg.seed,
        );
        condition_rows(&mut table, "counterexample", &r);
        r
    });
    if let Some(r) = &counter {
        let detected = r.verdicts.iter().any(|v| !v.pass && v.witness.is_some());
        em.check(Check::new(
            "conditions.counterexample_detected",
            detected,
            "asymmetric family must fail with a witness",
        ));
    }
    let has_rhs =
        cfg.problem.rhs.is_some() || cfg.problem.rhs_file.is_some() || cfg.problem.exact.is_some();
    let csub = if has_rhs {
        let bg = fixture.background()?;
        let rhs = cfg.rhs_field(&bg, base)?;
        Some(check_csubsolution(&op, bg.chi(), bg.metric(), rhs.max())?)
    } else {
        None
    };
    em.csv("conditions.csv", &table)?;
    em.json(
        "conditions.json",
        &ConditionsSummary {
            operator: rep,
            counterexample: counter,
            csubsolution: csub,
        },
    )?;
    Ok(())
}

// ---------------------------------------------------------------- experiments

/// Runs the configured experiment.
pub fn cmd_experiment(cfg: &RunConfig, base: &Path, em: &mut Emitter) -> Result<(), CliError> {
    let Some(exp) = &cfg.experiment else {
        return Err(CliError::Config(format!(
            "experiment: missing table; valid names are {}",
            crate::config::EXPERIMENTS.join(", ")
        )));
    };
    let start = Instant::now();
    match exp {
        ExperimentConfig::Linf { family, q, p } => {
            if family.is_empty() {
                em.warn("empty parameter grid: experiment.family has no members; nothing to run");
                return Ok(());
            }
            let rep = linf_experiment(
                &cfg.fixture(cfg.first_size()),
                &cfg.geometry.sizes,
                family,
                *q,
                *p,
                &cfg.solver,
            )?;
            let mut t = Table::new(&[
                "size", "member", "lnq_norm", "entropy", "sup_norm", "b", "residual", "ratio",
                "error",
            ]);
            for r in &rep.rows {
                t.push(vec![
                    r.size.to_string(),
                    r.member.to_string(),
                    num(r.lnq_norm),
                    num(r.entropy),
                    num(r.sup_norm),
                    num(r.b),
                    num(r.residual),
                    num(r.ratio),
                    r.error.clone().unwrap_or_default(),
                ]);
            }
            for w in &rep.warnings {
                em.warn(w.clone());
            }
            em.check(Check::new(
                "linf.envelope",
                rep.pass,
                format!(
                    "fitted C = {} within envelope {}",
                    num(rep.fitted_c),
                    num(rep.envelope)
                ),
            ));
            em.csv("linf.csv", &t)?;
            em.json("linf.json", &rep)?;
        }
        ExperimentConfig::Stability {
            f,
            eta,
            deltas,
            p,
            q,
        } => {
            if deltas.is_empty() {
                em.warn("empty parameter grid: experiment.deltas is empty; nothing to run");
                return Ok(());
            }
            let f = f
                .clone()
                .or_else(|| cfg.problem.rhs.clone())
                .expect("validated");
            let rep = stability_experiment(
                &cfg.fixture(cfg.first_size()),
                &f,
                eta,
                deltas,
                *p,
                *q,
                &cfg.solver,
            )?;
            let mut t = Table::new(&[
                "delta",
                "sup_diff",
                "lp_norm_pos",
                "r",
                "branch",
                "ratio",
                "bound",
                "holds",
                "residual_1",
                "residual_2",
            ]);
            for r in &rep.rows {
                let branch = match r.branch {
                    StabilityBranch::Zero => "zero",
                    StabilityBranch::Large => "large",
                    StabilityBranch::Regular => "regular",
                };
                t.push(vec![
                    num(r.delta),
                    num(r.sup_diff),
                    num(r.lp_norm_pos),
                    num(r.r),
                    branch.into(),
                    opt(r.ratio),
                    opt(r.bound),
                    r.holds.to_string(),
                    num(r.residuals[0]),
                    num(r.residuals[1]),
                ]);
            }
            em.check(Check::new(
                "stability.spread",
                rep.pass,
                format!("exponent {} spread {}", num(rep.exponent), num(rep.spread)),
            ));
            em.csv("stability.csv", &t)?;
            em.json("stability.json", &rep)?;
        }
        ExperimentConfig::BBounds {} => {
            let mut t = Table::new(&[
                "size",
                "upper_bound",
                "measured_eb",
                "margin",
                "strict_upper_holds",
                "laplacian_min_slack",
                "laplacian_tolerance",
                "laplacian_integral",
                "laplacian_integral_trace",
                "implied_lower_constant",
                "residual",
                "pass",
            ]);
            let mut reps = Vec::new();
            for &size in &cfg.geometry.sizes {
                let bg = cfg.fixture(size).background()?;
                let rhs = cfg.rhs_field(&bg, base)?;
                let sol = solve_rhs(&bg, rhs.clone(), &cfg.solver)?;
                let r = b_bounds_check(&bg, &rhs, &sol.pair)?;
                t.push(vec![
                    size.to_string(),
                    num(r.upper_bound),
                    num(r.measured_eb),
                    num(r.margin),
                    r.strict_upper_holds.to_string(),
                    num(r.laplacian_min_slack),
                    num(r.laplacian_tolerance),
                    num(r.laplacian_integral),
                    num(r.laplacian_integral_trace),
                    num(r.implied_lower_constant),
                    num(r.residual),
                    r.pass.to_string(),
                ]);
                em.check(Check::new(
                    &format!("b_bounds[{size}]"),
                    r.pass,
                    format!("margin {} ∫Δφ {}", num(r.margin), num(r.laplacian_integral)),
                ));
                reps.push(r);
            }
            em.csv("b_bounds.csv", &t)?;
            em.json("b_bounds.json", &reps)?;
        }
        ExperimentConfig::BUniqueness { schedule, alt } => {
            let bg = cfg.fixture(cfg.first_size()).background()?;
            let rough = cfg.rhs_field(&bg, base)?;
            let rep = b_uniqueness_probe(&bg, &rough, schedule, alt, &cfg.solver)?;
            let mut t = Table::new(&["level", "b", "b_alt", "gap", "phi_gap"]);
            for r in &rep.rows {
                t.push(vec![
                    r.level.to_string(),
                    num(r.b),
                    num(r.b_alt),
                    num(r.gap),
                    num(r.phi_gap),
                ]);
            }
            em.check(Check::new(
                "b_uniqueness.gap",
                rep.pass,
                format!(
                    "final gap {} non-increasing {}",
                    num(rep.final_gap),
                    rep.non_increasing
                ),
            ));
            em.csv("b_uniqueness.csv", &t)?;
            em.json("b_uniqueness.json", &rep)?;
        }
        ExperimentConfig::Equicontinuity { family, q, k_class } => {
            if family.is_empty() {
                em.warn("empty parameter grid: experiment.family has no members; nothing to run");
                return Ok(());
            }
            let rep = equicontinuity_probe(
                &cfg.fixture(cfg.first_size()),
                family,
                *q,
                *k_class,
                &cfg.solver,
            )?;
            let mut t = Table::new(&[
                "member",
                "class_ratio",
                "omega_4h",
                "omega_2h",
                "omega_h",
                "sup_norm",
                "residual",
            ]);
            for r in &rep.rows {
                t.push(vec![
                    r.member.to_string(),
                    num(r.class_ratio),
                    num(r.moduli[0]),
                    num(r.moduli[1]),
                    num(r.moduli[2]),
                    num(r.sup_norm),
                    num(r.residual),
                ]);
            }
            em.check(Check::new(
                "equicontinuity.envelope",
                rep.pass,
                format!("envelope [{}]", rep.envelope.map(num).join(", ")),
            ));
            em.csv("equicontinuity.csv", &t)?;
            em.json("equicontinuity.json", &rep)?;
        }
        ExperimentConfig::Abp {
            resolution,
            scale,
            random,
        } => {
            let dim = cfg.geometry.dim;
            let mut t = Table::new(&[
                "fixture",
                "epsilon",
                "c0",
                "c0_eps_n",
                "ma_mass",
                "mask_count",
                "min_det",
                "pass",
            ]);
            let mut reps = Vec::new();
            let mut push = |t: &mut Table, name: String, r: hessian_lab::abp::AbpReport| {
                t.push(vec![
                    name,
                    num(r.epsilon),
                    num(r.c0),
                    num(r.c0_eps_n),
                    num(r.ma_mass),
                    r.mask_count.to_string(),
                    num(r.min_det),
                    r.pass.to_string(),
                ]);
                reps.push(r);
            };
            let v = paraboloid_fixture(dim, *resolution, *scale)?;
            let r = abp_check(&v, *scale)?;
            let rel = r.ma_mass / r.c0_eps_n - 1.0;
            em.check(Check::new(
                "abp.equality_case",
                r.pass && rel.abs() <= QUADRATURE_SLACK,
                format!("ma_mass / c0 eps^n - 1 = {}", num(rel)),
            ));
            push(&mut t, "paraboloid".into(), r);
            if *random > 0 {
                let domain =
                    std::sync::Arc::new(BallDomain::new(2, 1.0, *resolution, &[0.0, 0.0])?);
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let mut passed = 0;
                for i in 0..*random {
                    let (v, eps) = random_convex_fixture(&domain, &mut rng);
                    let r = abp_check(&v, eps)?;
                    passed += usize::from(r.pass);
                    push(&mut t, format!("random_{i}"), r);
                }
                em.check(Check::new(
                    "abp.randomized",
                    passed == *random,
                    format!("{passed}/{random} pass"),
                ));
            }
            em.csv("abp.csv", &t)?;
            em.json("abp.json", &reps)?;
        }
        ExperimentConfig::Gradient {
            center,
            radius,
            schedule,
            sweep,
            psi,
        } => {
            let bg = cfg.fixture(cfg.first_size()).background()?;
            let rough = cfg.rhs_field(&bg, base)?;
            let c = bg.grid().index(center);
            let lv = gradient_level_sweep(&bg, &rough, schedule, c, *radius, &cfg.solver)?;
            let mut t = Table::new(&[
                "level",
                "K",
                "r",
                "max_rho_grad",
                "G_argmax",
                "threshold",
                "threshold_exceeded",
                "x_nn",
                "x_nn_bound",
            ]);
            for row in &lv.rows {
                let p = &row.probe;
                t.push(vec![
                    row.level.to_string(),
                    num(p.k),
                    num(p.r),
                    num(p.max_rho_grad),
                    p.g_argmax_coords.as_deref().map(coords).unwrap_or_default(),
                    num(p.threshold),
                    p.threshold_exceeded.to_string(),
                    opt(p.x_nn),
                    opt(p.x_nn_bound),
                ]);
                if p.x_nn_holds == Some(false) {
                    em.warn(format!(
                        "level {}: X_nn bound fails past the threshold",
                        row.level
                    ));
                }
            }
            em.check(Check::new(
                "gradient.level_envelope",
                lv.pass,
                format!("max/min of max ρ|∇φ| = {}", num(lv.envelope_ratio)),
            ));
            em.csv("gradient_levels.csv", &t)?;
            em.json("gradient_levels.json", &lv)?;
            if let Some(sw) = sweep {
                let rep = euclidean_constant_check(sw)?;
                let mut t = Table::new(&["dim", "a_norm", "r", "K", "lhs", "bound", "margin"]);
                for r in &rep.rows {
                    t.push(vec![
                        r.dim.to_string(),
                        num(r.a_norm),
                        num(r.r),
                        num(r.k),
                        num(r.lhs),
                        num(r.bound),
                        num(r.margin),
                    ]);
                }
                em.check(Check::new(
                    "gradient.euclidean_constant",
                    rep.pass,
                    format!(
                        "{} violations, min margin {}",
                        rep.violations,
                        num(rep.min_margin)
                    ),
                ));
                em.csv("gradient_constant.csv", &t)?;
                #[derive(Serialize)]
                struct Summary {
                    members: usize,
                    min_margin: f64,
                    violations: usize,
                    pass: bool,
                }
                em.json(
                    "gradient_constant.json",
                    &Summary {
                        members: rep.rows.len(),
                        min_margin: rep.min_margin,
                        violations: rep.violations,
                        pass: rep.pass,
                    },
                )?;
            }
            if !psi.is_empty() {
                let mut t = Table::new(&[
                    "index",
                    "horizontal",
                    "t_coeff",
                    "grad_coeff",
                    "grad_power",
                    "tail_slope",
                    "pass",
                    "witness_omega",
                    "witness_ratio",
                ]);
                for (i, spec) in psi.iter().enumerate() {
                    let g = growth_condition_check(spec);
                    t.push(vec![
                        i.to_string(),
                        num(spec.horizontal),
                        num(spec.t_coeff),
                        num(spec.grad_coeff),
                        num(spec.grad_power),
                        num(g.tail_slope),
                        g.pass.to_string(),
                        opt(g.witness.map(|w| w.0)),
                        opt(g.witness.map(|w| w.1)),
                    ]);
                    em.check(Check::new(
                        &format!("gradient.growth[{i}]"),
                        g.pass,
                        format!("tail slope {}", num(g.tail_slope)),
                    ));
                }
                em.csv("gradient_growth.csv", &t)?;
            }
        }
        ExperimentConfig::WeakSolve { schedule } => {
            let bg = cfg.fixture(cfg.first_size()).background()?;
            let rough = cfg.rhs_field(&bg, base)?;
            let sol = weak_solve(&bg, &rough, schedule, &cfg.solver)?;
            let c = &sol.certificate;
            let mut t = Table::new(&[
                "level",
                "cutoff",
                "floor",
                "refinements",
                "mollifier_error",
                "target",
                "power_ratio",
                "mass_ratio",
                "b",
                "residual",
                "gap",
                "grad_l2_sq",
                "energy_bound",
            ]);
            for (i, l) in sol.levels.iter().enumerate() {
                t.push(vec![
                    l.level.to_string(),
                    num(l.cutoff),
                    num(l.floor),
                    l.refinements.to_string(),
                    num(l.error),
                    num(l.target),
                    num(l.power_ratio),
                    num(l.mass_ratio),
                    num(c.b_per_level[i]),
                    num(c.residual_per_level[i]),
                    num(c.gaps[i]),
                    num(c.energy[i].grad_l2_sq),
                    num(c.energy[i].bound),
                ]);
                if !l.derived_bounds_hold() {
                    em.warn(format!(
                        "level {}: mass/power bounds not yet in force",
                        l.level
                    ));
                }
            }
            let mut cauchy = Table::new(&["k", "l", "sup_diff"]);
            for (k, row) in c.cauchy_table.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    cauchy.push(vec![(k + 1).to_string(), (k + j + 2).to_string(), num(*v)]);
                }
            }
            em.check(Check::new(
                "weak.cauchy_decay",
                c.pass,
                format!("C = {} slope {}", num(c.fitted_c), opt(c.decay_slope)),
            ));
            em.check(Check::new(
                "weak.energy",
                c.energy.iter().all(|e| e.holds),
                "‖∇φ_i‖² ≤ ‖φ_i‖_∞ ∫S₁(χ) on every level",
            ));
            em.csv("weak_solve.csv", &t)?;
            em.csv("weak_cauchy.csv", &cauchy)?;
            em.json("weak_certificate.json", c)?;
            let mut buf = Vec::new();
            sol.pair.phi.write_binary(&mut buf)?;
            em.bytes("weak_phi.bin", &buf, "field")?;
        }
        ExperimentConfig::Viscosity {
            samples,
            probe_radius,
            tol,
            tol_factor,
            schedule,
        } => {
            if *samples == 0 {
                em.warn("empty parameter grid: experiment.samples is 0; nothing to run");
                return Ok(());
            }
            let bg = cfg.fixture(cfg.first_size()).background()?;
            let rhs = cfg.rhs_field(&bg, base)?;
            let pair = match schedule {
                Some(s) => weak_solve(&bg, &rhs, s, &cfg.solver)?.pair,
                None => solve_rhs(&bg, rhs.clone(), &cfg.solver)?.pair,
            };
            let pts = sample_points(bg.grid(), *samples, cfg.seed);
            let (tol, calibration) = match (tol, cfg.exact_field(bg.grid())?) {
                (Some(t), _) => (*t, None),
                (None, Some(exact)) => {
                    let cal = viscosity_check(&bg, &exact, 0.0, &rhs, &pts, *probe_radius, 0.0)?;
                    let disc = cal.rows.iter().map(|r| r.deviation()).fold(0.0, f64::max);
                    (tol_factor * disc, Some(disc))
                }
                (None, None) => unreachable!("validated"),
            };
            let rep = viscosity_check(&bg, &pair.phi, pair.b, &rhs, &pts, *probe_radius, tol)?;
            let mut t = Table::new(&[
                "index",
                "coords",
                "target",
                "sub_value",
                "super_value",
                "sub_ok",
                "super_branch",
            ]);
            for r in &rep.rows {
                let branch = match r.super_branch {
                    SuperBranch::OutsideCone => "outside_cone",
                    SuperBranch::Value => "value",
                    SuperBranch::Failed => "failed",
                };
                t.push(vec![
                    r.index.to_string(),
                    coords(&r.coords),
                    num(r.target),
                    num(r.sub_value),
                    opt(r.super_value),
                    r.sub_ok.to_string(),
                    branch.into(),
                ]);
            }
            for w in &rep.warnings {
                em.warn(w.clone());
            }
            let n = rep.rows.len();
            em.check(Check::new(
                "viscosity.subsolution",
                n > 0 && rep.sub_pass == n,
                format!("{}/{n} at tol {}", rep.sub_pass, num(tol)),
            ));
            em.check(Check::new(
                "viscosity.supersolution",
                n > 0 && rep.super_pass == n,
                format!("{}/{n} at tol {}", rep.super_pass, num(tol)),
            ));
            #[derive(Serialize)]
            struct Summary<'a> {
                tol: f64,
                calibration_error: Option<f64>,
                b: f64,
                report: &'a hessian_lab::weak::ViscosityReport,
                note: &'static str,
            }
            em.csv("viscosity.csv", &t)?;
            em.json(
                "viscosity.json",
                &Summary {
                    tol,
                    calibration_error: calibration,
                    b: pair.b,
                    report: &rep,
                    note: "quadratic test functions under-approximate the C² class",
                },
            )?;
        }
    }
    em.time(exp.name(), start.elapsed().as_secs_f64());
    Ok(())
}

/// Reads a field file written by `solve`.
pub fn read_field(path: &Path) -> Result<ScalarField<f64>, CliError> {
    let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(ScalarField::read_binary(std::io::BufReader::new(f))?)
}
