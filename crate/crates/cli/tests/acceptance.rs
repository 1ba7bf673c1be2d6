//! End-to-end acceptance run: one PASS/FAIL line per criterion, non-zero exit
//! if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use hessian_lab::abp::{abp_check, abp_constant, paraboloid_fixture, random_convex_fixture};
use hessian_lab::estimates::{
    b_bounds_check, b_uniqueness_probe, stability_experiment, stability_exponent, StabilityBranch,
};
use hessian_lab::fixture::{solve_rhs, Fixture, RhsExpr};
use hessian_lab::geometry::{
    BallDomain, Expr, PeriodicGrid, ScalarField, StencilOrder, SymTensorExpr, TrigKind, TrigTerm,
};
use hessian_lab::gradient::{euclidean_constant_check, gradient_level_sweep, ConstantSweep};
use hessian_lab::operators::{check_conditions, AsymmetricCounterexample, Family, OperatorSpec};
use hessian_lab::solver::{manufactured_rhs, solve_pair, Background, ProblemSpec, SolveOptions};
use hessian_lab::weak::{
    mollify_sequence, sample_points, viscosity_check, weak_solve, FilterShape, MollifierSchedule,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use TrigKind::{Cos, Sin};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn variable_metric() -> SymTensorExpr {
    SymTensorExpr::new(vec![
        Expr::Trig(vec![
            TrigTerm::constant(1.0, 2),
            TrigTerm::new(0.3, &[1, 0], &[Sin, Cos]),
        ]),
        Expr::Trig(vec![TrigTerm::new(0.1, &[0, 1], &[Cos, Cos])]),
        Expr::Trig(vec![
            TrigTerm::constant(1.0, 2),
            TrigTerm::new(0.2, &[1, 1], &[Cos, Sin]),
        ]),
    ])
}

fn twice_metric() -> SymTensorExpr {
    let SymTensorExpr { components } = variable_metric();
    SymTensorExpr::new(
        components
            .into_iter()
            .map(|c| Expr::Product(vec![Expr::Const(2.0), c]))
            .collect(),
    )
}

fn phi_star() -> Expr {
    Expr::Trig(vec![
        TrigTerm::new(0.01, &[1, 1], &[Sin, Cos]),
        TrigTerm::new(0.004, &[2, 0], &[Cos, Cos]),
    ])
}

fn manufactured(
    size: usize,
) -> Result<(Arc<Background<f64>>, ScalarField<f64>, ScalarField<f64>), String> {
    let grid = PeriodicGrid::<f64>::uniform(2, size, 1.0).map_err(e)?;
    let op = OperatorSpec::monge_ampere(2);
    let rhs = manufactured_rhs(&op, &grid, &variable_metric(), &twice_metric(), &phi_star())
        .map_err(e)?;
    let bg = Background::from_exprs(
        op,
        &grid,
        &variable_metric(),
        &twice_metric(),
        StencilOrder::Fourth,
    )
    .map_err(e)?;
    let exact = ScalarField::from_fn(&grid, |x| phi_star().eval(x, &[1.0, 1.0])).map_err(e)?;
    Ok((Arc::new(bg), rhs, exact))
}

fn flat(size: usize) -> Fixture {
    Fixture::flat(2, size, Family::MongeAmpere, 1.0, 0.5)
}

fn sinsin(amp: f64) -> Expr {
    Expr::Exp(Box::new(Expr::trig(vec![TrigTerm::new(
        amp,
        &[1, 1],
        &[Sin, Sin],
    )])))
}

fn schedule(levels: usize, shape: FilterShape) -> MollifierSchedule {
    MollifierSchedule {
        levels,
        shape,
        ..Default::default()
    }
}

fn manufactured_convergence() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(e)?;
    let mut rows = Vec::new();
    for size in [32, 64, 128] {
        let (bg, rhs, exact) = manufactured(size)?;
        let prob = ProblemSpec::new(bg, rhs).map_err(e)?;
        let start = Instant::now();
        let sol = pool
            .install(|| solve_pair(&prob, &SolveOptions::default()))
            .map_err(e)?;
        let secs = start.elapsed().as_secs_f64();
        let err = sol.pair.phi.sub(&exact.shifted(-exact.max())).max_abs();
        ensure(secs < 30.0, format!("size {size} took {secs:.1} s"))?;
        rows.push((size, err, sol.pair.b, secs));
    }
    let orders: Vec<f64> = rows.windows(2).map(|w| (w[0].1 / w[1].1).log2()).collect();
    ensure(
        orders.iter().all(|&o| o >= 3.5),
        format!("orders {orders:?}"),
    )?;
    let b = rows[2].2;
    ensure(b.abs() <= 1e-6, format!("|b| = {b:e} at 128"))?;
    let slowest = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    Ok(format!(
        "orders {:.3}/{:.3}, |b|_128 = {:.1e}, slowest solve {:.2} s",
        orders[0],
        orders[1],
        b.abs(),
        slowest
    ))
}

fn structural_conditions() -> Outcome {
    let mut detail = Vec::new();
    for n in [2usize, 3] {
        let rep = check_conditions(&OperatorSpec::monge_ampere(n), 10_000, 2024);
        let failed: Vec<_> = rep
            .verdicts
            .iter()
            .filter(|v| !v.pass)
            .map(|v| v.name.clone())
            .collect();
        ensure(failed.is_empty(), format!("n = {n}: failed {failed:?}"))?;
        let target = (n as f64).powi(-(n as i32));
        let dev = (rep.product_min - target)
            .abs()
            .max((rep.product_max - target).abs());
        ensure(dev <= 1e-12, format!("n = {n}: product deviation {dev:e}"))?;
        ensure(
            rep.grad_sum_min >= rep.grad_sum_floor * (1.0 - 1e-12),
            format!("n = {n}: gradient sum below floor"),
        )?;
        ensure(
            (rep.grad_sum_at_one - rep.grad_sum_floor).abs() <= 1e-12,
            format!("n = {n}: no equality at 1"),
        )?;
        detail.push(format!("n={n} |Πf−n^-n| {dev:.1e}"));
    }
    let bad = check_conditions(&AsymmetricCounterexample::new(vec![1.0, 2.0]), 10_000, 2024);
    let witnessed = bad.verdicts.iter().any(|v| !v.pass && v.witness.is_some());
    ensure(witnessed, "counterexample was not rejected with a witness")?;
    Ok(format!("{}; counterexample rejected", detail.join(", ")))
}

fn abp_equality() -> Outcome {
    let mut detail = Vec::new();
    for (dim, res) in [(2, 128), (3, 96)] {
        let v = paraboloid_fixture(dim, res, 1.0).map_err(e)?;
        let r = abp_check(&v, 1.0).map_err(e)?;
        let rel = r.ma_mass / abp_constant(dim) - 1.0;
        ensure(
            r.pass && rel.abs() <= 0.02,
            format!("dim {dim}: relative gap {rel:e}"),
        )?;
        detail.push(format!("{dim}D {rel:+.2e}"));
    }
    let d = Arc::new(BallDomain::new(2, 1.0, 128, &[0.0, 0.0]).map_err(e)?);
    let mut rng = ChaCha8Rng::seed_from_u64(0xab9);
    let mut passed = 0;
    for _ in 0..100 {
        let (v, eps) = random_convex_fixture(&d, &mut rng);
        passed += usize::from(abp_check(&v, eps).map_err(e)?.pass);
    }
    ensure(passed == 100, format!("randomized {passed}/100"))?;
    Ok(format!(
        "paraboloid {}; randomized 100/100",
        detail.join(", ")
    ))
}

fn b_bounds() -> Outcome {
    let bg = flat(32).background().map_err(e)?;
    let closed = ScalarField::constant(bg.grid(), 1.0);
    let sol = solve_rhs(&bg, closed.clone(), &SolveOptions::default()).map_err(e)?;
    let r = b_bounds_check(&bg, &closed, &sol.pair).map_err(e)?;
    ensure(
        (r.measured_eb - 1.0).abs() < 1e-10 && (r.upper_bound - 2.0).abs() < 1e-12,
        format!("{r:?}"),
    )?;
    let mut worst_int: f64 = r.laplacian_integral.abs();
    let mut solves = 1;
    for s in [0.25, 1.0, 2.0] {
        let rhs = RhsExpr::new(sinsin(s)).field(&bg).map_err(e)?;
        let sol = solve_rhs(&bg, rhs.clone(), &SolveOptions::default()).map_err(e)?;
        let r = b_bounds_check(&bg, &rhs, &sol.pair).map_err(e)?;
        ensure(r.pass && r.strict_upper_holds, format!("s = {s}: {r:?}"))?;
        worst_int = worst_int.max(r.laplacian_integral.abs());
        solves += 1;
    }
    let (bg, rhs, _) = manufactured(32)?;
    let sol = solve_rhs(&bg, rhs.clone(), &SolveOptions::default()).map_err(e)?;
    let r = b_bounds_check(&bg, &rhs, &sol.pair).map_err(e)?;
    ensure(r.strict_upper_holds, "variable metric: upper bound")?;
    worst_int = worst_int.max(r.laplacian_integral.abs());
    solves += 1;
    ensure(worst_int <= 1e-8, format!("∫Δφ = {worst_int:e}"))?;
    Ok(format!(
        "closed form e^b = 1 < 2; {solves} solves, max |∫Δφ| {worst_int:.1e}"
    ))
}

fn stability_shape() -> Outcome {
    for (n, p, q) in [(2usize, 2.0, 2.0), (3, 1.0, 3.0), (2, 0.5, 1.5)] {
        let want = p * (q - 1.0) / (n as f64 * q + p * (q - 1.0));
        ensure(
            stability_exponent(n, p, q) == want,
            format!("exponent ({n},{p},{q})"),
        )?;
    }
    let f = RhsExpr::relative(sinsin(0.5));
    let eta = Expr::trig(vec![TrigTerm::new(1.0, &[1, 0], &[Cos, Cos])]);
    let opts = SolveOptions::default();
    let rep = stability_experiment(
        &flat(32),
        &f,
        &eta,
        &[0.2, 0.1, 0.05, 0.025, 0.0],
        2.0,
        2.0,
        &opts,
    )
    .map_err(e)?;
    ensure(
        rep.pass && rep.spread <= 50.0,
        format!("spread {}", rep.spread),
    )?;
    ensure(
        rep.rows.iter().any(|r| r.branch == StabilityBranch::Zero),
        "zero branch not exercised",
    )?;
    let large = stability_experiment(&flat(16), &f, &eta, &[0.2], 1.0, 1.01, &opts).map_err(e)?;
    ensure(
        large.rows[0].branch == StabilityBranch::Large && large.rows[0].holds,
        "large branch not exercised",
    )?;
    Ok(format!(
        "exponent {:.6}, spread {:.3}, zero and large branches hold",
        rep.exponent, rep.spread
    ))
}

fn weak_certification() -> Outcome {
    let bg = flat(256).background().map_err(e)?;
    let rough = ScalarField::from_fn(bg.grid(), |x| (2.0 * PI * x[0]).sin().abs()).map_err(e)?;
    let levels = mollify_sequence(&bg, &rough, &schedule(8, FilterShape::Sharp)).map_err(e)?;
    ensure(
        levels.len() == 8 && levels.iter().all(|l| l.error < l.target),
        "mollification targets",
    )?;
    let bg = flat(64).background().map_err(e)?;
    let kinked = ScalarField::from_fn(bg.grid(), |x| 1.0 + 0.5 * (2.0 * PI * x[0]).sin().abs())
        .map_err(e)?;
    let sol = weak_solve(
        &bg,
        &kinked,
        &schedule(6, FilterShape::Sharp),
        &SolveOptions::default(),
    )
    .map_err(e)?;
    let c = &sol.certificate;
    ensure(
        c.pass && c.fitted_c.is_finite(),
        format!("certificate {c:?}"),
    )?;
    let max_of = ScalarField::from_fn(bg.grid(), |x| {
        (1.0 + 0.4 * (2.0 * PI * x[0]).sin()).max(1.0 + 0.4 * (2.0 * PI * x[1]).cos())
    })
    .map_err(e)?;
    let u = b_uniqueness_probe(
        &bg,
        &max_of,
        &schedule(6, FilterShape::Sharp),
        &schedule(6, FilterShape::RaisedCosine),
        &SolveOptions::default(),
    )
    .map_err(e)?;
    ensure(
        u.pass && u.final_gap <= 1e-3,
        format!("b gap {}", u.final_gap),
    )?;
    Ok(format!(
        "8 levels on target; C = {:.2e}, slope {:.2}; schedules agree on b to {:.1e}",
        c.fitted_c,
        c.decay_slope.unwrap_or(f64::NAN),
        u.final_gap
    ))
}

fn viscosity_spot_checks() -> Outcome {
    let (bg, rhs, exact) = manufactured(64)?;
    let pts = sample_points(bg.grid(), 64, 2024);
    let calib = viscosity_check(&bg, &exact, 0.0, &rhs, &pts, 2, 0.0).map_err(e)?;
    let disc = calib.rows.iter().map(|r| r.deviation()).fold(0.0, f64::max);
    let sol = solve_rhs(&bg, rhs.clone(), &SolveOptions::default()).map_err(e)?;
    let rep =
        viscosity_check(&bg, &sol.pair.phi, sol.pair.b, &rhs, &pts, 2, 10.0 * disc).map_err(e)?;
    ensure(
        rep.rows.len() == 64 && rep.sub_pass == 64 && rep.super_pass == 64,
        format!(
            "sub {} super {} of {}",
            rep.sub_pass,
            rep.super_pass,
            rep.rows.len()
        ),
    )?;
    Ok(format!("64/64 sub and super at tol {:.3e}", 10.0 * disc))
}

fn gradient_constant() -> Outcome {
    let rep = euclidean_constant_check(&ConstantSweep::default()).map_err(e)?;
    ensure(
        rep.violations == 0,
        format!("{} violations", rep.violations),
    )?;
    let bg = flat(64).background().map_err(e)?;
    let rough = ScalarField::from_fn(bg.grid(), |x| 1.0 + 0.5 * (2.0 * PI * x[0]).sin().abs())
        .map_err(e)?;
    let mut worst: f64 = 1.0;
    for c in [[0, 0], [8, 20]] {
        let center = bg.grid().index(&c);
        let s = gradient_level_sweep(
            &bg,
            &rough,
            &schedule(6, FilterShape::Sharp),
            center,
            0.25,
            &SolveOptions::default(),
        )
        .map_err(e)?;
        ensure(
            s.pass && s.envelope_ratio <= 2.0,
            format!("envelope {}", s.envelope_ratio),
        )?;
        worst = worst.max(s.envelope_ratio);
    }
    Ok(format!(
        "{} members, min margin {:.3}; level envelope {:.3}",
        rep.rows.len(),
        rep.min_margin,
        worst
    ))
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|d| d.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(e)?;
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        r#"seed = 11
[geometry]
dim = 2
sizes = [32]
[operator]
family = "monge_ampere"
sigma = 0.5
[problem]
chi = { components = [{ const = 2.0 }, { const = 0.0 }, { const = 2.0 }] }
exact = { trig = [{ coeff = 0.01, modes = [1, 1], kinds = ["sin", "sin"] }] }
[conditions]
samples = 2000
counterexample = [1.0, 2.0]
[experiment]
name = "viscosity"
samples = 32
"#,
    )
    .map_err(e)?;
    let bin = env!("CARGO_BIN_EXE_hessian-lab");
    let mut files = 0;
    for cmd in ["solve", "verify-conditions", "experiment"] {
        let mut runs = Vec::new();
        for (i, threads) in [None, None, Some("1")].into_iter().enumerate() {
            let out = tmp.path().join(format!("{cmd}_{i}"));
            let mut c = Command::new(bin);
            c.args([cmd, "--config"]).arg(&cfg).arg("--out").arg(&out);
            if let Some(t) = threads {
                c.args(["--threads", t]);
            }
            let status = c.output().map_err(e)?;
            ensure(
                status.status.success(),
                format!("{cmd} exited with {:?}", status.status.code()),
            )?;
            runs.push(csvs(&out));
        }
        ensure(!runs[0].is_empty(), format!("{cmd} wrote no CSVs"))?;
        ensure(
            runs.windows(2).all(|w| w[0] == w[1]),
            format!("{cmd}: CSVs differ between runs"),
        )?;
        files += runs[0].len();
    }
    Ok(format!("{files} CSVs bit-identical across 3 runs each"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 manufactured convergence", manufactured_convergence),
        ("2 structural conditions", structural_conditions),
        ("3 ABP equality case", abp_equality),
        ("4 b-bounds", b_bounds),
        ("5 stability shape", stability_shape),
        ("6 weak-solution certification", weak_certification),
        ("7 viscosity spot checks", viscosity_spot_checks),
        ("8 gradient constant", gradient_constant),
        ("9 determinism", determinism),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({secs:.1} s)"),
            Err(why) => {
                failures += 1;
                println!("FAIL  {name}: {why} ({secs:.1} s)");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
