use std::sync::Arc;
use std::time::Instant;

use hessian_lab::geometry::{
    Expr, PeriodicGrid, ScalarField, StencilOrder, SymTensorExpr, TrigKind, TrigTerm,
};
use hessian_lab::operators::OperatorSpec;
use hessian_lab::solver::{manufactured_rhs, solve_pair, Background, ProblemSpec, SolveOptions};

use TrigKind::{Cos, Sin};

fn metric() -> SymTensorExpr {
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

fn chi() -> SymTensorExpr {
    let SymTensorExpr { components } = metric();
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

fn error_at(size: usize) -> (f64, f64, f64) {
    let grid = PeriodicGrid::<f64>::uniform(2, size, 1.0).unwrap();
    let op = OperatorSpec::monge_ampere(2);
    let rhs = manufactured_rhs(&op, &grid, &metric(), &chi(), &phi_star()).unwrap();
    let bg = Background::from_exprs(op, &grid, &metric(), &chi(), StencilOrder::Fourth).unwrap();
    let prob = ProblemSpec::new(Arc::new(bg), rhs).unwrap();
    let start = Instant::now();
    let sol = solve_pair(&prob, &SolveOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let exact = ScalarField::from_fn(&grid, |x| phi_star().eval(x, &[1.0, 1.0])).unwrap();
    let exact = exact.shifted(-exact.max());
    (sol.pair.phi.sub(&exact).max_abs(), sol.pair.b, secs)
}

#[test]
fn fourth_order_convergence() {
    let rows: Vec<_> = [32, 64, 128].iter().map(|&n| (n, error_at(n))).collect();
    for (n, (e, b, s)) in &rows {
        println!("n={n} err={e:.3e} b={b:.3e} time={s:.2}s");
    }
    for w in rows.windows(2) {
        let order = (w[0].1 .0 / w[1].1 .0).log2();
        println!("order {order:.3}");
        assert!(order >= 3.5);
    }
    assert!(rows[2].1 .1.abs() <= 1e-6);
}
