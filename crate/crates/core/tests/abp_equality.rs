use std::sync::Arc;
use std::time::Instant;

use hessian_lab::abp::{abp_check, abp_constant};
use hessian_lab::geometry::{unit_ball_volume, BallDomain};

fn equality_case(dim: usize, resolution: usize, scale: f64, epsilon: f64) -> f64 {
    let d = Arc::new(BallDomain::<f64>::new(dim, 1.0, resolution, &vec![0.0; dim]).unwrap());
    let v = d.sample(|x| scale * (x.iter().map(|t| t * t).sum::<f64>() - 1.0));
    let start = Instant::now();
    let r = abp_check(&v, epsilon).unwrap();
    let expected = abp_constant(dim) * epsilon.powi(dim as i32);
    let rel = r.ma_mass / expected - 1.0;
    println!(
        "dim {dim} res {resolution}: mass {:.6} expected {:.6} rel {rel:+.3e} mask {} ({:.2?})",
        r.ma_mass,
        expected,
        r.mask_count,
        start.elapsed()
    );
    assert!(r.pass);
    rel
}

#[test]
fn paraboloid_meets_the_constant_with_equality_2d() {
    let rel = equality_case(2, 128, 1.0, 1.0);
    assert!(rel.abs() <= 0.02);
    assert!((abp_constant(2) - unit_ball_volume(2) / 4.0).abs() < 1e-15);
}

#[test]
fn paraboloid_meets_the_constant_with_equality_3d() {
    let rel = equality_case(3, 96, 1.0, 1.0);
    assert!(rel.abs() <= 0.02);
}

#[test]
fn scaled_paraboloid_meets_the_constant_with_equality() {
    for dim in [2, 3] {
        let res = if dim == 2 { 128 } else { 96 };
        let rel = equality_case(dim, res, 2.0, 2.0);
        assert!(rel.abs() <= 0.02);
    }
}
