use crate::error::GeometryError;
use crate::geometry::field::ScalarField;
use crate::geometry::metric::MetricField;
use crate::scalar::Real;

fn check_grid<T: Real>(u: &ScalarField<T>, g: &MetricField<T>) -> Result<(), GeometryError> {
    if u.grid() != g.grid() {
        return Err(GeometryError::ShapeMismatch(
            "field and metric grids differ".into(),
        ));
    }
    Ok(())
}

/// `∫ u dvol` by the periodic midpoint rule, `dvol = √det g dx`.
pub fn integrate<T: Real>(u: &ScalarField<T>, g: &MetricField<T>) -> Result<T, GeometryError> {
    check_grid(u, g)?;
    let s: T = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * g.det(i).sqrt())
        .sum();
    Ok(s * u.grid().cell_volume())
}

/// `(∫ |u|^p dvol)^{1/p}` for `p ≥ 1`; `p = ∞` gives the grid max of `|u|`.
pub fn lp_norm<T: Real>(u: &ScalarField<T>, p: T, g: &MetricField<T>) -> Result<T, GeometryError> {
    check_grid(u, g)?;
    if p.is_nan() || p < T::one() {
        return Err(GeometryError::Argument(format!(
            "L^p norm needs p >= 1, got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(u.max_abs());
    }
    let s: T = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v.abs().powf(p) * g.det(i).sqrt())
        .sum();
    Ok((s * u.grid().cell_volume()).powf(T::one() / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::PeriodicGrid;
    use crate::linalg::SymMat;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid() -> PeriodicGrid<f64> {
        PeriodicGrid::uniform(2, 16, 1.0).unwrap()
    }

    #[test]
    fn constant_fields() {
        let g = grid();
        let one = ScalarField::constant(&g, 1.0);
        let id = MetricField::identity(&g);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((lp_norm(&one, p, &id).unwrap() - 1.0).abs() < 1e-14);
        }
        let four = MetricField::constant(&g, SymMat::scalar(2, 4.0)).unwrap();
        assert!((lp_norm(&one, 1.0, &four).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn sine_l2_norm() {
        let g = grid();
        let u = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        let n = lp_norm(&u, 2.0, &MetricField::identity(&g)).unwrap();
        assert!((n - 0.5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn rejects_small_p() {
        let g = grid();
        let u = ScalarField::constant(&g, 1.0);
        assert!(matches!(
            lp_norm(&u, 0.5, &MetricField::identity(&g)),
            Err(GeometryError::Argument(_))
        ));
    }

    proptest! {
        #[test]
        fn homogeneous_and_monotone(t in -5.0f64..5.0, p in 1.0f64..6.0, seed in 0u64..1000) {
            let g = grid();
            let id = MetricField::identity(&g);
            let u = ScalarField::from_fn(&g, |x| ((seed as f64 + 1.0) * x[0]).sin() + x[1]).unwrap();
            let a = lp_norm(&u.scaled(t), p, &id).unwrap();
            let b = t.abs() * lp_norm(&u, p, &id).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
            let bigger = u.map(|v| v.abs() + 0.1);
            prop_assert!(lp_norm(&bigger, p, &id).unwrap() >= lp_norm(&u, p, &id).unwrap());
        }
    }
}
