//! Discrete Alexandrov–Bakelman–Pucci machinery on a Euclidean ball.
//!
//! Lower contact sets are found by an exhaustive supporting-plane test over
//! all ball lattice points. The scan is pruned per lattice tile with an exact
//! bound (tile minimum of `v` against the maximum of the plane over the tile's
//! bounding box), so the answer is the same as the unpruned O(N²) scan.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{AbpError, GeometryError};
use crate::geometry::{
    unit_ball_volume, BallDomain, BallField, ChristoffelField, MetricField, PeriodicGrid,
    ScalarField, SymTensorField,
};
use crate::linalg::SymMat;
use crate::operators::{eigenvalues_wrt_metric, OperatorSpec};
use crate::scalar::Real;

/// Relative tolerance of the supporting-plane test.
const PLANE_TOL: f64 = 1e-12;
/// Lattice tile edge used by the pruned scan.
const TILE: i32 = 4;
/// Convexity tolerance for `det D²v` at contact points.
pub const DET_TOL: f64 = -1e-8;
/// Relative quadrature slack allowed in the ABP inequality.
pub const QUADRATURE_SLACK: f64 = 0.02;

/// Lower contact set `P = {|Dv| < ε/(2r), v has a supporting plane at x}`.
#[derive(Debug, Clone)]
pub struct ContactSet<T> {
    pub mask: Vec<bool>,
    /// `∫_P det D²v dx` by lattice quadrature with fractional weights at the
    /// gradient-bound interface.
    pub ma_mass: T,
    pub epsilon: T,
    /// `ε/(2r)`; equals `ε/2` on the unit ball.
    pub gradient_bound_used: T,
    /// Smallest `det D²v` over masked points (`+∞` when the mask is empty).
    pub min_det: T,
}

impl<T: Real> ContactSet<T> {
    pub fn mask_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
    }
}

/// Outcome of one ABP inequality check.
#[derive(Debug, Clone, Serialize)]
pub struct AbpReport {
    pub epsilon: f64,
    /// `ω_n 2^{-n}`.
    pub c0: f64,
    /// `c₀ εⁿ / rⁿ`, the required mass on a ball of radius `r`.
    pub c0_eps_n: f64,
    pub ma_mass: f64,
    pub pass: bool,
    pub mask_count: usize,
    pub min_det: f64,
}

/// Dimensional ABP constant `c₀ = ω_n 2^{-n}`.
pub fn abp_constant(n: usize) -> f64 {
    unit_ball_volume(n) / 2f64.powi(n as i32)
}

struct Tile<T> {
    members: Vec<usize>,
    min_v: T,
    lo: [T; 3],
    hi: [T; 3],
}

fn tiles<T: Real>(v: &BallField<T>) -> Vec<Tile<T>> {
    let d = v.domain();
    let dim = d.dim();
    let mut map: std::collections::BTreeMap<[i32; 3], Vec<usize>> = Default::default();
    for i in 0..d.len() {
        let q = d.lattice(i);
        let mut key = [0; 3];
        for a in 0..dim {
            key[a] = q[a].div_euclid(TILE);
        }
        map.entry(key).or_default().push(i);
    }
    map.into_values()
        .map(|members| {
            let mut lo = [T::infinity(); 3];
            let mut hi = [T::neg_infinity(); 3];
            let mut min_v = T::infinity();
            for &i in &members {
                let x = d.offset(i);
                for a in 0..dim {
                    lo[a] = lo[a].min(x[a]);
                    hi[a] = hi[a].max(x[a]);
                }
                min_v = min_v.min(v.get(i));
            }
            Tile {
                members,
                min_v,
                lo,
                hi,
            }
        })
        .collect()
}

fn check_precondition<T: Real>(v: &BallField<T>, epsilon: T) -> Result<(), AbpError> {
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(AbpError::Epsilon(epsilon.to_f64_lossy()));
    }
    let center = v.get(v.domain().center_index());
    let boundary_min = v.boundary_min();
    if center + epsilon > boundary_min {
        return Err(AbpError::Precondition {
            center: center.to_f64_lossy(),
            epsilon: epsilon.to_f64_lossy(),
            boundary_min: boundary_min.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Whether the plane through `(x, v(x))` with slope `p` lies below `v` on the whole ball.
fn supports<T: Real>(v: &BallField<T>, tiles: &[Tile<T>], i: usize, p: &[T; 3], tol: T) -> bool {
    let d = v.domain();
    let dim = d.dim();
    let xi = d.offset(i);
    let vi = v.get(i);
    let px: T = (0..dim).map(|a| p[a] * xi[a]).sum();
    tiles.iter().all(|tile| {
        let plane_max: T = (0..dim)
            .map(|a| (p[a] * tile.lo[a]).max(p[a] * tile.hi[a]))
            .sum::<T>()
            - px;
        if tile.min_v - vi - plane_max >= -tol {
            return true;
        }
        tile.members.iter().all(|&j| {
            let y = d.offset(j);
            let plane: T = (0..dim).map(|a| p[a] * y[a]).sum::<T>() - px;
            v.get(j) - vi - plane >= -tol
        })
    })
}

/// Lower contact set of `v` for gradient bound `ε/(2r)`.
pub fn contact_set<T: Real>(v: &BallField<T>, epsilon: T) -> Result<ContactSet<T>, AbpError> {
    check_precondition(v, epsilon)?;
    let d = v.domain();
    let bound = epsilon / (T::lit(2.0) * d.radius());
    let scale = v.values().iter().fold(T::one(), |m, &x| m.max(x.abs()));
    let tol = T::lit(PLANE_TOL) * scale;
    let tiles = tiles(v);

    // Points near the level set |Dv| = bound carry a fractional cell weight so
    // the quadrature resolves the contact set below lattice scale.
    let h = d.spacing();
    let half = T::lit(0.5);
    let candidates: Vec<(usize, [T; 3], T, SymMat<T>)> = d
        .interior()
        .iter()
        .filter_map(|&i| {
            let g = v.gradient(i)?;
            let hess = v.hessian(i)?;
            let norm = g.iter().map(|&x| x * x).sum::<T>().sqrt();
            let weight = if norm > T::zero() {
                // directional derivative of |Dv| and the cell's width along it
                let mut dn = [T::zero(); 3];
                for a in 0..d.dim() {
                    for b in 0..d.dim() {
                        dn[a] += hess.get(a, b) * g[b] / norm;
                    }
                }
                let dn_norm = dn.iter().map(|&x| x * x).sum::<T>().sqrt();
                if dn_norm > T::zero() {
                    let width = h * dn.iter().map(|x| x.abs()).sum::<T>() / dn_norm;
                    let dist = (bound - norm) / dn_norm;
                    (half + dist / width).max(T::zero()).min(T::one())
                } else if norm < bound {
                    T::one()
                } else {
                    T::zero()
                }
            } else {
                T::one()
            };
            (norm < bound || weight > T::zero()).then_some((i, g, weight, hess))
        })
        .collect();

    let accepted: Vec<(usize, bool, T, T)> = candidates
        .par_iter()
        .filter_map(|(i, p, weight, hess)| {
            let strict = p.iter().map(|&x| x * x).sum::<T>().sqrt() < bound;
            supports(v, &tiles, *i, p, tol).then(|| (*i, strict, *weight, hess.determinant()))
        })
        .collect();

    let mut mask = vec![false; d.len()];
    let mut ma_mass = T::zero();
    let mut min_det = T::infinity();
    for &(i, strict, weight, det) in &accepted {
        ma_mass += weight * det.max(T::zero());
        if strict {
            mask[i] = true;
            min_det = min_det.min(det);
        }
    }
    Ok(ContactSet {
        mask,
        ma_mass: ma_mass * d.cell_volume(),
        epsilon,
        gradient_bound_used: bound,
        min_det,
    })
}

/// Checks `c₀ εⁿ r^{-n} ≤ ∫_P det D²v` up to [`QUADRATURE_SLACK`].
pub fn abp_check<T: Real>(v: &BallField<T>, epsilon: T) -> Result<AbpReport, AbpError> {
    let set = contact_set(v, epsilon)?;
    Ok(abp_report(v.domain(), &set))
}

pub fn abp_report<T: Real>(domain: &BallDomain<T>, set: &ContactSet<T>) -> AbpReport {
    let n = domain.dim();
    let c0 = abp_constant(n);
    let eps = set.epsilon.to_f64_lossy();
    let c0_eps_n = c0 * (eps / domain.radius().to_f64_lossy()).powi(n as i32);
    let ma_mass = set.ma_mass.to_f64_lossy();
    let min_det = set.min_det.to_f64_lossy();
    AbpReport {
        epsilon: eps,
        c0,
        c0_eps_n,
        ma_mass,
        pass: ma_mass >= (1.0 - QUADRATURE_SLACK) * c0_eps_n && min_det >= DET_TOL,
        mask_count: set.mask_count(),
        min_det,
    }
}

/// `u(x) = φ(x₀ + x) − φ(x₀) + ε|x|²` on a ball around the grid minimizer.
#[derive(Debug, Clone)]
pub struct TestFunction<T> {
    pub u: BallField<T>,
    pub epsilon: T,
    /// Measured Christoffel bound `C(g)` used for the default `ε`.
    pub c_g: T,
    /// Grid index of the minimizer `x₀`.
    pub x0: usize,
    /// Grid index of every ball point.
    pub grid_index: Vec<usize>,
}

/// Default `ε = σ/(8 + C(g))`.
pub fn default_epsilon<T: Real>(sigma: T, christoffel: &ChristoffelField<T>) -> T {
    sigma / (T::lit(8.0) + christoffel.norm_bound())
}

/// Ball of `radius` around grid point `center`, built on the torus lattice
/// itself; returns the domain and the torus index of every ball point.
///
/// Needs equal spacing on all axes, `radius/h` an integer ≥ 2, and a ball
/// (with its boundary ring) that does not wrap around the torus.
pub fn grid_ball<T: Real>(
    grid: &PeriodicGrid<T>,
    center: usize,
    radius: T,
) -> Result<(Arc<BallDomain<T>>, Vec<usize>), GeometryError> {
    let dim = grid.dim();
    let h = grid.spacing()[0];
    if grid
        .spacing()
        .iter()
        .any(|&s| (s - h).abs() > T::lit(1e-12) * h)
    {
        return Err(GeometryError::Argument(
            "ball needs equal grid spacing on every axis".into(),
        ));
    }
    let ratio = radius / h;
    let half = ratio.round();
    if (ratio - half).abs() > T::lit(1e-9) * ratio || half < T::lit(2.0) {
        return Err(GeometryError::Argument(format!(
            "ball radius {radius} must be an integer multiple (>= 2) of the grid spacing {h}"
        )));
    }
    let half = half.to_f64_lossy() as usize;
    if grid.sizes().iter().any(|&s| 2 * (half + 1) >= s) {
        return Err(GeometryError::Argument(format!(
            "ball of radius {radius} wraps around the torus"
        )));
    }
    let domain = Arc::new(BallDomain::new(
        dim,
        radius,
        2 * half,
        &grid.point(center)[..dim],
    )?);
    let index = (0..domain.len())
        .map(|i| {
            let q = domain.lattice(i);
            let offsets: Vec<isize> = q[..dim].iter().map(|&v| v as isize).collect();
            grid.shift_by(center, &offsets)
        })
        .collect();
    Ok((domain, index))
}

/// Builds the recentred test function on `B_r(x₀)`.
///
/// The ball lattice reuses the torus grid points, so every axis must share
/// one spacing `h` and `r/h` must be an integer small enough that the ball
/// does not wrap around the torus.
pub fn abp_test_function<T: Real>(
    phi: &ScalarField<T>,
    christoffel: &ChristoffelField<T>,
    sigma: T,
    radius: T,
    epsilon: Option<T>,
) -> Result<TestFunction<T>, AbpError> {
    let grid = phi.grid();
    let dim = grid.dim();
    let c_g = christoffel.norm_bound();
    let epsilon = epsilon.unwrap_or_else(|| default_epsilon(sigma, christoffel));
    let x0 = phi.argmin();
    let (domain, grid_index) = grid_ball(grid, x0, radius)?;
    let phi0 = phi.get(x0);
    let values = grid_index
        .iter()
        .enumerate()
        .map(|(i, &gi)| {
            let x = domain.offset(i);
            let r2: T = x[..dim].iter().map(|&v| v * v).sum();
            phi.get(gi) - phi0 + epsilon * r2
        })
        .collect();
    let u = BallField::new(Arc::clone(&domain), values)?;
    check_precondition(&u, epsilon)?;
    Ok(TestFunction {
        u,
        epsilon,
        c_g,
        x0,
        grid_index,
    })
}

/// Pointwise checks of the L∞ argument on the contact set of a solved instance.
#[derive(Debug, Clone, Serialize)]
pub struct ContactDiagnostics {
    pub epsilon: f64,
    pub c_g: f64,
    pub mask_count: usize,
    pub abp: AbpReport,
    /// `max_P (φ − inf φ) − ε/2`; non-positive when `φ ≤ inf φ + ε/2` on `P`.
    pub sublevel_excess: f64,
    /// Most negative eigenvalue of `D²u` on `P`.
    pub hessian_min_eig: f64,
    /// Largest eigenvalue of `D²u − (σg + ∇²φ)` on `P`.
    pub upper_excess: f64,
    /// Largest `det_g(σg + ∇²φ) − e^{n(b+f)}/(nⁿc)` over masked points where `σg + ∇²φ ≥ 0`.
    pub det_excess: f64,
}

/// Runs the contact-set diagnostics for `φ` solving `F(χ + ∇²φ) = e^b rhs`.
///
/// `hess` is the covariant Hessian `∇²φ` and `rhs` the pointwise `e^f`.
#[allow(clippy::too_many_arguments)]
pub fn contact_diagnostics<T: Real>(
    phi: &ScalarField<T>,
    hess: &SymTensorField<T>,
    metric: &MetricField<T>,
    christoffel: &ChristoffelField<T>,
    operator: &OperatorSpec<T>,
    rhs: &ScalarField<T>,
    b: T,
    radius: T,
) -> Result<ContactDiagnostics, AbpError> {
    let sigma = operator.sigma();
    let tf = abp_test_function(phi, christoffel, sigma, radius, None)?;
    let set = contact_set(&tf.u, tf.epsilon)?;
    let abp = abp_report(tf.u.domain(), &set);
    let n = metric.dim();
    let half_eps = tf.epsilon.to_f64_lossy() / 2.0;
    let inf_phi = phi.min().to_f64_lossy();
    let norm_const = (n as f64).powi(n as i32) * operator.c().to_f64_lossy();

    let mut sublevel_excess = f64::NEG_INFINITY;
    let mut hessian_min_eig = f64::INFINITY;
    let mut upper_excess = f64::NEG_INFINITY;
    let mut det_excess = f64::NEG_INFINITY;
    for i in set.indices() {
        let gi = tf.grid_index[i];
        sublevel_excess = sublevel_excess.max(phi.get(gi).to_f64_lossy() - inf_phi - half_eps);
        let Some(d2u) = tf.u.hessian(i) else { continue };
        hessian_min_eig = hessian_min_eig.min(d2u.min_eigenvalue().to_f64_lossy());
        let shifted = metric.g(gi).scale(sigma).add(hess.get(gi));
        let gap = shifted.sub(&d2u).min_eigenvalue();
        upper_excess = upper_excess.max(-gap.to_f64_lossy());
        let spec = eigenvalues_wrt_metric(&shifted, metric.g(gi))?;
        if spec.lambda.iter().all(|&l| l >= T::zero()) {
            let det: f64 = spec.lambda.iter().map(|l| l.to_f64_lossy()).product();
            let bound = ((b + rhs.get(gi).ln()).to_f64_lossy() * n as f64).exp() / norm_const;
            det_excess = det_excess.max(det - bound);
        }
    }
    Ok(ContactDiagnostics {
        epsilon: tf.epsilon.to_f64_lossy(),
        c_g: tf.c_g.to_f64_lossy(),
        mask_count: set.mask_count(),
        abp,
        sublevel_excess,
        hessian_min_eig,
        upper_excess,
        det_excess,
    })
}

/// `v = scale·(|x|² − 1)` on the unit ball: the equality case at `ε = scale`.
pub fn paraboloid_fixture(
    dim: usize,
    resolution: usize,
    scale: f64,
) -> Result<BallField<f64>, GeometryError> {
    let d = Arc::new(BallDomain::new(dim, 1.0, resolution, &vec![0.0; dim])?);
    Ok(d.sample(|x| scale * (x.iter().map(|v| v * v).sum::<f64>() - 1.0)))
}

/// A random 2D fixture on `domain`: a sheared quadratic with displaced vertex
/// plus a small trigonometric perturbation. Returns `v` and
/// `ε = 0.9·(min_{∂B} v − v(0))`, which satisfies the precondition.
pub fn random_convex_fixture<R: rand::Rng>(
    domain: &Arc<BallDomain<f64>>,
    rng: &mut R,
) -> (BallField<f64>, f64) {
    let a = rng.gen_range(0.5..3.0);
    let bxy = rng.gen_range(-0.4..0.4);
    let c = rng.gen_range(0.5..3.0);
    let amp = rng.gen_range(0.0..0.05);
    let k = rng.gen_range(1.0..4.0);
    let s = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
    let v = domain.sample(|x| {
        let (y0, y1) = (x[0] - s[0], x[1] - s[1]);
        a * y0 * y0 + 2.0 * bxy * y0 * y1 + c * y1 * y1 + amp * (k * x[0]).sin() * (k * x[1]).cos()
    });
    let eps = 0.9 * (v.boundary_min() - v.get(domain.center_index()));
    (v, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ball(dim: usize, res: usize) -> Arc<BallDomain<f64>> {
        Arc::new(BallDomain::new(dim, 1.0, res, &vec![0.0; dim]).unwrap())
    }

    fn paraboloid(d: &Arc<BallDomain<f64>>, scale: f64) -> BallField<f64> {
        d.sample(|x| scale * (x.iter().map(|v| v * v).sum::<f64>() - 1.0))
    }

    #[test]
    fn constant_matches_closed_form() {
        assert!((abp_constant(2) - std::f64::consts::PI / 4.0).abs() < 1e-15);
        assert!((abp_constant(3) - std::f64::consts::PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn mask_is_the_analytic_quarter_ball() {
        let d = ball(2, 64);
        let v = paraboloid(&d, 1.0);
        let set = contact_set(&v, 1.0).unwrap();
        for i in 0..d.len() {
            let x = d.offset(i);
            let inside = !d.is_boundary(i) && (x[0] * x[0] + x[1] * x[1]).sqrt() < 0.25 - 1e-12;
            assert_eq!(set.mask[i], inside, "point {:?}", x);
        }
        assert!((set.min_det - 4.0).abs() < 1e-9);
    }

    #[test]
    fn equality_case_2d() {
        let v = paraboloid(&ball(2, 128), 1.0);
        let r = abp_check(&v, 1.0).unwrap();
        let exact = unit_ball_volume(2) / 4.0;
        assert!((r.ma_mass - exact).abs() <= 0.02 * exact, "{r:?}");
        assert!((r.c0_eps_n - exact).abs() < 1e-15);
        assert!(r.pass);
    }

    #[test]
    fn doubled_paraboloid_is_again_equality() {
        let v = paraboloid(&ball(2, 128), 2.0);
        let r = abp_check(&v, 2.0).unwrap();
        let exact = unit_ball_volume(2);
        assert!((r.ma_mass - exact).abs() <= 0.02 * exact, "{r:?}");
        assert!(r.pass);
    }

    #[test]
    fn concave_bump_is_excluded() {
        let d = ball(2, 32);
        // concave near the origin, convex further out
        let v = d.sample(|x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            3.0 * r2 - 2.0 + 0.5 * (-30.0 * r2).exp()
        });
        let set = contact_set(&v, 0.5).unwrap();
        assert!(!set.mask[d.center_index()]);
        for i in set.indices() {
            assert!(v.hessian(i).unwrap().determinant() >= DET_TOL);
        }
    }

    #[test]
    fn precondition_failure_reports_values() {
        let v = paraboloid(&ball(2, 16), 1.0);
        match contact_set(&v, 1.5) {
            Err(AbpError::Precondition {
                center,
                epsilon,
                boundary_min,
            }) => {
                assert_eq!(center, -1.0);
                assert_eq!(epsilon, 1.5);
                assert!(boundary_min >= 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(contact_set(&v, 0.0), Err(AbpError::Epsilon(_))));
    }

    #[test]
    fn masks_are_nested_in_epsilon() {
        let d = ball(2, 48);
        let v = d.sample(|x| {
            x[0] * x[0] + 2.0 * x[1] * x[1] + 0.3 * x[0] * x[1] - 1.5 + 0.05 * (3.0 * x[0]).sin()
        });
        let mut prev: Option<Vec<bool>> = None;
        for eps in [0.9, 0.6, 0.3, 0.1, 0.02] {
            let set = contact_set(&v, eps).unwrap();
            if let Some(p) = &prev {
                assert!(set.mask.iter().zip(p).all(|(&now, &before)| !now || before));
            }
            prev = Some(set.mask);
        }
    }

    #[test]
    fn affine_terms_do_not_change_mass() {
        let d = ball(2, 128);
        let base = abp_check(&paraboloid(&d, 1.0), 0.5).unwrap();
        for a in [[0.2, 0.0], [-0.3, 0.25], [0.1, -0.4]] {
            let v = d.sample(|x| x[0] * x[0] + x[1] * x[1] - 1.0 + a[0] * x[0] + a[1] * x[1] + 0.7);
            let r = abp_check(&v, 0.5).unwrap();
            assert!(
                (r.ma_mass - base.ma_mass).abs() <= 0.01 * base.ma_mass,
                "{a:?}: {r:?} vs {base:?}"
            );
        }
    }

    #[test]
    fn randomized_convex_fixtures_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xab9);
        let d = ball(2, 128);
        for trial in 0..100 {
            let (v, eps) = random_convex_fixture(&d, &mut rng);
            let r = abp_check(&v, eps).unwrap();
            assert!(r.pass, "trial {trial}: {r:?}");
        }
    }

    #[test]
    fn test_function_of_zero_is_the_equality_case() {
        let grid = PeriodicGrid::uniform(2, 32, 4.0).unwrap();
        let phi = ScalarField::<f64>::zeros(&grid);
        let gamma = ChristoffelField::zeros(&grid);
        let tf = abp_test_function(&phi, &gamma, 0.8, 1.0, None).unwrap();
        assert!((tf.epsilon - 0.1).abs() < 1e-15);
        assert!((tf.u.boundary_min() - tf.epsilon).abs() < 1e-15);
        assert_eq!(tf.u.get(tf.u.domain().center_index()), 0.0);
    }

    #[test]
    fn test_function_with_interior_minimum_is_strict() {
        let grid = PeriodicGrid::uniform(2, 32, 4.0).unwrap();
        let phi = ScalarField::from_fn(&grid, |x| {
            -((std::f64::consts::PI * x[0] / 2.0).cos() + (std::f64::consts::PI * x[1] / 2.0).cos())
        })
        .unwrap();
        let gamma = ChristoffelField::zeros(&grid);
        let tf = abp_test_function(&phi, &gamma, 1.0, 1.0, None).unwrap();
        assert_eq!(grid.coords(tf.x0), [0, 0, 0]);
        assert!(tf.u.boundary_min() > tf.epsilon + 1e-3);
        assert!(abp_test_function(&phi, &gamma, 1.0, 1.1, None).is_err());
        assert!(abp_test_function(&phi, &gamma, 1.0, 1.875, None).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn contact_points_satisfy_both_defining_conditions(
            a in 0.5f64..3.0, c in 0.5f64..3.0, amp in 0.0f64..0.2, k in 1.0f64..6.0
        ) {
            let d = ball(2, 24);
            let v = d.sample(|x| a * x[0] * x[0] + c * x[1] * x[1] + amp * (k * x[0] + 0.3).sin() - 4.0);
            let eps = 0.8 * (v.boundary_min() - v.get(d.center_index()));
            let set = contact_set(&v, eps).unwrap();
            for i in set.indices() {
                let g = v.gradient(i).unwrap();
                prop_assert!((g[0] * g[0] + g[1] * g[1]).sqrt() < eps / 2.0);
                let xi = d.offset(i);
                for j in 0..d.len() {
                    let y = d.offset(j);
                    let plane = v.get(i) + g[0] * (y[0] - xi[0]) + g[1] * (y[1] - xi[1]);
                    prop_assert!(v.get(j) >= plane - 1e-11);
                }
            }
            prop_assert!(set.ma_mass >= 0.0);
        }
    }
}
