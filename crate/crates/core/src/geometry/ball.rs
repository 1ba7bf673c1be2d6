use std::sync::Arc;

use crate::error::GeometryError;
use crate::linalg::SymMat;
use crate::scalar::Real;

/// Closed Euclidean ball `B_r(center)` discretized as a Cartesian vertex
/// lattice with spacing `h = 2r / resolution`; the center is a lattice point.
///
/// Interior: lattice points with `|x − c| < r`. Boundary ring: lattice points
/// with `|x − c| ≥ r` that have an axis neighbour in the interior, so the ring
/// hugs the sphere from outside and every interior point has all its axis
/// neighbours in the domain.
#[derive(Debug, Clone)]
pub struct BallDomain<T> {
    dim: usize,
    radius: T,
    resolution: usize,
    center: [T; 3],
    spacing: T,
    half: i32,
    lattice: Vec<[i32; 3]>,
    lookup: Vec<usize>,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    is_boundary: Vec<bool>,
    center_index: usize,
}

const OUTSIDE: usize = usize::MAX;

impl<T: Real> BallDomain<T> {
    /// `resolution` is the number of lattice cells across the diameter (even, ≥ 4).
    pub fn new(
        dim: usize,
        radius: T,
        resolution: usize,
        center: &[T],
    ) -> Result<Self, GeometryError> {
        if !(2..=3).contains(&dim) {
            return Err(GeometryError::Dimension(dim));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(GeometryError::Argument(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if resolution < 4 || !resolution.is_multiple_of(2) {
            return Err(GeometryError::Argument(format!(
                "ball resolution must be even and at least 4, got {resolution}"
            )));
        }
        if center.len() != dim {
            return Err(GeometryError::ShapeMismatch(format!(
                "center has {} coordinates in dimension {dim}",
                center.len()
            )));
        }
        let half = (resolution / 2) as i32;
        let spacing = radius / T::lit(half as f64);
        let mut c = [T::zero(); 3];
        c[..dim].copy_from_slice(center);

        let r2 = (half as i64) * (half as i64);
        let norm2 =
            |q: &[i32; 3]| -> i64 { q[..dim].iter().map(|&v| (v as i64) * (v as i64)).sum() };
        // lattice box covers the ring layer just outside the sphere
        let ext = half + 1;
        let side = (2 * ext + 1) as usize;
        let total = side.pow(dim as u32);
        let decode = |flat: usize| -> [i32; 3] {
            let mut q = [0i32; 3];
            let mut rem = flat;
            for a in (0..dim).rev() {
                q[a] = (rem % side) as i32 - ext;
                rem /= side;
            }
            q
        };
        let mut lookup = vec![OUTSIDE; total];
        let mut lattice = Vec::new();
        let mut is_boundary = Vec::new();
        let mut boundary = Vec::new();
        let mut interior = Vec::new();
        let mut center_index = 0;
        for flat in 0..total {
            let q = decode(flat);
            let inner = norm2(&q) < r2;
            let ring = !inner
                && (0..dim).any(|a| {
                    [-1, 1].iter().any(|&s| {
                        let mut nq = q;
                        nq[a] += s;
                        norm2(&nq) < r2
                    })
                });
            if !(inner || ring) {
                continue;
            }
            let i = lattice.len();
            lookup[flat] = i;
            lattice.push(q);
            is_boundary.push(ring);
            if ring {
                boundary.push(i);
            } else {
                interior.push(i);
            }
            if q[..dim].iter().all(|&v| v == 0) {
                center_index = i;
            }
        }
        Ok(Self {
            dim,
            radius,
            resolution,
            center: c,
            spacing,
            half,
            lattice,
            lookup,
            boundary,
            interior,
            is_boundary,
            center_index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn center(&self) -> &[T] {
        &self.center[..self.dim]
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn center_index(&self) -> usize {
        self.center_index
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    /// Lattice cell volume `hⁿ`.
    pub fn cell_volume(&self) -> T {
        self.spacing.powi(self.dim as i32)
    }

    /// Displacement `x − center` of point `i`.
    pub fn offset(&self, i: usize) -> [T; 3] {
        let mut x = [T::zero(); 3];
        for a in 0..self.dim {
            x[a] = T::lit(self.lattice[i][a] as f64) * self.spacing;
        }
        x
    }

    /// Absolute position of point `i`.
    pub fn point(&self, i: usize) -> [T; 3] {
        let mut x = self.offset(i);
        for a in 0..self.dim {
            x[a] += self.center[a];
        }
        x
    }

    pub fn lattice(&self, i: usize) -> [i32; 3] {
        self.lattice[i]
    }

    /// Ball point at lattice offset `step` from `i`, if it lies in the ball.
    pub fn neighbor(&self, i: usize, step: [i32; 3]) -> Option<usize> {
        let ext = self.half + 1;
        let side = (2 * ext + 1) as usize;
        let mut flat = 0usize;
        for a in 0..self.dim {
            let v = self.lattice[i][a] + step[a];
            if v.abs() > ext {
                return None;
            }
            flat = flat * side + (v + ext) as usize;
        }
        match self.lookup[flat] {
            OUTSIDE => None,
            j => Some(j),
        }
    }

    pub fn sample<F: Fn(&[T]) -> T>(self: &Arc<Self>, f: F) -> BallField<T> {
        let values = (0..self.len())
            .map(|i| f(&self.point(i)[..self.dim]))
            .collect();
        BallField {
            domain: Arc::clone(self),
            values,
        }
    }
}

/// One real per ball-lattice point.
#[derive(Debug, Clone)]
pub struct BallField<T> {
    domain: Arc<BallDomain<T>>,
    values: Vec<T>,
}

impl<T: Real> BallField<T> {
    pub fn new(domain: Arc<BallDomain<T>>, values: Vec<T>) -> Result<Self, GeometryError> {
        if values.len() != domain.len() {
            return Err(GeometryError::ShapeMismatch(format!(
                "ball field has {} values but domain has {} points",
                values.len(),
                domain.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite { index });
        }
        Ok(Self { domain, values })
    }

    pub fn domain(&self) -> &Arc<BallDomain<T>> {
        &self.domain
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize) -> T {
        self.values[i]
    }

    /// Central-difference gradient, or `None` on the boundary ring.
    pub fn gradient(&self, i: usize) -> Option<[T; 3]> {
        let d = &self.domain;
        let h2 = d.spacing + d.spacing;
        let mut g = [T::zero(); 3];
        for (a, ga) in g.iter_mut().enumerate().take(d.dim) {
            let mut e = [0; 3];
            e[a] = 1;
            let p = d.neighbor(i, e)?;
            e[a] = -1;
            let m = d.neighbor(i, e)?;
            *ga = (self.values[p] - self.values[m]) / h2;
        }
        Some(g)
    }

    /// Central-difference Hessian, or `None` when a stencil point leaves the ball.
    pub fn hessian(&self, i: usize) -> Option<SymMat<T>> {
        let d = &self.domain;
        let h = d.spacing;
        let u = &self.values;
        let mut m = SymMat::zeros(d.dim);
        for a in 0..d.dim {
            let mut e = [0; 3];
            e[a] = 1;
            let p = d.neighbor(i, e)?;
            e[a] = -1;
            let q = d.neighbor(i, e)?;
            m.set(a, a, (u[p] - T::lit(2.0) * u[i] + u[q]) / (h * h));
            for b in (a + 1)..d.dim {
                let mut s = [0; 3];
                let mut acc = T::zero();
                for (sa, sb, sign) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                    s[a] = sa;
                    s[b] = sb;
                    acc += T::lit(sign) * u[d.neighbor(i, s)?];
                }
                m.set(a, b, acc / (T::lit(4.0) * h * h));
            }
        }
        Some(m)
    }

    /// Minimum over the boundary ring.
    pub fn boundary_min(&self) -> T {
        self.domain
            .boundary()
            .iter()
            .map(|&i| self.values[i])
            .fold(T::infinity(), T::min)
    }
}

/// Cutoff `ρ(x) = (1 − |x − c|²/r²)^+` on the ball lattice.
pub fn mask_cutoff_rho<T: Real>(domain: &Arc<BallDomain<T>>) -> BallField<T> {
    let r2 = domain.radius() * domain.radius();
    let values = (0..domain.len())
        .map(|i| {
            let x = domain.offset(i);
            let d2: T = x[..domain.dim()].iter().map(|&v| v * v).sum();
            (T::one() - d2 / r2).max(T::zero())
        })
        .collect();
    BallField {
        domain: Arc::clone(domain),
        values,
    }
}

/// Volume of the Euclidean unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => {
            // ω_n = 2π/n · ω_{n-2}
            2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_and_boundary_partition_the_ball() {
        for dim in [2, 3] {
            let d = BallDomain::<f64>::new(dim, 1.5, 16, &vec![0.25; dim]).unwrap();
            let mut seen = vec![0u8; d.len()];
            for &i in d.interior().iter().chain(d.boundary()) {
                seen[i] += 1;
            }
            assert!(seen.iter().all(|&s| s == 1));
            let c = d.point(d.center_index());
            assert_eq!(&c[..dim], &vec![0.25; dim][..]);
        }
    }

    #[test]
    fn rho_values() {
        let d = Arc::new(BallDomain::<f64>::new(2, 2.0, 16, &[0.0, 0.0]).unwrap());
        let rho = mask_cutoff_rho(&d);
        assert_eq!(rho.get(d.center_index()), 1.0);
        let half = d.neighbor(d.center_index(), [4, 0, 0]).unwrap();
        assert!((rho.get(half) - 0.75).abs() < 1e-15);
        let edge = d.neighbor(d.center_index(), [0, -8, 0]).unwrap();
        assert!(d.is_boundary(edge));
        assert_eq!(rho.get(edge), 0.0);
    }

    #[test]
    fn quadratic_derivatives_are_exact() {
        let d = Arc::new(BallDomain::<f64>::new(3, 1.0, 12, &[0.0, 0.0, 0.0]).unwrap());
        let v = d.sample(|x| x[0] * x[0] + 2.0 * x[0] * x[1] - x[2] + 0.5 * x[2] * x[2]);
        let c = d.center_index();
        let g = v.gradient(c).unwrap();
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12 && (g[2] + 1.0).abs() < 1e-12);
        let h = v.hessian(c).unwrap();
        assert!((h.get(0, 0) - 2.0).abs() < 1e-10);
        assert!((h.get(0, 1) - 2.0).abs() < 1e-10);
        assert!((h.get(2, 2) - 1.0).abs() < 1e-10);
        assert!(v.gradient(d.boundary()[0]).is_none());
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
    }
}
