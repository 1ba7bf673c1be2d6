use crate::error::GeometryError;
use crate::scalar::Real;

/// Uniform periodic grid on the flat-chart torus `T^n`, `n ∈ {2, 3}`.
///
/// Points are stored row-major: axis 0 varies slowest. Point `i` along axis
/// `a` sits at coordinate `i * spacing[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid<T> {
    dim: usize,
    sizes: [usize; 3],
    periods: [T; 3],
    spacing: [T; 3],
    strides: [usize; 3],
}

impl<T: Real> PeriodicGrid<T> {
    pub fn new(sizes: &[usize], periods: &[T]) -> Result<Self, GeometryError> {
        let dim = sizes.len();
        if !(2..=3).contains(&dim) {
            return Err(GeometryError::Dimension(dim));
        }
        if periods.len() != dim {
            return Err(GeometryError::ShapeMismatch(format!(
                "{} sizes but {} periods",
                dim,
                periods.len()
            )));
        }
        let mut s = [1usize; 3];
        let mut p = [T::one(); 3];
        let mut h = [T::one(); 3];
        for a in 0..dim {
            if sizes[a] < 8 || !sizes[a].is_multiple_of(2) {
                return Err(GeometryError::Size {
                    axis: a,
                    size: sizes[a],
                });
            }
            if !(periods[a] > T::zero()) || !periods[a].is_finite() {
                return Err(GeometryError::Period {
                    axis: a,
                    period: periods[a].to_f64_lossy(),
                });
            }
            s[a] = sizes[a];
            p[a] = periods[a];
            h[a] = periods[a] / T::from_usize_lossy(sizes[a]);
        }
        let mut strides = [0usize; 3];
        let mut acc = 1;
        for a in (0..dim).rev() {
            strides[a] = acc;
            acc *= s[a];
        }
        Ok(Self {
            dim,
            sizes: s,
            periods: p,
            spacing: h,
            strides,
        })
    }

    /// Square grid with `size` points and period `period` on every axis.
    pub fn uniform(dim: usize, size: usize, period: T) -> Result<Self, GeometryError> {
        Self::new(&vec![size; dim], &vec![period; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes[..self.dim]
    }

    pub fn periods(&self) -> &[T] {
        &self.periods[..self.dim]
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing[..self.dim]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.sizes[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one grid cell in chart coordinates.
    pub fn cell_volume(&self) -> T {
        self.spacing().iter().fold(T::one(), |acc, &h| acc * h)
    }

    /// Chart volume of the torus.
    pub fn chart_volume(&self) -> T {
        self.periods().iter().fold(T::one(), |acc, &p| acc * p)
    }

    #[inline]
    pub fn index(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        for a in 0..self.dim {
            idx += (coords[a] % self.sizes[a]) * self.strides[a];
        }
        idx
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let mut c = [0usize; 3];
        for a in 0..self.dim {
            c[a] = (idx / self.strides[a]) % self.sizes[a];
        }
        c
    }

    /// Chart coordinates of point `idx` (unused axes are zero).
    #[inline]
    pub fn point(&self, idx: usize) -> [T; 3] {
        let c = self.coords(idx);
        let mut x = [T::zero(); 3];
        for a in 0..self.dim {
            x[a] = T::from_usize_lossy(c[a]) * self.spacing[a];
        }
        x
    }

    /// Index of the point `offset` steps away from `idx` along `axis`, wrapping.
    #[inline]
    pub fn shift(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let n = self.sizes[axis] as isize;
        let stride = self.strides[axis];
        let c = ((idx / stride) % self.sizes[axis]) as isize;
        let mut c2 = (c + offset) % n;
        if c2 < 0 {
            c2 += n;
        }
        (idx as isize + (c2 - c) * stride as isize) as usize
    }

    /// Index reached from `idx` by a multi-axis offset, wrapping on every axis.
    pub fn shift_by(&self, idx: usize, offsets: &[isize]) -> usize {
        let mut j = idx;
        for (a, &o) in offsets.iter().enumerate().take(self.dim) {
            if o != 0 {
                j = self.shift(j, a, o);
            }
        }
        j
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Signed chart displacement `y - x` of the shortest periodic image.
    pub fn displacement(&self, from: usize, to: usize) -> [T; 3] {
        let a = self.point(from);
        let b = self.point(to);
        let mut d = [T::zero(); 3];
        let half = T::lit(0.5);
        for ax in 0..self.dim {
            let p = self.periods[ax];
            let mut v = b[ax] - a[ax];
            if v > half * p {
                v -= p;
            } else if v < -half * p {
                v += p;
            }
            d[ax] = v;
        }
        d
    }

    /// Same grid with the size of every axis multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self, GeometryError> {
        let sizes: Vec<usize> = self.sizes().iter().map(|s| s * factor).collect();
        Self::new(&sizes, self.periods())
    }

    /// Converts the grid to another scalar type.
    pub fn cast<U: Real>(&self) -> PeriodicGrid<U> {
        let periods: Vec<U> = self
            .periods()
            .iter()
            .map(|p| U::lit(p.to_f64_lossy()))
            .collect();
        PeriodicGrid::new(self.sizes(), &periods).expect("valid grid stays valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(
            PeriodicGrid::<f64>::new(&[8, 7], &[1.0, 1.0]),
            Err(GeometryError::Size { axis: 1, size: 7 })
        ));
        assert!(matches!(
            PeriodicGrid::<f64>::new(&[6, 8], &[1.0, 1.0]),
            Err(GeometryError::Size { axis: 0, .. })
        ));
        assert!(matches!(
            PeriodicGrid::<f64>::new(&[8], &[1.0]),
            Err(GeometryError::Dimension(1))
        ));
        assert!(matches!(
            PeriodicGrid::<f64>::new(&[8, 8], &[1.0, 0.0]),
            Err(GeometryError::Period { axis: 1, .. })
        ));
    }

    #[test]
    fn indexing_wraps() {
        let g = PeriodicGrid::<f64>::new(&[8, 10, 12], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.len(), 960);
        let idx = g.index(&[7, 9, 11]);
        assert_eq!(g.coords(idx), [7, 9, 11]);
        assert_eq!(g.shift(idx, 0, 1), g.index(&[0, 9, 11]));
        assert_eq!(g.shift(idx, 2, 3), g.index(&[7, 9, 2]));
        assert_eq!(g.shift(g.index(&[0, 0, 0]), 1, -1), g.index(&[0, 9, 0]));
        assert!((g.spacing()[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn displacement_uses_nearest_image() {
        let g = PeriodicGrid::<f64>::uniform(2, 8, 1.0).unwrap();
        let a = g.index(&[0, 0]);
        let b = g.index(&[7, 1]);
        let d = g.displacement(a, b);
        assert!((d[0] + 0.125).abs() < 1e-15);
        assert!((d[1] - 0.125).abs() < 1e-15);
    }
}
