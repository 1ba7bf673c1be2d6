use std::io::{Read, Write};

use crate::error::GeometryError;
use crate::geometry::grid::PeriodicGrid;
use crate::linalg::SymMat;
use crate::scalar::Real;

/// One real value per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: PeriodicGrid<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: PeriodicGrid<T>, values: Vec<T>) -> Result<Self, GeometryError> {
        if values.len() != grid.len() {
            return Err(GeometryError::ShapeMismatch(format!(
                "field has {} values but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &PeriodicGrid<T>, value: T) -> Self {
        Self {
            values: vec![value; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn zeros(grid: &PeriodicGrid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Samples `f(x)` at every grid point, `x` in chart coordinates.
    pub fn from_fn<F: Fn(&[T]) -> T>(grid: &PeriodicGrid<T>, f: F) -> Result<Self, GeometryError> {
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..grid.dim()])
            })
            .collect();
        Self::new(grid.clone(), values)
    }

    pub(crate) fn from_raw(grid: PeriodicGrid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &PeriodicGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> T {
        self.values[idx]
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_usize_lossy(self.values.len())
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        Self::from_raw(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_map<F: Fn(T, T) -> T>(&self, other: &Self, f: F) -> Self {
        assert_eq!(
            self.values.len(),
            other.values.len(),
            "fields share one grid"
        );
        Self::from_raw(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn shifted(&self, c: T) -> Self {
        self.map(|v| v + c)
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// Writes the flat binary layout: little-endian `u64` dim, `u64` sizes,
    /// `f64` periods, then row-major `f64` values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<(), GeometryError> {
        let io = |e: std::io::Error| GeometryError::Io(e.to_string());
        w.write_all(&(self.grid.dim() as u64).to_le_bytes())
            .map_err(io)?;
        for &s in self.grid.sizes() {
            w.write_all(&(s as u64).to_le_bytes()).map_err(io)?;
        }
        for &p in self.grid.periods() {
            w.write_all(&p.to_f64_lossy().to_le_bytes()).map_err(io)?;
        }
        for &v in &self.values {
            w.write_all(&v.to_f64_lossy().to_le_bytes()).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, GeometryError> {
        let io = |e: std::io::Error| GeometryError::Io(e.to_string());
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf).map_err(io)?;
        let dim = u64::from_le_bytes(buf) as usize;
        if !(2..=3).contains(&dim) {
            return Err(GeometryError::Dimension(dim));
        }
        let mut sizes = Vec::with_capacity(dim);
        for _ in 0..dim {
            r.read_exact(&mut buf).map_err(io)?;
            sizes.push(u64::from_le_bytes(buf) as usize);
        }
        let mut periods = Vec::with_capacity(dim);
        for _ in 0..dim {
            r.read_exact(&mut buf).map_err(io)?;
            periods.push(T::lit(f64::from_le_bytes(buf)));
        }
        let grid = PeriodicGrid::new(&sizes, &periods)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut buf).map_err(io)?;
            values.push(T::lit(f64::from_le_bytes(buf)));
        }
        Self::new(grid, values)
    }

    pub fn cast<U: Real>(&self) -> ScalarField<U> {
        ScalarField::from_raw(
            self.grid.cast(),
            self.values
                .iter()
                .map(|v| U::lit(v.to_f64_lossy()))
                .collect(),
        )
    }
}

/// One symmetric `n×n` tensor per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField<T> {
    grid: PeriodicGrid<T>,
    values: Vec<SymMat<T>>,
}

impl<T: Real> SymTensorField<T> {
    pub fn new(grid: PeriodicGrid<T>, values: Vec<SymMat<T>>) -> Result<Self, GeometryError> {
        if values.len() != grid.len() {
            return Err(GeometryError::ShapeMismatch(format!(
                "tensor field has {} values but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values
            .iter()
            .position(|m| m.dim() != grid.dim() || !m.is_finite())
        {
            return Err(GeometryError::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &PeriodicGrid<T>, value: SymMat<T>) -> Self {
        Self {
            values: vec![value; grid.len()],
            grid: grid.clone(),
        }
    }

    pub(crate) fn from_raw(grid: PeriodicGrid<T>, values: Vec<SymMat<T>>) -> Self {
        Self { grid, values }
    }

    pub fn grid(&self) -> &PeriodicGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[SymMat<T>] {
        &self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> &SymMat<T> {
        &self.values[idx]
    }

    pub fn map<F: Fn(&SymMat<T>) -> SymMat<T>>(&self, f: F) -> Self {
        Self::from_raw(self.grid.clone(), self.values.iter().map(f).collect())
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, v| m.max(v.max_abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_layout_is_exact() {
        let grid = PeriodicGrid::<f64>::new(&[8, 10], &[1.0, 2.0]).unwrap();
        let f = ScalarField::from_fn(&grid, |x| x[0] + 3.0 * x[1]).unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 * (1 + 2 + 2 + 80));
        assert_eq!(&buf[0..8], &2u64.to_le_bytes());
        assert_eq!(&buf[8..16], &8u64.to_le_bytes());
        assert_eq!(&buf[24..32], &1.0f64.to_le_bytes());
        let g = ScalarField::<f64>::read_binary(&buf[..]).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn rejects_non_finite() {
        let grid = PeriodicGrid::<f64>::uniform(2, 8, 1.0).unwrap();
        let mut v = vec![0.0; 64];
        v[5] = f64::NAN;
        assert_eq!(
            ScalarField::new(grid, v),
            Err(GeometryError::NonFinite { index: 5 })
        );
    }
}
