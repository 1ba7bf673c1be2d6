use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::geometry::grid::PeriodicGrid;
use crate::scalar::Real;

/// Multi-dimensional FFT over a periodic grid, built from 1-D plans per axis.
#[derive(Clone)]
pub struct GridFft<T: Real> {
    grid: PeriodicGrid<T>,
    forward: Vec<Arc<dyn Fft<T>>>,
    inverse: Vec<Arc<dyn Fft<T>>>,
}

impl<T: Real> std::fmt::Debug for GridFft<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFft")
            .field("sizes", &self.grid.sizes())
            .finish()
    }
}

impl<T: Real> GridFft<T> {
    pub fn new(grid: &PeriodicGrid<T>) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid
            .sizes()
            .iter()
            .map(|&n| planner.plan_fft_forward(n))
            .collect();
        let inverse = grid
            .sizes()
            .iter()
            .map(|&n| planner.plan_fft_inverse(n))
            .collect();
        Self {
            grid: grid.clone(),
            forward,
            inverse,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid<T> {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex<T>], plans: &[Arc<dyn Fft<T>>]) {
        let grid = &self.grid;
        for (axis, plan) in plans.iter().enumerate() {
            let n = grid.sizes()[axis];
            let stride = grid.stride(axis);
            let mut line = vec![Complex::new(T::zero(), T::zero()); n];
            let mut scratch =
                vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
            for start in 0..grid.len() {
                // a line starts where the axis coordinate is zero
                if !(start / stride).is_multiple_of(n) {
                    continue;
                }
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + k * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[start + k * stride] = *v;
                }
            }
        }
    }

    pub fn forward_real(&self, u: &[T]) -> Vec<Complex<T>> {
        let mut data: Vec<Complex<T>> = u.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse transform including the `1/N` normalisation; returns real parts.
    pub fn inverse_real(&self, mut data: Vec<Complex<T>>) -> Vec<T> {
        self.transform(&mut data, &self.inverse);
        let scale = T::one() / T::from_usize_lossy(self.grid.len());
        data.iter().map(|c| c.re * scale).collect()
    }

    /// Signed integer wavenumber of every spectral index, per axis.
    pub fn wavenumbers(&self, idx: usize) -> [i64; 3] {
        let c = self.grid.coords(idx);
        let mut k = [0i64; 3];
        for a in 0..self.grid.dim() {
            let n = self.grid.sizes()[a] as i64;
            let ca = c[a] as i64;
            k[a] = if ca <= n / 2 { ca } else { ca - n };
        }
        k
    }
}
