//! Periodic derivative operators: 2nd/4th-order central stencils and a
//! Fourier-spectral variant.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::fft::GridFft;
use crate::geometry::grid::PeriodicGrid;
use crate::linalg::SymMat;
use crate::scalar::Real;

/// Accuracy of the derivative operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StencilOrder {
    Second,
    #[default]
    Fourth,
    Spectral,
}

/// Derivative operators bound to one grid.
#[derive(Debug, Clone)]
pub struct Differentiator<T: Real> {
    grid: PeriodicGrid<T>,
    order: StencilOrder,
    fft: GridFft<T>,
}

impl<T: Real> Differentiator<T> {
    pub fn new(grid: &PeriodicGrid<T>, order: StencilOrder) -> Self {
        Self {
            grid: grid.clone(),
            order,
            fft: GridFft::new(grid),
        }
    }

    pub fn grid(&self) -> &PeriodicGrid<T> {
        &self.grid
    }

    pub fn order(&self) -> StencilOrder {
        self.order
    }

    pub fn fft(&self) -> &GridFft<T> {
        &self.fft
    }

    /// Real symbol `s` with `∂_axis e^{ikx} = i s e^{ikx}` for integer wavenumber `k`.
    pub fn first_symbol(&self, axis: usize, k: i64) -> T {
        let n = self.grid.sizes()[axis] as i64;
        let h = self.grid.spacing()[axis];
        let theta = T::lit(2.0 * std::f64::consts::PI * k as f64 / n as f64);
        match self.order {
            StencilOrder::Second => theta.sin() / h,
            StencilOrder::Fourth => {
                (T::lit(8.0) * theta.sin() - (theta + theta).sin()) / (T::lit(6.0) * h)
            }
            StencilOrder::Spectral => {
                if 2 * k.abs() == n {
                    T::zero()
                } else {
                    theta / h
                }
            }
        }
    }

    /// Real (non-positive) symbol of `∂²_axis`.
    pub fn second_symbol(&self, axis: usize, k: i64) -> T {
        let n = self.grid.sizes()[axis] as f64;
        let h = self.grid.spacing()[axis];
        let theta = T::lit(2.0 * std::f64::consts::PI * k as f64 / n);
        match self.order {
            StencilOrder::Second => -(T::lit(2.0) - T::lit(2.0) * theta.cos()) / (h * h),
            StencilOrder::Fourth => {
                -(T::lit(30.0) - T::lit(32.0) * theta.cos() + T::lit(2.0) * (theta + theta).cos())
                    / (T::lit(12.0) * h * h)
            }
            StencilOrder::Spectral => -(theta * theta) / (h * h),
        }
    }

    fn spectral_apply<F: Fn(&[i64; 3]) -> Complex<T> + Sync>(&self, u: &[T], symbol: F) -> Vec<T> {
        let mut hat = self.fft.forward_real(u);
        for (idx, c) in hat.iter_mut().enumerate() {
            let k = self.fft.wavenumbers(idx);
            *c *= symbol(&k);
        }
        self.fft.inverse_real(hat)
    }

    pub fn first(&self, u: &[T], axis: usize) -> Vec<T> {
        let g = &self.grid;
        let h = g.spacing()[axis];
        match self.order {
            StencilOrder::Second => {
                let c = T::one() / (h + h);
                (0..g.len())
                    .into_par_iter()
                    .map(|i| c * (u[g.shift(i, axis, 1)] - u[g.shift(i, axis, -1)]))
                    .collect()
            }
            StencilOrder::Fourth => {
                let c = T::one() / (T::lit(12.0) * h);
                let eight = T::lit(8.0);
                (0..g.len())
                    .into_par_iter()
                    .map(|i| {
                        c * (eight * (u[g.shift(i, axis, 1)] - u[g.shift(i, axis, -1)])
                            - (u[g.shift(i, axis, 2)] - u[g.shift(i, axis, -2)]))
                    })
                    .collect()
            }
            StencilOrder::Spectral => self.spectral_apply(u, |k| {
                Complex::new(T::zero(), self.first_symbol(axis, k[axis]))
            }),
        }
    }

    pub fn second(&self, u: &[T], axis: usize) -> Vec<T> {
        let g = &self.grid;
        let h = g.spacing()[axis];
        match self.order {
            StencilOrder::Second => {
                let c = T::one() / (h * h);
                let two = T::lit(2.0);
                (0..g.len())
                    .into_par_iter()
                    .map(|i| c * (u[g.shift(i, axis, 1)] - two * u[i] + u[g.shift(i, axis, -1)]))
                    .collect()
            }
            StencilOrder::Fourth => {
                let c = T::one() / (T::lit(12.0) * h * h);
                let (sixteen, thirty) = (T::lit(16.0), T::lit(30.0));
                (0..g.len())
                    .into_par_iter()
                    .map(|i| {
                        c * (sixteen * (u[g.shift(i, axis, 1)] + u[g.shift(i, axis, -1)])
                            - (u[g.shift(i, axis, 2)] + u[g.shift(i, axis, -2)])
                            - thirty * u[i])
                    })
                    .collect()
            }
            StencilOrder::Spectral => self.spectral_apply(u, |k| {
                Complex::new(self.second_symbol(axis, k[axis]), T::zero())
            }),
        }
    }

    /// Mixed derivative `∂_a ∂_b u` for `a ≠ b` (tensor product of first-derivative stencils).
    pub fn mixed(&self, u: &[T], a: usize, b: usize) -> Vec<T> {
        debug_assert_ne!(a, b);
        match self.order {
            StencilOrder::Spectral => self.spectral_apply(u, |k| {
                Complex::new(
                    -self.first_symbol(a, k[a]) * self.first_symbol(b, k[b]),
                    T::zero(),
                )
            }),
            _ => {
                let da = self.first(u, a);
                self.first(&da, b)
            }
        }
    }

    /// Coordinate gradient at every point.
    pub fn gradient(&self, u: &[T]) -> Vec<[T; 3]> {
        let n = self.grid.dim();
        let parts: Vec<Vec<T>> = (0..n).map(|a| self.first(u, a)).collect();
        (0..self.grid.len())
            .map(|i| {
                let mut g = [T::zero(); 3];
                for a in 0..n {
                    g[a] = parts[a][i];
                }
                g
            })
            .collect()
    }

    /// Coordinate Hessian `∂²_ij u` at every point.
    pub fn hessian(&self, u: &[T]) -> Vec<SymMat<T>> {
        let n = self.grid.dim();
        let mut out = vec![SymMat::zeros(n); self.grid.len()];
        for a in 0..n {
            let d = self.second(u, a);
            for (m, v) in out.iter_mut().zip(d) {
                m.set(a, a, v);
            }
            for b in (a + 1)..n {
                let d = self.mixed(u, a, b);
                for (m, v) in out.iter_mut().zip(d) {
                    m.set(a, b, v);
                }
            }
        }
        out
    }
}
