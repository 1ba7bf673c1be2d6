use rayon::prelude::*;

use crate::error::GeometryError;
use crate::geometry::diff::Differentiator;
use crate::geometry::expr::SymTensorExpr;
use crate::geometry::field::{ScalarField, SymTensorField};
use crate::geometry::grid::PeriodicGrid;
use crate::linalg::{cholesky, lower_inverse, Mat3, SymMat};
use crate::scalar::Real;

/// Riemannian metric sampled on the grid, with cached determinant, inverse
/// and inverse Cholesky factor.
#[derive(Debug, Clone)]
pub struct MetricField<T> {
    grid: PeriodicGrid<T>,
    g: Vec<SymMat<T>>,
    det_g: Vec<T>,
    inv_g: Vec<SymMat<T>>,
    chol_inv: Vec<Mat3<T>>,
    constant: bool,
}

impl<T: Real> MetricField<T> {
    pub fn new(grid: PeriodicGrid<T>, g: Vec<SymMat<T>>) -> Result<Self, GeometryError> {
        if g.len() != grid.len() {
            return Err(GeometryError::ShapeMismatch(format!(
                "metric has {} samples but grid has {} points",
                g.len(),
                grid.len()
            )));
        }
        let n = grid.dim();
        let mut det_g = Vec::with_capacity(g.len());
        let mut inv_g = Vec::with_capacity(g.len());
        let mut chol_inv = Vec::with_capacity(g.len());
        for (index, m) in g.iter().enumerate() {
            if m.dim() != n {
                return Err(GeometryError::ShapeMismatch(format!(
                    "metric sample {index} has dimension {}",
                    m.dim()
                )));
            }
            if !m.is_finite() {
                return Err(GeometryError::NonFinite { index });
            }
            let l = cholesky(m).ok_or_else(|| GeometryError::NotPositiveDefinite {
                index,
                coords: grid.coords(index)[..n].to_vec(),
            })?;
            let li = lower_inverse(n, &l);
            // g⁻¹ = L⁻ᵀ L⁻¹
            let mut inv = SymMat::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let mut s = T::zero();
                    for k in 0..n {
                        s += li[k][i] * li[k][j];
                    }
                    inv.set(i, j, s);
                }
            }
            let d = (0..n).fold(T::one(), |acc, i| acc * l[i][i]);
            det_g.push(d * d);
            inv_g.push(inv);
            chol_inv.push(li);
        }
        let constant = g.iter().all(|m| *m == g[0]);
        Ok(Self {
            grid,
            g,
            det_g,
            inv_g,
            chol_inv,
            constant,
        })
    }

    pub fn identity(grid: &PeriodicGrid<T>) -> Self {
        Self::constant(grid, SymMat::identity(grid.dim())).expect("identity is positive definite")
    }

    pub fn constant(grid: &PeriodicGrid<T>, g: SymMat<T>) -> Result<Self, GeometryError> {
        Self::new(grid.clone(), vec![g; grid.len()])
    }

    pub fn from_tensor_field(field: &SymTensorField<T>) -> Result<Self, GeometryError> {
        Self::new(field.grid().clone(), field.values().to_vec())
    }

    pub fn from_fn<F: Fn(&[T]) -> SymMat<T>>(
        grid: &PeriodicGrid<T>,
        f: F,
    ) -> Result<Self, GeometryError> {
        let g = (0..grid.len())
            .map(|i| f(&grid.point(i)[..grid.dim()]))
            .collect();
        Self::new(grid.clone(), g)
    }

    pub fn from_expr(grid: &PeriodicGrid<T>, expr: &SymTensorExpr) -> Result<Self, GeometryError> {
        Self::new(grid.clone(), sample_tensor_expr(grid, expr)?)
    }

    pub fn grid(&self) -> &PeriodicGrid<T> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    #[inline]
    pub fn g(&self, idx: usize) -> &SymMat<T> {
        &self.g[idx]
    }

    pub fn values(&self) -> &[SymMat<T>] {
        &self.g
    }

    #[inline]
    pub fn det(&self, idx: usize) -> T {
        self.det_g[idx]
    }

    #[inline]
    pub fn inv(&self, idx: usize) -> &SymMat<T> {
        &self.inv_g[idx]
    }

    /// Inverse of the lower Cholesky factor of `g` at `idx`.
    #[inline]
    pub fn chol_inv(&self, idx: usize) -> &Mat3<T> {
        &self.chol_inv[idx]
    }

    /// True when every sample equals the first one.
    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// `√det g` per point.
    pub fn volume_density(&self) -> Vec<T> {
        self.det_g.iter().map(|d| d.sqrt()).collect()
    }

    /// Riemannian volume of the torus.
    pub fn volume(&self) -> T {
        self.det_g.iter().map(|d| d.sqrt()).sum::<T>() * self.grid.cell_volume()
    }

    /// Smallest and largest eigenvalue of `g` over the grid: `m |v|² ≤ g(v,v) ≤ M |v|²`.
    pub fn equivalence_constants(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for m in &self.g {
            let (vals, _) = m.eigen();
            hi = hi.max(vals[0]);
            lo = lo.min(vals[vals.len() - 1]);
        }
        (lo, hi)
    }

    pub fn as_tensor_field(&self) -> SymTensorField<T> {
        SymTensorField::from_raw(self.grid.clone(), self.g.clone())
    }
}

pub(crate) fn sample_tensor_expr<T: Real>(
    grid: &PeriodicGrid<T>,
    expr: &SymTensorExpr,
) -> Result<Vec<SymMat<T>>, GeometryError> {
    let n = grid.dim();
    expr.validate(n)?;
    let periods: Vec<f64> = grid.periods().iter().map(|p| p.to_f64_lossy()).collect();
    let out: Vec<SymMat<T>> = (0..grid.len())
        .map(|i| {
            let x: Vec<f64> = grid.point(i)[..n]
                .iter()
                .map(|v| v.to_f64_lossy())
                .collect();
            let vals: Vec<T> = expr.eval(&x, &periods).into_iter().map(T::lit).collect();
            SymMat::from_upper(n, &vals)
        })
        .collect();
    if let Some(index) = out.iter().position(|m| !m.is_finite()) {
        return Err(GeometryError::NonFinite { index });
    }
    Ok(out)
}

/// Samples a closed-form tensor expression on the grid.
pub fn tensor_field_from_expr<T: Real>(
    grid: &PeriodicGrid<T>,
    expr: &SymTensorExpr,
) -> Result<SymTensorField<T>, GeometryError> {
    Ok(SymTensorField::from_raw(
        grid.clone(),
        sample_tensor_expr(grid, expr)?,
    ))
}

/// Christoffel symbols of the second kind; `gamma[idx][k]` holds the
/// symmetric matrix `Γ^k_{ij}`.
#[derive(Debug, Clone)]
pub struct ChristoffelField<T> {
    grid: PeriodicGrid<T>,
    gamma: Vec<[SymMat<T>; 3]>,
}

impl<T: Real> ChristoffelField<T> {
    pub fn zeros(grid: &PeriodicGrid<T>) -> Self {
        let z = SymMat::zeros(grid.dim());
        Self {
            grid: grid.clone(),
            gamma: vec![[z; 3]; grid.len()],
        }
    }

    pub fn grid(&self) -> &PeriodicGrid<T> {
        &self.grid
    }

    /// `Γ^k_{ij}` at point `idx`.
    #[inline]
    pub fn get(&self, idx: usize, k: usize) -> &SymMat<T> {
        &self.gamma[idx][k]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> &[SymMat<T>; 3] {
        &self.gamma[idx]
    }

    pub fn max_abs(&self) -> T {
        let n = self.grid.dim();
        self.gamma.iter().fold(T::zero(), |m, g| {
            (0..n).fold(m, |m, k| m.max(g[k].max_abs()))
        })
    }

    /// Grid maximum of the Frobenius norm `(Σ_{ijk} (Γ^k_{ij})²)^{1/2}`; it
    /// bounds the operator norm of `v ↦ Γ(·,·)v`, and is the measured `C(g)`.
    pub fn norm_bound(&self) -> T {
        let n = self.grid.dim();
        self.gamma
            .iter()
            .map(|g| (0..n).map(|k| g[k].contract(&g[k])).sum::<T>().sqrt())
            .fold(T::zero(), T::max)
    }
}

/// Levi-Civita Christoffel symbols
/// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})` using the
/// differentiator's stencil. Vanishes identically for constant metrics.
pub fn christoffels<T: Real>(
    g: &MetricField<T>,
    diff: &Differentiator<T>,
) -> Result<ChristoffelField<T>, GeometryError> {
    if g.grid() != diff.grid() {
        return Err(GeometryError::ShapeMismatch(
            "metric and differentiator grids differ".into(),
        ));
    }
    let grid = g.grid();
    let n = grid.dim();
    if g.is_constant() {
        return Ok(ChristoffelField::zeros(grid));
    }
    // dg[a][i][j] = ∂_a g_ij sampled on the grid
    let mut dg: Vec<Vec<Vec<Vec<T>>>> = vec![vec![vec![Vec::new(); n]; n]; n];
    for i in 0..n {
        for j in i..n {
            let comp: Vec<T> = g.values().iter().map(|m| m.get(i, j)).collect();
            for (a, dga) in dg.iter_mut().enumerate() {
                let d = diff.first(&comp, a);
                dga[j][i] = d.clone();
                dga[i][j] = d;
            }
        }
    }
    let half = T::lit(0.5);
    let gamma = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            let ginv = g.inv(p);
            let mut out = [SymMat::zeros(n); 3];
            // first kind: Γ_{lij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
            let mut first = [[[T::zero(); 3]; 3]; 3];
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        first[l][i][j] = half * (dg[i][j][l][p] + dg[j][i][l][p] - dg[l][i][j][p]);
                    }
                }
            }
            for (k, gk) in out.iter_mut().enumerate().take(n) {
                for i in 0..n {
                    for j in i..n {
                        let mut s = T::zero();
                        for (l, fl) in first.iter().enumerate().take(n) {
                            s += ginv.get(k, l) * fl[i][j];
                        }
                        gk.set(i, j, s);
                    }
                }
            }
            out
        })
        .collect();
    Ok(ChristoffelField {
        grid: grid.clone(),
        gamma,
    })
}

/// Covariant Hessian `∇²_{ij}φ = ∂²_{ij}φ − Γ^k_{ij} ∂_k φ`.
pub fn covariant_hessian<T: Real>(
    phi: &ScalarField<T>,
    gamma: &ChristoffelField<T>,
    diff: &Differentiator<T>,
) -> Result<SymTensorField<T>, GeometryError> {
    if phi.grid() != gamma.grid() || phi.grid() != diff.grid() {
        return Err(GeometryError::ShapeMismatch(
            "fields do not share one grid".into(),
        ));
    }
    let n = phi.grid().dim();
    let mut hess = diff.hessian(phi.values());
    let grad = diff.gradient(phi.values());
    hess.par_iter_mut().enumerate().for_each(|(p, h)| {
        let gm = gamma.at(p);
        for (k, gk) in gm.iter().enumerate().take(n) {
            let dk = grad[p][k];
            if dk != T::zero() {
                *h = h.sub(&gk.scale(dk));
            }
        }
    });
    Ok(SymTensorField::from_raw(phi.grid().clone(), hess))
}

/// Grid max of the metric-compatibility defect
/// `|∂_k g_{ij} − Γ^l_{ki} g_{lj} − Γ^l_{kj} g_{il}|`; vanishes at stencil order.
pub fn metric_compatibility_defect<T: Real>(
    g: &MetricField<T>,
    gamma: &ChristoffelField<T>,
    diff: &Differentiator<T>,
) -> T {
    let n = g.dim();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            let comp: Vec<T> = g.values().iter().map(|m| m.get(i, j)).collect();
            for k in 0..n {
                let d = diff.first(&comp, k);
                for (p, &dp) in d.iter().enumerate() {
                    let gm = gamma.at(p);
                    let gp = g.g(p);
                    let mut s = dp;
                    for (l, gl) in gm.iter().enumerate().take(n) {
                        s -= gl.get(k, i) * gp.get(l, j) + gl.get(k, j) * gp.get(i, l);
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// Exact Christoffel symbols of a closed-form metric at one point (from jets).
pub fn exact_christoffels(metric: &SymTensorExpr, x: &[f64], periods: &[f64]) -> [SymMat<f64>; 3] {
    let n = metric.dim();
    let jets = metric.jets(x, periods);
    let mut gm = SymMat::zeros(n);
    for i in 0..n {
        for j in i..n {
            gm.set(i, j, jets[i][j].value);
        }
    }
    let l = cholesky(&gm).expect("metric positive definite");
    let li = lower_inverse(n, &l);
    let mut out = [SymMat::zeros(n); 3];
    for (k, gk) in out.iter_mut().enumerate().take(n) {
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for l2 in 0..n {
                    let mut ginv_kl = 0.0;
                    for r in 0..n {
                        ginv_kl += li[r][k] * li[r][l2];
                    }
                    s += 0.5
                        * ginv_kl
                        * (jets[j][l2].grad[i] + jets[i][l2].grad[j] - jets[i][j].grad[l2]);
                }
                gk.set(i, j, s);
            }
        }
    }
    out
}

/// Exact covariant Hessian of a closed-form `φ` under a closed-form metric at one point.
pub fn exact_covariant_hessian(
    phi: &crate::geometry::expr::Expr,
    metric: &SymTensorExpr,
    x: &[f64],
    periods: &[f64],
) -> SymMat<f64> {
    let n = metric.dim();
    let jp = phi.jet(x, periods);
    let gamma = exact_christoffels(metric, x, periods);
    let mut h = SymMat::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut v = jp.hess[i][j];
            for (k, gk) in gamma.iter().enumerate().take(n) {
                v -= gk.get(i, j) * jp.grad[k];
            }
            h.set(i, j, v);
        }
    }
    h
}
