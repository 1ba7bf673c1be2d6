//! Small dense linear algebra for `n ≤ 3` point-wise tensors, plus a
//! restarted GMRES used by the Newton solver.

use crate::scalar::Real;

/// Dense `3×3` array; only the leading `dim×dim` block is meaningful.
pub type Mat3<T> = [[T; 3]; 3];

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// Symmetric `n×n` matrix with packed upper-triangle storage, so symmetry is
/// exact by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat<T> {
    dim: usize,
    a: [T; 6],
}

impl<T: Real> SymMat<T> {
    pub fn zeros(dim: usize) -> Self {
        debug_assert!(dim <= 3);
        Self {
            dim,
            a: [T::zero(); 6],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, T::one())
    }

    pub fn scalar(dim: usize, s: T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, s);
        }
        m
    }

    pub fn diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from the upper triangle of a dense matrix.
    pub fn from_dense(dim: usize, m: &Mat3<T>) -> Self {
        let mut s = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                s.set(i, j, m[i][j]);
            }
        }
        s
    }

    /// Builds from row-major upper-triangle entries `(0,0), (0,1), …, (n-1,n-1)`.
    pub fn from_upper(dim: usize, upper: &[T]) -> Self {
        let mut s = Self::zeros(dim);
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                s.set(i, j, upper[k]);
                k += 1;
            }
        }
        s
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[packed(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[packed(i, j)] = v;
    }

    pub fn to_dense(&self) -> Mat3<T> {
        let mut m = [[T::zero(); 3]; 3];
        for (i, row) in m.iter_mut().enumerate().take(self.dim) {
            for (j, v) in row.iter_mut().enumerate().take(self.dim) {
                *v = self.get(i, j);
            }
        }
        m
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        for k in 0..6 {
            out.a[k] += other.a[k];
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = *self;
        for k in 0..6 {
            out.a[k] -= other.a[k];
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for v in out.a.iter_mut() {
            *v *= s;
        }
        out
    }

    /// `Σ_ij self_ij other_ij` (Frobenius pairing).
    pub fn contract(&self, other: &Self) -> T {
        let mut s = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    pub fn determinant(&self) -> T {
        det(self.dim, &self.to_dense())
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|v| v.is_finite())
    }

    /// `Pᵀ S P` for a dense `P`.
    pub fn congruence(&self, p: &Mat3<T>) -> Self {
        let s = self.to_dense();
        let sp = matmul(self.dim, &s, p);
        let pt = transpose(self.dim, p);
        Self::from_dense(self.dim, &matmul(self.dim, &pt, &sp))
    }

    /// Eigenvalues sorted descending and orthonormal eigenvectors (columns).
    pub fn eigen(&self) -> (Vec<T>, Mat3<T>) {
        jacobi_eigen(self.dim, &self.to_dense())
    }

    pub fn min_eigenvalue(&self) -> T {
        let (vals, _) = self.eigen();
        vals[self.dim - 1]
    }

    pub fn cast<U: Real>(&self) -> SymMat<U> {
        let mut out = SymMat::<U>::zeros(self.dim);
        for k in 0..6 {
            out.a[k] = U::lit(self.a[k].to_f64_lossy());
        }
        out
    }
}

pub fn zero3<T: Real>() -> Mat3<T> {
    [[T::zero(); 3]; 3]
}

pub fn identity3<T: Real>(dim: usize) -> Mat3<T> {
    let mut m = zero3();
    for (i, row) in m.iter_mut().enumerate().take(dim) {
        row[i] = T::one();
    }
    m
}

pub fn matmul<T: Real>(dim: usize, a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = zero3();
    for i in 0..dim {
        for j in 0..dim {
            let mut s = T::zero();
            for k in 0..dim {
                s += a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn transpose<T: Real>(dim: usize, a: &Mat3<T>) -> Mat3<T> {
    let mut t = zero3();
    for i in 0..dim {
        for j in 0..dim {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn matvec<T: Real>(dim: usize, a: &Mat3<T>, x: &[T]) -> [T; 3] {
    let mut y = [T::zero(); 3];
    for i in 0..dim {
        for k in 0..dim {
            y[i] += a[i][k] * x[k];
        }
    }
    y
}

pub fn det<T: Real>(dim: usize, m: &Mat3<T>) -> T {
    match dim {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

/// Lower Cholesky factor `L` with `S = L Lᵀ`, or `None` if `S` is not
/// positive definite.
pub fn cholesky<T: Real>(s: &SymMat<T>) -> Option<Mat3<T>> {
    let n = s.dim();
    let mut l = zero3();
    for j in 0..n {
        let mut d = s.get(j, j);
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > T::zero()) {
            return None;
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in (j + 1)..n {
            let mut v = s.get(i, j);
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / djj;
        }
    }
    Some(l)
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse<T: Real>(dim: usize, l: &Mat3<T>) -> Mat3<T> {
    let mut inv = zero3();
    for i in 0..dim {
        inv[i][i] = T::one() / l[i][i];
        for j in 0..i {
            let mut s = T::zero();
            for k in j..i {
                s += l[i][k] * inv[k][j];
            }
            inv[i][j] = -s / l[i][i];
        }
    }
    inv
}

/// Cyclic Jacobi eigensolver for a symmetric matrix. Returns eigenvalues in
/// descending order and the matching orthonormal eigenvectors as columns.
pub fn jacobi_eigen<T: Real>(dim: usize, m: &Mat3<T>) -> (Vec<T>, Mat3<T>) {
    let mut a = *m;
    let mut v = identity3::<T>(dim);
    let eps = T::epsilon();
    for _sweep in 0..64 {
        let mut off = T::zero();
        let mut scale = T::zero();
        for i in 0..dim {
            scale += a[i][i] * a[i][i];
            for j in (i + 1)..dim {
                off += a[i][j] * a[i][j];
            }
        }
        if off <= eps * eps * (scale + off) || off == T::zero() {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut().take(dim) {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        a[j][j]
            .partial_cmp(&a[i][i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals: Vec<T> = order.iter().map(|&i| a[i][i]).collect();
    let mut vecs = zero3();
    for (new, &old) in order.iter().enumerate() {
        for k in 0..dim {
            vecs[k][new] = v[k][old];
        }
    }
    (vals, vecs)
}

/// Outcome of a GMRES solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresStats<T> {
    pub iterations: usize,
    pub relative_residual: T,
    pub converged: bool,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Restarted GMRES with right preconditioning: solves `A x = b` where
/// `apply(v, out)` computes `A v` and `precondition(v, out)` approximates
/// `A⁻¹ v`. `x` holds the initial guess on entry.
pub fn gmres<T, A, P>(
    apply: A,
    precondition: P,
    b: &[T],
    x: &mut [T],
    rel_tol: T,
    restart: usize,
    max_iters: usize,
) -> GmresStats<T>
where
    T: Real,
    A: Fn(&[T], &mut [T]),
    P: Fn(&[T], &mut [T]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return GmresStats {
            iterations: 0,
            relative_residual: T::zero(),
            converged: true,
        };
    }
    let restart = restart.max(1);
    let mut total = 0;
    let mut r = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    loop {
        apply(x, &mut tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= rel_tol || total >= max_iters {
            return GmresStats {
                iterations: total,
                relative_residual: rel,
                converged: rel <= rel_tol,
            };
        }
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|&v| v / beta).collect());
        let mut h = vec![vec![T::zero(); restart]; restart + 1];
        let mut cs = vec![T::zero(); restart];
        let mut sn = vec![T::zero(); restart];
        let mut g = vec![T::zero(); restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            precondition(&basis[k], &mut z);
            apply(&z, &mut tmp);
            for (j, bj) in basis.iter().enumerate() {
                let hij = dot(&tmp, bj);
                h[j][k] = hij;
                for i in 0..n {
                    tmp[i] -= hij * bj[i];
                }
            }
            // second Gram-Schmidt pass
            for (j, bj) in basis.iter().enumerate() {
                let c = dot(&tmp, bj);
                h[j][k] += c;
                for i in 0..n {
                    tmp[i] -= c * bj[i];
                }
            }
            let hnext = norm(&tmp);
            h[k + 1][k] = hnext;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == T::zero() {
                cs[k] = T::one();
                sn[k] = T::zero();
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = T::zero();
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            total += 1;
            k_used = k + 1;
            let rel = g[k + 1].abs() / bnorm;
            if rel <= rel_tol || total >= max_iters || hnext == T::zero() {
                break;
            }
            basis.push(tmp.iter().map(|&v| v / hnext).collect());
        }
        // back substitution
        let mut y = vec![T::zero(); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![T::zero(); n];
        for (j, &yj) in y.iter().enumerate() {
            for i in 0..n {
                update[i] += yj * basis[j][i];
            }
        }
        precondition(&update, &mut z);
        for i in 0..n {
            x[i] += z[i];
        }
    }
}
