//! Concave symmetric eigenvalue operators `f(λ)` on the positive cone,
//! their lift `F(A) = f(λ_g(A))` to symmetric tensors, and randomized
//! verification of the structural conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, OperatorError};
use crate::geometry::{MetricField, SymTensorField};
use crate::linalg::{cholesky, jacobi_eigen, lower_inverse, matmul, transpose, Mat3, SymMat};
use crate::scalar::Real;

/// Built-in operator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `σ_n^{1/n}`.
    MongeAmpere,
    /// `(σ_n/σ_k)^{1/(n−k)}`, `0 ≤ k < n`.
    HessianQuotient { k: usize },
}

/// Elementary symmetric polynomial `σ_k(λ)` (`σ_0 = 1`, `σ_k = 0` for `k < 0` or `k > n`).
pub fn elementary_symmetric<T: Real>(lambda: &[T], k: isize) -> T {
    if k < 0 || k as usize > lambda.len() {
        return T::zero();
    }
    let k = k as usize;
    let mut e = vec![T::zero(); k + 1];
    e[0] = T::one();
    for &l in lambda {
        for j in (1..=k).rev() {
            let prev = e[j - 1];
            e[j] += l * prev;
        }
    }
    e[k]
}

fn without<T: Real>(lambda: &[T], i: usize) -> Vec<T> {
    lambda
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .collect()
}

/// Membership of `λ` in `Γⁿ` with margin `min λ_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeStatus<T> {
    pub inside: bool,
    pub margin: T,
}

pub fn cone_membership<T: Real>(lambda: &[T]) -> ConeStatus<T> {
    let margin = lambda.iter().copied().fold(T::infinity(), T::min);
    ConeStatus {
        inside: margin > T::zero(),
        margin,
    }
}

/// Interface the condition checker works against, so deliberately broken
/// families can be fed through the same verification.
pub trait SymmetricFunction<T: Real>: Sync {
    fn dim(&self) -> usize;
    /// Value on the closure of the cone (no membership check).
    fn value_unchecked(&self, lambda: &[T]) -> T;
    fn grad_unchecked(&self, lambda: &[T]) -> Vec<T>;
    /// Claimed product lower bound `c`.
    fn product_bound(&self) -> T;
    fn in_cone(&self, lambda: &[T]) -> bool {
        cone_membership(lambda).inside
    }
}

/// A concave symmetric operator with its cone `Γⁿ`, product constant `c`
/// and background shift `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSpec<T> {
    family: Family,
    dim: usize,
    c: T,
    sigma: T,
}

impl<T: Real> OperatorSpec<T> {
    /// Builds a spec. For Monge–Ampère `c = n^{−n}` exactly; for quotients
    /// `c` is the measured minimum of `Π f_i` over the default sample set.
    pub fn new(family: Family, dim: usize, sigma: T) -> Result<Self, OperatorError> {
        if !(2..=3).contains(&dim) {
            return Err(OperatorError::Geometry(GeometryError::Dimension(dim)));
        }
        if let Family::HessianQuotient { k } = family {
            if k >= dim {
                return Err(OperatorError::Geometry(GeometryError::Argument(format!(
                    "hessian quotient needs k < n, got k = {k}, n = {dim}"
                ))));
            }
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(OperatorError::Geometry(GeometryError::Argument(format!(
                "sigma must be positive, got {sigma}"
            ))));
        }
        let mut spec = Self {
            family,
            dim,
            c: T::one(),
            sigma,
        };
        spec.c = match family {
            Family::MongeAmpere | Family::HessianQuotient { k: 0 } => {
                T::one() / T::from_usize_lossy(dim).powi(dim as i32)
            }
            Family::HessianQuotient { .. } => {
                measure_product_bound(&spec, 4096, 0x5eed).max(T::min_positive_value())
            }
        };
        Ok(spec)
    }

    pub fn monge_ampere(dim: usize) -> Self {
        Self::new(Family::MongeAmpere, dim, T::one()).expect("valid dimension")
    }

    /// Overrides the stored product constant.
    pub fn with_c(mut self, c: T) -> Result<Self, OperatorError> {
        if !(c > T::zero()) {
            return Err(OperatorError::Geometry(GeometryError::Argument(format!(
                "product constant must be positive, got {c}"
            ))));
        }
        self.c = c;
        Ok(self)
    }

    pub fn with_sigma(mut self, sigma: T) -> Result<Self, OperatorError> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(OperatorError::Geometry(GeometryError::Argument(format!(
                "sigma must be positive, got {sigma}"
            ))));
        }
        self.sigma = sigma;
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    fn check(&self, lambda: &[T]) -> Result<(), OperatorError> {
        if lambda.len() != self.dim {
            return Err(OperatorError::Dimension {
                expected: self.dim,
                got: lambda.len(),
            });
        }
        let st = cone_membership(lambda);
        if !st.inside {
            return Err(OperatorError::ConeViolation {
                lambda: lambda.iter().map(|v| v.to_f64_lossy()).collect(),
                margin: st.margin.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// `f(λ)` for `λ ∈ Γⁿ`.
    pub fn f_eval(&self, lambda: &[T]) -> Result<T, OperatorError> {
        self.check(lambda)?;
        Ok(self.value_unchecked(lambda))
    }

    /// `∂f/∂λ_i` for `λ ∈ Γⁿ`.
    pub fn f_grad(&self, lambda: &[T]) -> Result<Vec<T>, OperatorError> {
        self.check(lambda)?;
        Ok(self.grad_unchecked(lambda))
    }

    /// `f(𝟏)`.
    pub fn f_one(&self) -> T {
        self.value_unchecked(&vec![T::one(); self.dim])
    }

    /// `∂f/∂λ_1(𝟏)` (equal in every component by symmetry).
    pub fn f_grad_one(&self) -> T {
        self.grad_unchecked(&vec![T::one(); self.dim])[0]
    }
}

impl<T: Real> SymmetricFunction<T> for OperatorSpec<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value_unchecked(&self, lambda: &[T]) -> T {
        let n = self.dim;
        let sn = elementary_symmetric(lambda, n as isize);
        match self.family {
            Family::MongeAmpere => {
                if sn <= T::zero() {
                    T::zero()
                } else {
                    sn.powf(T::one() / T::from_usize_lossy(n))
                }
            }
            Family::HessianQuotient { k } => {
                let sk = elementary_symmetric(lambda, k as isize);
                if sn <= T::zero() || sk <= T::zero() {
                    T::zero()
                } else {
                    (sn / sk).powf(T::one() / T::from_usize_lossy(n - k))
                }
            }
        }
    }

    fn grad_unchecked(&self, lambda: &[T]) -> Vec<T> {
        let n = self.dim;
        let f = self.value_unchecked(lambda);
        match self.family {
            Family::MongeAmpere => {
                let nn = T::from_usize_lossy(n);
                lambda.iter().map(|&l| f / (nn * l)).collect()
            }
            Family::HessianQuotient { k } => {
                let sk = elementary_symmetric(lambda, k as isize);
                let m = T::from_usize_lossy(n - k);
                (0..n)
                    .map(|i| {
                        let rest = without(lambda, i);
                        let skm1 = elementary_symmetric(&rest, k as isize - 1);
                        f / m * (T::one() / lambda[i] - skm1 / sk)
                    })
                    .collect()
            }
        }
    }

    fn product_bound(&self) -> T {
        self.c
    }
}

/// Draws `λ = s·(e^{u_1},…,e^{u_n})` with `u_i ~ U(−2, 2)` and `s` log-uniform in `[10⁻³, 10³]`.
pub fn sample_cone<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    let s = 10f64.powf(rng.gen_range(-3.0..3.0));
    let mut v: Vec<f64> = (0..dim)
        .map(|_| s * rng.gen_range(-2.0f64..2.0).exp())
        .collect();
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite samples"));
    v
}

fn measure_product_bound<T: Real, F: SymmetricFunction<T>>(f: &F, samples: usize, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = T::infinity();
    for _ in 0..samples {
        let l: Vec<T> = sample_cone(&mut rng, f.dim())
            .into_iter()
            .map(T::lit)
            .collect();
        let p = f
            .grad_unchecked(&l)
            .iter()
            .copied()
            .fold(T::one(), |a, b| a * b);
        best = best.min(p);
    }
    best
}

/// Eigen-decomposition of `A` with respect to `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    /// Eigenvalues, descending.
    pub lambda: Vec<T>,
    /// `g`-orthonormal eigenvectors as columns: `Eᵀ g E = I`, `Eᵀ A E = diag(λ)`.
    pub frame: Mat3<T>,
}

impl<T: Real> Spectrum<T> {
    /// `g E diag(λ) Eᵀ g`, which reproduces `A`.
    pub fn reconstruct(&self, g: &SymMat<T>) -> SymMat<T> {
        let n = g.dim();
        let gd = g.to_dense();
        let ge = matmul(n, &gd, &self.frame);
        let mut out = SymMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = T::zero();
                for k in 0..n {
                    s += ge[i][k] * self.lambda[k] * ge[j][k];
                }
                out.set(i, j, s);
            }
        }
        out
    }
}

/// Eigenvalues of `A` with respect to `g` using a precomputed inverse
/// Cholesky factor `L⁻¹` of `g`.
pub fn spectrum_with_factor<T: Real>(a: &SymMat<T>, chol_inv: &Mat3<T>) -> Spectrum<T> {
    let n = a.dim();
    let lt = transpose(n, chol_inv);
    // B = L⁻¹ A L⁻ᵀ
    let b = a.congruence(&lt);
    let (lambda, q) = jacobi_eigen(n, &b.to_dense());
    let frame = matmul(n, &lt, &q);
    Spectrum { lambda, frame }
}

/// Eigenvalues of the generalized problem `A v = λ g v`, sorted descending.
pub fn eigenvalues_wrt_metric<T: Real>(
    a: &SymMat<T>,
    g: &SymMat<T>,
) -> Result<Spectrum<T>, GeometryError> {
    if a.dim() != g.dim() {
        return Err(GeometryError::ShapeMismatch(
            "tensor and metric dimensions differ".into(),
        ));
    }
    let l = cholesky(g).ok_or(GeometryError::NotPositiveDefinite {
        index: 0,
        coords: Vec::new(),
    })?;
    Ok(spectrum_with_factor(a, &lower_inverse(g.dim(), &l)))
}

/// `F(A)`, its derivative `∂F/∂A_{ij}` and the spectrum at one point.
#[derive(Debug, Clone)]
pub struct PointEval<T> {
    pub spectrum: Spectrum<T>,
    pub value: T,
    pub deriv: SymMat<T>,
}

/// Eigenvalues closer than this are treated as one cluster in the derivative.
pub const EIGEN_GAP: f64 = 1e-8;

impl<T: Real> OperatorSpec<T> {
    /// Value and derivative of `F` at `A` given `L⁻¹` of `g`.
    ///
    /// The derivative is `E diag(f_i) Eᵀ`. Within clusters of eigenvalues
    /// closer than [`EIGEN_GAP`] the `f_i` are averaged so the result does not
    /// depend on the arbitrary choice of frame inside the cluster.
    pub fn evaluate_with_factor(
        &self,
        a: &SymMat<T>,
        chol_inv: &Mat3<T>,
    ) -> Result<PointEval<T>, OperatorError> {
        let spectrum = spectrum_with_factor(a, chol_inv);
        let value = self.f_eval(&spectrum.lambda)?;
        let mut fi = self.grad_unchecked(&spectrum.lambda);
        let n = self.dim;
        let gap = T::lit(EIGEN_GAP);
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n
                && (spectrum.lambda[end - 1] - spectrum.lambda[end]).abs()
                    <= gap * (T::one() + spectrum.lambda[end - 1].abs())
            {
                end += 1;
            }
            if end - start > 1 {
                let avg =
                    fi[start..end].iter().copied().sum::<T>() / T::from_usize_lossy(end - start);
                fi[start..end].iter_mut().for_each(|v| *v = avg);
            }
            start = end;
        }
        let e = &spectrum.frame;
        let mut deriv = SymMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = T::zero();
                for k in 0..n {
                    s += e[i][k] * fi[k] * e[j][k];
                }
                deriv.set(i, j, s);
            }
        }
        Ok(PointEval {
            spectrum,
            value,
            deriv,
        })
    }

    /// `F(A) = f(λ_g(A))`.
    pub fn tensor_eval(&self, a: &SymMat<T>, g: &SymMat<T>) -> Result<T, OperatorError> {
        let s = eigenvalues_wrt_metric(a, g)?;
        self.f_eval(&s.lambda)
    }

    /// `∂F/∂A_{ij}` as a symmetric matrix.
    pub fn tensor_deriv(&self, a: &SymMat<T>, g: &SymMat<T>) -> Result<SymMat<T>, OperatorError> {
        let l = cholesky(g).ok_or(GeometryError::NotPositiveDefinite {
            index: 0,
            coords: Vec::new(),
        })?;
        Ok(self
            .evaluate_with_factor(a, &lower_inverse(g.dim(), &l))?
            .deriv)
    }
}

/// Outcome of one structural condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    /// Condition-specific measured quantity (worst case over the samples).
    pub measured: f64,
    /// A sample reproducing the failure.
    pub witness: Option<Vec<f64>>,
}

/// Result of [`check_conditions`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub samples: usize,
    pub seed: u64,
    pub c: f64,
    pub verdicts: Vec<Verdict>,
    pub product_min: f64,
    pub product_max: f64,
    pub grad_sum_min: f64,
    /// `Σ f_i` at `λ = 𝟏` against `n c^{1/n}`.
    pub grad_sum_at_one: f64,
    pub grad_sum_floor: f64,
    pub concavity_worst: f64,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

#[derive(Default, Clone)]
struct Worst {
    value: f64,
    witness: Option<Vec<f64>>,
}

impl Worst {
    fn new(value: f64) -> Self {
        Self {
            value,
            witness: None,
        }
    }

    fn take_max(mut self, v: f64, w: &[f64]) -> Self {
        if v > self.value || (self.witness.is_none() && v == self.value && v > 0.0) {
            self.value = v;
            self.witness = Some(w.to_vec());
        }
        self
    }

    fn merge_max(self, o: Self) -> Self {
        if o.value > self.value {
            o
        } else {
            self
        }
    }
}

#[derive(Clone)]
struct Tally {
    positivity: Worst,
    boundary: Worst,
    symmetry: Worst,
    ellipticity: Worst,
    product_low: Worst,
    product_high: f64,
    grad_sum: Worst,
    concavity: Worst,
    homogeneity: Worst,
    am_gm: Worst,
}

impl Tally {
    fn new() -> Self {
        Self {
            positivity: Worst::new(f64::NEG_INFINITY),
            boundary: Worst::new(0.0),
            symmetry: Worst::new(0.0),
            ellipticity: Worst::new(f64::NEG_INFINITY),
            product_low: Worst::new(f64::NEG_INFINITY),
            product_high: f64::NEG_INFINITY,
            grad_sum: Worst::new(f64::NEG_INFINITY),
            concavity: Worst::new(f64::NEG_INFINITY),
            homogeneity: Worst::new(0.0),
            am_gm: Worst::new(f64::NEG_INFINITY),
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            positivity: self.positivity.merge_max(o.positivity),
            boundary: self.boundary.merge_max(o.boundary),
            symmetry: self.symmetry.merge_max(o.symmetry),
            ellipticity: self.ellipticity.merge_max(o.ellipticity),
            product_low: self.product_low.merge_max(o.product_low),
            product_high: self.product_high.max(o.product_high),
            grad_sum: self.grad_sum.merge_max(o.grad_sum),
            concavity: self.concavity.merge_max(o.concavity),
            homogeneity: self.homogeneity.merge_max(o.homogeneity),
            am_gm: self.am_gm.merge_max(o.am_gm),
        }
    }
}

/// Relative tolerance for permutation symmetry and homogeneity.
const SYMMETRY_TOL: f64 = 1e-12;
/// Absolute slack for the concavity inequality.
const CONCAVITY_SLACK: f64 = 1e-10;

/// Randomized verification of the structural conditions:
/// positivity with vanishing on `∂Γ`, permutation symmetry, ellipticity
/// `f_i > 0`, concavity along random segments, the product bound
/// `Π f_i ≥ c`, the derived `Σ f_i ≥ n c^{1/n}`, Euler homogeneity and the
/// AM–GM consequence `f(λ) ≥ n(cΠμ_i)^{1/n}` for `λ − μ ∈ Γ`, `μ ∈ Γⁿ`.
///
/// Each sample uses its own generator seeded from `(seed, index)`, so the
/// report is independent of thread scheduling.
pub fn check_conditions<F: SymmetricFunction<f64>>(
    f: &F,
    samples: usize,
    seed: u64,
) -> ConditionReport {
    let n = f.dim();
    let c = f.product_bound();
    let floor = n as f64 * c.powf(1.0 / n as f64);
    let tally = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut l = sample_cone(&mut rng, n);
            // shuffle so asymmetric families see unsorted input too
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                l.swap(i, j);
            }
            let mut t = Tally::new();
            let v = f.value_unchecked(&l);
            // positivity: record −f (a failure is −f ≥ 0)
            t.positivity = t.positivity.take_max(-v, &l);

            // vanishing on the boundary: zero the smallest entry
            let mut b = l.clone();
            let imin = (0..n)
                .min_by(|&i, &j| b[i].partial_cmp(&b[j]).expect("finite"))
                .expect("n ≥ 1");
            b[imin] = 0.0;
            t.boundary = t.boundary.take_max(f.value_unchecked(&b).abs(), &b);

            // symmetry over every transposition
            for i in 0..n {
                for j in (i + 1)..n {
                    let mut p = l.clone();
                    p.swap(i, j);
                    let d = (f.value_unchecked(&p) - v).abs() / v.abs().max(f64::MIN_POSITIVE);
                    t.symmetry = t.symmetry.take_max(d, &l);
                }
            }

            let g = f.grad_unchecked(&l);
            let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
            t.ellipticity = t.ellipticity.take_max(-gmin, &l);
            let prod: f64 = g.iter().product();
            t.product_low = t.product_low.take_max(-prod, &l);
            t.product_high = prod;
            let sum: f64 = g.iter().sum();
            t.grad_sum = t.grad_sum.take_max(floor - sum, &l);

            let euler: f64 = g.iter().zip(&l).map(|(a, b)| a * b).sum();
            t.homogeneity = t
                .homogeneity
                .take_max((euler - v).abs() / v.abs().max(f64::MIN_POSITIVE), &l);

            // concavity along the segment to a second cone sample
            let mu = sample_cone(&mut rng, n);
            let tt: f64 = rng.gen_range(0.0..1.0);
            let mid: Vec<f64> = l
                .iter()
                .zip(&mu)
                .map(|(a, b)| tt * a + (1.0 - tt) * b)
                .collect();
            let gap = tt * v + (1.0 - tt) * f.value_unchecked(&mu) - f.value_unchecked(&mid);
            let scale = 1.0 + v.abs() + f.value_unchecked(&mu).abs();
            t.concavity = t.concavity.take_max(gap - CONCAVITY_SLACK * scale, &mid);

            // AM-GM: λ = μ' + ν with μ' ∈ Γⁿ, ν ∈ Γ
            let small = sample_cone(&mut rng, n);
            let lam: Vec<f64> = small.iter().zip(&l).map(|(a, b)| a + b).collect();
            let lower = n as f64 * (c * small.iter().product::<f64>()).powf(1.0 / n as f64);
            let fl = f.value_unchecked(&lam);
            t.am_gm = t
                .am_gm
                .take_max((lower - fl) / fl.abs().max(1.0) - 1e-12, &lam);
            t
        })
        .reduce(Tally::new, Tally::merge);

    let product_min = -tally.product_low.value;
    let one = vec![1.0; n];
    let grad_sum_at_one: f64 = f.grad_unchecked(&one).iter().sum();
    let verdicts = vec![
        Verdict {
            name: "positivity".into(),
            pass: tally.positivity.value < 0.0,
            measured: -tally.positivity.value,
            witness: (tally.positivity.value >= 0.0)
                .then(|| tally.positivity.witness.clone())
                .flatten(),
        },
        Verdict {
            name: "boundary_vanishing".into(),
            pass: tally.boundary.value <= 1e-12,
            measured: tally.boundary.value,
            witness: (tally.boundary.value > 1e-12)
                .then(|| tally.boundary.witness.clone())
                .flatten(),
        },
        Verdict {
            name: "symmetry".into(),
            pass: tally.symmetry.value <= SYMMETRY_TOL,
            measured: tally.symmetry.value,
            witness: (tally.symmetry.value > SYMMETRY_TOL)
                .then(|| tally.symmetry.witness.clone())
                .flatten(),
        },
        Verdict {
            name: "ellipticity".into(),
            pass: tally.ellipticity.value < 0.0,
            measured: -tally.ellipticity.value,
            witness: (tally.ellipticity.value >= 0.0)
                .then(|| tally.ellipticity.witness.clone())
                .flatten(),
        },
        Verdict {
            name: "concavity".into(),
            pass: tally.concavity.value <= 0.0,
            measured: tally.concavity.value,
            witness: (tally.concavity.value > 0.0)
                .then(|| tally.concavity.witness.clone())
                .flatten(),
        },
        Verdict {
            name: "product_bound".into(),
            pass: product_min >= c * (1.0 - 1e-12),
            measured: product_min,
            witness: (product_min < c * (1.0 - 1e-12))
                .then(|| tally.product_low.witness.clone())
                .flatten(),
        },
        Verdict {
            name: "gradient_sum".into(),
            pass: tally.grad_sum.value <= 1e-12 * floor,
            measured: floor - tally.grad_sum.value,
            witness: (tally.grad_sum.value > 1e-12 * floor)
                .then(|| tally.grad_sum.witness.clone())
                .flatten(),
        },
        Verdict {
            name: "homogeneity".into(),
            pass: tally.homogeneity.value <= SYMMETRY_TOL * 10.0,
            measured: tally.homogeneity.value,
            witness: (tally.homogeneity.value > SYMMETRY_TOL * 10.0)
                .then(|| tally.homogeneity.witness.clone())
                .flatten(),
        },
        Verdict {
            name: "am_gm".into(),
            pass: tally.am_gm.value <= 0.0,
            measured: tally.am_gm.value,
            witness: (tally.am_gm.value > 0.0)
                .then(|| tally.am_gm.witness.clone())
                .flatten(),
        },
    ];
    ConditionReport {
        samples,
        seed,
        c,
        verdicts,
        product_min,
        product_max: tally.product_high,
        grad_sum_min: floor - tally.grad_sum.value,
        grad_sum_at_one,
        grad_sum_floor: floor,
        concavity_worst: tally.concavity.value,
    }
}

/// Per-point and global bounds implied by the C-subsolution inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CSubsolutionReport {
    pub rhs_sup: f64,
    pub sigma: f64,
    /// `rhs_sup^n / (nⁿ c σ^{n−1}) − σ`, the uniform bound on `max_i(λ_i − λ'_i)`.
    pub uniform_bound: f64,
    /// Sharper bound per point using `(rhs_sup − f(λ' − σ𝟏))⁺`.
    pub per_point: Vec<f64>,
    pub per_point_max: f64,
    /// True when the uniform bound is negative: no admissible excess exists.
    pub empty_admissible: bool,
}

/// `rhs_sup^n/(nⁿ c σ^{n−1}) − σ`.
pub fn csubsolution_uniform_bound(n: usize, c: f64, sigma: f64, rhs_sup: f64) -> f64 {
    let nf = n as f64;
    rhs_sup.powi(n as i32) / (nf.powi(n as i32) * c * sigma.powi(n as i32 - 1)) - sigma
}

/// Evaluates the C-subsolution bound for background `χ`.
pub fn check_csubsolution(
    spec: &OperatorSpec<f64>,
    chi: &SymTensorField<f64>,
    g: &MetricField<f64>,
    rhs_sup: f64,
) -> Result<CSubsolutionReport, OperatorError> {
    if chi.grid() != g.grid() {
        return Err(GeometryError::ShapeMismatch("χ and metric grids differ".into()).into());
    }
    let n = spec.dim();
    let sigma = spec.sigma();
    let c = spec.c();
    let nf = n as f64;
    let mut per_point = Vec::with_capacity(chi.values().len());
    for (idx, a) in chi.values().iter().enumerate() {
        let s = spectrum_with_factor(a, g.chol_inv(idx));
        let shifted: Vec<f64> = s.lambda.iter().map(|l| l - sigma).collect();
        let st = cone_membership(&shifted);
        if !st.inside {
            return Err(GeometryError::Argument(format!(
                "λ(χ − σg) leaves the cone at point {idx} (grid coordinates {:?}): {:?}, margin {}",
                &chi.grid().coords(idx)[..n],
                shifted,
                st.margin
            ))
            .into());
        }
        let slack = (rhs_sup - spec.value_unchecked(&shifted)).max(0.0);
        per_point.push((slack / nf).powi(n as i32) / (c * sigma.powi(n as i32 - 1)) - sigma);
    }
    let uniform_bound = csubsolution_uniform_bound(n, c, sigma, rhs_sup);
    let per_point_max = per_point.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CSubsolutionReport {
        rhs_sup,
        sigma,
        uniform_bound,
        per_point,
        per_point_max,
        empty_admissible: uniform_bound < 0.0,
    })
}

/// Weighted sums `f(λ) = Σ w_i λ_i` with distinct weights: linear, elliptic
/// and concave, but not symmetric and not vanishing on `∂Γ`. Fed through the
/// condition checker to show that violations are caught with a witness.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetricCounterexample {
    pub weights: Vec<f64>,
}

impl AsymmetricCounterexample {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights }
    }
}

impl SymmetricFunction<f64> for AsymmetricCounterexample {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value_unchecked(&self, lambda: &[f64]) -> f64 {
        self.weights.iter().zip(lambda).map(|(w, l)| w * l).sum()
    }

    fn grad_unchecked(&self, _: &[f64]) -> Vec<f64> {
        self.weights.clone()
    }

    fn product_bound(&self) -> f64 {
        self.weights.iter().product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PeriodicGrid;
    use proptest::prelude::*;

    #[test]
    fn spectra_of_diagonal_problems() {
        let s =
            eigenvalues_wrt_metric(&SymMat::diagonal(&[2.0, 3.0]), &SymMat::identity(2)).unwrap();
        assert_eq!(s.lambda, vec![3.0, 2.0]);
        let s = eigenvalues_wrt_metric(
            &SymMat::<f64>::diagonal(&[4.0, 3.0]),
            &SymMat::diagonal(&[4.0, 1.0]),
        )
        .unwrap();
        assert!((s.lambda[0] - 3.0).abs() < 1e-15 && (s.lambda[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn family_values() {
        let ma = OperatorSpec::<f64>::monge_ampere(3);
        assert!((ma.f_eval(&[1.0; 3]).unwrap() - 1.0).abs() < 1e-15);
        for gi in ma.f_grad(&[1.0; 3]).unwrap() {
            assert!((gi - 1.0 / 3.0).abs() < 1e-15);
        }
        let q0 = OperatorSpec::<f64>::new(Family::HessianQuotient { k: 0 }, 2, 1.0).unwrap();
        assert!((q0.f_eval(&[2.0, 2.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(
            ma.f_eval(&[1.0, -1.0, 1.0]),
            Err(OperatorError::ConeViolation { .. })
        ));
        assert!(OperatorSpec::<f64>::new(Family::HessianQuotient { k: 2 }, 2, 1.0).is_err());
    }

    #[test]
    fn cone_margins() {
        assert!(cone_membership(&[1.0, 1.0]).inside);
        assert!(!cone_membership(&[1.0, -1.0]).inside);
        assert_eq!(cone_membership(&[0.25, 0.25]).margin, 0.25);
    }

    #[test]
    fn quotient_gradient_matches_difference_quotients() {
        let q = OperatorSpec::<f64>::new(Family::HessianQuotient { k: 1 }, 3, 1.0).unwrap();
        let l = [3.0, 1.5, 0.7];
        let g = q.f_grad(&l).unwrap();
        for i in 0..3 {
            let mut p = l;
            let mut m = l;
            p[i] += 1e-6;
            m[i] -= 1e-6;
            let fd = (q.f_eval(&p).unwrap() - q.f_eval(&m).unwrap()) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn broken_family_fails_symmetry_with_witness() {
        let broken = AsymmetricCounterexample::new(vec![1.0, 2.0]);
        let r = check_conditions(&broken, 1000, 7);
        let v = r.verdict("symmetry").unwrap();
        assert!(!v.pass);
        let w = v.witness.clone().unwrap();
        let swapped = broken.value_unchecked(&[w[1], w[0]]);
        assert!((swapped - broken.value_unchecked(&w)).abs() > 1e-12);
    }

    #[test]
    fn monge_ampere_passes_all_conditions() {
        let r = check_conditions(&OperatorSpec::<f64>::monge_ampere(2), 2000, 1);
        assert!(r.all_pass(), "{r:?}");
        assert!((r.product_min - 0.25).abs() < 1e-12 && (r.product_max - 0.25).abs() < 1e-12);
        assert!((r.grad_sum_at_one - r.grad_sum_floor).abs() < 1e-15);
    }

    #[test]
    fn csubsolution_literal_example() {
        let spec = OperatorSpec::<f64>::monge_ampere(2);
        let grid = PeriodicGrid::<f64>::uniform(2, 8, 1.0).unwrap();
        let g = MetricField::identity(&grid);
        let chi = SymTensorField::constant(&grid, SymMat::scalar(2, 2.0));
        let r = check_csubsolution(&spec, &chi, &g, 1.0).unwrap();
        assert!(r.uniform_bound.abs() < 1e-15);
        let small = check_csubsolution(&spec, &chi, &g, 1e-9).unwrap();
        assert!(small.empty_admissible && (small.uniform_bound + 1.0).abs() < 1e-9);
        let bad = SymTensorField::constant(&grid, SymMat::scalar(2, 0.5));
        assert!(check_csubsolution(&spec, &bad, &g, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn homogeneous_of_degree_one(a in 0.01f64..10.0, b in 0.01f64..10.0, c in 0.01f64..10.0, t in 0.01f64..100.0, k in 0usize..3) {
            let spec = OperatorSpec::<f64>::new(Family::HessianQuotient { k }, 3, 1.0).unwrap();
            let l = [a, b, c];
            let tl = [t * a, t * b, t * c];
            let f = spec.f_eval(&l).unwrap();
            prop_assert!((spec.f_eval(&tl).unwrap() - t * f).abs() <= 1e-12 * t * f);
            let g = spec.f_grad(&l).unwrap();
            let euler: f64 = g.iter().zip(&l).map(|(x, y)| x * y).sum();
            prop_assert!((euler - f).abs() <= 1e-12 * f);
        }

        #[test]
        fn grad_along_diagonal_non_increasing(s in 1.0f64..50.0, d in 0.0f64..50.0) {
            for spec in [OperatorSpec::<f64>::monge_ampere(2), OperatorSpec::new(Family::HessianQuotient { k: 1 }, 3, 1.0).unwrap()] {
                let n = spec.dim();
                let gs = spec.f_grad(&vec![s; n]).unwrap();
                let gt = spec.f_grad(&vec![s + d; n]).unwrap();
                prop_assert!(gs.iter().all(|&v| (v - gs[0]).abs() < 1e-15));
                prop_assert!(gt[0] <= gs[0] + 1e-15);
            }
        }
    }
}
