//! Twice-differentiable objectives and empirical curvature probes.
//!
//! Calculus convention for least squares: `f(θ) = ‖y − Xθ‖²`, gradient
//! `2Xᵀ(Xθ − y)`, Hessian `2XᵀX`. Step sizes derived from the Hessian (for
//! example `1/λ_max`) therefore already include the factor 2.

use rand::seq::index::sample;
use rand::{Rng, RngCore};

use crate::error::{check_dim, Error, Result};
use crate::numerics::{lambda_min, symmetric_spectral_norm, DenseMatrix, DenseVector};
use crate::sparsity::Mask;
use crate::Scalar;

/// A twice-differentiable objective `f: ℝ^d → ℝ`.
pub trait Objective<T: Scalar> {
    fn dim(&self) -> usize;
    fn value(&self, theta: &DenseVector<T>) -> Result<T>;
    fn gradient(&self, theta: &DenseVector<T>) -> Result<DenseVector<T>>;
    fn hessian(&self, theta: &DenseVector<T>) -> Result<DenseMatrix<T>>;

    /// True when the Hessian does not depend on `θ`, so solvers may factor
    /// it once and reuse the factor.
    fn hessian_is_constant(&self) -> bool {
        false
    }

    /// Number of samples behind a finite-sum objective, if any.
    fn sample_count(&self) -> Option<usize> {
        None
    }

    /// Unbiased estimate of the gradient from a random mini-batch. Not every
    /// objective has a sample structure; the default reports that.
    fn stochastic_gradient(
        &self,
        _theta: &DenseVector<T>,
        _rng: &mut dyn RngCore,
        _batch: usize,
    ) -> Result<DenseVector<T>> {
        Err(Error::Unsupported)
    }
}

/// `f(θ) = ‖y − Xθ‖²` with `X` of shape `n × d`.
#[derive(Debug, Clone)]
pub struct LeastSquaresObjective<T> {
    x: DenseMatrix<T>,
    y: DenseVector<T>,
    hessian: DenseMatrix<T>,
}

impl<T: Scalar> LeastSquaresObjective<T> {
    pub fn new(x: DenseMatrix<T>, y: DenseVector<T>) -> Result<Self> {
        check_dim("least squares: labels", x.rows(), y.dim())?;
        let hessian = x.gram().scale(T::c(2.0));
        Ok(Self { x, y, hessian })
    }

    pub fn design(&self) -> &DenseMatrix<T> {
        &self.x
    }

    pub fn labels(&self) -> &DenseVector<T> {
        &self.y
    }

    pub fn samples(&self) -> usize {
        self.x.rows()
    }

    /// The constant Hessian `2XᵀX`.
    pub fn constant_hessian(&self) -> &DenseMatrix<T> {
        &self.hessian
    }

    fn residual(&self, theta: &DenseVector<T>) -> Result<DenseVector<T>> {
        check_dim("least squares: parameter", self.x.cols(), theta.dim())?;
        Ok(self.x.matvec(theta)?.sub(&self.y))
    }

    /// `(n/|B|)·2·X_Bᵀ(X_Bθ − y_B)` for the given rows `B`.
    pub fn batch_gradient(&self, theta: &DenseVector<T>, rows: &[usize]) -> Result<DenseVector<T>> {
        check_dim("least squares: parameter", self.x.cols(), theta.dim())?;
        let n = self.samples();
        if rows.is_empty() || rows.len() > n {
            return Err(Error::BatchOutOfRange { batch: rows.len(), n });
        }
        let mut g = DenseVector::zeros(self.x.cols());
        for &r in rows {
            let xr = self.x.row(r);
            let res: T = xr.iter().zip(theta.iter()).map(|(&a, &b)| a * b).sum::<T>() - self.y[r];
            for (gj, &xj) in g.as_mut_slice().iter_mut().zip(xr) {
                *gj += xj * res;
            }
        }
        Ok(g.scale(T::c(2.0) * T::from_count(n) / T::from_count(rows.len())))
    }
}

impl<T: Scalar> Objective<T> for LeastSquaresObjective<T> {
    fn dim(&self) -> usize {
        self.x.cols()
    }

    fn sample_count(&self) -> Option<usize> {
        Some(self.samples())
    }

    fn value(&self, theta: &DenseVector<T>) -> Result<T> {
        Ok(self.residual(theta)?.norm_sq())
    }

    fn gradient(&self, theta: &DenseVector<T>) -> Result<DenseVector<T>> {
        Ok(self.x.matvec_t(&self.residual(theta)?)?.scale(T::c(2.0)))
    }

    fn hessian(&self, theta: &DenseVector<T>) -> Result<DenseMatrix<T>> {
        check_dim("least squares: parameter", self.x.cols(), theta.dim())?;
        Ok(self.hessian.clone())
    }

    fn hessian_is_constant(&self) -> bool {
        true
    }

    /// Uniform mini-batch drawn without replacement, rescaled by `n/b`.
    fn stochastic_gradient(
        &self,
        theta: &DenseVector<T>,
        rng: &mut dyn RngCore,
        batch: usize,
    ) -> Result<DenseVector<T>> {
        let n = self.samples();
        if batch == 0 || batch > n {
            return Err(Error::BatchOutOfRange { batch, n });
        }
        if batch == n {
            return self.gradient(theta);
        }
        let mut rows = sample(rng, n, batch).into_vec();
        rows.sort_unstable();
        self.batch_gradient(theta, &rows)
    }
}

/// `f(θ) = ½θᵀHθ − bᵀθ + c`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective<T> {
    h: DenseMatrix<T>,
    b: DenseVector<T>,
    c: T,
}

impl<T: Scalar> QuadraticObjective<T> {
    pub fn new(h: DenseMatrix<T>, b: DenseVector<T>, c: T) -> Result<Self> {
        check_dim("quadratic: square Hessian", h.rows(), h.cols())?;
        check_dim("quadratic: linear term", h.rows(), b.dim())?;
        Ok(Self { h: h.symmetrized(), b, c })
    }

    /// `½(θ − a)ᵀH(θ − a)`, minimized at `a` when `H` is positive definite.
    pub fn centered(h: DenseMatrix<T>, a: &DenseVector<T>) -> Result<Self> {
        let b = h.matvec(a)?;
        let c = T::c(0.5) * a.dot(&b);
        Self::new(h, b, c)
    }

    pub fn h(&self) -> &DenseMatrix<T> {
        &self.h
    }
}

impl<T: Scalar> Objective<T> for QuadraticObjective<T> {
    fn dim(&self) -> usize {
        self.h.rows()
    }

    fn value(&self, theta: &DenseVector<T>) -> Result<T> {
        Ok(T::c(0.5) * self.h.quadratic_form(theta)? - self.b.dot(theta) + self.c)
    }

    fn gradient(&self, theta: &DenseVector<T>) -> Result<DenseVector<T>> {
        Ok(self.h.matvec(theta)?.sub(&self.b))
    }

    fn hessian(&self, theta: &DenseVector<T>) -> Result<DenseMatrix<T>> {
        check_dim("quadratic: parameter", self.dim(), theta.dim())?;
        Ok(self.h.clone())
    }

    fn hessian_is_constant(&self) -> bool {
        true
    }
}

/// Empirical estimates of the curvature constants: `mu` (strong convexity),
/// `l` (smoothness along sparse directions) and `m` (Hessian Lipschitz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessProbe<T> {
    pub mu: T,
    pub l: T,
    pub m: T,
}

/// Probes curvature constants at the given sample points.
///
/// `mu` is the smallest Hessian eigenvalue seen, `l` the largest `vᵀHv` over
/// `directions` random unit vectors supported on `d − k` coordinates, and `m`
/// the largest `‖H(θ) − H(θ′)‖₂ / ‖θ − θ′‖₂` over sample pairs.
pub fn probe_constants<T: Scalar, O: Objective<T> + ?Sized, R: Rng + ?Sized>(
    obj: &O,
    samples: &[DenseVector<T>],
    k: usize,
    directions: usize,
    rng: &mut R,
) -> Result<SmoothnessProbe<T>> {
    let d = obj.dim();
    if samples.is_empty() {
        return Err(Error::InvalidConfig("probe needs at least one sample point".into()));
    }
    if k > d {
        return Err(Error::KOutOfRange { k, d });
    }
    let width = (d - k).max(1);
    let hessians: Vec<DenseMatrix<T>> = samples.iter().map(|s| obj.hessian(s)).collect::<Result<_>>()?;

    let mut mu = T::infinity();
    let mut l = T::zero();
    for h in &hessians {
        mu = mu.min(lambda_min(h)?);
        for _ in 0..directions {
            let idx = sample(rng, d, width).into_vec();
            let mask = Mask::new(d, idx)?;
            let mut v = DenseVector::zeros(d);
            for &i in mask.indices() {
                v[i] = T::c(rng.random_range(-1.0..1.0));
            }
            let n = v.norm();
            if n.is_zero() {
                continue;
            }
            let v = v.scale(T::one() / n);
            l = l.max(h.quadratic_form(&v)?);
        }
    }
    let mu = mu.max(T::zero());
    let l = l.max(mu);

    let mut m = T::zero();
    for i in 0..samples.len() {
        for j in 0..i {
            let dist = samples[i].distance(&samples[j]);
            if dist.is_zero() {
                continue;
            }
            let diff = hessians[i].sub(&hessians[j])?;
            m = m.max(symmetric_spectral_norm(&diff)? / dist);
        }
    }
    Ok(SmoothnessProbe { mu, l, m })
}
