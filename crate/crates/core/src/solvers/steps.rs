use rand::RngCore;

use crate::error::{Error, Result};
use crate::numerics::{cholesky, DenseMatrix, DenseVector, SpdFactor};
use crate::objectives::Objective;
use crate::sparsity::{columns, gather, submatrix, top_k, Mask};
use crate::Scalar;

/// Default cap on the ambient dimension for exhaustive mask search.
pub const BRUTE_FORCE_DIM_LIMIT: usize = 24;
/// Searches with at most this many candidate masks are always allowed.
pub const BRUTE_FORCE_COUNT_LIMIT: u128 = 2_000_000;

/// One hard-thresholded gradient step: `T_k(θ − η∇f(θ))`.
pub fn iht_step<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    theta: &DenseVector<T>,
    k: usize,
    eta: T,
) -> Result<DenseVector<T>> {
    if !(eta > T::zero()) {
        return Err(Error::InvalidConfig(format!("learning rate must be positive, got {eta}")));
    }
    let g = obj.gradient(theta)?;
    Ok(top_k(&theta.axpy(-eta, &g), k)?.0)
}

/// Full Newton point `θ⁺ = θ − (H + damp·I)⁻¹∇f(θ)`.
pub fn newton_target<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    theta: &DenseVector<T>,
    damp: T,
) -> Result<DenseVector<T>> {
    let f = cholesky(&obj.hessian(theta)?, damp)?;
    Ok(theta.sub(&f.solve(&obj.gradient(theta)?)?))
}

/// Newton point together with the damped inverse Hessian, which is all the
/// mask-dependent quantities need.
#[derive(Debug, Clone)]
pub struct NewtonPoint<T> {
    pub theta_plus: DenseVector<T>,
    pub h_inv: DenseMatrix<T>,
}

impl<T: Scalar> NewtonPoint<T> {
    pub fn new<O: Objective<T> + ?Sized>(obj: &O, theta: &DenseVector<T>, damp: T) -> Result<Self> {
        let f = cholesky(&obj.hessian(theta)?, damp)?;
        let theta_plus = theta.sub(&f.solve(&obj.gradient(theta)?)?);
        Ok(Self { theta_plus, h_inv: f.inverse() })
    }

    /// Newton point from a precomputed factor of `H + damp·I` and its inverse.
    pub fn from_factor(
        factor: &SpdFactor<T>,
        h_inv: DenseMatrix<T>,
        theta: &DenseVector<T>,
        gradient: &DenseVector<T>,
    ) -> Result<Self> {
        let theta_plus = theta.sub(&factor.solve(gradient)?);
        Ok(Self { theta_plus, h_inv })
    }

    pub fn dim(&self) -> usize {
        self.theta_plus.dim()
    }

    /// Multiplier `λ = (I_S H⁻¹ I_Sᵀ)⁻¹ I_S θ⁺` of the constraint `θ_S = 0`.
    fn multiplier(&self, prune: &Mask) -> Result<DenseVector<T>> {
        let block = submatrix(&self.h_inv, prune, prune)?;
        let f = cholesky(&block, T::zero()).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::SingularSubmatrix,
            other => other,
        })?;
        f.solve(&gather(&self.theta_plus, prune)?)
    }

    /// `θ^S = (I − H⁻¹H^S) θ⁺`, exactly zero on `prune`.
    pub fn masked_update(&self, prune: &Mask) -> Result<DenseVector<T>> {
        if prune.is_empty() {
            return Ok(self.theta_plus.clone());
        }
        let lambda = self.multiplier(prune)?;
        let correction = columns(&self.h_inv, prune)?.matvec(&lambda)?;
        let mut out = self.theta_plus.sub(&correction);
        for &i in prune.indices() {
            out[i] = T::zero();
        }
        Ok(out)
    }

    /// `(θ⁺)ᵀ H^S θ⁺`: twice the increase of the local quadratic model
    /// caused by forcing `θ_S = 0`.
    pub fn mask_objective(&self, prune: &Mask) -> Result<T> {
        if prune.is_empty() {
            return Ok(T::zero());
        }
        let lambda = self.multiplier(prune)?;
        Ok(gather(&self.theta_plus, prune)?.dot(&lambda).max(T::zero()))
    }

    /// Exhaustive search for the prune set of size `d − k` minimizing
    /// [`mask_objective`](Self::mask_objective). Ties resolve to the
    /// lexicographically smallest index list.
    pub fn select_mask_exact(&self, k: usize, dim_limit: usize) -> Result<Mask> {
        let d = self.dim();
        if k > d {
            return Err(Error::KOutOfRange { k, d });
        }
        let size = d - k;
        let count = binomial(d, size);
        if d > dim_limit && count > BRUTE_FORCE_COUNT_LIMIT {
            return Err(Error::SearchTooLarge { d, count });
        }
        let mut combo: Vec<usize> = (0..size).collect();
        let mut best: Option<(T, Vec<usize>)> = None;
        loop {
            let mask = Mask::new(d, combo.clone())?;
            let value = self.mask_objective(&mask)?;
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, combo.clone()));
            }
            if !next_combination(&mut combo, d) {
                break;
            }
        }
        let (_, indices) = best.expect("at least one subset");
        Mask::new(d, indices)
    }
}

fn binomial(n: usize, r: usize) -> u128 {
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Advances `combo` to the next `r`-subset of `[0, n)` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let r = combo.len();
    let Some(i) = (0..r).rev().find(|&i| combo[i] < n - r + i) else {
        return false;
    };
    combo[i] += 1;
    for j in (i + 1)..r {
        combo[j] = combo[j - 1] + 1;
    }
    true
}

/// The constrained Newton step for a fixed prune set `S`.
pub fn masked_newton_update<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    theta: &DenseVector<T>,
    prune: &Mask,
    damp: T,
) -> Result<DenseVector<T>> {
    NewtonPoint::new(obj, theta, damp)?.masked_update(prune)
}

/// `(θ⁺)ᵀ H^S θ⁺` for a fixed prune set `S`.
pub fn mask_objective<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    theta: &DenseVector<T>,
    prune: &Mask,
    damp: T,
) -> Result<T> {
    NewtonPoint::new(obj, theta, damp)?.mask_objective(prune)
}

/// Optimal prune set of size `d − k` by exhaustive search.
pub fn select_mask_exact<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    theta: &DenseVector<T>,
    k: usize,
    damp: T,
    dim_limit: usize,
) -> Result<Mask> {
    NewtonPoint::new(obj, theta, damp)?.select_mask_exact(k, dim_limit)
}

/// I-OBS step with the optimal mask.
pub fn iobs_step_exact<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    theta: &DenseVector<T>,
    k: usize,
    damp: T,
    dim_limit: usize,
) -> Result<DenseVector<T>> {
    let np = NewtonPoint::new(obj, theta, damp)?;
    let prune = np.select_mask_exact(k, dim_limit)?;
    np.masked_update(&prune)
}

/// Top-k I-OBS step: `T_k(θ − H⁻¹∇f(θ))`.
pub fn iobs_step_topk<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    theta: &DenseVector<T>,
    k: usize,
    damp: T,
) -> Result<DenseVector<T>> {
    Ok(top_k(&newton_target(obj, theta, damp)?, k)?.0)
}

/// `η = 1 / (λ + ‖E_Q g‖² / ‖g‖)`, with the ratio taken as 0 when `g = 0`.
pub fn stochastic_step_size<T: Scalar>(g: &DenseVector<T>, support: &Mask, lambda: T) -> Result<T> {
    let gn = g.norm();
    if gn.is_zero() && lambda.is_zero() {
        return Err(Error::ZeroGradient);
    }
    let on_support: T = support.indices().iter().map(|&i| g[i] * g[i]).sum();
    let ratio = if gn.is_zero() { T::zero() } else { on_support / gn };
    let denom = lambda + ratio;
    if !(denom > T::zero()) {
        return Err(Error::DegenerateStepSize);
    }
    Ok(T::one() / denom)
}

/// Closed-form minimizer of the gradient-outer-product model under a fixed
/// keep mask `Q`: `E_Q(θ − η_Q g)`.
pub fn fixed_mask_stochastic_update<T: Scalar>(
    theta: &DenseVector<T>,
    g: &DenseVector<T>,
    keep: &Mask,
    lambda: T,
) -> Result<DenseVector<T>> {
    let eta = stochastic_step_size(g, keep, lambda)?;
    let full = theta.axpy(-eta, g);
    crate::sparsity::restrict(&full, keep)
}

#[derive(Debug, Clone)]
pub struct StochasticStep<T> {
    pub theta: DenseVector<T>,
    pub eta: T,
}

/// Stochastic I-OBS: `T_k(θ − η_t g)` with `η_t` computed on `Q = supp θ`.
pub fn stochastic_iobs_step<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    theta: &DenseVector<T>,
    k: usize,
    lambda: T,
    batch: usize,
    rng: &mut dyn RngCore,
) -> Result<StochasticStep<T>> {
    if lambda < T::zero() {
        return Err(Error::InvalidConfig(format!("lambda must be nonnegative, got {lambda}")));
    }
    let g = obj.stochastic_gradient(theta, rng, batch)?;
    let eta = stochastic_step_size(&g, &Mask::support_of(theta), lambda)?;
    let (next, _) = top_k(&theta.axpy(-eta, &g), k)?;
    Ok(StochasticStep { theta: next, eta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_lexicographic_and_complete() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while next_combination(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut empty: Vec<usize> = vec![];
        assert!(!next_combination(&mut empty, 3));
        assert_eq!(binomial(24, 12), 2_704_156);
        assert_eq!(binomial(5, 0), 1);
    }

    #[test]
    fn step_size_edge_cases() {
        let g = DenseVector::from(vec![3.0, 4.0]);
        let full = Mask::full(2);
        assert_eq!(stochastic_step_size(&g, &full, 1.0).unwrap(), 1.0 / 6.0);
        assert_eq!(stochastic_step_size(&g, &Mask::empty(2), 0.5).unwrap(), 2.0);
        let zero = DenseVector::zeros(2);
        assert!(matches!(stochastic_step_size(&zero, &full, 0.0), Err(Error::ZeroGradient)));
        assert_eq!(stochastic_step_size(&zero, &full, 4.0).unwrap(), 0.25);
        assert!(matches!(
            stochastic_step_size(&g, &Mask::empty(2), 0.0),
            Err(Error::DegenerateStepSize)
        ));
    }
}
