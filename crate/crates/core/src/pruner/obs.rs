use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::numerics::{cholesky, DenseMatrix, DenseVector};
use crate::sparsity::Mask;
use crate::Scalar;

/// Relative threshold on `(H⁻¹)ᵢᵢ` below which a removal is refused.
pub const SINGULAR_DIAGONAL_TOL: f64 = 1e-12;

/// Default dampening for layer Hessians, as a fraction of the mean diagonal.
pub const DEFAULT_DAMP_FRACTION: f64 = 0.01;

/// One layer's pruning problem: minimize `‖WX − ŴX‖²` row by row with
/// `k_row` weights kept per row. `hessian` is `2XXᵀ` for calibration inputs
/// `X` of shape `d_in × n`.
#[derive(Debug, Clone)]
pub struct LayerProblem<T> {
    pub weights: DenseMatrix<T>,
    pub hessian: DenseMatrix<T>,
    pub damp: T,
    pub k_row: usize,
}

impl<T: Scalar> LayerProblem<T> {
    pub fn new(weights: DenseMatrix<T>, hessian: DenseMatrix<T>, damp: T, k_row: usize) -> Result<Self> {
        check_dim("layer Hessian rows", weights.cols(), hessian.rows())?;
        check_dim("layer Hessian cols", weights.cols(), hessian.cols())?;
        if k_row > weights.cols() {
            return Err(Error::KOutOfRange { k: k_row, d: weights.cols() });
        }
        Ok(Self { weights, hessian: hessian.symmetrized(), damp, k_row })
    }

    /// Builds the layer Hessian `2XXᵀ` from calibration inputs (`d_in × n`)
    /// and sets the dampening to `damp_fraction` times its mean diagonal.
    pub fn from_calibration(
        weights: DenseMatrix<T>,
        inputs: &DenseMatrix<T>,
        damp_fraction: T,
        k_row: usize,
    ) -> Result<Self> {
        let hessian = inputs.transpose().gram().scale(T::c(2.0));
        let damp = relative_damp(&hessian, damp_fraction);
        Self::new(weights, hessian, damp, k_row)
    }
}

/// `fraction · mean(diag(h))`.
pub fn relative_damp<T: Scalar>(h: &DenseMatrix<T>, fraction: T) -> T {
    let n = h.rows().max(1);
    fraction * h.trace() / T::from_count(n)
}

/// A single-weight removal.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneDecision<T> {
    /// Coordinate removed, in the ambient indexing.
    pub index: usize,
    /// Position of `index` within the active set.
    pub position: usize,
    /// `θᵢ² / (H⁻¹)ᵢᵢ`.
    pub score: T,
    /// Compensation to add to `θ`; zero outside the active set and exactly
    /// `−θᵢ` at `index`.
    pub delta: DenseVector<T>,
}

/// Picks the active weight whose removal costs least under the quadratic
/// model and computes the compensating update of the others.
///
/// `h_inv` is the inverse Hessian restricted to `active`, ordered like
/// `active.indices()`.
pub fn obs_remove_one<T: Scalar>(
    theta: &DenseVector<T>,
    h_inv: &DenseMatrix<T>,
    active: &Mask,
) -> Result<PruneDecision<T>> {
    check_dim("obs: mask dimension", theta.dim(), active.ambient_dim())?;
    check_dim("obs: inverse size", active.cardinality(), h_inv.rows())?;
    check_dim("obs: inverse shape", h_inv.rows(), h_inv.cols())?;
    if active.is_empty() {
        return Err(Error::InvalidMask("no active weights left to remove".into()));
    }
    let m = active.cardinality();
    let threshold = T::tol(SINGULAR_DIAGONAL_TOL) * h_inv.trace().abs() / T::from_count(m);
    let mut best: Option<(usize, T)> = None;
    for (pos, &i) in active.indices().iter().enumerate() {
        let hii = h_inv[(pos, pos)];
        if !(hii > threshold) {
            return Err(Error::NumericallySingularDiagonal { index: i, value: hii.to_f64_lossy() });
        }
        let score = theta[i] * theta[i] / hii;
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((pos, score));
        }
    }
    let (position, score) = best.expect("nonempty active set");
    let index = active.indices()[position];
    let scale = -theta[index] / h_inv[(position, position)];
    let mut delta = DenseVector::zeros(theta.dim());
    for (p, &j) in active.indices().iter().enumerate() {
        delta[j] = scale * h_inv[(p, position)];
    }
    delta[index] = -theta[index];
    Ok(PruneDecision { index, position, score, delta })
}

/// Inverse of the Hessian with coordinate `position` removed, obtained from
/// the current inverse by a rank-one downdate.
pub fn shrink_inverse<T: Scalar>(h_inv: &DenseMatrix<T>, position: usize) -> Result<DenseMatrix<T>> {
    check_dim("shrink: square inverse", h_inv.rows(), h_inv.cols())?;
    let m = h_inv.rows();
    if position >= m {
        return Err(Error::DimensionMismatch { what: "shrink: position", expected: m, got: position });
    }
    let pivot = h_inv[(position, position)];
    let threshold = T::tol(SINGULAR_DIAGONAL_TOL) * h_inv.trace().abs() / T::from_count(m);
    if !(pivot > threshold) {
        return Err(Error::NumericallySingularDiagonal { index: position, value: pivot.to_f64_lossy() });
    }
    let keep: Vec<usize> = (0..m).filter(|&i| i != position).collect();
    let out = DenseMatrix::from_fn(m - 1, m - 1, |a, b| {
        let (i, j) = (keep[a], keep[b]);
        h_inv[(i, j)] - h_inv[(i, position)] * h_inv[(position, j)] / pivot
    });
    Ok(out.symmetrized())
}

/// Result of greedily pruning one row.
#[derive(Debug, Clone)]
pub struct RowPrune<T> {
    pub weights: DenseVector<T>,
    /// Surviving coordinates.
    pub kept: Mask,
    /// `‖wX − ŵX‖² = ½(w − ŵ)ᵀH(w − ŵ)` with the undamped Hessian.
    pub loss: T,
}

fn greedy_from_inverse<T: Scalar>(
    w_row: &DenseVector<T>,
    hessian: &DenseMatrix<T>,
    h_inv: &DenseMatrix<T>,
    k_row: usize,
) -> Result<RowPrune<T>> {
    let d = w_row.dim();
    let mut theta = w_row.clone();
    let mut active = Mask::full(d);
    let mut inv = h_inv.clone();
    while active.cardinality() > k_row {
        let decision = obs_remove_one(&theta, &inv, &active)?;
        theta = theta.add(&decision.delta);
        theta[decision.index] = T::zero();
        inv = shrink_inverse(&inv, decision.position)?;
        active = active.without(decision.index);
    }
    let diff = w_row.sub(&theta);
    let loss = T::c(0.5) * hessian.quadratic_form(&diff)?;
    Ok(RowPrune { weights: theta, kept: active, loss })
}

/// Removes `d_in − k_row` weights one at a time, each with the optimal
/// second-order compensation of the remaining ones.
pub fn prune_row_greedy<T: Scalar>(
    w_row: &DenseVector<T>,
    hessian: &DenseMatrix<T>,
    damp: T,
    k_row: usize,
) -> Result<RowPrune<T>> {
    check_dim("prune row: Hessian size", w_row.dim(), hessian.rows())?;
    if k_row > w_row.dim() {
        return Err(Error::KOutOfRange { k: k_row, d: w_row.dim() });
    }
    let h_inv = cholesky(hessian, damp)?.inverse();
    greedy_from_inverse(w_row, hessian, &h_inv, k_row)
}

#[derive(Debug, Clone)]
pub struct PrunedLayer<T> {
    pub weights: DenseMatrix<T>,
    pub row_losses: Vec<T>,
}

impl<T: Scalar> PrunedLayer<T> {
    /// `‖WX − ŴX‖²` summed over rows.
    pub fn loss(&self) -> T {
        self.row_losses.iter().copied().sum()
    }
}

/// Prunes every row of the layer independently against the shared Hessian.
pub fn prune_layer<T: Scalar>(p: &LayerProblem<T>) -> Result<PrunedLayer<T>> {
    let h_inv = cholesky(&p.hessian, p.damp)?.inverse();
    let rows: Vec<RowPrune<T>> = (0..p.weights.rows())
        .into_par_iter()
        .map(|r| greedy_from_inverse(&p.weights.row_vector(r), &p.hessian, &h_inv, p.k_row))
        .collect::<Result<_>>()?;
    let mut weights = DenseMatrix::zeros(p.weights.rows(), p.weights.cols());
    for (r, row) in rows.iter().enumerate() {
        weights.row_mut(r).copy_from_slice(row.weights.as_slice());
    }
    Ok(PrunedLayer { weights, row_losses: rows.iter().map(|r| r.loss).collect() })
}
