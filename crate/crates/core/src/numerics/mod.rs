//! Dense linear algebra: matrices, SPD factorization, eigenvalue estimates
//! and the plain-text matrix format.

mod cholesky;
mod eigen;
mod io;
mod matrix;

pub use cholesky::{cholesky, inverse, solve, SpdFactor, PIVOT_TOL, SYMMETRY_TOL};
pub use eigen::{
    lambda_max, lambda_max_default, lambda_min, symmetric_eigenvalues, symmetric_spectral_norm,
    EigenEstimate, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
pub use io::{
    format_matrix, format_real, parse_matrix, parse_vector, read_matrix, read_vector, save_matrix, save_vector,
    write_matrix, write_vector,
};
pub use matrix::{DenseMatrix, DenseVector};

#[cfg(test)]
pub(crate) mod testutil {
    use rand::Rng;
    use rand_distr::StandardNormal;

    use super::{DenseMatrix, DenseVector};

    pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    pub fn random_vector<R: Rng>(rng: &mut R, dim: usize) -> DenseVector<f64> {
        DenseVector::from_fn(dim, |_| rng.sample(StandardNormal))
    }

    /// Well-conditioned SPD: Gram of a tall Gaussian matrix plus a unit ridge.
    pub fn random_spd<R: Rng>(rng: &mut R, d: usize) -> DenseMatrix<f64> {
        random_matrix(rng, 2 * d, d).gram().add_diag(1.0)
    }
}
