use crate::error::{check_dim, Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::Scalar;

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = M + damp·I`.
#[derive(Debug, Clone)]
pub struct SpdFactor<T> {
    lower: DenseMatrix<T>,
    damp: T,
}

/// Relative asymmetry accepted on input before averaging.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Pivots at or below this fraction of the largest diagonal are rejected.
pub const PIVOT_TOL: f64 = 1e-14;

/// Factors `m + damp·I`.
///
/// `m` is symmetrized as `(m + mᵀ)/2` after checking that it is symmetric
/// to [`SYMMETRY_TOL`] relative to its largest entry.
pub fn cholesky<T: Scalar>(m: &DenseMatrix<T>, damp: T) -> Result<SpdFactor<T>> {
    check_dim("cholesky: square matrix", m.rows(), m.cols())?;
    if damp < T::zero() || !damp.is_finite() {
        return Err(Error::InvalidConfig(format!("dampening must be nonnegative, got {damp}")));
    }
    let scale = m.max_abs();
    let asym = m.max_asymmetry();
    if asym > T::tol(SYMMETRY_TOL) * scale {
        return Err(Error::NotSymmetric(asym.to_f64_lossy()));
    }
    let a = m.symmetrized().add_diag(damp);
    let n = a.rows();
    let max_diag = a.diagonal().into_iter().fold(T::zero(), T::max);
    let threshold = T::tol(PIVOT_TOL) * max_diag;

    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot <= threshold || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: pivot.to_f64_lossy() });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(SpdFactor { lower: l, damp })
}

impl<T: Scalar> SpdFactor<T> {
    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn damp(&self) -> T {
        self.damp
    }

    pub fn lower(&self) -> &DenseMatrix<T> {
        &self.lower
    }

    /// `L Lᵀ`, i.e. the damped matrix that was factored.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        self.lower.matmul(&self.lower.transpose()).expect("square factor")
    }

    /// Solves `(M + damp·I) x = b`.
    pub fn solve(&self, b: &DenseVector<T>) -> Result<DenseVector<T>> {
        check_dim("solve: right-hand side", self.dim(), b.dim())?;
        let n = self.dim();
        let l = &self.lower;
        let mut x = b.as_slice().to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[(i, k)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        Ok(DenseVector::from(x))
    }

    /// `(M + damp·I)⁻¹`, symmetrized.
    pub fn inverse(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DenseVector::zeros(n);
            e[j] = T::one();
            let col = self.solve(&e).expect("dimension checked");
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrized()
    }

    /// `log det (M + damp·I)`.
    pub fn log_det(&self) -> T {
        self.lower.diagonal().into_iter().map(|x| x.ln()).sum::<T>() * T::c(2.0)
    }
}

/// Convenience: `solve(cholesky(m, damp), b)`.
pub fn solve<T: Scalar>(m: &DenseMatrix<T>, damp: T, b: &DenseVector<T>) -> Result<DenseVector<T>> {
    cholesky(m, damp)?.solve(b)
}

/// Convenience: `inverse(cholesky(m, damp))`.
pub fn inverse<T: Scalar>(m: &DenseMatrix<T>, damp: T) -> Result<DenseMatrix<T>> {
    Ok(cholesky(m, damp)?.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::testutil::{random_matrix, random_spd, random_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_factor_is_identity() {
        let f = cholesky(&DenseMatrix::<f64>::identity(3), 0.0).unwrap();
        assert_eq!(f.lower(), &DenseMatrix::identity(3));
    }

    #[test]
    fn diagonal_factor() {
        let f = cholesky(&DenseMatrix::from_diag(&[4.0, 9.0]), 0.0).unwrap();
        assert_eq!(f.lower(), &DenseMatrix::from_diag(&[2.0, 3.0]));
    }

    #[test]
    fn damped_gram_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_matrix(&mut rng, 16, 8);
        let g = x.gram();
        let f = cholesky(&g, 1e-6).unwrap();
        let err = f.reconstruct().sub(&g.add_diag(1e-6)).unwrap().frobenius_norm();
        assert!(err / g.frobenius_norm() <= 1e-10, "{err}");
        assert!(f.lower().diagonal().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&m, 0.0), Err(Error::NotPositiveDefinite { index: 1, .. })));
        let asym = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&asym, 0.0), Err(Error::NotSymmetric(_))));
        assert!(matches!(cholesky(&DenseMatrix::<f64>::zeros(2, 2), 0.0), Err(Error::NotPositiveDefinite { .. })));
        // singular PSD rescued by dampening
        let psd = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(cholesky(&psd, 0.0).is_err());
        assert!(cholesky(&psd, 1e-3).is_ok());
    }

    #[test]
    fn solve_examples() {
        let f = cholesky(&DenseMatrix::<f64>::identity(3), 0.0).unwrap();
        let b = DenseVector::from(vec![1.0, 2.0, 3.0]);
        assert_eq!(f.solve(&b).unwrap(), b);
        let f = cholesky(&DenseMatrix::from_diag(&[2.0, 4.0]), 0.0).unwrap();
        let x = f.solve(&DenseVector::from(vec![2.0, 4.0])).unwrap();
        assert!(x.distance(&DenseVector::from(vec![1.0, 1.0])) < 1e-15);
        assert!(matches!(
            f.solve(&DenseVector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn solve_residual_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_spd(&mut rng, 10);
        let b = random_vector(&mut rng, 10);
        let x = solve(&m, 0.0, &b).unwrap();
        let r = m.matvec(&x).unwrap().sub(&b).norm() / b.norm();
        assert!(r <= 1e-8, "{r}");
    }

    #[test]
    fn inverse_examples() {
        let inv = inverse(&DenseMatrix::from_diag(&[2.0, 5.0]), 0.0).unwrap();
        assert!(inv.sub(&DenseMatrix::from_diag(&[0.5, 0.2])).unwrap().max_abs() < 1e-15);
        assert_eq!(inverse(&DenseMatrix::<f64>::identity(4), 0.0).unwrap(), DenseMatrix::identity(4));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_spd(&mut rng, 12);
        let inv = inverse(&m, 0.0).unwrap();
        let err = m.matmul(&inv).unwrap().sub(&DenseMatrix::identity(12)).unwrap().frobenius_norm();
        assert!(err <= 1e-8 * 12.0, "{err}");
        assert!(inv.max_asymmetry() <= 1e-10);
    }

    #[test]
    fn works_in_single_precision() {
        let m = DenseMatrix::<f32>::from_diag(&[4.0, 9.0]);
        let x = solve(&m, 0.0, &DenseVector::from(vec![4.0, 9.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0]);
    }
}
