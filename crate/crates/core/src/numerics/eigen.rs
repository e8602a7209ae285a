use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Result};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::Scalar;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 10_000;
const START_SEED: u64 = 0x1f0b_5eed;

/// Result of a power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate<T> {
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// Stops once the eigen-residual `‖Mv − ρv‖` falls below `tol·ρ`. The start
/// vector comes from a fixed seed, so the estimate is deterministic.
pub fn lambda_max<T: Scalar>(m: &DenseMatrix<T>, tol: T, max_iter: usize) -> Result<EigenEstimate<T>> {
    check_dim("lambda_max: square matrix", m.rows(), m.cols())?;
    let n = m.rows();
    if n == 0 {
        return Ok(EigenEstimate { value: T::zero(), iterations: 0, converged: true });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut v = DenseVector::from_fn(n, |_| T::c(rng.random_range(0.5..1.5)));
    v = v.scale(T::one() / v.norm());
    let mut rho = T::zero();
    for it in 1..=max_iter {
        let w = m.matvec(&v)?;
        rho = v.dot(&w);
        let wn = w.norm();
        if wn.is_zero() {
            return Ok(EigenEstimate { value: T::zero(), iterations: it, converged: true });
        }
        let residual = w.axpy(-rho, &v).norm();
        if residual <= tol * rho.abs() {
            return Ok(EigenEstimate { value: rho, iterations: it, converged: true });
        }
        v = w.scale(T::one() / wn);
    }
    Ok(EigenEstimate { value: rho, iterations: max_iter, converged: false })
}

/// [`lambda_max`] with the default tolerance and iteration cap.
pub fn lambda_max_default<T: Scalar>(m: &DenseMatrix<T>) -> Result<EigenEstimate<T>> {
    lambda_max(m, T::tol(DEFAULT_TOL), DEFAULT_MAX_ITER)
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues<T: Scalar>(m: &DenseMatrix<T>) -> Result<Vec<T>> {
    check_dim("eigenvalues: square matrix", m.rows(), m.cols())?;
    let n = m.rows();
    let mut a = m.symmetrized();
    let scale = a.frobenius_norm();
    let two = T::c(2.0);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in 0..i {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= T::epsilon() * scale || scale.is_zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.is_zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev = a.diagonal();
    ev.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(ev)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min<T: Scalar>(m: &DenseMatrix<T>) -> Result<T> {
    Ok(symmetric_eigenvalues(m)?.first().copied().unwrap_or_else(T::zero))
}

/// Spectral norm of a symmetric matrix.
pub fn symmetric_spectral_norm<T: Scalar>(m: &DenseMatrix<T>) -> Result<T> {
    Ok(symmetric_eigenvalues(m)?.into_iter().fold(T::zero(), |acc, x| acc.max(x.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::testutil::{random_matrix, random_vector};

    #[test]
    fn diagonal_and_identity() {
        let e = lambda_max_default(&DenseMatrix::<f64>::from_diag(&[1.0, 3.0, 2.0])).unwrap();
        assert!(e.converged);
        assert!((e.value - 3.0).abs() < 1e-8);
        let e = lambda_max_default(&DenseMatrix::<f64>::identity(5)).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonconvergence_is_flagged() {
        let m = DenseMatrix::from_diag(&[1.0, 0.999_999]);
        let e = lambda_max(&m, 1e-14, 3).unwrap();
        assert!(!e.converged);
        assert_eq!(e.iterations, 3);
    }

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        let m = DenseMatrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = symmetric_eigenvalues(&m).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rayleigh_quotient_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_matrix(&mut rng, 20, 12).gram();
        let e = lambda_max_default(&g).unwrap();
        for _ in 0..50 {
            let v = random_vector(&mut rng, 12);
            let rq = g.quadratic_form(&v).unwrap() / v.norm_sq();
            assert!(e.value >= rq - 1e-8 * e.value);
        }
    }
}
