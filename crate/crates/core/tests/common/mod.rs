#![allow(dead_code)]

use iobs::sparsity::Mask;
use iobs::{Matrix, Vector};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn to_na_vec(v: &Vector) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

pub fn from_na_vec(v: &DVector<f64>) -> Vector {
    Vector::new(v.iter().copied().collect()).unwrap()
}

pub fn gaussian_vector(rng: &mut impl Rng, d: usize) -> Vector {
    Vector::from_fn(d, |_| rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// SPD matrix with a random spectrum in `[lo, hi]` and a random eigenbasis,
/// so off-diagonal coupling is strong.
pub fn random_spd(rng: &mut impl Rng, d: usize, lo: f64, hi: f64) -> Matrix {
    let g = to_na(&gaussian_matrix(rng, d, d));
    let q = g.qr().q();
    let diag = DVector::from_fn(d, |_, _| lo + (hi - lo) * rng.random::<f64>());
    let h = &q * DMatrix::from_diagonal(&diag) * q.transpose();
    Matrix::from_fn(d, d, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]))
}

pub fn random_mask(rng: &mut impl Rng, d: usize, size: usize) -> Mask {
    let idx = rand::seq::index::sample(rng, d, size).into_vec();
    Mask::new(d, idx).unwrap()
}

/// Local model `gᵀ(θ − θ_t) + ½(θ − θ_t)ᵀH(θ − θ_t)`.
pub fn quadratic_model(h: &DMatrix<f64>, g: &DVector<f64>, theta_t: &DVector<f64>, theta: &DVector<f64>) -> f64 {
    let delta = theta - theta_t;
    g.dot(&delta) + 0.5 * delta.dot(&(h * &delta))
}

/// Minimizer of the local model subject to `θ_S = 0`, computed by solving
/// the stationarity equations on the kept coordinates only.
pub fn reduced_kkt_solve(h: &DMatrix<f64>, g: &DVector<f64>, theta_t: &DVector<f64>, prune: &[usize]) -> DVector<f64> {
    let d = h.nrows();
    let keep: Vec<usize> = (0..d).filter(|i| !prune.contains(i)).collect();
    let rhs_full = h * theta_t - g;
    let hqq = DMatrix::from_fn(keep.len(), keep.len(), |a, b| h[(keep[a], keep[b])]);
    let rhs = DVector::from_fn(keep.len(), |a, _| rhs_full[keep[a]]);
    let sol = hqq.lu().solve(&rhs).expect("reduced system is nonsingular");
    let mut out = DVector::zeros(d);
    for (a, &i) in keep.iter().enumerate() {
        out[i] = sol[a];
    }
    out
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// All `r`-subsets of `[0, n)` in lexicographic order.
pub fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// Central finite-difference gradient with step `1e-6·(1 + |xᵢ|)`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * (1.0 + x[i].abs());
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative discrepancy `‖a − b‖∞ / max(1, ‖b‖∞)`.
pub fn rel_inf(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}
