//! Top-k selection, index masks and the gather/scatter operations that stand
//! in for the coordinate projection `E_Q` and row selection `I_S`.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::Scalar;

/// Sorted set of coordinate indices in `[0, d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    dim: usize,
    indices: Vec<usize>,
}

impl Mask {
    /// Builds a mask from indices in any order; duplicates and
    /// out-of-range indices are rejected.
    pub fn new(dim: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidMask(format!("duplicate index {}", w[0])));
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::InvalidMask(format!("index {last} out of range for dimension {dim}")));
            }
        }
        Ok(Self { dim, indices })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, indices: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        Self { dim, indices: (0..dim).collect() }
    }

    /// Support of `v`.
    pub fn support_of<T: Scalar>(v: &DenseVector<T>) -> Self {
        Self { dim: v.dim(), indices: v.support() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn cardinality(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.dim - self.indices.len());
        let mut it = self.indices.iter().peekable();
        for i in 0..self.dim {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        Self { dim: self.dim, indices: out }
    }

    pub fn intersection_count(&self, other: &Self) -> usize {
        self.indices.iter().filter(|&&i| other.contains(i)).count()
    }

    /// Removes index `i` if present.
    pub fn without(&self, i: usize) -> Self {
        Self { dim: self.dim, indices: self.indices.iter().copied().filter(|&j| j != i).collect() }
    }
}

impl fmt::Display for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.dim)?;
        for (n, i) in self.indices.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl FromStr for Mask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (d, rest) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("mask must look like `<d>:i,j,...`, got {s:?}")))?;
        let dim = d.parse().map_err(|e| Error::Parse(format!("mask dimension {d:?}: {e}")))?;
        let indices = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|t| t.parse().map_err(|e| Error::Parse(format!("mask index {t:?}: {e}"))))
                .collect::<Result<_>>()?
        };
        Mask::new(dim, indices)
    }
}

/// Keeps the `k` largest-magnitude entries of `v` (ties go to the lower
/// index) and zeroes the rest.
pub fn top_k<T: Scalar>(v: &DenseVector<T>, k: usize) -> Result<(DenseVector<T>, Mask)> {
    let d = v.dim();
    if k > d {
        return Err(Error::KOutOfRange { k, d });
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        v[b].abs()
            .partial_cmp(&v[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    let mask = Mask::new(d, order).expect("distinct in-range indices");
    Ok((restrict_unchecked(v, &mask), mask))
}

fn restrict_unchecked<T: Scalar>(v: &DenseVector<T>, m: &Mask) -> DenseVector<T> {
    let mut out = DenseVector::zeros(v.dim());
    for &i in m.indices() {
        out[i] = v[i];
    }
    out
}

/// `E_m v`: same dimension, zero off the mask.
pub fn restrict<T: Scalar>(v: &DenseVector<T>, m: &Mask) -> Result<DenseVector<T>> {
    check_dim("restrict: mask dimension", v.dim(), m.ambient_dim())?;
    Ok(restrict_unchecked(v, m))
}

/// `I_m v`: the entries of `v` on the mask, in index order.
pub fn gather<T: Scalar>(v: &DenseVector<T>, m: &Mask) -> Result<DenseVector<T>> {
    check_dim("gather: mask dimension", v.dim(), m.ambient_dim())?;
    Ok(DenseVector::from(m.indices().iter().map(|&i| v[i]).collect::<Vec<_>>()))
}

/// `I_mᵀ w`: places the `|m|` entries of `w` at the mask positions.
pub fn scatter<T: Scalar>(w: &DenseVector<T>, m: &Mask) -> Result<DenseVector<T>> {
    check_dim("scatter: compact length", m.cardinality(), w.dim())?;
    let mut out = DenseVector::zeros(m.ambient_dim());
    for (&i, &x) in m.indices().iter().zip(w.iter()) {
        out[i] = x;
    }
    Ok(out)
}

/// `I_rows H I_colsᵀ`.
pub fn submatrix<T: Scalar>(h: &DenseMatrix<T>, rows: &Mask, cols: &Mask) -> Result<DenseMatrix<T>> {
    check_dim("submatrix: square matrix", h.rows(), h.cols())?;
    check_dim("submatrix: row mask dimension", h.rows(), rows.ambient_dim())?;
    check_dim("submatrix: column mask dimension", h.cols(), cols.ambient_dim())?;
    Ok(DenseMatrix::from_fn(rows.cardinality(), cols.cardinality(), |a, b| {
        h[(rows.indices()[a], cols.indices()[b])]
    }))
}

/// `H I_colsᵀ`: the columns of `h` on the mask.
pub fn columns<T: Scalar>(h: &DenseMatrix<T>, cols: &Mask) -> Result<DenseMatrix<T>> {
    check_dim("columns: mask dimension", h.cols(), cols.ambient_dim())?;
    Ok(DenseMatrix::from_fn(h.rows(), cols.cardinality(), |i, b| h[(i, cols.indices()[b])]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DenseVector<f64> {
        DenseVector::from(x.to_vec())
    }

    fn mask(d: usize, idx: &[usize]) -> Mask {
        Mask::new(d, idx.to_vec()).unwrap()
    }

    #[test]
    fn top_k_examples() {
        let (out, m) = top_k(&v(&[3.0, -5.0, 1.0]), 2).unwrap();
        assert_eq!(out, v(&[3.0, -5.0, 0.0]));
        assert_eq!(m, mask(3, &[0, 1]));

        let (out, m) = top_k(&v(&[0.0, 0.0, 7.0]), 3).unwrap();
        assert_eq!(out, v(&[0.0, 0.0, 7.0]));
        assert_eq!(m, Mask::full(3));

        let (out, m) = top_k(&v(&[2.0, -2.0, 1.0]), 1).unwrap();
        assert_eq!(out, v(&[2.0, 0.0, 0.0]));
        assert_eq!(m, mask(3, &[0]));

        let (out, m) = top_k(&v(&[2.0, -2.0, 1.0]), 0).unwrap();
        assert_eq!(out, DenseVector::zeros(3));
        assert!(m.is_empty());

        assert!(matches!(top_k(&v(&[1.0]), 2), Err(Error::KOutOfRange { k: 2, d: 1 })));
    }

    #[test]
    fn restrict_gather_examples() {
        let x = v(&[1.0, 2.0, 3.0]);
        assert_eq!(restrict(&x, &mask(3, &[1])).unwrap(), v(&[0.0, 2.0, 0.0]));
        assert_eq!(restrict(&x, &Mask::full(3)).unwrap(), x);
        assert_eq!(restrict(&x, &Mask::empty(3)).unwrap(), DenseVector::zeros(3));
        assert!(restrict(&x, &Mask::empty(4)).is_err());

        let y = v(&[4.0, 5.0, 6.0]);
        assert_eq!(gather(&y, &mask(3, &[0, 2])).unwrap(), v(&[4.0, 6.0]));
        assert_eq!(gather(&y, &Mask::empty(3)).unwrap().dim(), 0);
        assert_eq!(gather(&y, &Mask::full(3)).unwrap(), y);
        assert!(gather(&y, &Mask::full(2)).is_err());
    }

    #[test]
    fn submatrix_examples() {
        let h = DenseMatrix::from_fn(3, 3, |i, j| (3 * i + j) as f64);
        let c = mask(3, &[0, 2]);
        let s = submatrix(&h, &c, &c).unwrap();
        assert_eq!(s, DenseMatrix::from_rows(&[vec![0.0, 2.0], vec![6.0, 8.0]]).unwrap());
        assert_eq!(submatrix(&h, &Mask::full(3), &Mask::full(3)).unwrap(), h);
        let m = mask(5, &[1, 3, 4]);
        assert_eq!(
            submatrix(&DenseMatrix::<f64>::identity(5), &m, &m).unwrap(),
            DenseMatrix::identity(3)
        );
        assert!(submatrix(&h, &Mask::full(4), &c).is_err());
    }

    #[test]
    fn complement_examples() {
        assert_eq!(mask(4, &[1, 3]).complement(), mask(4, &[0, 2]));
        assert_eq!(Mask::empty(4).complement(), Mask::full(4));
        assert_eq!(Mask::full(4).complement(), Mask::empty(4));
    }

    #[test]
    fn mask_text_format() {
        let m = mask(8, &[7, 0, 3]);
        assert_eq!(m.to_string(), "8:0,3,7");
        assert_eq!("8:0,3,7".parse::<Mask>().unwrap(), m);
        assert_eq!("5:".parse::<Mask>().unwrap(), Mask::empty(5));
        assert!("3:0,0".parse::<Mask>().is_err());
        assert!("3:4".parse::<Mask>().is_err());
        assert!("nonsense".parse::<Mask>().is_err());
    }

    fn vec_and_mask() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
        (1usize..32).prop_flat_map(|d| {
            (prop::collection::vec(-10.0f64..10.0, d), prop::collection::vec(any::<bool>(), d))
        })
    }

    proptest! {
        #[test]
        fn restrict_is_idempotent((x, sel) in vec_and_mask()) {
            let d = x.len();
            let m = Mask::new(d, (0..d).filter(|&i| sel[i]).collect()).unwrap();
            let x = DenseVector::from(x);
            let once = restrict(&x, &m).unwrap();
            prop_assert_eq!(restrict(&once, &m).unwrap(), once.clone());
            // scatter(gather) reproduces the projection
            prop_assert_eq!(scatter(&gather(&x, &m).unwrap(), &m).unwrap(), once);
            prop_assert_eq!(m.cardinality() + m.complement().cardinality(), d);
        }

        #[test]
        fn top_k_residual_non_increasing(x in prop::collection::vec(-10.0f64..10.0, 1..32)) {
            let x = DenseVector::from(x);
            let mut prev = f64::INFINITY;
            for k in 0..=x.dim() {
                let (t, m) = top_k(&x, k).unwrap();
                prop_assert_eq!(m.cardinality(), k);
                let r = t.distance(&x);
                prop_assert!(r <= prev);
                prev = r;
            }
            prop_assert_eq!(prev, 0.0);
        }
    }
}
