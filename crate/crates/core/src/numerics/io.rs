//! Text format: first line `<rows> <cols>`, then one line per row of
//! space-separated reals with 17 significant digits. Vectors are `n 1`
//! matrices.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::Scalar;

/// Formats a real with 17 significant digits.
pub fn format_real<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

pub fn format_matrix<T: Scalar>(m: &DenseMatrix<T>) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&x| format_real(x)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn write_matrix<T: Scalar, W: Write>(mut w: W, m: &DenseMatrix<T>) -> Result<()> {
    w.write_all(format_matrix(m).as_bytes())?;
    Ok(())
}

pub fn write_vector<T: Scalar, W: Write>(w: W, v: &DenseVector<T>) -> Result<()> {
    write_matrix(w, &DenseMatrix::from_column(v))
}

pub fn parse_matrix<T: Scalar>(text: &str) -> Result<DenseMatrix<T>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("bad header {header:?}: {e}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!("header must be `<rows> <cols>`, got {header:?}")));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for (r, line) in lines.enumerate() {
        if r >= rows {
            return Err(Error::Parse(format!("more than {rows} rows")));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let x: f64 = tok.parse().map_err(|e| Error::Parse(format!("row {r}: {tok:?}: {e}")))?;
            data.push(T::from_f64(x).ok_or_else(|| Error::Parse(format!("unrepresentable {tok}")))?);
        }
        if data.len() - before != cols {
            return Err(Error::Parse(format!("row {r} has {} entries, expected {cols}", data.len() - before)));
        }
    }
    if data.len() != rows * cols {
        return Err(Error::Parse(format!("expected {rows} rows")));
    }
    DenseMatrix::new(rows, cols, data)
}

pub fn parse_vector<T: Scalar>(text: &str) -> Result<DenseVector<T>> {
    let m = parse_matrix::<T>(text)?;
    if m.cols() != 1 {
        return Err(Error::Parse(format!("vector file must have 1 column, got {}", m.cols())));
    }
    DenseVector::new(m.as_slice().to_vec())
}

pub fn read_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn read_vector<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseVector<T>> {
    parse_vector(&std::fs::read_to_string(path)?)
}

pub fn save_matrix<T: Scalar>(path: impl AsRef<Path>, m: &DenseMatrix<T>) -> Result<()> {
    std::fs::write(path, format_matrix(m))?;
    Ok(())
}

pub fn save_vector<T: Scalar>(path: impl AsRef<Path>, v: &DenseVector<T>) -> Result<()> {
    save_matrix(path, &DenseMatrix::from_column(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        let m = DenseMatrix::from_rows(&[vec![1.0, -0.5], vec![0.1, 3.0]]).unwrap();
        let s = format_matrix(&m);
        assert_eq!(s.lines().next(), Some("2 2"));
        assert!(s.ends_with('\n'));
        assert_eq!(s.lines().nth(1), Some("1.0000000000000000e0 -5.0000000000000000e-1"));
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_matrix::<f64>("2 2\n1 2\n3\n").is_err());
        assert!(parse_matrix::<f64>("2 2\n1 2\n").is_err());
        assert!(parse_matrix::<f64>("1 1\nnan\n").is_err());
        assert!(parse_vector::<f64>("1 2\n1 2\n").is_err());
        assert!(parse_matrix::<f64>("").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_lossless(data in prop::collection::vec(-1e300f64..1e300, 1..24)) {
            let v = DenseVector::from(data);
            let mut buf = Vec::new();
            write_vector(&mut buf, &v).unwrap();
            let back: DenseVector<f64> = parse_vector(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, v);
        }
    }
}
