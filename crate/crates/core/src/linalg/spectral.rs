use nalgebra::SymmetricEigen;

use super::{c, hermitize, CMat, CVec};
use crate::error::{Error, Result};

/// Hermitian eigendecomposition with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: CMat,
}

impl Eigh {
    pub fn vector(&self, j: usize) -> CVec {
        self.vectors.column(j).into_owned()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("empty spectrum")
    }
}

/// Eigendecomposition of the Hermitian part of `a`.
pub fn eigh(a: &CMat) -> Eigh {
    let n = a.nrows();
    let eig = SymmetricEigen::new(hermitize(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Eigh { values, vectors }
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigh(a).min()
}

pub fn max_eigenvalue(a: &CMat) -> f64 {
    eigh(a).max()
}

pub fn min_eigenpair(a: &CMat) -> (f64, CVec) {
    let e = eigh(a);
    (e.values[0], e.vector(0))
}

pub fn top_eigenpair(a: &CMat) -> (f64, CVec) {
    let e = eigh(a);
    let last = e.values.len() - 1;
    (e.values[last], e.vector(last))
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Sum of the `k` largest singular values.
pub fn ky_fan_norm(b: &CMat, k: usize) -> Result<f64> {
    let max = b.nrows().min(b.ncols());
    if k == 0 || k > max {
        return Err(Error::KOutOfRange { k, max });
    }
    Ok(singular_values(b).iter().take(k).sum())
}

pub fn trace_norm(a: &CMat) -> f64 {
    singular_values(a).iter().sum()
}

pub fn operator_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// `e^{tA}` by scaling and squaring with a Padé approximant.
pub fn matrix_exp(a: &CMat, t: f64) -> Result<CMat> {
    if !a.is_square() {
        return Err(Error::dims(format!(
            "matrix_exp needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok((a * c(t)).exp())
}
