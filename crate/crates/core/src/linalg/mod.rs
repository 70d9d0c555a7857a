//! Dense complex linear algebra for bipartite operators.
//!
//! Index conventions: a bipartite index `(a, b)` on `C^{dimA} ⊗ C^{dimB}`
//! is flattened to `a * dimB + b`, matching the Kronecker product.
//! Column vectorization is `vec(A) = Σ_j |j⟩ ⊗ A|j⟩`, which coincides with
//! nalgebra's column-major storage.

mod bipartite;
mod spectral;

pub use bipartite::{
    maximally_entangled, partial_trace, partial_trace_weighted, partial_transpose,
    random_schmidt_rank_k, schmidt_decompose, BipartiteShape, SchmidtDecomposition, Subsystem,
};
pub use spectral::{
    eigh, ky_fan_norm, matrix_exp, max_eigenvalue, min_eigenpair, min_eigenvalue,
    operator_norm, singular_values, top_eigenpair, trace_norm, Eigh,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

pub fn vec_col(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols, "unvec length mismatch");
    CMat::from_column_slice(rows, cols, v.as_slice())
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `|v⟩⟨w|`
pub fn outer(v: &CVec, w: &CVec) -> CMat {
    v * w.adjoint()
}

pub fn trace(a: &CMat) -> C64 {
    a.trace()
}

/// `⟨A, B⟩_HS = tr(A† B)`
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `⟨v|A|v⟩`
pub fn quadratic_form(a: &CMat, v: &CVec) -> C64 {
    (v.adjoint() * a * v)[(0, 0)]
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermitian_residual(a: &CMat) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    hermitian_residual(a) <= tol
}

pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5)
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Complex Ginibre matrix with i.i.d. entries `(g1 + i g2)/√2`.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    let g = ginibre(n, 1, rng);
    let v = CVec::from_column_slice(g.as_slice());
    let norm = v.norm();
    v / c(norm)
}

/// Random Hermitian matrix `(G + G†)/2` from a Ginibre draw.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    hermitize(&ginibre(n, n, rng))
}

/// Random PSD matrix `G G†`.
pub fn random_psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CMat {
    let g = ginibre(n, rank, rng);
    &g * g.adjoint()
}

pub fn normalize(v: &CVec) -> CVec {
    let n = v.norm();
    if n == 0.0 {
        v.clone()
    } else {
        v / c(n)
    }
}

/// Computational basis vector `|j⟩` in `C^n`.
pub fn basis(n: usize, j: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[j] = ONE;
    v
}

/// Matrix unit `|j⟩⟨k|` of size `n × n`.
pub fn matrix_unit(n: usize, j: usize, k: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(j, k)] = ONE;
    m
}

/// The swap operator on `C^d ⊗ C^d`.
pub fn swap(d: usize) -> CMat {
    let mut f = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            f[(b * d + a, a * d + b)] = ONE;
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn vec_matches_definition() {
        let mut rng = seeded(1);
        let a = ginibre(3, 2, &mut rng);
        let v = vec_col(&a);
        // vec(A) = Σ_j |j⟩ ⊗ A|j⟩
        let mut expect = CVec::zeros(6);
        for j in 0..2 {
            let col: CVec = a.column(j).into_owned();
            expect += kron_vec(&basis(2, j), &col);
        }
        assert!((v - expect).norm() < 1e-15);
        assert_eq!(unvec(&vec_col(&a), 3, 2), a);
    }

    #[test]
    fn vec_of_product_is_kron_transpose() {
        // vec(A X B) = (B^T ⊗ A) vec(X)
        let mut rng = seeded(2);
        let a = ginibre(3, 3, &mut rng);
        let x = ginibre(3, 3, &mut rng);
        let b = ginibre(3, 3, &mut rng);
        let lhs = vec_col(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec_col(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn swap_squares_to_identity() {
        let f = swap(3);
        assert_eq!(&f * &f, identity(9));
    }
}
