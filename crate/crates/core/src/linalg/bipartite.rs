use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{c, ginibre, CMat, CVec, ONE};
use crate::error::{Error, Result};

/// Tensor factorization `C^{dim_a} ⊗ C^{dim_b}` of a matrix or vector index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteShape {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl BipartiteShape {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        Self { dim_a, dim_b }
    }

    pub fn square(d: usize) -> Self {
        Self::new(d, d)
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize) -> usize {
        a * self.dim_b + b
    }

    fn check_square(&self, y: &CMat) -> Result<()> {
        let n = self.total();
        if y.nrows() != n || y.ncols() != n {
            return Err(Error::dims(format!(
                "operator is {}x{}, shape {}⊗{} needs {n}x{n}",
                y.nrows(),
                y.ncols(),
                self.dim_a,
                self.dim_b
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    First,
    Second,
}

/// Weighted partial trace `tr_{sub,W}(Y)`.
///
/// For `Subsystem::First` this is the unique operator with
/// `tr(Z · tr_{1,W}(Y)) = tr((W ⊗ Z) Y)` for all `Z`, i.e. `tr_1((W ⊗ 1) Y)`.
/// `Subsystem::Second` is the mirror image. `weight = None` means identity.
pub fn partial_trace_weighted(
    y: &CMat,
    shape: BipartiteShape,
    subsystem: Subsystem,
    weight: Option<&CMat>,
) -> Result<CMat> {
    shape.check_square(y)?;
    let traced = match subsystem {
        Subsystem::First => shape.dim_a,
        Subsystem::Second => shape.dim_b,
    };
    if let Some(w) = weight {
        if w.nrows() != traced || w.ncols() != traced {
            return Err(Error::dims(format!(
                "weight is {}x{}, traced factor has dimension {traced}",
                w.nrows(),
                w.ncols()
            )));
        }
    }
    let (da, db) = (shape.dim_a, shape.dim_b);
    let idx = |a: usize, b: usize| shape.index(a, b);
    let out = match subsystem {
        Subsystem::First => {
            // out[b, b'] = Σ_{a,a'} W[a, a'] Y[(a', b), (a, b')]
            CMat::from_fn(db, db, |b, bp| {
                let mut acc = c(0.0);
                for a in 0..da {
                    match weight {
                        None => acc += y[(idx(a, b), idx(a, bp))],
                        Some(w) => {
                            for ap in 0..da {
                                let wv = w[(a, ap)];
                                if wv != c(0.0) {
                                    acc += wv * y[(idx(ap, b), idx(a, bp))];
                                }
                            }
                        }
                    }
                }
                acc
            })
        }
        Subsystem::Second => {
            // out[a, a'] = Σ_{b,b'} W[b, b'] Y[(a, b'), (a', b)]
            CMat::from_fn(da, da, |a, ap| {
                let mut acc = c(0.0);
                for b in 0..db {
                    match weight {
                        None => acc += y[(idx(a, b), idx(ap, b))],
                        Some(w) => {
                            for bp in 0..db {
                                let wv = w[(b, bp)];
                                if wv != c(0.0) {
                                    acc += wv * y[(idx(a, bp), idx(ap, b))];
                                }
                            }
                        }
                    }
                }
                acc
            })
        }
    };
    Ok(out)
}

pub fn partial_trace(y: &CMat, shape: BipartiteShape, subsystem: Subsystem) -> Result<CMat> {
    partial_trace_weighted(y, shape, subsystem, None)
}

/// Transposes the block indices of one tensor factor.
pub fn partial_transpose(y: &CMat, shape: BipartiteShape, subsystem: Subsystem) -> Result<CMat> {
    shape.check_square(y)?;
    let (da, db) = (shape.dim_a, shape.dim_b);
    let mut out = CMat::zeros(y.nrows(), y.ncols());
    for a in 0..da {
        for b in 0..db {
            for ap in 0..da {
                for bp in 0..db {
                    let (src_r, src_c) = match subsystem {
                        Subsystem::First => (shape.index(ap, b), shape.index(a, bp)),
                        Subsystem::Second => (shape.index(a, bp), shape.index(ap, b)),
                    };
                    out[(shape.index(a, b), shape.index(ap, bp))] = y[(src_r, src_c)];
                }
            }
        }
    }
    Ok(out)
}

/// Schmidt decomposition `v = Σ_l s_l left_l ⊗ right_l`.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Nonnegative, descending.
    pub coefficients: Vec<f64>,
    pub left: CMat,
    pub right: CMat,
}

impl SchmidtDecomposition {
    /// Number of coefficients above `tol` times the largest one.
    pub fn rank(&self, tol: f64) -> usize {
        let top = self.coefficients.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.coefficients.iter().filter(|&&s| s > tol * top).count()
    }

    pub fn reassemble(&self) -> CVec {
        let (da, db) = (self.left.nrows(), self.right.nrows());
        let mut v = CVec::zeros(da * db);
        for (l, &s) in self.coefficients.iter().enumerate() {
            let u = self.left.column(l);
            let w = self.right.column(l);
            for a in 0..da {
                for b in 0..db {
                    v[a * db + b] += c(s) * u[a] * w[b];
                }
            }
        }
        v
    }
}

/// Vectorized SVD of the `dim_a × dim_b` coefficient matrix of `v`.
pub fn schmidt_decompose(v: &CVec, shape: BipartiteShape) -> Result<SchmidtDecomposition> {
    if v.len() != shape.total() {
        return Err(Error::dims(format!(
            "vector of length {} does not factor as {}⊗{}",
            v.len(),
            shape.dim_a,
            shape.dim_b
        )));
    }
    // M[a, b] = v[a * dim_b + b]
    let m = CMat::from_fn(shape.dim_a, shape.dim_b, |a, b| v[shape.index(a, b)]);
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let r = order.len();
    let mut left = CMat::zeros(shape.dim_a, r);
    let mut right = CMat::zeros(shape.dim_b, r);
    let mut coefficients = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        coefficients.push(svd.singular_values[src]);
        left.set_column(dst, &u.column(src));
        // M = U S V†, so the right Schmidt vector is row `src` of V†, untransposed.
        right.set_column(dst, &vt.row(src).transpose());
    }
    Ok(SchmidtDecomposition {
        coefficients,
        left,
        right,
    })
}

/// `|Ω⟩ = Σ_j |jj⟩ / √d` when normalized, `|Γ⟩ = Σ_j |jj⟩` otherwise.
pub fn maximally_entangled(d: usize, normalized: bool) -> CVec {
    let mut v = CVec::zeros(d * d);
    let w = if normalized {
        c(1.0 / (d as f64).sqrt())
    } else {
        ONE
    };
    for j in 0..d {
        v[j * d + j] = w;
    }
    v
}

/// Unit vector of Schmidt rank at most `k`: vec of a product of two Ginibre
/// factors with inner dimension `k`, normalized.
pub fn random_schmidt_rank_k<R: Rng + ?Sized>(
    shape: BipartiteShape,
    k: usize,
    rng: &mut R,
) -> Result<CVec> {
    let max = shape.dim_a.min(shape.dim_b);
    if k == 0 || k > max {
        return Err(Error::KOutOfRange { k, max });
    }
    let left = ginibre(shape.dim_a, k, rng);
    let right = ginibre(k, shape.dim_b, rng);
    let m = left * right;
    let mut v = CVec::from_fn(shape.total(), |i, _| m[(i / shape.dim_b, i % shape.dim_b)]);
    let n = v.norm();
    v /= c(n);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        eigh, identity, kron, kron_vec, outer, random_psd, random_unit_vector, swap, trace,
    };
    use crate::rng::seeded;

    #[test]
    fn weighted_trace_of_product_operator() {
        let mut rng = seeded(3);
        let a = ginibre(2, 2, &mut rng);
        let b = ginibre(3, 3, &mut rng);
        let m = ginibre(2, 2, &mut rng);
        let y = kron(&a, &b);
        let out = partial_trace_weighted(&y, BipartiteShape::new(2, 3), Subsystem::First, Some(&m))
            .unwrap();
        let expect = &b * trace(&(&m * &a));
        assert!((out - expect).norm() < 1e-12);
    }

    #[test]
    fn marginal_of_gamma_is_identity() {
        let g = maximally_entangled(2, false);
        let y = outer(&g, &g);
        let out = partial_trace(&y, BipartiteShape::square(2), Subsystem::First).unwrap();
        assert!((out - identity(2)).norm() < 1e-15);
    }

    #[test]
    fn weighted_trace_defining_identity() {
        let mut rng = seeded(4);
        let shape = BipartiteShape::new(2, 3);
        let y = random_psd(6, 6, &mut rng);
        let m = ginibre(2, 2, &mut rng);
        let w = ginibre(3, 3, &mut rng);
        let first = partial_trace_weighted(&y, shape, Subsystem::First, Some(&m)).unwrap();
        let second = partial_trace_weighted(&y, shape, Subsystem::Second, Some(&w)).unwrap();
        for _ in 0..20 {
            let z3 = ginibre(3, 3, &mut rng);
            let lhs = trace(&(&z3 * &first));
            let rhs = trace(&(kron(&m, &z3) * &y));
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
            let z2 = ginibre(2, 2, &mut rng);
            let lhs = trace(&(&z2 * &second));
            let rhs = trace(&(kron(&z2, &w) * &y));
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
        }
        assert!(partial_trace_weighted(&y, shape, Subsystem::First, Some(&w)).is_err());
        assert!(partial_trace_weighted(&y, BipartiteShape::new(2, 2), Subsystem::First, None).is_err());
    }

    #[test]
    fn weighted_trace_preserves_psd() {
        let mut rng = seeded(5);
        let shape = BipartiteShape::new(3, 3);
        for _ in 0..20 {
            let y = random_psd(9, 3, &mut rng);
            let w = random_psd(3, 2, &mut rng);
            let out = partial_trace_weighted(&y, shape, Subsystem::First, Some(&w)).unwrap();
            assert!(eigh(&out).min() > -1e-12);
        }
    }

    #[test]
    fn partial_transpose_of_product() {
        let mut rng = seeded(6);
        let a = ginibre(2, 2, &mut rng);
        let b = ginibre(3, 3, &mut rng);
        let shape = BipartiteShape::new(2, 3);
        let y = kron(&a, &b);
        let t2 = partial_transpose(&y, shape, Subsystem::Second).unwrap();
        assert!((t2 - kron(&a, &b.transpose())).norm() < 1e-15);
        let t1 = partial_transpose(&y, shape, Subsystem::First).unwrap();
        assert!((t1 - kron(&a.transpose(), &b)).norm() < 1e-15);
    }

    #[test]
    fn partial_transpose_of_swap() {
        let omega = maximally_entangled(2, true);
        let out = partial_transpose(&swap(2), BipartiteShape::square(2), Subsystem::Second).unwrap();
        assert!((out - outer(&omega, &omega) * c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn partial_transpose_is_involution() {
        let mut rng = seeded(11);
        let y = ginibre(6, 6, &mut rng);
        let shape = BipartiteShape::new(3, 2);
        for sub in [Subsystem::First, Subsystem::Second] {
            let once = partial_transpose(&y, shape, sub).unwrap();
            assert_eq!(partial_transpose(&once, shape, sub).unwrap(), y);
            assert!((trace(&once) - trace(&y)).norm() < 1e-14);
        }
    }

    #[test]
    fn schmidt_of_product_and_gamma() {
        let mut rng = seeded(12);
        let x = ginibre(3, 1, &mut rng).column(0).into_owned();
        let y = ginibre(2, 1, &mut rng).column(0).into_owned();
        let v = kron_vec(&x, &y);
        let s = schmidt_decompose(&v, BipartiteShape::new(3, 2)).unwrap();
        assert_eq!(s.rank(1e-12), 1);
        assert!((s.coefficients[0] - x.norm() * y.norm()).abs() < 1e-12);

        let g = maximally_entangled(3, false);
        let s = schmidt_decompose(&g, BipartiteShape::square(3)).unwrap();
        for &coef in &s.coefficients {
            assert!((coef - 1.0).abs() < 1e-12);
        }
        assert!(schmidt_decompose(&g, BipartiteShape::new(2, 3)).is_err());
    }

    #[test]
    fn schmidt_reassembles() {
        let mut rng = seeded(13);
        for _ in 0..20 {
            let v = random_unit_vector(12, &mut rng);
            let s = schmidt_decompose(&v, BipartiteShape::new(3, 4)).unwrap();
            assert!((s.reassemble() - &v).norm() < 1e-12);
            assert!(s.coefficients.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn maximally_entangled_norms() {
        let omega = maximally_entangled(2, true);
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(omega.as_slice(), &[c(s), c(0.0), c(0.0), c(s)]);
        assert!((maximally_entangled(3, false).norm_squared() - 3.0).abs() < 1e-15);
        let g = maximally_entangled(4, false);
        let o = maximally_entangled(4, true);
        assert!((outer(&g, &g) - outer(&o, &o) * c(4.0)).norm() < 1e-14);
    }

    #[test]
    fn schmidt_rank_sampler() {
        let mut rng = seeded(14);
        let shape = BipartiteShape::square(3);
        let v = random_schmidt_rank_k(shape, 1, &mut rng).unwrap();
        assert_eq!(schmidt_decompose(&v, shape).unwrap().rank(1e-10), 1);
        let v = random_schmidt_rank_k(shape, 3, &mut rng).unwrap();
        assert_eq!(schmidt_decompose(&v, shape).unwrap().rank(1e-10), 3);
        for _ in 0..1000 {
            let v = random_schmidt_rank_k(shape, 2, &mut rng).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-12);
            let s = schmidt_decompose(&v, shape).unwrap();
            assert!(s.coefficients[2] < 1e-12);
        }
        assert!(random_schmidt_rank_k(shape, 4, &mut rng).is_err());
        assert!(random_schmidt_rank_k(shape, 0, &mut rng).is_err());
    }
}
