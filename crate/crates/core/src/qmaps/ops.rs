use super::{KrausSet, StinespringOp, SuperOperator};
use crate::error::{Error, Result};
use crate::linalg::{c, eigh, identity, unvec, CMat};

/// Choi matrix of `Ψ ∘ Δ` from `C(Ψ)` and `C(Δ)`, all maps on `d × d` matrices.
///
/// `C(Ψ∘Δ)[(j,c),(k,e)] = Σ_{a,b} C(Δ)[(j,a),(k,b)] · C(Ψ)[(a,c),(b,e)]`
pub fn link_product(choi_outer: &CMat, choi_inner: &CMat, d: usize) -> Result<CMat> {
    let n = d * d;
    if choi_outer.shape() != (n, n) || choi_inner.shape() != (n, n) {
        return Err(Error::dims(format!("link product expects two {n}x{n} Choi matrices")));
    }
    let mut out = CMat::zeros(n, n);
    for j in 0..d {
        for k in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let w = choi_inner[(j * d + a, k * d + b)];
                    if w == c(0.0) {
                        continue;
                    }
                    for cc in 0..d {
                        for e in 0..d {
                            out[(j * d + cc, k * d + e)] += w * choi_outer[(a * d + cc, b * d + e)];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Stinespring operator of `S = kλ tr(·) 1 − Φ ⊗ id_k`, with `λ = λ_max(C(Φ))`.
///
/// `S` is completely positive by construction. Returns `(V, λ)`; the
/// environment dimension is the numerical rank of `C(S)`, at least one.
pub fn shifted_stinespring(map: &SuperOperator, k: usize, eps: f64) -> Result<(StinespringOp, f64)> {
    if map.dim_in() != map.dim_out() {
        return Err(Error::dims("shifted Stinespring needs a square map"));
    }
    let d = map.dim();
    if k == 0 || k > d {
        return Err(Error::KOutOfRange { k, max: d });
    }
    map.require_hermitian_preserving(1e-9)?;
    let lambda = eigh(map.choi()).max();
    let ck = map.tensor_with_identity(k)?;
    let n = d * k;
    let shifted = identity(n * n) * c(k as f64 * lambda) - ck.choi();
    let e = eigh(&shifted);
    let cut = eps * e.max().abs().max(1.0);
    let mut ops = Vec::new();
    for (j, &mu) in e.values.iter().enumerate().rev() {
        if mu > cut {
            ops.push(unvec(&e.vector(j), n, n) * c(mu.sqrt()));
        }
    }
    if ops.is_empty() {
        ops.push(CMat::zeros(n, n));
    }
    Ok((StinespringOp::from_kraus(&KrausSet::new(ops)), lambda))
}
