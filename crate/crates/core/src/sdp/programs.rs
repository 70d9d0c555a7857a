use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::program::{ConicProgram, EntryTerms, LinearForm};
use super::solver::{solve, SolverOptions, SolverResult};
use crate::error::{Error, Result};
use crate::linalg::{
    c, eigh, ginibre, identity, operator_norm, partial_trace, partial_transpose, trace_norm,
    BipartiteShape, CMat, Subsystem, C64,
};
use crate::qmaps::{link_product, SuperOperator};
use crate::rng::{base_seed, fork};
use crate::Tolerances;

const ONE: C64 = C64::new(1.0, 0.0);

fn half(s: f64) -> C64 {
    C64::new(0.5 * s, 0.0)
}

/// Adds `min tr(C X)` over all entries of block `x`.
fn trace_objective(form: &mut LinearForm, x: super::BlockId, cmat: &CMat) {
    let n = cmat.nrows();
    for r in 0..n {
        for col in 0..n {
            // tr(C X) = Σ C[col, r] X[r, col]
            let k = cmat[(col, r)];
            if k.norm() != 0.0 {
                form.add(x, r, col, k);
            }
        }
    }
}

/// `‖B‖_(k) = max tr(B M)` over `0 ⪯ M ⪯ 1`, `tr M ≤ k`.
pub fn kyfan_sdp(b: &CMat, k: usize, opts: SolverOptions) -> Result<f64> {
    let n = b.nrows();
    if !b.is_square() {
        return Err(Error::dims("Ky Fan program needs a square matrix"));
    }
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, max: n });
    }
    let lmin = eigh(b).min();
    if lmin < -1e-9 * operator_norm(b).max(1.0) {
        return Err(Error::NotPsd(lmin));
    }
    let mut p = ConicProgram::new();
    let m = p.psd_block("M", n);
    let slack_m = p.psd_block("1-M", n);
    let s = p.psd_block("k-trM", 1);
    p.add_hermitian_equality(n, &identity(n), |r, col| vec![(m, r, col, ONE), (slack_m, r, col, ONE)]);
    let mut tr = LinearForm::new();
    for i in 0..n {
        tr.add(m, i, i, ONE);
    }
    tr.add(s, 0, 0, ONE);
    p.add_equality(tr, k as f64);
    let mut obj = LinearForm::new();
    trace_objective(&mut obj, m, &(-b));
    p.set_objective(obj);
    let res = solve(&p, opts)?.require_optimal()?;
    Ok(-res.objective)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FRelaxation {
    pub value: f64,
    pub dual_bound: f64,
    #[serde(skip)]
    pub p: CMat,
    /// `tr_2 P`
    #[serde(skip)]
    pub rho: CMat,
    /// `tr_1 P`
    #[serde(skip)]
    pub omega: CMat,
}

/// `F(Φ) = min tr(C(Φ⊗id_k) P)` over `P ⪰ 0`, `tr P = 1`, `P^{T_1} ⪰ 0`.
pub fn f_relaxation(map: &SuperOperator, k: usize, opts: SolverOptions) -> Result<FRelaxation> {
    let d = map.dim();
    if k == 0 || k > d {
        return Err(Error::KOutOfRange { k, max: d });
    }
    map.require_hermitian_preserving(1e-9)?;
    let mk = map.tensor_with_identity(k)?;
    let n = d * k;
    let size = n * n;
    let ck = mk.choi();

    let mut prog = ConicProgram::new();
    let p = prog.psd_block("P", size);
    let q = prog.psd_block("P^T1", size);
    // Q[(a,b),(a',b')] = P[(a',b),(a,b')]
    prog.add_hermitian_equality(size, &CMat::zeros(size, size), |r, col| {
        let (a, bb) = (r / n, r % n);
        let (ap, bp) = (col / n, col % n);
        vec![(q, r, col, ONE), (p, ap * n + bb, a * n + bp, -ONE)]
    });
    let mut tr = LinearForm::new();
    for i in 0..size {
        tr.add(p, i, i, ONE);
    }
    prog.add_equality(tr, 1.0);
    let mut obj = LinearForm::new();
    trace_objective(&mut obj, p, ck);
    prog.set_objective(obj);
    let res = solve(&prog, opts)?.require_optimal()?;
    let pm = res.var("P").expect("block P");
    let shape = BipartiteShape::square(n);
    Ok(FRelaxation {
        value: res.objective,
        dual_bound: res.dual_objective,
        rho: partial_trace(&pm, shape, Subsystem::Second)?,
        omega: partial_trace(&pm, shape, Subsystem::First)?,
        p: pm,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `‖S‖_1` at the returned feasible point; an upper bound on `D(Φ)`.
    pub d_value: f64,
    /// Dual objective; a lower bound on `D(Φ)` up to dual infeasibility.
    pub dual_bound: f64,
    pub threshold: f64,
    pub is_decomposable: bool,
    #[serde(skip)]
    pub p1: CMat,
    #[serde(skip)]
    pub p2: CMat,
    #[serde(skip)]
    pub s: CMat,
}

/// Adds blocks `P1, P2, Z1, Z2` and constraints `E = P1 + P2^{T2} + (Z2 − Z1)/2`
/// for the Hermitian expression `E` given entrywise; minimizes `(tr Z1 + tr Z2)/2`.
fn decomposition_blocks(
    prog: &mut ConicProgram,
    shape: BipartiteShape,
    target: &CMat,
    lhs: impl Fn(usize, usize) -> EntryTerms,
) -> LinearForm {
    let n = shape.total();
    let db = shape.dim_b;
    let p1 = prog.psd_block("P1", n);
    let p2 = prog.psd_block("P2", n);
    let z1 = prog.psd_block("Y-S", n);
    let z2 = prog.psd_block("Y+S", n);
    prog.add_hermitian_equality(n, target, |r, col| {
        let mut t = lhs(r, col);
        // P2^{T2}[(a,b),(a',b')] = P2[(a,b'),(a',b)]
        let (a, b) = (r / db, r % db);
        let (ap, bp) = (col / db, col % db);
        t.push((p1, r, col, -ONE));
        t.push((p2, a * db + bp, ap * db + b, -ONE));
        t.push((z2, r, col, half(-1.0)));
        t.push((z1, r, col, half(1.0)));
        t
    });
    let mut obj = LinearForm::new();
    for i in 0..n {
        obj.add(z1, i, i, half(1.0));
        obj.add(z2, i, i, half(1.0));
    }
    obj
}

fn residual_part(res: &SolverResult, shape: BipartiteShape, total: &CMat) -> Result<(CMat, CMat, CMat)> {
    // PSD projection keeps ‖S‖_1 a valid upper bound at inexact points
    let p1 = psd_part(&res.var("P1").expect("block P1"));
    let p2 = psd_part(&res.var("P2").expect("block P2"));
    let s = total - &p1 - partial_transpose(&p2, shape, Subsystem::Second)?;
    Ok((p1, p2, s))
}

/// Alternating exact minimization of `‖C − P1 − P2^{T2}‖_1` over one block at
/// a time; the best PSD approximation of `X` in trace norm is `X_+`.
fn polish(total: &CMat, shape: BipartiteShape, mut p1: CMat, mut p2: CMat, mut s: CMat) -> Result<(CMat, CMat, CMat)> {
    let pt = |m: &CMat| partial_transpose(m, shape, Subsystem::Second);
    let mut best = trace_norm(&s);
    for _ in 0..POLISH_ROUNDS {
        let q1 = psd_part(&(total - pt(&p2)?));
        let q2 = psd_part(&pt(&(total - &q1))?);
        let t = total - &q1 - pt(&q2)?;
        let v = trace_norm(&t);
        if v >= best {
            break;
        }
        let done = best - v <= 1e-6 * best;
        (p1, p2, s, best) = (q1, q2, t, v);
        if done {
            break;
        }
    }
    Ok((p1, p2, s))
}

const POLISH_ROUNDS: usize = 200;

/// `D(Φ) = min ‖S‖_1` subject to `C(Φ) = P1 + P2^{T2} + S`, `P1, P2 ⪰ 0`.
pub fn decomposability_d(map: &SuperOperator, tols: &Tolerances) -> Result<DecompositionReport> {
    map.require_hermitian_preserving(1e-9)?;
    let shape = map.choi_shape();
    let choi = map.choi();
    let mut prog = ConicProgram::new();
    let obj = decomposition_blocks(&mut prog, shape, &-choi, |_, _| Vec::new());
    prog.set_objective(obj);
    let res = solve(&prog, SolverOptions::with_tol(tols.solver_tol))?;
    let (p1, p2, s) = residual_part(&res, shape, choi)?;
    let (p1, p2, s) = polish(choi, shape, p1, p2, s)?;
    let d_value = trace_norm(&s);
    let threshold = tols.eps_d(operator_norm(choi));
    // A stalled solve still certifies decomposability through its primal point,
    // but cannot certify the converse.
    if !res.is_optimal() && d_value > threshold {
        return Err(res.require_optimal().unwrap_err());
    }
    Ok(DecompositionReport {
        d_value,
        dual_bound: res.dual_objective,
        threshold,
        is_decomposable: d_value <= threshold,
        p1,
        p2,
        s,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ppt2JointReport {
    /// `‖S‖_1` at the returned point.
    pub value: f64,
    pub dual_bound: f64,
    pub normalization: f64,
    #[serde(skip)]
    pub n: CMat,
}

/// Joint minimization of `‖S‖_1` over `N ⪰ 0`, `N^{T2} ⪰ 0`, `tr N = normalization`
/// and decompositions `C(Ψ) ⋆ N = P1 + P2^{T2} + S`.
pub fn ppt2_joint(psi: &SuperOperator, normalization: f64, tols: &Tolerances) -> Result<Ppt2JointReport> {
    psi.require_hermitian_preserving(1e-9)?;
    let d = psi.dim();
    if !(normalization >= 0.0 && normalization.is_finite()) {
        return Err(Error::InvalidParameter("normalization must be nonnegative".into()));
    }
    let n = d * d;
    let shape = BipartiteShape::square(d);
    let cpsi = psi.choi().clone();
    let mut prog = ConicProgram::new();
    let nb = prog.psd_block("N", n);
    let nt = prog.psd_block("N^T2", n);
    prog.add_hermitian_equality(n, &CMat::zeros(n, n), |r, col| {
        let (a, b) = (r / d, r % d);
        let (ap, bp) = (col / d, col % d);
        vec![(nt, r, col, ONE), (nb, a * d + bp, ap * d + b, -ONE)]
    });
    let mut tr = LinearForm::new();
    for i in 0..n {
        tr.add(nb, i, i, ONE);
    }
    prog.add_equality(tr, normalization);
    // link[(j,c),(k,e)] = Σ_{ab} N[(j,a),(k,b)] C(Ψ)[(a,c),(b,e)]
    let obj = decomposition_blocks(&mut prog, shape, &CMat::zeros(n, n), |r, col| {
        let (j, cc) = (r / d, r % d);
        let (k, e) = (col / d, col % d);
        let mut t = Vec::with_capacity(d * d + 4);
        for a in 0..d {
            for b in 0..d {
                let w = cpsi[(a * d + cc, b * d + e)];
                if w.norm() != 0.0 {
                    t.push((nb, j * d + a, k * d + b, w));
                }
            }
        }
        t
    });
    prog.set_objective(obj);
    let res = solve(&prog, SolverOptions::with_tol(tols.solver_tol))?.require_optimal()?;
    let nm = res.var("N").expect("block N");
    let link = link_product(&cpsi, &nm, d)?;
    let (_, _, s) = residual_part(&res, shape, &link)?;
    Ok(Ppt2JointReport {
        value: trace_norm(&s),
        dual_bound: res.dual_objective,
        normalization,
        n: nm,
    })
}

fn psd_part(h: &CMat) -> CMat {
    let e = eigh(h);
    let mut out = CMat::zeros(h.nrows(), h.ncols());
    for (j, &v) in e.values.iter().enumerate() {
        if v > 0.0 {
            let u = e.vector(j);
            out += &u * u.adjoint() * c(v);
        }
    }
    out
}

/// Random Choi matrix of a map that is both CP and co-CP, normalized to `tr N = d`.
///
/// Starts from `(W + W^{T2})/2` for a Ginibre-built PSD `W` and alternates
/// projections onto the PSD and PPT cones.
pub fn sample_cp_ccop<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let n = d * d;
    let shape = BipartiteShape::square(d);
    let pt = |m: &CMat| partial_transpose(m, shape, Subsystem::Second).expect("square shape");
    let g = ginibre(n, n, rng);
    let w = &g * g.adjoint();
    let mut nm = (&w + pt(&w)) * c(0.5);
    for _ in 0..200 {
        nm = psd_part(&nm);
        let t = pt(&nm);
        let scale = nm.trace().re.max(1e-300);
        if eigh(&t).min() >= -1e-10 * scale {
            break;
        }
        nm = pt(&psd_part(&t));
    }
    let floor = eigh(&nm).min().min(eigh(&pt(&nm)).min());
    if floor < 0.0 {
        nm += identity(n) * c(-floor);
    }
    let tr = nm.trace().re;
    nm * c(d as f64 / tr)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ppt2Sample {
    pub index: usize,
    pub d_value: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub n: CMat,
}

/// `D(C(Ψ) ⋆ N)` for random CP∧co-CP `N`, sorted by descending `D`.
/// Solver failures are recorded per sample.
pub fn ppt2_scan_random<R: Rng + ?Sized>(
    psi: &SuperOperator,
    n_samples: usize,
    rng: &mut R,
    tols: &Tolerances,
) -> Result<Vec<Ppt2Sample>> {
    psi.require_hermitian_preserving(1e-9)?;
    let d = psi.dim();
    let seed = base_seed(rng);
    let mut out: Vec<Ppt2Sample> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut r = fork(seed, i as u64);
            let nm = sample_cp_ccop(d, &mut r);
            let result = link_product(psi.choi(), &nm, d)
                .and_then(|l| SuperOperator::from_choi(d, d, l))
                .and_then(|m| decomposability_d(&m, tols));
            match result {
                Ok(rep) => Ppt2Sample {
                    index: i,
                    d_value: Some(rep.d_value),
                    error: None,
                    n: nm,
                },
                Err(e) => Ppt2Sample {
                    index: i,
                    d_value: None,
                    error: Some(e.to_string()),
                    n: nm,
                },
            }
        })
        .collect();
    out.sort_by(|a, b| {
        let key = |s: &Ppt2Sample| s.d_value.unwrap_or(f64::INFINITY);
        key(b).total_cmp(&key(a)).then(a.index.cmp(&b.index))
    });
    Ok(out)
}
