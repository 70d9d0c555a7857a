//! Refutation searches: random sampling and four multi-start local
//! optimizers over the equivalent characterizations of k-positivity.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_k, fold_product, truncate_rank, BoundsReport, OptimizerState, PositivityVerdict, WitnessRecord};
use crate::error::Result;
use crate::linalg::{
    c, eigh, max_eigenvalue, partial_trace_weighted, quadratic_form, random_schmidt_rank_k, random_unit_vector,
    vec_col, BipartiteShape, CMat, CVec, Subsystem, C64,
};
use crate::qmaps::{shifted_stinespring, SuperOperator};
use crate::rng::{base_seed, fork, TaskRng};
use crate::Budget;

const KRAUS_EPS: f64 = 1e-12;

/// One restart of a local search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub value: f64,
    /// Objective at the start and after every sweep.
    pub history: Vec<f64>,
    pub state: OptimizerState,
}

fn to_vec(v: &CVec) -> Vec<C64> {
    v.iter().copied().collect()
}

fn converged(history: &[f64], tol: f64) -> bool {
    let n = history.len();
    n >= 2 && (history[n - 1] - history[n - 2]).abs() < tol
}

/// Runs restarts in parallel on forked streams; keeps the best value, ties
/// going to the lowest restart index.
fn multistart<R, F>(restarts: usize, rng: &mut R, maximize: bool, run: F) -> Result<(RunTrace, usize)>
where
    R: Rng + ?Sized,
    F: Fn(&mut TaskRng) -> Result<RunTrace> + Sync,
{
    let seed = base_seed(rng);
    let n = restarts.max(1);
    let runs: Vec<RunTrace> = (0..n)
        .into_par_iter()
        .map(|i| run(&mut fork(seed, i as u64)))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        let better = if maximize {
            r.value > runs[best].value
        } else {
            r.value < runs[best].value
        };
        if better {
            best = i;
        }
    }
    Ok((runs.into_iter().nth(best).expect("at least one restart"), n))
}

/// Samples unit vectors of Schmidt rank at most `k` and evaluates the Choi
/// quadratic form on each.
pub fn refute_by_sampling<R: Rng + ?Sized>(
    map: &SuperOperator,
    k: usize,
    n_samples: usize,
    rng: &mut R,
    eps_psd: f64,
) -> Result<PositivityVerdict> {
    let d = check_k(map, k)?;
    let choi = map.choi();
    let shape = BipartiteShape::square(d);
    let seed = base_seed(rng);
    const CHUNK: usize = 1024;
    let chunks = n_samples.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|ci| -> Result<(f64, CVec)> {
            let mut r = fork(seed, ci as u64);
            let count = CHUNK.min(n_samples - ci * CHUNK);
            let mut best = (f64::INFINITY, CVec::zeros(d * d));
            for _ in 0..count {
                let psi = random_schmidt_rank_k(shape, k, &mut r)?;
                let v = quadratic_form(choi, &psi).re;
                if v < best.0 {
                    best = (v, psi);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::INFINITY, CVec::zeros(d * d)), |a, b| if b.0 < a.0 { b } else { a });
    let witness = (n_samples > 0).then(|| WitnessRecord::schmidt_vector(&best.1, choi));
    let report = BoundsReport {
        method: "sampling".into(),
        lambda_max: max_eigenvalue(choi),
        best_maximizer_value: best.0,
        restarts_used: n_samples,
        gap_estimate: best.0,
        optimizer_state: OptimizerState {
            x: to_vec(&best.1),
            ..Default::default()
        },
        witness,
    };
    Ok(super::verdict_from_bounds(k, report, eps_psd))
}

fn combine(kraus: &[CMat], x: &CVec) -> CMat {
    let mut a = CMat::zeros(kraus[0].nrows(), kraus[0].ncols());
    for (kj, &xj) in kraus.iter().zip(x.iter()) {
        a += kj * xj;
    }
    a
}

fn top_k_sum(values: &[f64], k: usize) -> f64 {
    values.iter().rev().take(k).sum()
}

/// Single ascent run for `max_x ‖A(x)A(x)†‖_(k)`, `A(x) = Σ x_i K_i`.
///
/// Alternates between the top-`k` eigenprojector `P` of `A A†` and the top
/// eigenvector of `Q[j,i] = tr(K_j† P K_i)`, so the objective never decreases.
pub fn marciniak_run(kraus: &[CMat], k: usize, x0: CVec, budget: &Budget) -> RunTrace {
    let n = kraus[0].nrows();
    let mut x = x0.normalize();
    let eval = |x: &CVec| {
        let a = combine(kraus, x);
        let e = eigh(&(&a * a.adjoint()));
        (top_k_sum(&e.values, k), e)
    };
    let (mut value, mut e) = eval(&x);
    let mut history = vec![value];
    for _ in 0..budget.max_sweeps {
        let u = e.vectors.columns(n - k, k).into_owned();
        let w = CMat::from_columns(&kraus.iter().map(|kj| vec_col(&(u.adjoint() * kj))).collect::<Vec<_>>());
        let q = w.adjoint() * w;
        let qe = eigh(&q);
        x = qe.vector(qe.values.len() - 1);
        (value, e) = eval(&x);
        history.push(value);
        if converged(&history, budget.sweep_tol) {
            break;
        }
    }
    let m = truncate_rank(&combine(kraus, &x), k);
    RunTrace {
        value,
        history,
        state: OptimizerState {
            x: to_vec(&x),
            m: Some(m.iter().copied().collect()),
            ..Default::default()
        },
    }
}

fn finish_spectral(
    map: &SuperOperator,
    method: &str,
    lambda: f64,
    run: RunTrace,
    restarts: usize,
    m: CMat,
) -> BoundsReport {
    let witness = (m.norm() > 0.0).then(|| WitnessRecord::rank_k_matrix(&(&m / c(m.norm())), map.choi()));
    BoundsReport {
        method: method.into(),
        lambda_max: lambda,
        best_maximizer_value: run.value,
        restarts_used: restarts,
        gap_estimate: lambda - run.value,
        optimizer_state: run.state,
        witness,
    }
}

/// Multi-start maximization of `‖A(x)A(x)†‖_(k)` for the Kraus operators of
/// `λ_max tr(·)1 − Φ`. A value above `λ_max` refutes k-positivity.
pub fn marciniak_bound<R: Rng + ?Sized>(
    map: &SuperOperator,
    k: usize,
    budget: &Budget,
    rng: &mut R,
) -> Result<BoundsReport> {
    let d = check_k(map, k)?;
    let (op, lambda) = shifted_stinespring(map, 1, KRAUS_EPS)?;
    let kraus = op.kraus().operators;
    let r = kraus.len();
    let (run, used) = multistart(budget.restarts, rng, true, |g| {
        Ok(marciniak_run(&kraus, k, random_unit_vector(r, g), budget))
    })?;
    let m = CMat::from_column_slice(d, d, run.state.m.as_deref().expect("marciniak state"));
    Ok(finish_spectral(map, "marciniak", lambda, run, used, m))
}

/// Single ascent run for `max_x ‖tr_{2,|x⟩⟨x|}(VV†)‖_(k)`, with `VV†` on
/// `C^d ⊗ C^r`.
pub fn thm31_run(vv: &CMat, d: usize, r: usize, k: usize, x0: CVec, budget: &Budget) -> Result<RunTrace> {
    let shape = BipartiteShape::new(d, r);
    let mut x = x0.normalize();
    let eval = |x: &CVec| -> Result<(f64, crate::linalg::Eigh)> {
        let m = partial_trace_weighted(vv, shape, Subsystem::Second, Some(&(x * x.adjoint())))?;
        let e = eigh(&m);
        Ok((top_k_sum(&e.values, k), e))
    };
    let (mut value, mut e) = eval(&x)?;
    let mut history = vec![value];
    for _ in 0..budget.max_sweeps {
        let u = e.vectors.columns(d - k, k).into_owned();
        let p = &u * u.adjoint();
        let rm = partial_trace_weighted(vv, shape, Subsystem::First, Some(&p))?;
        let re = eigh(&rm);
        x = re.vector(re.values.len() - 1);
        (value, e) = eval(&x)?;
        history.push(value);
        if converged(&history, budget.sweep_tol) {
            break;
        }
    }
    Ok(RunTrace {
        value,
        history,
        state: OptimizerState {
            x: to_vec(&x),
            ..Default::default()
        },
    })
}

/// Same maximum as [`marciniak_bound`], evaluated through weighted partial
/// traces of `VV†`. Restart `i` starts from the conjugate of the point
/// [`marciniak_bound`] would use under the same generator state.
pub fn thm31_bound<R: Rng + ?Sized>(
    map: &SuperOperator,
    k: usize,
    budget: &Budget,
    rng: &mut R,
) -> Result<BoundsReport> {
    let d = check_k(map, k)?;
    let (op, lambda) = shifted_stinespring(map, 1, KRAUS_EPS)?;
    let r = op.env_dim;
    let vv = &op.v * op.v.adjoint();
    let (run, used) = multistart(budget.restarts, rng, true, |g| {
        thm31_run(&vv, d, r, k, random_unit_vector(r, g).conjugate(), budget)
    })?;
    // tr_{2,|x⟩⟨x|}(VV†) = A(x̄) A(x̄)†
    let x = CVec::from_column_slice(&run.state.x).conjugate();
    let m = truncate_rank(&combine(&op.kraus().operators, &x), k);
    Ok(finish_spectral(map, "thm31", lambda, run, used, m))
}

/// Single higher-order power iteration for `max |zᵀ Σ_j y_j K_j† x|` over unit
/// `x, z ∈ C^n`, `y ∈ C^r`. Each update replaces one vector by the normalized
/// conjugate of its contraction, so the objective never decreases.
pub fn hopm_run(kraus: &[CMat], x0: CVec, y0: CVec, z0: CVec, budget: &Budget) -> RunTrace {
    let kd: Vec<CMat> = kraus.iter().map(|k| k.adjoint()).collect();
    let (mut x, mut y, mut z) = (x0.normalize(), y0.normalize(), z0.normalize());
    let value_of = |x: &CVec, y: &CVec, z: &CVec| {
        let mut g = C64::new(0.0, 0.0);
        for (kj, &yj) in kd.iter().zip(y.iter()) {
            g += yj * (z.transpose() * (kj * x))[(0, 0)];
        }
        g.norm()
    };
    let unit_conj = |w: CVec, old: &CVec| {
        let n = w.norm();
        if n > 0.0 {
            w.conjugate() / c(n)
        } else {
            old.clone()
        }
    };
    let mut history = vec![value_of(&x, &y, &z)];
    for _ in 0..budget.max_sweeps {
        // x: w = Σ_j y_j (K_j†)ᵀ z
        let mut wx = CVec::zeros(x.len());
        for (kj, &yj) in kd.iter().zip(y.iter()) {
            wx += kj.transpose() * &z * yj;
        }
        x = unit_conj(wx, &x);
        let cy = CVec::from_iterator(kd.len(), kd.iter().map(|kj| (z.transpose() * (kj * &x))[(0, 0)]));
        y = unit_conj(cy, &y);
        let mut wz = CVec::zeros(z.len());
        for (kj, &yj) in kd.iter().zip(y.iter()) {
            wz += kj * &x * yj;
        }
        z = unit_conj(wz, &z);
        history.push(value_of(&x, &y, &z));
        if converged(&history, budget.sweep_tol) {
            break;
        }
    }
    RunTrace {
        value: *history.last().expect("nonempty history"),
        history,
        state: OptimizerState {
            x: to_vec(&x),
            y: Some(to_vec(&y)),
            z: Some(to_vec(&z)),
            ..Default::default()
        },
    }
}

/// Tensor spectral norm of `V†` for the Stinespring operator of
/// `kλ tr(·)1 − Φ ⊗ id_k`. A squared value above `kλ` refutes k-positivity.
pub fn tensor_spectral_bound<R: Rng + ?Sized>(
    map: &SuperOperator,
    k: usize,
    budget: &Budget,
    rng: &mut R,
) -> Result<BoundsReport> {
    let d = check_k(map, k)?;
    let (op, lambda) = shifted_stinespring(map, k, KRAUS_EPS)?;
    let kraus = op.kraus().operators;
    let (n, r) = (d * k, kraus.len());
    let (run, used) = multistart(budget.restarts, rng, true, |g| {
        let x = random_unit_vector(n, g);
        let y = random_unit_vector(r, g);
        let z = random_unit_vector(n, g);
        Ok(hopm_run(&kraus, x, y, z, budget))
    })?;
    // The optimum is attained at the product vector z ⊗ x of C(Φ ⊗ id_k).
    let x = CVec::from_column_slice(&run.state.x);
    let z = CVec::from_column_slice(run.state.z.as_deref().expect("hopm state"));
    let psi = fold_product(&z, &x, d, k);
    let witness = (psi.norm() > 0.0).then(|| WitnessRecord::schmidt_vector(&psi.normalize(), map.choi()));
    let kl = k as f64 * lambda;
    Ok(BoundsReport {
        method: "tensor-spectral".into(),
        lambda_max: lambda,
        best_maximizer_value: run.value,
        restarts_used: used,
        gap_estimate: kl - run.value * run.value,
        optimizer_state: run.state,
        witness,
    })
}

/// Single alternating minimization of `⟨u ⊗ v|C|u ⊗ v⟩` over unit `u, v`,
/// with `C` on `C^n ⊗ C^n`. Each half-step takes a minimal eigenvector, so the
/// objective never increases.
pub fn seesaw_run(ck: &CMat, n: usize, u0: CVec, v0: CVec, budget: &Budget) -> Result<RunTrace> {
    let shape = BipartiteShape::square(n);
    let (mut u, mut v) = (u0.normalize(), v0.normalize());
    let value_of = |u: &CVec, v: &CVec| quadratic_form(ck, &u.kronecker(v)).re;
    let mut history = vec![value_of(&u, &v)];
    for _ in 0..budget.max_sweeps {
        let a = partial_trace_weighted(ck, shape, Subsystem::Second, Some(&(&v * v.adjoint())))?;
        u = eigh(&a).vector(0);
        let b = partial_trace_weighted(ck, shape, Subsystem::First, Some(&(&u * u.adjoint())))?;
        v = eigh(&b).vector(0);
        history.push(value_of(&u, &v));
        if converged(&history, budget.sweep_tol) {
            break;
        }
    }
    Ok(RunTrace {
        value: *history.last().expect("nonempty history"),
        history,
        state: OptimizerState {
            x: Vec::new(),
            rho: Some(to_vec(&u)),
            omega: Some(to_vec(&v)),
            ..Default::default()
        },
    })
}

/// Minimizes `tr(C(Φ ⊗ id_k)(ρ ⊗ ω))` over pure product states. A negative
/// minimum refutes k-positivity.
pub fn seesaw_bilinear<R: Rng + ?Sized>(
    map: &SuperOperator,
    k: usize,
    budget: &Budget,
    rng: &mut R,
) -> Result<BoundsReport> {
    let d = check_k(map, k)?;
    map.require_hermitian_preserving(1e-9)?;
    let mk = map.tensor_with_identity(k)?;
    let ck = mk.choi();
    let n = d * k;
    let (run, used) = multistart(budget.restarts, rng, false, |g| {
        let u = random_unit_vector(n, g);
        let v = random_unit_vector(n, g);
        seesaw_run(ck, n, u, v, budget)
    })?;
    let u = CVec::from_column_slice(run.state.rho.as_deref().expect("seesaw state"));
    let v = CVec::from_column_slice(run.state.omega.as_deref().expect("seesaw state"));
    let psi = fold_product(&u, &v, d, k);
    let witness = (psi.norm() > 0.0).then(|| WitnessRecord::schmidt_vector(&psi.normalize(), map.choi()));
    Ok(BoundsReport {
        method: "seesaw".into(),
        lambda_max: max_eigenvalue(map.choi()),
        best_maximizer_value: run.value,
        restarts_used: used,
        gap_estimate: run.value,
        optimizer_state: run.state,
        witness,
    })
}
