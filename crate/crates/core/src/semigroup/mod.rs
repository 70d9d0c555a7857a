//! One-parameter semigroups `e^{t(K(·) + (·)K† + Φ)}` seeded by a positive map,
//! and the scans that locate where a trajectory turns completely positive
//! or decomposable.

mod workflow;

pub use workflow::{run_workflow, WorkflowChecks, WorkflowConfig, WorkflowOutput};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, eigh, ginibre, hermitian_residual, identity, kron, matrix_exp, maximally_entangled, min_eigenvalue,
    unvec, vec_col, CMat, C64,
};
use crate::qmaps::SuperOperator;
use crate::sdp::decomposability_d;
use crate::Tolerances;

/// `(1 − |Ω⟩⟨Ω|) C(Φ) (1 − |Ω⟩⟨Ω|)` with `Ω` the normalized maximally entangled vector.
pub fn compressed_choi(map: &SuperOperator) -> CMat {
    let d = map.dim();
    let omega = maximally_entangled(d, true);
    let p = identity(d * d) - &omega * omega.adjoint();
    &p * map.choi() * &p
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CcpEvidence {
    pub is_ccp: bool,
    pub min_eigenvalue: f64,
    pub eigenvector: Vec<C64>,
}

/// Conditional complete positivity: the compressed Choi matrix is PSD.
pub fn ccp_test(map: &SuperOperator, eps_psd: f64) -> Result<CcpEvidence> {
    map.require_hermitian_preserving(1e-9)?;
    let e = eigh(&compressed_choi(map));
    Ok(CcpEvidence {
        is_ccp: e.min() >= -eps_psd,
        min_eigenvalue: e.min(),
        eigenvector: e.vector(0).iter().copied().collect(),
    })
}

/// Generator `L = K(·) + (·)K† + Φ` and its representation matrix.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub k: CMat,
    pub phi: SuperOperator,
    /// `(1 ⊗ K) + (K̄ ⊗ 1) + Φ̂`
    pub rep: CMat,
    /// Relative mismatch between `L(X)` via `rep` and evaluated directly, on a fixed test input.
    pub verification_residual: f64,
}

pub fn build_generator(k: &CMat, phi: &SuperOperator) -> Result<GeneratorSpec> {
    let d = phi.dim_in();
    if phi.dim_out() != d {
        return Err(Error::dims("generator seed must map d×d to d×d"));
    }
    if k.shape() != (d, d) {
        return Err(Error::dims(format!("K must be {d}x{d}, got {}x{}", k.nrows(), k.ncols())));
    }
    phi.require_hermitian_preserving(1e-9)?;
    let id = identity(d);
    let rep = kron(&id, k) + kron(&k.map(|z| z.conj()), &id) + phi.rep();
    let x = ginibre(d, d, &mut crate::rng::seeded(0x5eed));
    let via_rep = unvec(&(&rep * vec_col(&x)), d, d);
    let direct = k * &x + &x * k.adjoint() + phi.apply(&x)?;
    let verification_residual = (&via_rep - &direct).norm() / direct.norm().max(1.0);
    Ok(GeneratorSpec {
        k: k.clone(),
        phi: phi.clone(),
        rep,
        verification_residual,
    })
}

impl GeneratorSpec {
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    /// `L` as a map.
    pub fn as_map(&self) -> SuperOperator {
        let d = self.dim();
        SuperOperator::from_rep(d, d, self.rep.clone()).expect("generator shape")
    }

    pub fn evolve(&self, t: f64) -> Result<SuperOperator> {
        evolve(self, t)
    }
}

/// `e^{t L}`
pub fn evolve(gen: &GeneratorSpec, t: f64) -> Result<SuperOperator> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be nonnegative")));
    }
    let d = gen.dim();
    SuperOperator::from_rep(d, d, matrix_exp(&gen.rep, t)?)
}

/// Random `K`: complex Ginibre scaled to unit Frobenius norm.
pub fn random_k<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, d, rng);
    let n = g.norm();
    g / c(n)
}

/// `K = iH − ½ Φ*(1)`, which makes the semigroup trace-preserving.
pub fn tp_generator_k(h: &CMat, phi: &SuperOperator) -> Result<CMat> {
    let d = phi.dim();
    if h.shape() != (d, d) {
        return Err(Error::dims(format!("H must be {d}x{d}")));
    }
    let r = hermitian_residual(h);
    if r > 1e-12 * h.norm().max(1.0) {
        return Err(Error::NotHermitian(r));
    }
    let adj_one = phi.adjoint().apply(&identity(d))?;
    Ok(h * C64::new(0.0, 1.0) - adj_one * c(0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub t: f64,
    /// True when the trajectory enters the cone at `t`.
    pub entering: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpScan {
    pub t_cp: Option<f64>,
    pub seed_is_ccp: bool,
    pub crossings: Vec<Crossing>,
    pub grid: Vec<(f64, f64)>,
}

fn uniform_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) || points == 0 {
        return Err(Error::InvalidParameter("scan needs t_max > 0 and at least one grid point".into()));
    }
    Ok((1..=points).map(|i| t_max * i as f64 / points as f64).collect())
}

fn lambda_min_at(gen: &GeneratorSpec, t: f64) -> Result<f64> {
    Ok(min_eigenvalue(evolve(gen, t)?.choi()))
}

/// First time the trajectory enters the CP cone, refined by bisection until
/// `|λ_min| ≤ ε_psd` or the bracket is below 1e-12 (always finer than 1e-4).
pub fn find_t_cp(gen: &GeneratorSpec, t_max: f64, grid_points: usize, eps_psd: f64) -> Result<CpScan> {
    let seed_is_ccp = ccp_test(&gen.phi, eps_psd)?.is_ccp;
    let ts = uniform_grid(t_max, grid_points)?;
    let grid: Vec<(f64, f64)> = ts
        .par_iter()
        .map(|&t| lambda_min_at(gen, t).map(|l| (t, l)))
        .collect::<Result<_>>()?;
    let is_cp = |l: f64| l >= -eps_psd;
    let mut crossings = Vec::new();
    let mut prev = (0.0, !seed_is_ccp);
    let mut prev_neg = !seed_is_ccp;
    let _ = &mut prev;
    let mut prev_t = 0.0;
    for &(t, l) in &grid {
        let neg = !is_cp(l);
        if neg != prev_neg {
            let (mut lo, mut hi) = (prev_t, t);
            let entering = prev_neg;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let lm = lambda_min_at(gen, mid)?;
                if lm.abs() <= eps_psd || hi - lo < 1e-12 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                // keep the non-CP side at `lo` when entering, at `hi` when leaving
                if (!is_cp(lm)) == entering {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            crossings.push(Crossing {
                t: 0.5 * (lo + hi),
                entering,
            });
        }
        prev_neg = neg;
        prev_t = t;
    }
    let t_cp = crossings.iter().find(|c| c.entering).map(|c| c.t);
    Ok(CpScan {
        t_cp,
        seed_is_ccp,
        crossings,
        grid,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NdPoint {
    pub t: f64,
    pub d_value: Option<f64>,
    pub threshold: f64,
    pub error: Option<String>,
}

impl NdPoint {
    fn non_decomposable(&self) -> Option<bool> {
        self.d_value.map(|d| d > self.threshold)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NdScan {
    /// Largest time before the first boundary at which `D > ε_D`, to 1e-3.
    pub t_nd: Option<f64>,
    /// Every change of the `D > ε_D` flag between successful grid points.
    pub boundaries: Vec<Crossing>,
    pub grid: Vec<NdPoint>,
}

fn d_at(gen: &GeneratorSpec, t: f64, tols: &Tolerances) -> NdPoint {
    match evolve(gen, t).and_then(|m| decomposability_d(&m, tols)) {
        Ok(r) => NdPoint {
            t,
            d_value: Some(r.d_value),
            threshold: r.threshold,
            error: None,
        },
        Err(e) => NdPoint {
            t,
            d_value: None,
            threshold: f64::NAN,
            error: Some(e.to_string()),
        },
    }
}

/// Scans `D(e^{tL})` over the grid and refines the first transition from
/// non-decomposable to decomposable by bisection. Here `entering` marks a
/// transition into the decomposable set.
pub fn find_t_nd(gen: &GeneratorSpec, t_max: f64, grid_points: usize, tols: &Tolerances) -> Result<NdScan> {
    let ts = uniform_grid(t_max, grid_points)?;
    let grid: Vec<NdPoint> = ts.par_iter().map(|&t| d_at(gen, t, tols)).collect();
    let ok: Vec<(f64, bool)> = grid
        .iter()
        .filter_map(|p| p.non_decomposable().map(|nd| (p.t, nd)))
        .collect();
    let mut boundaries = Vec::new();
    let mut t_nd = None;
    for w in ok.windows(2) {
        let ((t0, nd0), (t1, nd1)) = (w[0], w[1]);
        if nd0 == nd1 {
            continue;
        }
        let (mut lo, mut hi) = (t0, t1);
        while hi - lo > 1e-3 {
            let mid = 0.5 * (lo + hi);
            match d_at(gen, mid, tols).non_decomposable() {
                Some(nd) if nd == nd0 => lo = mid,
                Some(_) => hi = mid,
                None => break,
            }
        }
        if nd0 && t_nd.is_none() {
            t_nd = Some(lo);
        }
        boundaries.push(Crossing {
            t: if nd0 { lo } else { hi },
            entering: nd0,
        });
    }
    if t_nd.is_none() && ok.last().is_some_and(|&(_, nd)| nd) && boundaries.is_empty() {
        t_nd = ok.last().map(|&(t, _)| t);
    }
    Ok(NdScan { t_nd, boundaries, grid })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridValue {
    pub t: f64,
    pub lambda_min: f64,
    pub d_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub t_cp: Option<f64>,
    pub t_nd: Option<f64>,
    pub scan_max: f64,
    pub seed_is_ccp: bool,
    pub cp_crossings: Vec<Crossing>,
    pub nd_boundaries: Vec<Crossing>,
    pub grid: Vec<GridValue>,
    pub failures: Vec<(f64, String)>,
}

pub fn scan_thresholds(
    gen: &GeneratorSpec,
    t_max: f64,
    grid_points: usize,
    tols: &Tolerances,
) -> Result<ThresholdReport> {
    let cp = find_t_cp(gen, t_max, grid_points, tols.eps_psd)?;
    let nd = find_t_nd(gen, t_max, grid_points, tols)?;
    let grid = cp
        .grid
        .iter()
        .zip(&nd.grid)
        .map(|(&(t, l), p)| GridValue {
            t,
            lambda_min: l,
            d_value: p.d_value,
        })
        .collect();
    let failures = nd
        .grid
        .iter()
        .filter_map(|p| p.error.clone().map(|e| (p.t, e)))
        .collect();
    Ok(ThresholdReport {
        t_cp: cp.t_cp,
        t_nd: nd.t_nd,
        scan_max: t_max,
        seed_is_ccp: cp.seed_is_ccp,
        cp_crossings: cp.crossings,
        nd_boundaries: nd.boundaries,
        grid,
        failures,
    })
}

#[cfg(test)]
mod tests;
