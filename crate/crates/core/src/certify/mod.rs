//! Deciding k-positivity.
//!
//! Exact answers exist only at the ends of the range: complete positivity
//! (`k = d`) is an eigenvalue test. In between, the searches in [`search`]
//! can only refute, and certificates come from the F-relaxation SDP or a
//! reference map.

mod search;

pub use search::{
    hopm_run, marciniak_bound, marciniak_run, refute_by_sampling, seesaw_bilinear, seesaw_run,
    tensor_spectral_bound, thm31_bound, thm31_run, RunTrace,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eigh, max_eigenvalue, operator_norm, partial_trace, quadratic_form, schmidt_decompose,
    vec_col, BipartiteShape, CMat, CVec, Subsystem, C64,
};
use crate::qmaps::{shifted_stinespring, SuperOperator};
use crate::sdp::{f_relaxation, SolverOptions};
use crate::{Budget, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMethod {
    ExactCp,
    FSdp,
    ReferenceMap,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "method", rename_all = "snake_case")]
pub enum VerdictStatus {
    CertifiedPositive(CertMethod),
    Refuted,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    SchmidtVector,
    RankKMatrix,
    PptState,
    PrincipalMinor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessPayload {
    Vector(Vec<C64>),
    /// Row-major entries.
    Matrix { rows: usize, cols: usize, entries: Vec<C64> },
}

/// A certificate of non-positivity.
///
/// For `SchmidtVector` the value is `⟨ψ|C(Φ)|ψ⟩`; for `RankKMatrix` it is
/// `⟨X̄ ⊗ X, Φ̂⟩_HS`, which equals the same quadratic form at `ψ = vec(X)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub kind: WitnessKind,
    pub payload: WitnessPayload,
    pub value: f64,
}

impl WitnessRecord {
    pub fn schmidt_vector(psi: &CVec, choi: &CMat) -> Self {
        WitnessRecord {
            kind: WitnessKind::SchmidtVector,
            payload: WitnessPayload::Vector(psi.iter().copied().collect()),
            value: quadratic_form(choi, psi).re,
        }
    }

    pub fn rank_k_matrix(x: &CMat, choi: &CMat) -> Self {
        WitnessRecord {
            kind: WitnessKind::RankKMatrix,
            payload: WitnessPayload::Matrix {
                rows: x.nrows(),
                cols: x.ncols(),
                entries: x.transpose().iter().copied().collect(),
            },
            value: quadratic_form(choi, &vec_col(x)).re,
        }
    }

    pub fn payload_matrix(&self) -> Option<CMat> {
        match &self.payload {
            WitnessPayload::Matrix { rows, cols, entries } => Some(CMat::from_row_slice(*rows, *cols, entries)),
            WitnessPayload::Vector(_) => None,
        }
    }

    /// The vector `ψ` whose Choi quadratic form is the witness value.
    pub fn as_vector(&self) -> CVec {
        match &self.payload {
            WitnessPayload::Vector(v) => CVec::from_column_slice(v),
            WitnessPayload::Matrix { .. } => vec_col(&self.payload_matrix().expect("matrix payload")),
        }
    }

    /// Schmidt rank of [`as_vector`](Self::as_vector) on `d ⊗ d`.
    pub fn schmidt_rank(&self, d: usize, tol: f64) -> Result<usize> {
        Ok(schmidt_decompose(&self.as_vector(), BipartiteShape::square(d))?.rank(tol))
    }

    /// Re-evaluates the value from scratch.
    pub fn evaluate(&self, map: &SuperOperator) -> f64 {
        quadratic_form(map.choi(), &self.as_vector()).re
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OptimizerState {
    pub x: Vec<C64>,
    pub y: Option<Vec<C64>>,
    pub z: Option<Vec<C64>>,
    pub m: Option<Vec<C64>>,
    pub rho: Option<Vec<C64>>,
    pub omega: Option<Vec<C64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsReport {
    pub method: String,
    pub lambda_max: f64,
    pub best_maximizer_value: f64,
    pub restarts_used: usize,
    /// Distance of the best value from the k-positivity threshold, signed so
    /// that a negative gap refutes.
    pub gap_estimate: f64,
    pub optimizer_state: OptimizerState,
    /// Present when the search found a point that violates k-positivity.
    pub witness: Option<WitnessRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityVerdict {
    #[serde(flatten)]
    pub status: VerdictStatus,
    pub k: usize,
    pub witness: Option<WitnessRecord>,
    pub bounds: Vec<BoundsReport>,
}

impl PositivityVerdict {
    fn certified(method: CertMethod, k: usize) -> Self {
        PositivityVerdict {
            status: VerdictStatus::CertifiedPositive(method),
            k,
            witness: None,
            bounds: Vec::new(),
        }
    }

    fn refuted(k: usize, witness: WitnessRecord) -> Self {
        PositivityVerdict {
            status: VerdictStatus::Refuted,
            k,
            witness: Some(witness),
            bounds: Vec::new(),
        }
    }

    fn undecided(k: usize) -> Self {
        PositivityVerdict {
            status: VerdictStatus::Undecided,
            k,
            witness: None,
            bounds: Vec::new(),
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self.status, VerdictStatus::CertifiedPositive(_))
    }

    pub fn is_refuted(&self) -> bool {
        self.status == VerdictStatus::Refuted
    }

    pub fn is_undecided(&self) -> bool {
        self.status == VerdictStatus::Undecided
    }

    pub fn method(&self) -> Option<CertMethod> {
        match self.status {
            VerdictStatus::CertifiedPositive(m) => Some(m),
            _ => None,
        }
    }
}

/// Converts a bounds report into a verdict, refuting only when the witness
/// re-evaluates below `−eps_psd`.
fn verdict_from_bounds(k: usize, report: BoundsReport, eps_psd: f64) -> PositivityVerdict {
    let mut v = match &report.witness {
        Some(w) if w.value < -eps_psd => PositivityVerdict::refuted(k, w.clone()),
        _ => PositivityVerdict::undecided(k),
    };
    v.bounds.push(report);
    v
}

fn check_k(map: &SuperOperator, k: usize) -> Result<usize> {
    if map.dim_in() != map.dim_out() {
        return Err(Error::dims("k-positivity is decided for maps on square matrices of one size"));
    }
    let d = map.dim();
    if k == 0 || k > d {
        return Err(Error::KOutOfRange { k, max: d });
    }
    Ok(d)
}

/// Eigenvalue test on the Choi matrix.
pub fn exact_cp_check(map: &SuperOperator, eps_psd: f64) -> Result<PositivityVerdict> {
    map.require_hermitian_preserving(1e-9)?;
    let d = map.dim_in().min(map.dim_out());
    let e = eigh(map.choi());
    if e.min() >= -eps_psd {
        Ok(PositivityVerdict::certified(CertMethod::ExactCp, d))
    } else {
        Ok(PositivityVerdict::refuted(d, WitnessRecord::schmidt_vector(&e.vector(0), map.choi())))
    }
}

/// Complete positivity through the Gram matrix `tr_1(VV†)` of the shifted map
/// `λ_max tr(·)1 − Φ`: CP iff its largest eigenvalue is at most `λ_max`.
pub fn cp_collapse_check(map: &SuperOperator, eps_psd: f64) -> Result<PositivityVerdict> {
    check_k(map, 1)?;
    let d = map.dim();
    let (op, lambda) = shifted_stinespring(map, 1, 1e-12)?;
    let vv = &op.v * op.v.adjoint();
    let gram = partial_trace(&vv, BipartiteShape::new(d, op.env_dim), Subsystem::First)?;
    let e = eigh(&gram);
    if e.max() <= lambda + eps_psd {
        return Ok(PositivityVerdict::certified(CertMethod::ClosedForm, d));
    }
    // The top eigenvector x of the Gram matrix gives ψ ∝ vec(Σ x̄_j K_j).
    let x = e.vector(e.values.len() - 1);
    let kraus = op.kraus();
    let mut a = CMat::zeros(d, d);
    for (j, kj) in kraus.operators.iter().enumerate() {
        a += kj * x[j].conj();
    }
    let psi = vec_col(&a).normalize();
    let w = WitnessRecord::schmidt_vector(&psi, map.choi());
    if w.value < -eps_psd {
        Ok(PositivityVerdict::refuted(d, w))
    } else {
        Ok(PositivityVerdict::undecided(d))
    }
}

/// Positivity of `candidate` from complete positivity of `reference⁻¹ ∘ candidate`,
/// for a positive bijective `reference`.
pub fn sufficient_via_reference(
    candidate: &SuperOperator,
    reference: &SuperOperator,
    reference_inverse: &SuperOperator,
    eps_psd: f64,
) -> Result<PositivityVerdict> {
    candidate.require_hermitian_preserving(1e-9)?;
    let d = reference.dim();
    let round_trip = SuperOperator::compose(reference, reference_inverse)?;
    let scale = operator_norm(reference.rep()).max(1.0) * operator_norm(reference_inverse.rep()).max(1.0);
    let residual = (round_trip.rep() - SuperOperator::identity(d).rep()).camax() / scale;
    if residual > 1e-9 {
        return Err(Error::InverseMismatch(residual));
    }
    let pulled = SuperOperator::compose(reference_inverse, candidate)?;
    let v = exact_cp_check(&pulled, eps_psd)?;
    Ok(if v.is_certified() {
        PositivityVerdict::certified(CertMethod::ReferenceMap, 1)
    } else {
        PositivityVerdict::undecided(1)
    })
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub tols: Tolerances,
    pub budget: Budget,
    /// `(reference, reference⁻¹)` tried at `k = 1`.
    pub reference: Option<(SuperOperator, SuperOperator)>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            tols: Tolerances::default(),
            budget: Budget::default(),
            reference: None,
        }
    }
}

impl CertifyOptions {
    pub fn new(tols: Tolerances, budget: Budget) -> Self {
        CertifyOptions {
            tols,
            budget,
            reference: None,
        }
    }
}

/// Runs the decision pipeline: exact CP test, sampling, spectral searches,
/// the F-relaxation and finally the reference map.
pub fn certify_kpos<R: Rng + ?Sized>(
    map: &SuperOperator,
    k: usize,
    opts: &CertifyOptions,
    rng: &mut R,
) -> Result<PositivityVerdict> {
    let d = check_k(map, k)?;
    map.require_hermitian_preserving(1e-9)?;
    let eps = opts.tols.eps_psd;
    let b = &opts.budget;

    let exact = exact_cp_check(map, eps)?;
    if exact.is_certified() || k >= d {
        return Ok(PositivityVerdict { k, ..exact });
    }

    let mut bounds = Vec::new();
    let finish = |mut v: PositivityVerdict, bounds: Vec<BoundsReport>| {
        v.bounds.extend(bounds);
        Ok(v)
    };

    let sampled = refute_by_sampling(map, k, b.samples, rng, eps)?;
    if sampled.is_refuted() {
        return Ok(sampled);
    }
    bounds.extend(sampled.bounds);

    for report in [
        tensor_spectral_bound(map, k, b, rng)?,
        marciniak_bound(map, k, b, rng)?,
    ] {
        let v = verdict_from_bounds(k, report, eps);
        if v.is_refuted() {
            return finish(v, bounds);
        }
        bounds.extend(v.bounds);
    }

    if (d * k).pow(2) <= b.fsdp_max_dim {
        let f = f_relaxation(map, k, SolverOptions::with_tol(opts.tols.solver_tol))?;
        let floor = -opts.tols.solver_tol * operator_norm(map.choi()).max(1.0);
        bounds.push(BoundsReport {
            method: "f-sdp".into(),
            lambda_max: max_eigenvalue(map.choi()),
            best_maximizer_value: f.value,
            restarts_used: 1,
            gap_estimate: f.value,
            optimizer_state: OptimizerState {
                x: Vec::new(),
                rho: Some(f.rho.iter().copied().collect()),
                omega: Some(f.omega.iter().copied().collect()),
                ..Default::default()
            },
            witness: None,
        });
        if f.value >= floor {
            return finish(PositivityVerdict::certified(CertMethod::FSdp, k), bounds);
        }
    }

    if k == 1 {
        if let Some((reference, inverse)) = &opts.reference {
            let v = sufficient_via_reference(map, reference, inverse, eps)?;
            if v.is_certified() {
                return finish(v, bounds);
            }
        }
    }
    finish(PositivityVerdict::undecided(k), bounds)
}

/// Rank-`k` truncation of `a` through its top-`k` left singular subspace.
pub(crate) fn truncate_rank(a: &CMat, k: usize) -> CMat {
    let e = eigh(&(a * a.adjoint()));
    let n = a.nrows();
    let u = e.vectors.columns(n - k, k).into_owned();
    &u * (u.adjoint() * a)
}

/// `ψ[(j,i)] = Σ_l u[(j,l)] v[(i,l)]`: the Schmidt-rank-`k` vector on `d ⊗ d`
/// matching a product vector `u ⊗ v` for `Φ ⊗ id_k`.
pub(crate) fn fold_product(u: &CVec, v: &CVec, d: usize, k: usize) -> CVec {
    let mut psi = CVec::zeros(d * d);
    for j in 0..d {
        for i in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..k {
                acc += u[j * k + l] * v[i * k + l];
            }
            psi[j * d + i] = acc;
        }
    }
    psi
}
