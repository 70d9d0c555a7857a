use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lambda_prime;
use crate::error::{Error, Result};
use crate::linalg::{
    c, eigh, min_eigenvalue, partial_transpose, random_unit_vector, BipartiteShape, CMat, CVec,
    Subsystem, C64,
};
use crate::qmaps::SuperOperator;
use crate::rng::{base_seed, fork};

/// The 9×9 pattern of `τ_x` without any prefactor.
pub fn tau_pattern(x: f64) -> CMat {
    let mut m = CMat::zeros(9, 9);
    for &i in &[0, 4, 8] {
        for &j in &[0, 4, 8] {
            m[(i, j)] = c(1.0);
        }
    }
    let inv = 1.0 / x;
    for (i, v) in [(1, x), (2, inv), (3, inv), (5, x), (6, x), (7, inv)] {
        m[(i, i)] = c(v);
    }
    m
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TauState {
    pub x: f64,
    /// Trace of the printed matrix `3/(1+x+1/x) · pattern`; always 9.
    pub printed_trace: f64,
    #[serde(skip)]
    pub matrix: CMat,
}

/// `τ_x` rescaled to unit trace. The printed prefactor `3/(1+x+1/x)` leaves trace 9.
pub fn tau_state(x: f64) -> Result<TauState> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("x = {x} must be positive")));
    }
    let printed = tau_pattern(x) * c(3.0 / (1.0 + x + 1.0 / x));
    let printed_trace = printed.trace().re;
    Ok(TauState {
        x,
        printed_trace,
        matrix: printed * c(1.0 / printed_trace),
    })
}

impl TauState {
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    pub fn partial_transpose_min_eigenvalue(&self) -> f64 {
        let pt = partial_transpose(&self.matrix, BipartiteShape::square(3), Subsystem::Second)
            .expect("9x9 state");
        min_eigenvalue(&pt)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityReport {
    pub samples: usize,
    pub min_eigenvalue: f64,
    pub pass: bool,
    /// Input vector achieving the minimum.
    pub worst_phi: Vec<C64>,
}

/// Minimum of `λ_min(Φ(|φ⟩⟨φ|))` over Haar-random unit vectors.
pub fn positivity_sampler<R: Rng + ?Sized>(
    map: &SuperOperator,
    n_samples: usize,
    rng: &mut R,
    eps_psd: f64,
) -> PositivityReport {
    const CHUNK: usize = 1024;
    let d = map.dim_in();
    let seed = base_seed(rng);
    let chunks = n_samples.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut r = fork(seed, ci as u64);
            let count = CHUNK.min(n_samples - ci * CHUNK);
            let mut best = (f64::INFINITY, CVec::zeros(d));
            for _ in 0..count {
                let phi = random_unit_vector(d, &mut r);
                let out = map.apply(&(&phi * phi.adjoint())).expect("input dimension");
                let v = min_eigenvalue(&out);
                if v < best.0 {
                    best = (v, phi);
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, CVec::zeros(d)),
            |a, b| if b.0 < a.0 { b } else { a },
        );
    PositivityReport {
        samples: n_samples,
        min_eigenvalue: best.0,
        pass: best.0 >= -eps_psd,
        worst_phi: best.1.iter().copied().collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityEvidence {
    pub samples: usize,
    pub min_diagonal: f64,
    pub min_2x2_minor: f64,
    /// Largest deviation between the closed-form 2×2 minor and the numerical one.
    pub minor_formula_error: f64,
    /// Largest deviation between the closed-form determinant and the numerical one.
    pub det_formula_error: f64,
    /// Minimum of `det − lower bound`; nonnegative up to rounding.
    pub det_bound_slack: f64,
    /// Minimum of the AM-GM lower bound itself.
    pub amgm_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NotCcpEvidence {
    /// Entries (5,5), (5,7), (7,7) of `C(Λ'_α)` in 0-based indexing, without the prefactor.
    pub submatrix: [[f64; 2]; 2],
    pub submatrix_min_eigenvalue: f64,
    pub compressed_min_eigenvalue: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinorScanPoint {
    pub x: f64,
    pub numeric: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessEvidence {
    pub scan: Vec<MinorScanPoint>,
    /// Max of |numeric/scale − closed form| with `scale = (α + 1/α)^{-3}`.
    pub formula_error: f64,
    /// Spread of `numeric / closed_form` over the scan, relative to its mean.
    pub ratio_spread: f64,
    pub x0: Option<f64>,
    /// `λ_min((id ⊗ Λ'_α)(τ_{x0}))`
    pub image_min_eigenvalue: Option<f64>,
    /// `λ_min(τ_{x0}^{T_2})`
    pub tau_pt_min_eigenvalue: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppendixDReport {
    pub alpha: f64,
    pub positivity: PositivityEvidence,
    pub not_ccp: NotCcpEvidence,
    pub witness: WitnessEvidence,
}

impl AppendixDReport {
    pub fn pass(&self) -> bool {
        self.positivity.pass && self.not_ccp.pass && self.witness.pass
    }
}

fn positivity_evidence<R: Rng + ?Sized>(alpha: f64, n_samples: usize, rng: &mut R) -> PositivityEvidence {
    let a = alpha;
    let seed = base_seed(rng);
    let per: Vec<[f64; 6]> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut r = fork(seed, i as u64);
            let phi = random_unit_vector(3, &mut r);
            let (p1, p2, p3) = (phi[0], phi[1], phi[2]);
            let (s1, s2, s3) = (p1.norm_sqr(), p2.norm_sqr(), p3.norm_sqr());
            // Λ'_α(|φ⟩⟨φ|) without the 1/(α+1/α) prefactor
            let m = CMat::from_row_slice(
                3,
                3,
                &[
                    c(a * (s1 + s2)),
                    p1 * p2.conj(),
                    p1 * p3.conj() * a,
                    p2 * p1.conj(),
                    c((s2 + s3) / a),
                    p3 * p2.conj(),
                    p3 * p1.conj() * a,
                    p2 * p3.conj(),
                    c(a * s3 + s1 / a),
                ],
            );
            let minor = |i: usize, j: usize| (m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)]).re;
            let diag = m[(0, 0)].re.min(m[(1, 1)].re).min(m[(2, 2)].re);
            let m01 = minor(0, 1);
            let closed01 = s2 * s2 + s1 * s3 + s2 * s3;
            let min2 = m01.min(minor(0, 2)).min(minor(1, 2));
            let det = m.determinant().re;
            let cross = (p2 * p2 * p3.conj() * p3.conj()).re;
            let closed_det = s1 * s2 * s2 / a + s1 * s1 * s3 / a + a * s2 * s3 * s3 + 2.0 * a * s1 * cross
                + (1.0 / a - 2.0 * a) * s1 * s2 * s3;
            let lower = a * (s1 * s2 * s2 + s1 * s1 * s3 + s2 * s3 * s3) - 3.0 * a * s1 * s2 * s3;
            [
                diag,
                min2,
                (m01 - closed01).abs(),
                (det - closed_det).abs(),
                det - lower,
                lower,
            ]
        })
        .collect();
    let fold_min = |k: usize| per.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min);
    let fold_max = |k: usize| per.iter().map(|v| v[k]).fold(0.0, f64::max);
    let ev = PositivityEvidence {
        samples: n_samples,
        min_diagonal: fold_min(0),
        min_2x2_minor: fold_min(1),
        minor_formula_error: fold_max(2),
        det_formula_error: fold_max(3),
        det_bound_slack: fold_min(4),
        amgm_residual: fold_min(5),
        pass: false,
    };
    PositivityEvidence {
        pass: ev.min_diagonal >= 0.0
            && ev.min_2x2_minor >= -1e-12
            && ev.minor_formula_error < 1e-12
            && ev.det_formula_error < 1e-12
            && ev.det_bound_slack >= -1e-12
            && ev.amgm_residual >= -1e-12,
        ..ev
    }
}

fn not_ccp_evidence(map: &SuperOperator, alpha: f64) -> NotCcpEvidence {
    let pref = 1.0 / (alpha + 1.0 / alpha);
    let choi = map.choi();
    let sub = [
        [choi[(5, 5)].re / pref, choi[(5, 7)].re / pref],
        [choi[(7, 5)].re / pref, choi[(7, 7)].re / pref],
    ];
    let tr = sub[0][0] + sub[1][1];
    let det = sub[0][0] * sub[1][1] - sub[0][1] * sub[1][0];
    let sub_min = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
    let compressed = crate::semigroup::compressed_choi(map);
    let comp_min = eigh(&compressed).min();
    NotCcpEvidence {
        submatrix: sub,
        submatrix_min_eigenvalue: sub_min,
        compressed_min_eigenvalue: comp_min,
        pass: sub_min < 0.0 && comp_min < -1e-9,
    }
}

/// Rows (1, 5, 9) principal minor of `(id ⊗ Λ'_α)` applied to the `τ_x` pattern.
pub fn tau_minor(map: &SuperOperator, x: f64) -> f64 {
    let out = map
        .tensor_apply_first_identity(&tau_pattern(x))
        .expect("9x9 input");
    let idx = [0, 4, 8];
    CMat::from_fn(3, 3, |i, j| out[(idx[i], idx[j])]).determinant().re
}

fn witness_evidence(map: &SuperOperator, alpha: f64) -> WitnessEvidence {
    let a = alpha;
    let scale = (a + 1.0 / a).powi(-3);
    let scan: Vec<MinorScanPoint> = (1..=200)
        .map(|i| {
            let x = i as f64 / 200.0;
            MinorScanPoint {
                x,
                numeric: tau_minor(map, x),
                closed_form: (x + 2.0) * x * x / a + a * (x * x + x - 1.0),
            }
        })
        .collect();
    let formula_error = scan
        .iter()
        .map(|p| (p.numeric / scale - p.closed_form).abs())
        .fold(0.0, f64::max);
    let ratios: Vec<f64> = scan
        .iter()
        .filter(|p| p.closed_form.abs() > 1e-6)
        .map(|p| p.numeric / p.closed_form)
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let ratio_spread = ratios.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max) / mean.abs();
    let x0 = scan
        .iter()
        .filter(|p| p.numeric < 0.0)
        .min_by(|p, q| p.numeric.total_cmp(&q.numeric))
        .map(|p| p.x);
    let (image_min, tau_pt_min) = match x0 {
        Some(x) => {
            let tau = tau_state(x).expect("x > 0");
            let img = map.tensor_apply_first_identity(&tau.matrix).expect("9x9 input");
            (Some(min_eigenvalue(&img)), Some(tau.partial_transpose_min_eigenvalue()))
        }
        None => (None, None),
    };
    let pass = formula_error < 1e-10
        && image_min.is_some_and(|v| v < -1e-9)
        && tau_pt_min.is_some_and(|v| v >= -1e-9);
    WitnessEvidence {
        scan,
        formula_error,
        ratio_spread,
        x0,
        image_min_eigenvalue: image_min,
        tau_pt_min_eigenvalue: tau_pt_min,
        pass,
    }
}

/// Numerical evidence for the three properties of `Λ'_α`: positivity via
/// principal minors on random pure states, failure of conditional complete
/// positivity, and a PPT state mapped outside the PSD cone.
pub fn verify_appendix_d<R: Rng + ?Sized>(alpha: f64, n_samples: usize, rng: &mut R) -> Result<AppendixDReport> {
    let map = lambda_prime(alpha)?;
    Ok(AppendixDReport {
        alpha,
        positivity: positivity_evidence(alpha, n_samples, rng),
        not_ccp: not_ccp_evidence(&map, alpha),
        witness: witness_evidence(&map, alpha),
    })
}
