use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{build_generator, ccp_test, evolve, random_k, scan_thresholds, ThresholdReport};
use crate::certify::{certify_kpos, refute_by_sampling, CertifyOptions};
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, CMat};
use crate::qmaps::{matrix_to_json, MapJson, ReprKind, SuperOperator};
use crate::rng::{base_seed, fork};
use crate::sdp::decomposability_d;

#[derive(Debug, Clone)]
pub struct WorkflowConfig {
    pub k: usize,
    /// Random generators drawn in addition to `K = 0`.
    pub n_k: usize,
    pub t_max: f64,
    pub grid_points: usize,
    pub certify: CertifyOptions,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        let certify = CertifyOptions::default();
        WorkflowConfig {
            k: 1,
            n_k: 0,
            t_max: 3.0,
            grid_points: certify.budget.grid_points,
            certify,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WorkflowChecks {
    pub k_positive_by_construction: bool,
    pub not_cp: bool,
    pub non_decomposable: bool,
    pub not_ccp: bool,
}

impl WorkflowChecks {
    pub fn all(&self) -> bool {
        self.k_positive_by_construction && self.not_cp && self.non_decomposable && self.not_ccp
    }
}

#[derive(Debug, Clone)]
pub struct WorkflowOutput {
    pub seed_id: String,
    pub k_matrix: CMat,
    pub t_chosen: f64,
    pub map: SuperOperator,
    pub checks: WorkflowChecks,
    pub d_value: f64,
    pub trajectory: ThresholdReport,
}

impl WorkflowOutput {
    /// True when the map may seed the next layer.
    pub fn is_valid_seed(&self) -> bool {
        self.checks.all()
    }

    pub fn trajectory_json(&self) -> Result<Value> {
        let grid: Vec<Value> = self
            .trajectory
            .grid
            .iter()
            .map(|g| json!([g.t, g.lambda_min, g.d_value]))
            .collect();
        Ok(json!({
            "seed_id": self.seed_id,
            "K": matrix_to_json(&self.k_matrix),
            "grid": grid,
            "t_cp": self.trajectory.t_cp,
            "t_nd": self.trajectory.t_nd,
            "t_chosen": self.t_chosen,
            "checks": self.checks,
            "d_value": self.d_value,
            "map": MapJson::from_map(&self.map, ReprKind::Choi, 1e-12)?,
        }))
    }
}

fn precondition_failure(seed: &SuperOperator, cfg: &WorkflowConfig, rng: &mut impl Rng) -> Result<Option<String>> {
    let verdict = certify_kpos(seed, cfg.k, &cfg.certify, rng)?;
    if verdict.is_refuted() {
        return Ok(Some(format!("seed is not {}-positive", cfg.k)));
    }
    let d = decomposability_d(seed, &cfg.certify.tols)?;
    if d.is_decomposable {
        return Ok(Some(format!("seed is decomposable (D = {:.3e})", d.d_value)));
    }
    if ccp_test(seed, cfg.certify.tols.eps_psd)?.is_ccp {
        return Ok(Some("seed is conditionally completely positive".into()));
    }
    Ok(None)
}

/// One layer of the generation workflow: checks the seed, then for `K = 0`
/// and `n_k` random generators locates the CP and decomposability thresholds
/// and evolves to half the earlier of the two.
pub fn run_workflow<R: Rng + ?Sized>(
    seed: &SuperOperator,
    seed_id: &str,
    cfg: &WorkflowConfig,
    rng: &mut R,
) -> Result<Vec<WorkflowOutput>> {
    let master = base_seed(rng);
    if let Some(reason) = precondition_failure(seed, cfg, &mut fork(master, 0))? {
        return Err(Error::SeedRejected(reason));
    }
    let d = seed.dim();
    let tols = cfg.certify.tols;
    let draws: Vec<CMat> = (0..=cfg.n_k)
        .map(|i| {
            if i == 0 {
                CMat::zeros(d, d)
            } else {
                random_k(d, &mut fork(master, 1 + i as u64))
            }
        })
        .collect();
    let outputs: Vec<Option<WorkflowOutput>> = draws
        .into_par_iter()
        .enumerate()
        .map(|(i, k_matrix)| -> Result<Option<WorkflowOutput>> {
            let gen = build_generator(&k_matrix, seed)?;
            let report = scan_thresholds(&gen, cfg.t_max, cfg.grid_points, &tols)?;
            let Some(t_nd) = report.t_nd else {
                return Ok(None);
            };
            let t_chosen = report.t_cp.map_or(t_nd, |t| t.min(t_nd)) / 2.0;
            let map = evolve(&gen, t_chosen)?;
            let mut r = fork(master, 1_000_000 + i as u64);
            let sampled = refute_by_sampling(&map, cfg.k, cfg.certify.budget.samples, &mut r, tols.eps_psd)?;
            let dec = decomposability_d(&map, &tols)?;
            let checks = WorkflowChecks {
                k_positive_by_construction: !sampled.is_refuted(),
                not_cp: min_eigenvalue(map.choi()) < -tols.eps_psd,
                non_decomposable: dec.d_value > dec.threshold,
                not_ccp: !ccp_test(&map, tols.eps_psd)?.is_ccp,
            };
            Ok(Some(WorkflowOutput {
                seed_id: seed_id.to_string(),
                k_matrix,
                t_chosen,
                map,
                checks,
                d_value: dec.d_value,
                trajectory: report,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(outputs.into_iter().flatten().collect())
}
