//! Numerical tolerances and effort budgets shared by every module.

use serde::{Deserialize, Serialize};

/// Tolerances used for sign decisions.
///
/// `eps_psd` is an absolute threshold on eigenvalues of unit-scale operators.
/// The decomposability threshold is relative: `eps_d_rel * max(1, ||C||_inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eps_psd: f64,
    pub eps_d_rel: f64,
    pub solver_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_psd: 1e-9,
            eps_d_rel: 1e-7,
            solver_tol: 1e-8,
        }
    }
}

impl Tolerances {
    /// Zero threshold for `D(Phi)` given the operator norm of the Choi matrix.
    pub fn eps_d(&self, choi_norm: f64) -> f64 {
        self.eps_d_rel * choi_norm.max(1.0)
    }
}

/// Effort knobs for the heuristic optimizers and samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub restarts: usize,
    pub samples: usize,
    pub max_sweeps: usize,
    /// A restart stops once a sweep improves the objective by less than this.
    pub sweep_tol: f64,
    pub grid_points: usize,
    /// Largest `(d k)^2` for which the F-relaxation SDP is attempted.
    pub fsdp_max_dim: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            restarts: 64,
            samples: 10_000,
            max_sweeps: 500,
            sweep_tol: 1e-9,
            grid_points: 50,
            fsdp_max_dim: 36,
        }
    }
}
