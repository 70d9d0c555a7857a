//! Primal-dual interior-point method for complex Hermitian SDPs.
//!
//! Infeasible-start path following with the HKM search direction and
//! Mehrotra's predictor-corrector. Everything stays complex; no real embedding.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::program::{ConicProgram, Unit};
use crate::error::{Error, Result};
use crate::linalg::{c, eigh, hermitize, CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalTrouble,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 120,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverResult {
    pub status: SolveStatus,
    /// Primal objective at the returned point.
    pub objective: f64,
    pub dual_objective: f64,
    /// Relative duality gap.
    pub dual_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
    pub names: Vec<String>,
    #[serde(skip)]
    pub x: Vec<CMat>,
    #[serde(skip)]
    pub z: Vec<CMat>,
    #[serde(skip)]
    pub y: Vec<f64>,
    #[serde(skip)]
    free_vars: Vec<(String, usize, usize)>,
}

impl SolverResult {
    /// Primal value of a named block or free variable.
    pub fn var(&self, name: &str) -> Option<CMat> {
        if let Some((_, p, m)) = self.free_vars.iter().find(|(n, _, _)| n == name) {
            return Some(&self.x[*p] - &self.x[*m]);
        }
        self.names.iter().position(|n| n == name).map(|i| self.x[i].clone())
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                detail: format!(
                    "after {} iterations: gap {:.2e}, primal infeasibility {:.2e}, dual infeasibility {:.2e}",
                    self.iterations, self.dual_gap, self.primal_infeasibility, self.dual_infeasibility
                ),
            })
        }
    }
}

struct Operator<'a> {
    dims: Vec<usize>,
    cons: &'a [super::program::Equality],
}

impl Operator<'_> {
    /// `𝒜(G)_p = Re Σ α G[col, row]`, i.e. `Re tr(A_p G)`.
    fn apply(&self, g: &[CMat]) -> DVector<f64> {
        DVector::from_iterator(
            self.cons.len(),
            self.cons.iter().map(|e| unit_sum(&e.units, g).re),
        )
    }

    /// `Σ_p y_p A_p`
    fn adjoint(&self, y: &DVector<f64>) -> Vec<CMat> {
        let mut out: Vec<CMat> = self.dims.iter().map(|&n| CMat::zeros(n, n)).collect();
        for (e, &yp) in self.cons.iter().zip(y.iter()) {
            for u in &e.units {
                out[u.block][(u.row, u.col)] += u.coef * yp;
            }
        }
        out
    }

    /// Schur complement `M_pq = tr(A_p X A_q W)`.
    fn schur(&self, x: &[CMat], w: &[CMat]) -> DMatrix<f64> {
        let m = self.cons.len();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|p| {
                let mut g: Vec<Option<CMat>> = vec![None; self.dims.len()];
                for u in &self.cons[p].units {
                    let n = self.dims[u.block];
                    let gb = g[u.block].get_or_insert_with(|| CMat::zeros(n, n));
                    let wc = w[u.block].column(u.row);
                    let xr = x[u.block].row(u.col);
                    gb.ger(u.coef, &wc, &xr.transpose(), c(1.0));
                }
                self.cons
                    .iter()
                    .map(|e| {
                        e.units
                            .iter()
                            .filter_map(|u| g[u.block].as_ref().map(|gb| (u.coef * gb[(u.col, u.row)]).re))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let mut mat = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
        let t = mat.transpose();
        mat += t;
        mat *= 0.5;
        mat
    }
}

fn unit_sum(units: &[Unit], g: &[CMat]) -> C64 {
    units.iter().map(|u| u.coef * g[u.block][(u.col, u.row)]).sum()
}

fn inner(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p.conj() * q).re).sum::<f64>())
        .sum()
}

fn fro(a: &[CMat]) -> f64 {
    inner(a, a).sqrt()
}

fn add_scaled(a: &[CMat], b: &[CMat], s: f64) -> Vec<CMat> {
    a.iter().zip(b).map(|(x, y)| x + y * c(s)).collect()
}

/// Largest `α ≤ 1` keeping `X + α dX ⪰ 0`, before damping.
fn max_step(x: &CMat, dx: &CMat) -> Option<f64> {
    let chol = x.clone().cholesky()?;
    let l = chol.l();
    let a = l.solve_lower_triangular(dx)?;
    let t = l.solve_lower_triangular(&a.adjoint())?;
    let lmin = eigh(&t).min();
    Some(if lmin >= 0.0 { f64::INFINITY } else { -1.0 / lmin })
}

fn step_length(x: &[CMat], dx: &[CMat]) -> Option<f64> {
    let mut a = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        a = a.min(max_step(xb, db)?);
    }
    Some(a)
}

fn inverse(z: &CMat) -> Option<CMat> {
    z.clone().cholesky().map(|ch| hermitize(&ch.inverse()))
}

enum Factored {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factored {
    fn new(m: &DMatrix<f64>) -> Option<Self> {
        if let Some(ch) = m.clone().cholesky() {
            return Some(Self::Chol(ch));
        }
        let scale = m.diagonal().iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300);
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += 1e-13 * scale;
        }
        if let Some(ch) = reg.cholesky() {
            return Some(Self::Chol(ch));
        }
        let lu = m.clone().lu();
        if lu.is_invertible() {
            Some(Self::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Self::Chol(ch) => Some(ch.solve(b)),
            Self::Lu(lu) => lu.solve(b),
        }
    }
}

/// Solves the program. Non-optimal outcomes come back as a status, never as
/// `Optimal`; only malformed programs produce an error.
pub fn solve(program: &ConicProgram, opts: SolverOptions) -> Result<SolverResult> {
    program.validate()?;
    let dims: Vec<usize> = program.blocks.iter().map(|b| b.dim).collect();
    let op = Operator {
        dims: dims.clone(),
        cons: &program.equalities,
    };
    let m = program.equalities.len();
    let n_total: usize = dims.iter().sum();
    let nf = n_total as f64;
    let cmat = program.objective_matrices();
    let b = DVector::from_iterator(m, program.equalities.iter().map(|e| e.rhs));
    let norm_b = b.norm();
    let norm_c = fro(&cmat);

    let norm_a: Vec<f64> = program
        .equalities
        .iter()
        .map(|e| {
            e.units
                .iter()
                .map(|u| u.coef.norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut xi = 10.0f64.max(nf.sqrt());
    for (k, &na) in norm_a.iter().enumerate() {
        xi = xi.max(nf.sqrt() * (1.0 + b[k].abs()) / (1.0 + na));
    }
    let eta = 10.0f64
        .max(nf.sqrt())
        .max(norm_a.iter().fold(0.0f64, |a, &v| a.max(v)))
        .max(norm_c);

    let mut x: Vec<CMat> = dims.iter().map(|&n| CMat::identity(n, n) * c(xi)).collect();
    let mut z: Vec<CMat> = dims.iter().map(|&n| CMat::identity(n, n) * c(eta)).collect();
    let mut y = DVector::<f64>::zeros(m);

    let finish = |status, x: Vec<CMat>, z: Vec<CMat>, y: &DVector<f64>, it, stats: [f64; 5]| SolverResult {
        status,
        objective: stats[0],
        dual_objective: stats[1],
        dual_gap: stats[2],
        primal_infeasibility: stats[3],
        dual_infeasibility: stats[4],
        iterations: it,
        names: program.blocks.iter().map(|b| b.name.clone()).collect(),
        x,
        z,
        y: y.iter().copied().collect(),
        free_vars: program
            .free_vars
            .iter()
            .map(|(n, p, mm)| (n.clone(), p.0, mm.0))
            .collect(),
    };

    let mut stall = 0usize;
    for it in 0..=opts.max_iter {
        let ax = op.apply(&x);
        let rp = &b - &ax;
        let aty = op.adjoint(&y);
        let rd: Vec<CMat> = cmat
            .iter()
            .zip(&z)
            .zip(&aty)
            .map(|((cb, zb), ab)| cb - zb - ab)
            .collect();
        let pobj = inner(&cmat, &x);
        let dobj = b.dot(&y);
        let xz = inner(&x, &z);
        let mu = xz / nf;
        let pinf = rp.norm() / (1.0 + norm_b);
        let dinf = fro(&rd) / (1.0 + norm_c);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        let gap = ((pobj - dobj).abs().max(xz)) / denom;
        let stats = [pobj, dobj, gap, pinf, dinf];

        if !(pobj.is_finite() && dobj.is_finite() && mu.is_finite()) {
            return Ok(finish(SolveStatus::NumericalTrouble, x, z, &y, it, stats));
        }
        if pinf < opts.tol && dinf < opts.tol && gap < opts.tol {
            return Ok(finish(SolveStatus::Optimal, x, z, &y, it, stats));
        }
        // Rays: b^T y → +∞ with A*y + Z = C − Rd bounded certifies primal infeasibility;
        // ⟨C, X⟩ → −∞ with A(X) = b − rp bounded certifies unboundedness.
        if dobj > 0.0 && dobj / (1.0 + norm_c + fro(&rd)) > 1e2 / opts.tol && pinf > opts.tol.sqrt() {
            return Ok(finish(SolveStatus::Infeasible, x, z, &y, it, stats));
        }
        if pobj < 0.0 && -pobj / (1.0 + norm_b + rp.norm()) > 1e2 / opts.tol && dinf > opts.tol.sqrt() {
            return Ok(finish(SolveStatus::Unbounded, x, z, &y, it, stats));
        }
        if it == opts.max_iter {
            return Ok(finish(SolveStatus::MaxIter, x, z, &y, it, stats));
        }

        let w: Option<Vec<CMat>> = z.iter().map(inverse).collect();
        let Some(w) = w else {
            return Ok(finish(SolveStatus::NumericalTrouble, x, z, &y, it, stats));
        };
        let mmat = op.schur(&x, &w);
        let Some(fact) = Factored::new(&mmat) else {
            return Ok(finish(SolveStatus::NumericalTrouble, x, z, &y, it, stats));
        };

        // X Rd W
        let xrdw: Vec<CMat> = x.iter().zip(&rd).zip(&w).map(|((xb, rb), wb)| xb * rb * wb).collect();
        let direction = |rc: &[CMat]| -> Option<(Vec<CMat>, DVector<f64>, Vec<CMat>)> {
            let rhs = &rp - op.apply(rc);
            let dy = fact.solve(&rhs)?;
            let atdy = op.adjoint(&dy);
            let dz: Vec<CMat> = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
            let dx: Vec<CMat> = rc
                .iter()
                .zip(&x)
                .zip(&atdy)
                .zip(&w)
                .map(|(((r, xb), ab), wb)| hermitize(&(r + xb * ab * wb)))
                .collect();
            Some((dx, dy, dz))
        };

        // predictor
        let rc_aff: Vec<CMat> = x.iter().zip(&xrdw).map(|(xb, t)| -xb - t).collect();
        let Some((dxp, _, dzp)) = direction(&rc_aff) else {
            return Ok(finish(SolveStatus::NumericalTrouble, x, z, &y, it, stats));
        };
        let (Some(ap), Some(ad)) = (step_length(&x, &dxp), step_length(&z, &dzp)) else {
            return Ok(finish(SolveStatus::NumericalTrouble, x, z, &y, it, stats));
        };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff = inner(&add_scaled(&x, &dxp, ap), &add_scaled(&z, &dzp, ad)) / nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc: Vec<CMat> = x
            .iter()
            .zip(&w)
            .zip(&xrdw)
            .zip(dxp.iter().zip(&dzp))
            .map(|(((xb, wb), t), (dxb, dzb))| wb * c(sigma * mu) - xb - t - dxb * dzb * wb)
            .collect();
        let Some((dx, dy, dz)) = direction(&rc) else {
            return Ok(finish(SolveStatus::NumericalTrouble, x, z, &y, it, stats));
        };
        let (Some(ap), Some(ad)) = (step_length(&x, &dx), step_length(&z, &dz)) else {
            return Ok(finish(SolveStatus::NumericalTrouble, x, z, &y, it, stats));
        };
        let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stall += 1;
            if stall > 3 {
                return Ok(finish(SolveStatus::NumericalTrouble, x, z, &y, it, stats));
            }
        } else {
            stall = 0;
        }
        x = add_scaled(&x, &dx, ap).iter().map(hermitize).collect();
        z = add_scaled(&z, &dz, ad).iter().map(hermitize).collect();
        y += dy * ad;
    }
    unreachable!("loop returns at max_iter")
}
