use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockId(pub usize);

/// One entry of a sparse Hermitian coefficient matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub coef: C64,
}

/// `tr(A X) = rhs`, with `A` Hermitian and stored sparsely.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Equality {
    pub units: Vec<Unit>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub dim: usize,
}

/// `min Σ_b tr(C_b X_b)` subject to `tr(A_i X) = b_i` and `X_b ⪰ 0`.
///
/// Free Hermitian variables are modelled as differences of two PSD blocks.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConicProgram {
    pub blocks: Vec<Block>,
    pub equalities: Vec<Equality>,
    pub objective: Vec<Unit>,
    pub free_vars: Vec<(String, BlockId, BlockId)>,
}

/// Linear accumulation of `Re(κ · X_b[i, j])` terms.
#[derive(Debug, Clone, Default)]
pub struct LinearForm {
    terms: BTreeMap<(usize, usize, usize), C64>,
}

impl LinearForm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `Re(κ X_b[i, j])`.
    pub fn add(&mut self, b: BlockId, i: usize, j: usize, kappa: C64) -> &mut Self {
        // Re(κ X_ij) = tr(A X) with A = (κ E_ji + conj(κ) E_ij) / 2
        if i == j {
            *self.terms.entry((b.0, i, i)).or_default() += C64::new(kappa.re, 0.0);
        } else {
            *self.terms.entry((b.0, j, i)).or_default() += kappa * 0.5;
            *self.terms.entry((b.0, i, j)).or_default() += kappa.conj() * 0.5;
        }
        self
    }

    pub fn is_empty(&self) -> bool {
        self.terms.values().all(|z| z.norm() == 0.0)
    }

    fn into_units(self) -> Vec<Unit> {
        self.terms
            .into_iter()
            .filter(|(_, z)| z.norm() != 0.0)
            .map(|((block, row, col), coef)| Unit {
                block,
                row,
                col,
                coef,
            })
            .collect()
    }
}

/// Entry `(r, c)` of a matrix-valued linear expression, as `Σ coef · X_b[i, j]`.
pub type EntryTerms = Vec<(BlockId, usize, usize, C64)>;

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn psd_block(&mut self, name: impl Into<String>, dim: usize) -> BlockId {
        self.blocks.push(Block {
            name: name.into(),
            dim,
        });
        BlockId(self.blocks.len() - 1)
    }

    /// Free Hermitian variable `X = X⁺ − X⁻`; returns the two PSD parts.
    pub fn free_hermitian(&mut self, name: impl Into<String>, dim: usize) -> (BlockId, BlockId) {
        let name = name.into();
        let p = self.psd_block(format!("{name}+"), dim);
        let m = self.psd_block(format!("{name}-"), dim);
        self.free_vars.push((name, p, m));
        (p, m)
    }

    pub fn dim(&self, b: BlockId) -> usize {
        self.blocks[b.0].dim
    }

    pub fn add_equality(&mut self, form: LinearForm, rhs: f64) {
        self.equalities.push(Equality {
            units: form.into_units(),
            rhs,
        });
    }

    pub fn set_objective(&mut self, form: LinearForm) {
        self.objective = form.into_units();
    }

    /// Imposes `E = target` for a Hermitian-valued linear expression `E`
    /// of size `n`, one real constraint per real degree of freedom.
    pub fn add_hermitian_equality(
        &mut self,
        n: usize,
        target: &CMat,
        entry: impl Fn(usize, usize) -> EntryTerms,
    ) {
        let imag = C64::new(0.0, -1.0);
        for r in 0..n {
            for c in r..n {
                let terms = entry(r, c);
                let mut re = LinearForm::new();
                for &(b, i, j, k) in &terms {
                    re.add(b, i, j, k);
                }
                self.add_equality(re, target[(r, c)].re);
                if r != c {
                    let mut im = LinearForm::new();
                    for &(b, i, j, k) in &terms {
                        im.add(b, i, j, imag * k);
                    }
                    self.add_equality(im, target[(r, c)].im);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |u: &Unit| -> Result<()> {
            let b = self
                .blocks
                .get(u.block)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown block {}", u.block)))?;
            if u.row >= b.dim || u.col >= b.dim {
                return Err(Error::dims(format!(
                    "entry ({}, {}) outside block {} of size {}",
                    u.row, u.col, b.name, b.dim
                )));
            }
            if !(u.coef.re.is_finite() && u.coef.im.is_finite()) {
                return Err(Error::InvalidParameter("non-finite coefficient".into()));
            }
            Ok(())
        };
        if self.blocks.iter().any(|b| b.dim == 0) {
            return Err(Error::InvalidParameter("empty block".into()));
        }
        for e in &self.equalities {
            e.units.iter().try_for_each(check)?;
            if !e.rhs.is_finite() {
                return Err(Error::InvalidParameter("non-finite right-hand side".into()));
            }
        }
        self.objective.iter().try_for_each(check)
    }

    /// Dense Hermitian objective matrices, one per block.
    pub fn objective_matrices(&self) -> Vec<CMat> {
        let mut c: Vec<CMat> = self.blocks.iter().map(|b| CMat::zeros(b.dim, b.dim)).collect();
        for u in &self.objective {
            c[u.block][(u.row, u.col)] += u.coef;
        }
        c
    }

    /// Evaluates the objective at a point.
    pub fn objective_value(&self, x: &[CMat]) -> f64 {
        self.objective
            .iter()
            .map(|u| (u.coef * x[u.block][(u.col, u.row)]).re)
            .sum()
    }

    /// `max_i |tr(A_i X) − b_i|`
    pub fn max_residual(&self, x: &[CMat]) -> f64 {
        self.equalities
            .iter()
            .map(|e| {
                let v: f64 = e
                    .units
                    .iter()
                    .map(|u| (u.coef * x[u.block][(u.col, u.row)]).re)
                    .sum();
                (v - e.rhs).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Self-describing JSON: blocks, equalities as sparse `[block, row, col, re, im]`
    /// triplets with right-hand sides, and the objective in the same form.
    pub fn to_json(&self) -> serde_json::Value {
        let triplets = |units: &[Unit]| {
            units
                .iter()
                .map(|u| serde_json::json!([u.block, u.row, u.col, u.coef.re, u.coef.im]))
                .collect::<Vec<_>>()
        };
        serde_json::json!({
            "format": "hermitian-sdp/1",
            "sense": "minimize",
            "semantics": "tr(A X) = b with A[row, col] = re + i*im, A Hermitian, X_b PSD",
            "blocks": self.blocks.iter().map(|b| serde_json::json!({"name": b.name, "dim": b.dim})).collect::<Vec<_>>(),
            "free_vars": self.free_vars.iter().map(|(n, p, m)| serde_json::json!({"name": n, "plus": p.0, "minus": m.0})).collect::<Vec<_>>(),
            "equalities": self.equalities.iter().map(|e| serde_json::json!({"terms": triplets(&e.units), "rhs": e.rhs})).collect::<Vec<_>>(),
            "objective": triplets(&self.objective),
        })
    }
}
