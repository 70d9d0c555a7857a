//! Linear maps on matrix algebras and conversions among their representations.
//!
//! The Choi matrix `C(Φ) = Σ_{jk} |j⟩⟨k| ⊗ Φ(|j⟩⟨k|)` is the canonical form;
//! every [`SuperOperator`] stores it. The representation matrix `Φ̂` with
//! `vec(Φ(A)) = Φ̂ vec(A)` is derived on first use and cached.

mod json;
mod ops;

pub use json::{matrix_from_json, matrix_to_json, MapJson};
pub use ops::{link_product, shifted_stinespring};

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, eigh, hermitian_residual, partial_trace_weighted, unvec, vec_col, BipartiteShape, CMat,
    Subsystem,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReprKind {
    Choi,
    Rep,
    Kraus,
    SignedKraus,
    Stinespring,
}

/// Kraus operators `Φ = Σ_j s_j K_j (·) K_j†`, with `s_j = +1` unless signs are given.
#[derive(Debug, Clone)]
pub struct KrausSet {
    pub operators: Vec<CMat>,
    pub signs: Option<Vec<f64>>,
}

impl KrausSet {
    pub fn new(operators: Vec<CMat>) -> Self {
        Self {
            operators,
            signs: None,
        }
    }

    pub fn sign(&self, j: usize) -> f64 {
        self.signs.as_ref().map_or(1.0, |s| s[j])
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// `Σ_j s_j |vec K_j⟩⟨vec K_j|`
    pub fn choi(&self) -> CMat {
        let (rows, cols) = self.operators[0].shape();
        let mut out = CMat::zeros(rows * cols, rows * cols);
        for (j, k) in self.operators.iter().enumerate() {
            let v = vec_col(k);
            out += (&v * v.adjoint()) * c(self.sign(j));
        }
        out
    }
}

/// Stinespring operator `V = Σ_j K_j ⊗ |j⟩`, so that `Φ = tr_env(V (·) V†)`.
///
/// Rows are indexed `(output, environment)` with the environment index fastest.
#[derive(Debug, Clone)]
pub struct StinespringOp {
    pub v: CMat,
    pub env_dim: usize,
}

impl StinespringOp {
    pub fn from_kraus(kraus: &KrausSet) -> Self {
        let r = kraus.len();
        let (dout, din) = kraus.operators[0].shape();
        let mut v = CMat::zeros(dout * r, din);
        for (j, k) in kraus.operators.iter().enumerate() {
            for i in 0..dout {
                for col in 0..din {
                    v[(i * r + j, col)] = k[(i, col)];
                }
            }
        }
        Self { v, env_dim: r }
    }

    pub fn dim_out(&self) -> usize {
        self.v.nrows() / self.env_dim
    }

    pub fn kraus(&self) -> KrausSet {
        let r = self.env_dim;
        let dout = self.dim_out();
        let ops = (0..r)
            .map(|j| CMat::from_fn(dout, self.v.ncols(), |i, col| self.v[(i * r + j, col)]))
            .collect();
        KrausSet::new(ops)
    }

    /// `tr_env(V X V†)`
    pub fn apply(&self, x: &CMat) -> CMat {
        let y = &self.v * x * self.v.adjoint();
        let shape = BipartiteShape::new(self.dim_out(), self.env_dim);
        crate::linalg::partial_trace(&y, shape, Subsystem::Second).expect("stinespring shape")
    }
}

#[derive(Debug, Clone)]
enum Carried {
    Choi,
    Rep,
    Kraus(KrausSet),
    Stinespring(StinespringOp),
}

/// A linear map `C^{m×m} → C^{d×d}`.
#[derive(Debug, Clone)]
pub struct SuperOperator {
    dim_in: usize,
    dim_out: usize,
    choi: CMat,
    rep: OnceLock<CMat>,
    carried: Carried,
}

impl SuperOperator {
    pub fn from_choi(dim_in: usize, dim_out: usize, choi: CMat) -> Result<Self> {
        let n = dim_in * dim_out;
        if choi.nrows() != n || choi.ncols() != n {
            return Err(Error::dims(format!(
                "Choi matrix of a map {dim_in}->{dim_out} must be {n}x{n}, got {}x{}",
                choi.nrows(),
                choi.ncols()
            )));
        }
        if !crate::linalg::is_finite(&choi) {
            return Err(Error::Parse("non-finite Choi entry".into()));
        }
        Ok(Self {
            dim_in,
            dim_out,
            choi,
            rep: OnceLock::new(),
            carried: Carried::Choi,
        })
    }

    pub fn from_rep(dim_in: usize, dim_out: usize, rep: CMat) -> Result<Self> {
        if rep.nrows() != dim_out * dim_out || rep.ncols() != dim_in * dim_in {
            return Err(Error::dims(format!(
                "representation matrix of a map {dim_in}->{dim_out} must be {}x{}, got {}x{}",
                dim_out * dim_out,
                dim_in * dim_in,
                rep.nrows(),
                rep.ncols()
            )));
        }
        let choi = rep_to_choi(&rep, dim_in, dim_out);
        let map = Self::from_choi(dim_in, dim_out, choi)?;
        let _ = map.rep.set(rep);
        Ok(Self {
            carried: Carried::Rep,
            ..map
        })
    }

    pub fn from_kraus(kraus: KrausSet) -> Result<Self> {
        let first = kraus
            .operators
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty Kraus set".into()))?;
        let (dout, din) = first.shape();
        if kraus.operators.iter().any(|k| k.shape() != (dout, din)) {
            return Err(Error::dims("Kraus operators differ in shape"));
        }
        if let Some(s) = &kraus.signs {
            if s.len() != kraus.len() {
                return Err(Error::dims("Kraus sign count differs from operator count"));
            }
        }
        let map = Self::from_choi(din, dout, kraus.choi())?;
        Ok(Self {
            carried: Carried::Kraus(kraus),
            ..map
        })
    }

    pub fn from_stinespring(op: StinespringOp) -> Result<Self> {
        if op.env_dim == 0 || op.v.nrows() % op.env_dim != 0 {
            return Err(Error::dims("Stinespring rows must be a multiple of env_dim"));
        }
        let map = Self::from_kraus(op.kraus())?;
        Ok(Self {
            carried: Carried::Stinespring(op),
            ..map
        })
    }

    /// Builds the map by evaluating `f` on matrix units.
    pub fn from_fn(dim_in: usize, dim_out: usize, f: impl Fn(&CMat) -> CMat) -> Self {
        let n = dim_in * dim_out;
        let mut choi = CMat::zeros(n, n);
        for j in 0..dim_in {
            for k in 0..dim_in {
                let out = f(&crate::linalg::matrix_unit(dim_in, j, k));
                assert_eq!(out.shape(), (dim_out, dim_out), "map output has wrong shape");
                for i in 0..dim_out {
                    for l in 0..dim_out {
                        choi[(j * dim_out + i, k * dim_out + l)] = out[(i, l)];
                    }
                }
            }
        }
        Self::from_choi(dim_in, dim_out, choi).expect("from_fn shape")
    }

    pub fn zero(d: usize) -> Self {
        Self::from_choi(d, d, CMat::zeros(d * d, d * d)).expect("zero map")
    }

    pub fn identity(d: usize) -> Self {
        let g = crate::linalg::maximally_entangled(d, false);
        Self::from_choi(d, d, &g * g.adjoint()).expect("identity map")
    }

    /// `X ↦ A X B†`
    pub fn sandwich(a: &CMat, b: &CMat) -> Result<Self> {
        if a.shape() != b.shape() {
            return Err(Error::dims("sandwich operands differ in shape"));
        }
        let (dout, din) = a.shape();
        Self::from_choi(din, dout, vec_col(a) * vec_col(b).adjoint())
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// Square maps only; panics otherwise.
    pub fn dim(&self) -> usize {
        assert_eq!(self.dim_in, self.dim_out, "map is not square");
        self.dim_in
    }

    pub fn representation(&self) -> ReprKind {
        match &self.carried {
            Carried::Choi => ReprKind::Choi,
            Carried::Rep => ReprKind::Rep,
            Carried::Kraus(k) if k.signs.is_some() => ReprKind::SignedKraus,
            Carried::Kraus(_) => ReprKind::Kraus,
            Carried::Stinespring(_) => ReprKind::Stinespring,
        }
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    pub fn rep(&self) -> &CMat {
        self.rep
            .get_or_init(|| choi_to_rep(&self.choi, self.dim_in, self.dim_out))
    }

    pub fn carried_kraus(&self) -> Option<&KrausSet> {
        match &self.carried {
            Carried::Kraus(k) => Some(k),
            _ => None,
        }
    }

    pub fn carried_stinespring(&self) -> Option<&StinespringOp> {
        match &self.carried {
            Carried::Stinespring(s) => Some(s),
            _ => None,
        }
    }

    pub fn choi_shape(&self) -> BipartiteShape {
        BipartiteShape::new(self.dim_in, self.dim_out)
    }

    /// Anti-Hermitian residual of the Choi matrix relative to its scale.
    pub fn hermitian_residual(&self) -> f64 {
        let scale = self.choi.iter().map(|z| z.norm()).fold(1.0, f64::max);
        hermitian_residual(&self.choi) / scale
    }

    pub fn is_hermitian_preserving(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    pub fn require_hermitian_preserving(&self, tol: f64) -> Result<()> {
        let r = self.hermitian_residual();
        if r > tol {
            Err(Error::NotHermitianPreserving(r))
        } else {
            Ok(())
        }
    }

    /// Kraus operators from the scaled Choi eigenvectors, keeping eigenvalues
    /// above `eps * max(1, λ_max)`. Fails when the Choi matrix has an
    /// eigenvalue below `-eps * max(1, λ_max)`.
    pub fn kraus(&self, eps: f64) -> Result<KrausSet> {
        if let Carried::Kraus(k) = &self.carried {
            if k.signs.is_none() {
                return Ok(k.clone());
            }
        }
        let e = eigh(&self.choi);
        let cut = eps * e.max().abs().max(1.0);
        if e.min() < -cut {
            return Err(Error::NotCompletelyPositive(e.min()));
        }
        let mut ops = Vec::new();
        for (j, &mu) in e.values.iter().enumerate().rev() {
            if mu > cut {
                ops.push(unvec(&e.vector(j), self.dim_out, self.dim_in) * c(mu.sqrt()));
            }
        }
        if ops.is_empty() {
            ops.push(CMat::zeros(self.dim_out, self.dim_in));
        }
        Ok(KrausSet::new(ops))
    }

    /// Difference-of-CP Kraus form for any Hermitian Choi matrix.
    pub fn signed_kraus(&self, eps: f64) -> Result<KrausSet> {
        self.require_hermitian_preserving(1e-9)?;
        let e = eigh(&self.choi);
        let scale = e.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut ops = Vec::new();
        let mut signs = Vec::new();
        for (j, &mu) in e.values.iter().enumerate().rev() {
            if mu.abs() > eps * scale {
                ops.push(unvec(&e.vector(j), self.dim_out, self.dim_in) * c(mu.abs().sqrt()));
                signs.push(mu.signum());
            }
        }
        if ops.is_empty() {
            ops.push(CMat::zeros(self.dim_out, self.dim_in));
            signs.push(1.0);
        }
        Ok(KrausSet {
            operators: ops,
            signs: Some(signs),
        })
    }

    pub fn stinespring(&self, eps: f64) -> Result<StinespringOp> {
        if let Carried::Stinespring(s) = &self.carried {
            return Ok(s.clone());
        }
        Ok(StinespringOp::from_kraus(&self.kraus(eps)?))
    }

    /// Same map, carried in the `target` representation.
    pub fn convert(&self, target: ReprKind, eps: f64) -> Result<SuperOperator> {
        let out = match target {
            ReprKind::Choi => Self::from_choi(self.dim_in, self.dim_out, self.choi.clone())?,
            ReprKind::Rep => Self::from_rep(self.dim_in, self.dim_out, self.rep().clone())?,
            ReprKind::Kraus => Self {
                carried: Carried::Kraus(self.kraus(eps)?),
                ..self.clone()
            },
            ReprKind::SignedKraus => Self {
                carried: Carried::Kraus(self.signed_kraus(eps)?),
                ..self.clone()
            },
            ReprKind::Stinespring => Self {
                carried: Carried::Stinespring(self.stinespring(eps)?),
                ..self.clone()
            },
        };
        Ok(out)
    }

    /// `Φ(X) = unvec(Φ̂ vec(X))`
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        if x.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::dims(format!(
                "input is {}x{}, map expects {}x{}",
                x.nrows(),
                x.ncols(),
                self.dim_in,
                self.dim_in
            )));
        }
        Ok(unvec(&(self.rep() * vec_col(x)), self.dim_out, self.dim_out))
    }

    /// `Φ(X) = tr_1((X^T ⊗ 1) C(Φ))`
    pub fn apply_via_choi(&self, x: &CMat) -> Result<CMat> {
        if x.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::dims("input does not match the map's input dimension"));
        }
        partial_trace_weighted(
            &self.choi,
            self.choi_shape(),
            Subsystem::First,
            Some(&x.transpose()),
        )
    }

    /// `outer ∘ inner`, via the product of representation matrices.
    pub fn compose(outer: &SuperOperator, inner: &SuperOperator) -> Result<SuperOperator> {
        if outer.dim_in != inner.dim_out {
            return Err(Error::dims(format!(
                "cannot compose: outer takes {}, inner produces {}",
                outer.dim_in, inner.dim_out
            )));
        }
        Self::from_rep(inner.dim_in, outer.dim_out, outer.rep() * inner.rep())
    }

    /// Hilbert-Schmidt adjoint, `Φ̂* = Φ̂†`.
    pub fn adjoint(&self) -> SuperOperator {
        Self::from_rep(self.dim_out, self.dim_in, self.rep().adjoint()).expect("adjoint shape")
    }

    pub fn scale(&self, s: f64) -> SuperOperator {
        Self::from_choi(self.dim_in, self.dim_out, &self.choi * c(s)).expect("scale")
    }

    pub fn add(&self, other: &SuperOperator) -> Result<SuperOperator> {
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out) {
            return Err(Error::dims("cannot add maps of different dimensions"));
        }
        Self::from_choi(self.dim_in, self.dim_out, &self.choi + &other.choi)
    }

    pub fn sub(&self, other: &SuperOperator) -> Result<SuperOperator> {
        self.add(&other.scale(-1.0))
    }

    /// `Φ ⊗ id_k` acting on `C^d ⊗ C^k`.
    pub fn tensor_with_identity(&self, k: usize) -> Result<SuperOperator> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if k == 1 {
            return Ok(self.clone());
        }
        let (din, dout) = (self.dim_in, self.dim_out);
        let (nin, nout) = (din * k, dout * k);
        let mut out = CMat::zeros(nin * nout, nin * nout);
        // C_k[(J, I), (K, L)] = C[(j, i), (k', i')] δ(l, m) δ(l', m')
        // with J = (j, l), I = (i, m), K = (k', l'), L = (i', m').
        for j in 0..din {
            for i in 0..dout {
                for kk in 0..din {
                    for ip in 0..dout {
                        let val = self.choi[(j * dout + i, kk * dout + ip)];
                        if val == c(0.0) {
                            continue;
                        }
                        for l in 0..k {
                            for lp in 0..k {
                                let row = (j * k + l) * nout + (i * k + l);
                                let col = (kk * k + lp) * nout + (ip * k + lp);
                                out[(row, col)] = val;
                            }
                        }
                    }
                }
            }
        }
        Self::from_choi(nin, nout, out)
    }

    /// `(id_m ⊗ Φ)(Y)` for `Y` on `C^m ⊗ C^{d_in}`, with `m = Y.nrows() / d_in`.
    pub fn tensor_apply_first_identity(&self, y: &CMat) -> Result<CMat> {
        let din = self.dim_in();
        let dout = self.dim_out();
        if !y.is_square() || y.nrows() % din != 0 {
            return Err(Error::dims("input is not on C^m ⊗ C^{d_in}"));
        }
        let m = y.nrows() / din;
        let mut out = CMat::zeros(m * dout, m * dout);
        for j in 0..m {
            for k in 0..m {
                let block = y.view((j * din, k * din), (din, din)).into_owned();
                let img = self.apply(&block)?;
                out.view_mut((j * dout, k * dout), (dout, dout)).copy_from(&img);
            }
        }
        Ok(out)
    }

    pub fn to_json(&self, repr: ReprKind, eps: f64) -> Result<MapJson> {
        MapJson::from_map(self, repr, eps)
    }
}

/// `Φ̂[l·d_out + i, k·d_in + j] = C[j·d_out + i, k·d_out + l]`
pub fn choi_to_rep(choi: &CMat, dim_in: usize, dim_out: usize) -> CMat {
    let mut rep = CMat::zeros(dim_out * dim_out, dim_in * dim_in);
    for j in 0..dim_in {
        for k in 0..dim_in {
            for i in 0..dim_out {
                for l in 0..dim_out {
                    rep[(l * dim_out + i, k * dim_in + j)] = choi[(j * dim_out + i, k * dim_out + l)];
                }
            }
        }
    }
    rep
}

pub fn rep_to_choi(rep: &CMat, dim_in: usize, dim_out: usize) -> CMat {
    let n = dim_in * dim_out;
    let mut choi = CMat::zeros(n, n);
    for j in 0..dim_in {
        for k in 0..dim_in {
            for i in 0..dim_out {
                for l in 0..dim_out {
                    choi[(j * dim_out + i, k * dim_out + l)] = rep[(l * dim_out + i, k * dim_in + j)];
                }
            }
        }
    }
    choi
}
