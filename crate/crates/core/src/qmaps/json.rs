use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{KrausSet, ReprKind, SuperOperator};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// Serialized map: `{"dim_in", "dim_out", "repr", "data"}`.
///
/// `data` is a row-major nested array of `[re, im]` pairs, or a list of such
/// matrices when `repr` is `"kraus"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub repr: String,
    pub data: Value,
}

pub fn matrix_to_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn matrix_from_json(v: &Value) -> Result<CMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse("matrix must be an array of rows".into()))?;
    if rows.is_empty() {
        return Err(Error::Parse("matrix has no rows".into()));
    }
    let mut entries = Vec::new();
    let mut ncols = None;
    for row in rows {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse("matrix row must be an array".into()))?;
        if *ncols.get_or_insert(row.len()) != row.len() {
            return Err(Error::Parse("ragged matrix rows".into()));
        }
        for z in row {
            entries.push(parse_entry(z)?);
        }
    }
    let ncols = ncols.unwrap_or(0);
    Ok(CMat::from_row_slice(rows.len(), ncols, &entries))
}

fn parse_entry(z: &Value) -> Result<C64> {
    if let Some(x) = z.as_f64() {
        return finite(C64::new(x, 0.0));
    }
    match z.as_array().map(Vec::as_slice) {
        Some([re, im]) => {
            let re = re.as_f64().ok_or_else(|| Error::Parse("non-numeric entry".into()))?;
            let im = im.as_f64().ok_or_else(|| Error::Parse("non-numeric entry".into()))?;
            finite(C64::new(re, im))
        }
        _ => Err(Error::Parse(format!("entry must be [re, im], got {z}"))),
    }
}

fn finite(z: C64) -> Result<C64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::Parse("non-finite entry".into()))
    }
}

impl MapJson {
    pub fn from_map(map: &SuperOperator, repr: ReprKind, eps: f64) -> Result<Self> {
        let (repr, data) = match repr {
            ReprKind::Choi => ("choi", matrix_to_json(map.choi())),
            ReprKind::Rep => ("rep", matrix_to_json(map.rep())),
            ReprKind::Kraus | ReprKind::Stinespring => {
                let k = map.kraus(eps)?;
                ("kraus", Value::Array(k.operators.iter().map(matrix_to_json).collect()))
            }
            ReprKind::SignedKraus => {
                return Err(Error::InvalidParameter(
                    "signed Kraus sets have no JSON form; use choi".into(),
                ))
            }
        };
        Ok(Self {
            dim_in: map.dim_in(),
            dim_out: map.dim_out(),
            repr: repr.into(),
            data,
        })
    }

    /// Parses into a map. With `require_hp`, rejects Choi matrices whose
    /// relative anti-Hermitian residual exceeds `tol`.
    pub fn to_map(&self, require_hp: bool, tol: f64) -> Result<SuperOperator> {
        if self.dim_in == 0 || self.dim_out == 0 {
            return Err(Error::Parse("dimensions must be positive".into()));
        }
        let map = match self.repr.as_str() {
            "choi" => SuperOperator::from_choi(self.dim_in, self.dim_out, matrix_from_json(&self.data)?)?,
            "rep" => SuperOperator::from_rep(self.dim_in, self.dim_out, matrix_from_json(&self.data)?)?,
            "kraus" => {
                let list = self
                    .data
                    .as_array()
                    .ok_or_else(|| Error::Parse("kraus data must be a list of matrices".into()))?;
                let ops = list.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
                if ops.iter().any(|k| k.shape() != (self.dim_out, self.dim_in)) {
                    return Err(Error::dims(format!(
                        "Kraus operators must be {}x{}",
                        self.dim_out, self.dim_in
                    )));
                }
                SuperOperator::from_kraus(KrausSet::new(ops))?
            }
            other => return Err(Error::Parse(format!("unknown repr {other:?}"))),
        };
        if require_hp {
            map.require_hermitian_preserving(tol)?;
        }
        Ok(map)
    }

    pub fn parse(text: &str, require_hp: bool, tol: f64) -> Result<SuperOperator> {
        let j: MapJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        j.to_map(require_hp, tol)
    }
}
