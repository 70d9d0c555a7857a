use std::path::Path;

use kpos_core::linalg::CMat;
use kpos_core::qmaps::{matrix_from_json, MapJson, SuperOperator};
use kpos_core::seeds::{lookup, StandardMap};

use crate::fail::{CliResult, Failure};

const HP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum MapRef {
    Seed { name: String, param: Option<f64> },
    File(String),
}

impl MapRef {
    pub fn parse(s: &str) -> CliResult<Self> {
        if let Some(rest) = s.strip_prefix("seeds:") {
            let (name, param) = match rest.split_once(':') {
                Some((n, p)) => {
                    let v: f64 = p
                        .parse()
                        .map_err(|_| Failure::input(format!("bad seed parameter {p:?} in {s:?}")))?;
                    (n, Some(v))
                }
                None => (rest, None),
            };
            if name.is_empty() {
                return Err(Failure::input(format!("empty seed name in {s:?}")));
            }
            Ok(MapRef::Seed { name: name.into(), param })
        } else if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(Failure::input("empty file path in map reference"));
            }
            Ok(MapRef::File(path.into()))
        } else {
            Err(Failure::input(format!(
                "map reference {s:?} must look like seeds:<name>[:param] or file:<path>"
            )))
        }
    }

    pub fn is_map_ref(s: &str) -> bool {
        s.starts_with("seeds:") || s.starts_with("file:")
    }
}

fn read(path: &str) -> CliResult<String> {
    std::fs::read_to_string(Path::new(path)).map_err(|e| Failure::input(format!("cannot read {path}: {e}")))
}

/// Resolves a reference. `d` fills in the dimension of parametric standard
/// maps and is otherwise checked against the resolved map.
pub fn resolve_map(s: &str, d: Option<usize>) -> CliResult<SuperOperator> {
    let map = match MapRef::parse(s)? {
        MapRef::Seed { name, param } => {
            let is_standard = StandardMap::from_name(&name).is_ok();
            let param = match (param, d) {
                (None, Some(d)) if is_standard => Some(d as f64),
                (p, _) => p,
            };
            lookup(&name, param)?.map
        }
        MapRef::File(path) => MapJson::parse(&read(&path)?, true, HP_TOL)?,
    };
    if let Some(d) = d {
        if map.dim_in() != d || map.dim_out() != d {
            return Err(Failure::input(format!(
                "--d {d} does not match the {}x{} map {s:?}",
                map.dim_out(),
                map.dim_in()
            )));
        }
    }
    Ok(map)
}

/// Reads a matrix file (`file:<path>`) holding nested `[re, im]` rows.
pub fn resolve_matrix(s: &str) -> CliResult<CMat> {
    let Some(path) = s.strip_prefix("file:") else {
        return Err(Failure::input(format!("matrix reference {s:?} must be file:<path>")));
    };
    let v: serde_json::Value =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::input(format!("{path}: {e}")))?;
    Ok(matrix_from_json(&v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_references() {
        assert_eq!(
            MapRef::parse("seeds:lambda_prime:0.5").unwrap(),
            MapRef::Seed { name: "lambda_prime".into(), param: Some(0.5) }
        );
        assert_eq!(
            MapRef::parse("seeds:choi_map").unwrap(),
            MapRef::Seed { name: "choi_map".into(), param: None }
        );
        assert_eq!(MapRef::parse("file:a/b.json").unwrap(), MapRef::File("a/b.json".into()));
        for bad in ["transposition", "seeds:", "seeds:x:y", "file:", ""] {
            assert!(MapRef::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn dimension_flag() {
        assert_eq!(resolve_map("seeds:transposition", Some(4)).unwrap().dim(), 4);
        assert_eq!(resolve_map("seeds:transposition", None).unwrap().dim(), 3);
        assert!(resolve_map("seeds:phi_d4", Some(3)).is_err());
        assert!(resolve_map("seeds:lambda_prime:0.5", Some(3)).is_ok());
        assert!(resolve_map("seeds:unknown", None).is_err());
    }
}
