use serde::{Deserialize, Serialize};

use super::{lambda_prime, lambda_tilde, phi_d4, standard_map, StandardMap};
use crate::error::{Error, Result};
use crate::qmaps::SuperOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    True,
    False,
    Unknown,
}

impl From<bool> for Flag {
    fn from(b: bool) -> Self {
        if b {
            Flag::True
        } else {
            Flag::False
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KnownProperties {
    pub positive: Flag,
    pub cp: Flag,
    pub ccop: Flag,
    pub decomposable: Flag,
    pub ccp: Flag,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct SeedEntry {
    pub name: String,
    pub param: Option<f64>,
    pub map: SuperOperator,
    pub properties: KnownProperties,
}

fn props(positive: Flag, cp: Flag, ccop: Flag, decomposable: Flag, ccp: Flag, note: &str) -> KnownProperties {
    KnownProperties {
        positive,
        cp,
        ccop,
        decomposable,
        ccp,
        note: note.into(),
    }
}

use Flag::{False as F, True as T, Unknown as U};

/// Looks up a seed by name. `param` is `α` for `lambda_prime` and the
/// dimension for the standard maps; other entries take no parameter.
pub fn lookup(name: &str, param: Option<f64>) -> Result<SeedEntry> {
    let dim = |default: usize| -> Result<usize> {
        match param {
            None => Ok(default),
            Some(p) if p >= 2.0 && p.fract() == 0.0 => Ok(p as usize),
            Some(p) => Err(Error::InvalidParameter(format!("dimension {p} must be an integer ≥ 2"))),
        }
    };
    let no_param = || -> Result<()> {
        match param {
            None => Ok(()),
            Some(_) => Err(Error::InvalidParameter(format!("{name} takes no parameter"))),
        }
    };
    let (map, properties, param) = match name {
        "lambda_prime" => {
            let alpha = param.unwrap_or(1.0);
            (
                lambda_prime(alpha)?,
                props(T, F, F, F, F, "positivity proved analytically; non-decomposable and not CCP for alpha in (0, 1]"),
                Some(alpha),
            )
        }
        "lambda_tilde" => {
            no_param()?;
            (
                lambda_tilde(),
                props(T, F, F, F, F, "exp(0.2 lambda_prime(1)); positive by the semigroup construction"),
                None,
            )
        }
        "phi_d4" => {
            no_param()?;
            (
                phi_d4(),
                props(U, F, F, F, F, "positivity supported by sampling only"),
                None,
            )
        }
        other => {
            let which = StandardMap::from_name(other)?;
            let d = dim(3)?;
            let p = match which {
                StandardMap::Identity => props(T, T, F, T, T, "completely positive"),
                StandardMap::Transposition => props(T, F, T, T, F, "completely co-positive"),
                StandardMap::Reduction => props(T, F, T, T, T, "its composition with the transposition is CP"),
                StandardMap::ReductionInverse => {
                    let d2 = d == 2;
                    props(
                        d2.into(),
                        F,
                        d2.into(),
                        d2.into(),
                        T,
                        "coincides with the reduction map when d = 2; not positive for d > 2",
                    )
                }
                StandardMap::ChoiMap => props(T, F, F, F, T, "positive, non-decomposable and CCP"),
            };
            (standard_map(which, d)?, p, Some(d as f64))
        }
    };
    Ok(SeedEntry {
        name: name.into(),
        param,
        map,
        properties,
    })
}

/// Every catalog entry at its default parameter.
pub fn catalog() -> Vec<SeedEntry> {
    [
        "lambda_prime",
        "lambda_tilde",
        "phi_d4",
        "identity",
        "transposition",
        "reduction",
        "reduction_inverse",
        "choi_map",
    ]
    .into_iter()
    .map(|n| lookup(n, None).expect("catalog entry"))
    .collect()
}
