//! Concrete maps used as workflow seeds, plus the PPT family `τ_x` and
//! the numerical checks behind the properties of `Λ'_α`.

mod appendix_d;
mod catalog;

pub use appendix_d::{
    positivity_sampler, tau_minor, tau_pattern, tau_state, verify_appendix_d, AppendixDReport, MinorScanPoint,
    NotCcpEvidence, PositivityEvidence, PositivityReport, TauState, WitnessEvidence,
};
pub use catalog::{catalog, lookup, Flag, KnownProperties, SeedEntry};

use crate::error::{Error, Result};
use crate::linalg::{c, identity, matrix_exp, trace, CMat};
use crate::qmaps::SuperOperator;

/// `Λ'_α`, a non-decomposable positive map on 3×3 matrices for `α ∈ (0, 1]`.
///
/// The (2,3) and (3,2) output entries read `x₃₂` and `x₂₃`.
pub fn lambda_prime(alpha: f64) -> Result<SuperOperator> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1]")));
    }
    let a = alpha;
    let pref = 1.0 / (a + 1.0 / a);
    Ok(SuperOperator::from_fn(3, 3, |x| {
        let mut y = CMat::zeros(3, 3);
        y[(0, 0)] = (x[(0, 0)] + x[(1, 1)]) * a;
        y[(0, 1)] = x[(0, 1)];
        y[(0, 2)] = x[(0, 2)] * a;
        y[(1, 0)] = x[(1, 0)];
        y[(1, 1)] = (x[(1, 1)] + x[(2, 2)]) / a;
        y[(1, 2)] = x[(2, 1)];
        y[(2, 0)] = x[(2, 0)] * a;
        y[(2, 1)] = x[(1, 2)];
        y[(2, 2)] = x[(2, 2)] * a + x[(0, 0)] / a;
        y * c(pref)
    }))
}

/// The 4×4 generalization at `α = 1`: each diagonal output entry sums three
/// cyclically consecutive diagonal inputs, and the (3,4) sub-block is transposed.
pub fn phi_d4() -> SuperOperator {
    SuperOperator::from_fn(4, 4, |x| {
        let mut y = x.clone();
        for i in 0..4 {
            y[(i, i)] = x[(i, i)] + x[((i + 1) % 4, (i + 1) % 4)] + x[((i + 2) % 4, (i + 2) % 4)];
        }
        y[(2, 3)] = x[(3, 2)];
        y[(3, 2)] = x[(2, 3)];
        y * c(1.0 / 3.0)
    })
}

/// `e^{0.2 Λ'_1}`, the second-layer seed.
pub fn lambda_tilde() -> SuperOperator {
    let base = lambda_prime(1.0).expect("alpha = 1 is valid");
    let rep = matrix_exp(base.rep(), 0.2).expect("square representation matrix");
    SuperOperator::from_rep(3, 3, rep).expect("3x3 map")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardMap {
    Identity,
    Transposition,
    Reduction,
    ReductionInverse,
    ChoiMap,
}

impl StandardMap {
    pub const ALL: [StandardMap; 5] = [
        StandardMap::Identity,
        StandardMap::Transposition,
        StandardMap::Reduction,
        StandardMap::ReductionInverse,
        StandardMap::ChoiMap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StandardMap::Identity => "identity",
            StandardMap::Transposition => "transposition",
            StandardMap::Reduction => "reduction",
            StandardMap::ReductionInverse => "reduction_inverse",
            StandardMap::ChoiMap => "choi_map",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::UnknownMap(name.to_string()))
    }
}

pub fn standard_map(which: StandardMap, d: usize) -> Result<SuperOperator> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension {d} < 2")));
    }
    Ok(match which {
        StandardMap::Identity => SuperOperator::identity(d),
        StandardMap::Transposition => SuperOperator::from_fn(d, d, |x| x.transpose()),
        StandardMap::Reduction => SuperOperator::from_fn(d, d, |x| identity(d) * trace(x) - x),
        StandardMap::ReductionInverse => {
            SuperOperator::from_fn(d, d, |x| identity(d) * (trace(x) / (d as f64 - 1.0)) - x)
        }
        StandardMap::ChoiMap => {
            if d != 3 {
                return Err(Error::InvalidParameter("the Choi map is defined for d = 3".into()));
            }
            // diag(2x11 + x33, 2x22 + x11, 2x33 + x22) − X
            SuperOperator::from_fn(3, 3, |x| {
                let mut y = -x;
                for i in 0..3 {
                    y[(i, i)] += x[(i, i)] * 2.0 + x[((i + 2) % 3, (i + 2) % 3)];
                }
                y
            })
        }
    })
}

pub fn standard_map_by_name(name: &str, d: usize) -> Result<SuperOperator> {
    standard_map(StandardMap::from_name(name)?, d)
}
