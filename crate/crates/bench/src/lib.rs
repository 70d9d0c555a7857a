//! Shared fixtures for the benchmarks.

use kpos_core::linalg::{random_hermitian, random_psd, CMat};
use kpos_core::qmaps::SuperOperator;
use kpos_core::rng::seeded;
use kpos_core::seeds::{lambda_prime, phi_d4};
use kpos_core::Budget;

pub fn random_hp_map(d: usize, seed: u64) -> SuperOperator {
    SuperOperator::from_choi(d, d, random_hermitian(d * d, &mut seeded(seed))).expect("square Choi")
}

pub fn random_psd_matrix(n: usize, seed: u64) -> CMat {
    random_psd(n, n, &mut seeded(seed))
}

/// Named maps used across benchmark groups.
pub fn fixtures() -> Vec<(&'static str, SuperOperator)> {
    vec![
        ("lambda_prime", lambda_prime(1.0).expect("alpha in range")),
        ("phi_d4", phi_d4()),
        ("random_d3", random_hp_map(3, 1)),
    ]
}

pub fn bench_budget() -> Budget {
    Budget { restarts: 8, samples: 1000, ..Default::default() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_hermitian_preserving() {
        for (name, m) in fixtures() {
            assert!(m.is_hermitian_preserving(1e-12), "{name}");
        }
        assert_eq!(random_psd_matrix(4, 0).nrows(), 4);
    }
}
