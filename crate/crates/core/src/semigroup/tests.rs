use super::*;
use crate::certify::refute_by_sampling;
use crate::linalg::{random_hermitian, random_psd, trace};
use crate::rng::seeded;
use crate::seeds::{lambda_prime, lambda_tilde, phi_d4, standard_map, StandardMap};

fn zero_k(d: usize) -> CMat {
    CMat::zeros(d, d)
}

fn transposition(d: usize) -> SuperOperator {
    standard_map(StandardMap::Transposition, d).unwrap()
}

fn max_diff(a: &SuperOperator, b: &SuperOperator) -> f64 {
    (a.choi() - b.choi()).camax()
}

fn random_hp_map(d: usize, rng: &mut crate::rng::TaskRng) -> SuperOperator {
    SuperOperator::from_choi(d, d, random_hermitian(d * d, rng)).unwrap()
}

fn random_cp_map(d: usize, rng: &mut crate::rng::TaskRng) -> SuperOperator {
    SuperOperator::from_choi(d, d, random_psd(d * d, d * d, rng)).unwrap()
}

#[test]
fn ccp_examples() {
    let id = ccp_test(&SuperOperator::identity(3), 1e-9).unwrap();
    assert!(id.is_ccp);
    let t = ccp_test(&transposition(2), 1e-9).unwrap();
    assert!(!t.is_ccp);
    assert!((t.min_eigenvalue + 1.0).abs() < 1e-12);
    for alpha in [0.5, 1.0] {
        assert!(!ccp_test(&lambda_prime(alpha).unwrap(), 1e-9).unwrap().is_ccp);
    }
    let not_hp = SuperOperator::sandwich(&identity(2), &(identity(2) * C64::new(0.0, 1.0))).unwrap();
    assert!(matches!(ccp_test(&not_hp, 1e-9), Err(Error::NotHermitianPreserving(_))));
}

#[test]
fn zero_generator_is_stationary() {
    let gen = build_generator(&zero_k(3), &SuperOperator::zero(3)).unwrap();
    for t in [0.0, 0.7, 5.0] {
        assert!(max_diff(&evolve(&gen, t).unwrap(), &SuperOperator::identity(3)) < 1e-14);
    }
}

#[test]
fn transposition_closed_form() {
    let gen = build_generator(&(identity(2) * c(-0.5)), &transposition(2)).unwrap();
    for t in [0.5, 1.0, 2.0] {
        let e = (-2.0 * t as f64).exp();
        let expected = SuperOperator::identity(2)
            .scale((1.0 + e) / 2.0)
            .add(&transposition(2).scale((1.0 - e) / 2.0))
            .unwrap();
        assert!(max_diff(&evolve(&gen, t).unwrap(), &expected) < 1e-9);
    }
}

#[test]
fn generator_two_routes_agree() {
    let mut rng = seeded(11);
    let phi = lambda_prime(1.0).unwrap();
    for _ in 0..10 {
        let k = random_k(3, &mut rng);
        assert!((k.norm() - 1.0).abs() < 1e-12);
        let gen = build_generator(&k, &phi).unwrap();
        assert!(gen.verification_residual < 1e-12);
        let x = ginibre(3, 3, &mut rng);
        let via = gen.as_map().apply(&x).unwrap();
        let direct = &k * &x + &x * k.adjoint() + phi.apply(&x).unwrap();
        assert!((via - direct).camax() < 1e-12);
    }
}

#[test]
fn generator_dimension_errors() {
    let phi = lambda_prime(1.0).unwrap();
    assert!(matches!(build_generator(&zero_k(2), &phi), Err(Error::DimensionMismatch(_))));
    let rect = SuperOperator::from_fn(2, 3, |x| CMat::from_fn(3, 3, |i, j| if i < 2 && j < 2 { x[(i, j)] } else { c(0.0) }));
    assert!(build_generator(&zero_k(2), &rect).is_err());
}

#[test]
fn evolve_semigroup_property() {
    let mut rng = seeded(5);
    let gen = build_generator(&random_k(3, &mut rng), &lambda_prime(0.6).unwrap()).unwrap();
    assert!(max_diff(&evolve(&gen, 0.0).unwrap(), &SuperOperator::identity(3)) < 1e-14);
    for (s, t) in [(0.1, 0.3), (0.5, 1.2), (2.0, 0.7)] {
        let lhs = evolve(&gen, s + t).unwrap();
        let rhs = SuperOperator::compose(&evolve(&gen, s).unwrap(), &evolve(&gen, t).unwrap()).unwrap();
        assert!(max_diff(&lhs, &rhs) < 1e-9);
    }
    assert!(evolve(&gen, -0.1).is_err());
}

#[test]
fn tp_generator_preserves_trace() {
    let mut rng = seeded(3);
    let phi = lambda_prime(1.0).unwrap();
    let h = random_hermitian(3, &mut rng);
    for h in [CMat::zeros(3, 3), h] {
        let k = tp_generator_k(&h, &phi).unwrap();
        let gen = build_generator(&k, &phi).unwrap();
        for t in [0.1, 0.5, 1.0] {
            let m = evolve(&gen, t).unwrap();
            let x = ginibre(3, 3, &mut rng);
            assert!((trace(&m.apply(&x).unwrap()) - trace(&x)).norm() < 1e-9);
        }
    }
}

#[test]
fn tp_generator_analytic_cases() {
    let zero = tp_generator_k(&zero_k(3), &SuperOperator::zero(3)).unwrap();
    assert!(zero.norm() == 0.0);
    let d = 3;
    let depol = SuperOperator::from_fn(d, d, |x| identity(d) * trace(x));
    let k = tp_generator_k(&zero_k(d), &depol).unwrap();
    assert!((k - identity(d) * c(-(d as f64) / 2.0)).camax() < 1e-12);
    let mut bad = zero_k(d);
    bad[(0, 1)] = c(1.0);
    assert!(matches!(tp_generator_k(&bad, &depol), Err(Error::NotHermitian(_))));
}

#[test]
fn t_cp_first_layer() {
    let gen = build_generator(&zero_k(3), &lambda_prime(1.0).unwrap()).unwrap();
    let scan = find_t_cp(&gen, 3.0, 50, 1e-9).unwrap();
    let t = scan.t_cp.unwrap();
    assert!((1.85..=2.05).contains(&t), "t_cp = {t}");
    assert!(!scan.seed_is_ccp);
    let l = lambda_min_at(&gen, t).unwrap();
    assert!(l.abs() <= 1e-9, "λ_min at t_cp = {l}");
    // just below the crossing the trajectory is still outside the CP cone
    assert!(lambda_min_at(&gen, t - 1e-4).unwrap() < 0.0);
}

#[test]
fn t_cp_iterated_seed() {
    let gen = build_generator(&zero_k(3), &lambda_tilde()).unwrap();
    let t = find_t_cp(&gen, 10.0, 50, 1e-9).unwrap().t_cp.unwrap();
    assert!((7.3..=8.1).contains(&t), "t_cp = {t}");
}

#[test]
fn t_cp_ccp_seed() {
    let gen = build_generator(&zero_k(3), &SuperOperator::identity(3)).unwrap();
    let scan = find_t_cp(&gen, 3.0, 20, 1e-9).unwrap();
    assert!(scan.seed_is_ccp);
    assert!(scan.t_cp.is_none());
    assert!(scan.crossings.is_empty());
    assert!(scan.grid.iter().all(|&(_, l)| l >= -1e-9));
}

fn d_point(seed: &SuperOperator, t: f64) -> (f64, f64) {
    let d = seed.dim();
    let gen = build_generator(&zero_k(d), seed).unwrap();
    let r = decomposability_d(&evolve(&gen, t).unwrap(), &Tolerances::default()).unwrap();
    (r.d_value, r.threshold)
}

#[test]
fn nd_thresholds_bracket() {
    let cases = [
        (lambda_prime(1.0).unwrap(), 0.40, 0.50),
        (lambda_tilde(), 1.0, 1.2),
        (phi_d4(), 0.20, 0.30),
    ];
    for (seed, below, above) in cases {
        let (d_lo, eps_lo) = d_point(&seed, below);
        assert!(d_lo > eps_lo, "D({below}) = {d_lo:e}");
        let (d_hi, eps_hi) = d_point(&seed, above);
        assert!(d_hi <= eps_hi, "D({above}) = {d_hi:e}");
    }
}

#[test]
fn t_nd_scan_first_layer() {
    let gen = build_generator(&zero_k(3), &lambda_prime(1.0).unwrap()).unwrap();
    let scan = find_t_nd(&gen, 1.0, 20, &Tolerances::default()).unwrap();
    let t = scan.t_nd.unwrap();
    assert!((0.40..=0.50).contains(&t), "t_nd = {t}");
    assert!(scan.grid.iter().all(|p| p.error.is_none()));
    // grid points straddling t_nd agree with the reported boundary
    let below = scan.grid.iter().filter(|p| p.t < t).last().unwrap();
    let above = scan.grid.iter().find(|p| p.t > t + 1e-3).unwrap();
    assert!(below.d_value.unwrap() > below.threshold);
    assert!(above.d_value.unwrap() <= above.threshold);
}

#[test]
fn scan_rejects_bad_grid() {
    let gen = build_generator(&zero_k(2), &transposition(2)).unwrap();
    assert!(find_t_cp(&gen, 0.0, 10, 1e-9).is_err());
    assert!(find_t_nd(&gen, 1.0, 0, &Tolerances::default()).is_err());
}

#[test]
fn positivity_preserved_along_trajectories() {
    let mut rng = seeded(21);
    let phi = lambda_prime(1.0).unwrap();
    for _ in 0..5 {
        let gen = build_generator(&random_k(3, &mut rng), &phi).unwrap();
        for t in [0.1, 0.5, 1.0, 2.0] {
            let v = refute_by_sampling(&evolve(&gen, t).unwrap(), 1, 2000, &mut rng, 1e-9).unwrap();
            assert!(!v.is_refuted(), "refuted at t = {t}");
        }
    }
}

#[test]
fn ccp_equivalence_along_trajectories() {
    let mut rng = seeded(8);
    for _ in 0..20 {
        // CP part plus K(·) + (·)K† is CCP
        let cp = random_cp_map(3, &mut rng);
        let k = ginibre(3, 3, &mut rng);
        let ccp_map = cp.add(&SuperOperator::sandwich(&k, &identity(3)).unwrap()).unwrap()
            .add(&SuperOperator::sandwich(&identity(3), &k).unwrap()).unwrap();
        assert!(ccp_test(&ccp_map, 1e-9).unwrap().is_ccp);
        let gen = build_generator(&zero_k(3), &ccp_map).unwrap();
        for t in [0.5, 1.0, 5.0] {
            let l = min_eigenvalue(evolve(&gen, t).unwrap().choi());
            assert!(l >= -1e-9 * operator_scale(&gen, t), "λ_min = {l} at t = {t}");
        }

        let hp = random_hp_map(3, &mut rng);
        assert!(!ccp_test(&hp, 1e-9).unwrap().is_ccp);
        let gen = build_generator(&zero_k(3), &hp).unwrap();
        let leaves = (1..=10).any(|i| min_eigenvalue(evolve(&gen, 0.01 * i as f64).unwrap().choi()) < -1e-9);
        assert!(leaves);
    }
}

/// Eigenvalue tolerance scaled by the size of the evolved Choi matrix.
fn operator_scale(gen: &GeneratorSpec, t: f64) -> f64 {
    crate::linalg::operator_norm(evolve(gen, t).unwrap().choi()).max(1.0)
}

#[test]
fn decomposable_seeds_stay_decomposable() {
    let mut rng = seeded(31);
    let tols = Tolerances::default();
    let t3 = transposition(3);
    for _ in 0..3 {
        let a = random_cp_map(3, &mut rng);
        let b = random_cp_map(3, &mut rng);
        let seed = a.add(&SuperOperator::compose(&b, &t3).unwrap()).unwrap().scale(0.2);
        let gen = build_generator(&random_k(3, &mut rng), &seed).unwrap();
        for t in [0.25, 1.0, 3.0] {
            let r = decomposability_d(&evolve(&gen, t).unwrap(), &tols).unwrap();
            assert!(r.is_decomposable, "D = {:e} at t = {t}", r.d_value);
        }
    }
}

#[test]
fn threshold_report_json() {
    let gen = build_generator(&zero_k(3), &lambda_prime(1.0).unwrap()).unwrap();
    let rep = scan_thresholds(&gen, 3.0, 10, &Tolerances::default()).unwrap();
    assert_eq!(rep.grid.len(), 10);
    assert!(rep.t_nd.unwrap() <= rep.scan_max);
    let v = serde_json::to_value(&rep).unwrap();
    assert!(v["grid"].as_array().unwrap().len() == 10);
}

#[test]
fn workflow_rejects_decomposable_seeds() {
    let cfg = WorkflowConfig {
        certify: crate::certify::CertifyOptions::new(Tolerances::default(), crate::Budget {
            samples: 500,
            restarts: 4,
            ..Default::default()
        }),
        grid_points: 10,
        ..Default::default()
    };
    for which in [StandardMap::Transposition, StandardMap::Reduction] {
        let seed = standard_map(which, 3).unwrap();
        match run_workflow(&seed, which.name(), &cfg, &mut seeded(1)) {
            Err(Error::SeedRejected(msg)) => assert!(msg.contains("decomposable"), "{msg}"),
            other => panic!("expected rejection, got {:?}", other.map(|v| v.len())),
        }
    }
}

#[test]
fn workflow_first_layer_k0() {
    let cfg = WorkflowConfig {
        certify: crate::certify::CertifyOptions::new(Tolerances::default(), crate::Budget {
            samples: 2000,
            restarts: 8,
            ..Default::default()
        }),
        ..Default::default()
    };
    let out = run_workflow(&lambda_prime(1.0).unwrap(), "lambda_prime:1", &cfg, &mut seeded(2)).unwrap();
    assert_eq!(out.len(), 1);
    let o = &out[0];
    assert!(o.is_valid_seed(), "{:?}", o.checks);
    assert!((0.19..=0.25).contains(&o.t_chosen), "t_chosen = {}", o.t_chosen);
    let j = o.trajectory_json().unwrap();
    assert!(j["map"]["dim_in"] == 3);
    assert!(j["grid"].as_array().unwrap().len() == 50);
}
