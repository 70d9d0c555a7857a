use kpos_core::certify::{
    certify_kpos, hopm_run, seesaw_bilinear, seesaw_run, tensor_spectral_bound, CertifyOptions,
};
use kpos_core::linalg::{
    c, eigh, hs_inner, kron, kron_vec, ky_fan_norm, matrix_exp, min_eigenvalue, operator_norm,
    partial_trace_weighted, partial_transpose, quadratic_form, random_hermitian, random_psd,
    random_unit_vector, trace, trace_norm, unvec, BipartiteShape, Subsystem,
};
use kpos_core::qmaps::{link_product, shifted_stinespring, ReprKind, SuperOperator};
use kpos_core::rng::{seeded, TaskRng};
use kpos_core::sdp::{decomposability_d, f_relaxation, ppt2_joint, SolverOptions};
use kpos_core::seeds::{standard_map, StandardMap};
use kpos_core::{Budget, Tolerances};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x6b70_6f73),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn random_hp(d: usize, rng: &mut TaskRng) -> SuperOperator {
    SuperOperator::from_choi(d, d, random_hermitian(d * d, rng)).unwrap()
}

fn random_cp(d: usize, rng: &mut TaskRng) -> SuperOperator {
    SuperOperator::from_choi(d, d, random_psd(d * d, d * d, rng)).unwrap()
}

fn small_budget() -> Budget {
    Budget { restarts: 4, samples: 500, ..Default::default() }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn weighted_partial_trace_identity(seed: u64, da in 2usize..4, db in 2usize..4) {
        let mut rng = seeded(seed);
        let shape = BipartiteShape::new(da, db);
        let y = kpos_core::linalg::ginibre(da * db, da * db, &mut rng);
        let w = kpos_core::linalg::ginibre(da, da, &mut rng);
        let z = kpos_core::linalg::ginibre(db, db, &mut rng);
        let lhs = trace(&(&z * partial_trace_weighted(&y, shape, Subsystem::First, Some(&w)).unwrap()));
        let rhs = trace(&(kron(&w, &z) * &y));
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn weighted_partial_trace_keeps_psd(seed: u64, da in 2usize..4, db in 2usize..4) {
        let mut rng = seeded(seed);
        let shape = BipartiteShape::new(da, db);
        let y = random_psd(da * db, 1 + (seed as usize) % (da * db), &mut rng);
        let w = random_psd(da, da, &mut rng);
        for sub in [Subsystem::First, Subsystem::Second] {
            let wt = if sub == Subsystem::First { w.clone() } else { random_psd(db, db, &mut rng) };
            let r = partial_trace_weighted(&y, shape, sub, Some(&wt)).unwrap();
            prop_assert!(min_eigenvalue(&r) >= -1e-12 * (1.0 + operator_norm(&r)));
        }
    }

    #[test]
    fn ky_fan_monotone_with_endpoints(seed: u64, n in 2usize..6) {
        let b = kpos_core::linalg::ginibre(n, n, &mut seeded(seed));
        let values: Vec<f64> = (1..=n).map(|k| ky_fan_norm(&b, k).unwrap()).collect();
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        prop_assert!((values[0] - operator_norm(&b)).abs() < 1e-10);
        prop_assert!((values[n - 1] - trace_norm(&b)).abs() < 1e-10);
    }

    #[test]
    fn matrix_exp_semigroup(seed: u64, s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let mut rng = seeded(seed);
        let a = kpos_core::linalg::ginibre(4, 4, &mut rng) * c(0.3);
        let lhs = matrix_exp(&a, s + t).unwrap();
        let rhs = matrix_exp(&a, s).unwrap() * matrix_exp(&a, t).unwrap();
        prop_assert!((&lhs - &rhs).camax() < 1e-9 * (1.0 + lhs.camax()));
    }

    #[test]
    fn pure_state_partial_transpose_negativity(seed: u64, d in 2usize..4) {
        let v = random_unit_vector(d * d, &mut seeded(seed));
        let rho = &v * v.adjoint();
        let pt = partial_transpose(&rho, BipartiteShape::square(d), Subsystem::Second).unwrap();
        let negatives = eigh(&pt).values.iter().filter(|&&x| x < -1e-12).count();
        prop_assert!(negatives <= (d - 1) * (d - 1));
    }

    #[test]
    fn choi_quadratic_form_matches_rep_pairing(seed: u64, d in 2usize..4) {
        let mut rng = seeded(seed);
        let m = random_hp(d, &mut rng);
        let z = random_unit_vector(d * d, &mut rng);
        // z indexes (input j, output i); unvec gives the d_out x d_in matrix X
        let x = unvec(&z, d, d);
        let lhs = quadratic_form(m.choi(), &z);
        let rhs = hs_inner(&kron(&x.map(|e| e.conj()), &x), m.rep());
        prop_assert!((lhs - rhs).norm() < 1e-11);
    }

    #[test]
    fn conversions_preserve_choi(seed: u64, d in 2usize..4) {
        let m = random_cp(d, &mut seeded(seed));
        for repr in [ReprKind::Rep, ReprKind::Kraus, ReprKind::Stinespring, ReprKind::Choi] {
            let back = m.convert(repr, 1e-12).unwrap().convert(ReprKind::Choi, 1e-12).unwrap();
            prop_assert!((back.choi() - m.choi()).camax() < 1e-11);
        }
    }

    #[test]
    fn link_product_is_composition(seed: u64) {
        let mut rng = seeded(seed);
        let (a, b) = (random_cp(3, &mut rng), random_cp(3, &mut rng));
        let link = link_product(a.choi(), b.choi(), 3).unwrap();
        let comp = SuperOperator::compose(&a, &b).unwrap();
        prop_assert!((link - comp.choi()).camax() < 1e-10 * (1.0 + comp.choi().camax()));
    }

    #[test]
    fn hopm_and_seesaw_histories_are_monotone(seed: u64) {
        let mut rng = seeded(seed);
        let m = random_hp(3, &mut rng);
        let (op, _) = shifted_stinespring(&m, 1, 1e-12).unwrap();
        let ks = op.kraus().operators;
        let b = Budget::default();
        let h = hopm_run(
            &ks,
            random_unit_vector(3, &mut rng),
            random_unit_vector(ks.len(), &mut rng),
            random_unit_vector(3, &mut rng),
            &b,
        );
        prop_assert!(h.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let s = seesaw_run(m.choi(), 3, random_unit_vector(3, &mut rng), random_unit_vector(3, &mut rng), &b).unwrap();
        prop_assert!(s.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn separable_expectations_below_tensor_bound(seed: u64) {
        let mut rng = seeded(seed);
        let m = random_hp(3, &mut rng);
        let best = tensor_spectral_bound(&m, 1, &Budget { restarts: 16, ..Default::default() }, &mut rng)
            .unwrap()
            .best_maximizer_value;
        let (op, _) = shifted_stinespring(&m, 1, 1e-12).unwrap();
        let vv = &op.v * op.v.adjoint();
        for _ in 0..200 {
            let x = random_unit_vector(3, &mut rng);
            let y = random_unit_vector(op.env_dim, &mut rng);
            let val = quadratic_form(&vv, &kron_vec(&x, &y)).re;
            prop_assert!(val <= best * best + 1e-6, "{} > {}", val, best * best);
        }
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn refutations_are_sound_and_monotone(seed: u64, d in 2usize..4, k0 in 1usize..3) {
        let mut rng = seeded(seed);
        let m = random_hp(d, &mut rng);
        let k = k0.min(d);
        let opts = CertifyOptions::new(Tolerances::default(), small_budget());
        let v = certify_kpos(&m, k, &opts, &mut rng).unwrap();
        if v.is_refuted() {
            let w = v.witness.as_ref().unwrap();
            prop_assert!(w.evaluate(&m) < -opts.tols.eps_psd);
            prop_assert!(w.schmidt_rank(d, 1e-9).unwrap() <= k);
            if k < d {
                let up = certify_kpos(&m, k + 1, &opts, &mut rng).unwrap();
                prop_assert!(!up.is_certified());
            }
        }
    }

    #[test]
    fn f_relaxation_below_seesaw(seed: u64, d in 2usize..4, k0 in 1usize..3) {
        let mut rng = seeded(seed);
        let m = random_hp(d, &mut rng);
        let k = if d == 3 { 1 } else { k0 };
        let f = f_relaxation(&m, k, SolverOptions::with_tol(Tolerances::default().solver_tol)).unwrap().value;
        let s = seesaw_bilinear(&m, k, &Budget { restarts: 8, ..Default::default() }, &mut rng)
            .unwrap()
            .best_maximizer_value;
        prop_assert!(f <= s + 1e-6, "F = {} > seesaw = {}", f, s);
    }

    #[test]
    fn cp_plus_cocp_is_decomposable(seed: u64, d in 2usize..4) {
        let mut rng = seeded(seed);
        let t = standard_map(StandardMap::Transposition, d).unwrap();
        let m = random_cp(d, &mut rng)
            .add(&SuperOperator::compose(&random_cp(d, &mut rng), &t).unwrap())
            .unwrap();
        let r = decomposability_d(&m, &Tolerances::default()).unwrap();
        prop_assert!(r.is_decomposable, "D = {:e}", r.d_value);
    }

    #[test]
    fn decomposition_reconstructs_choi(seed: u64, d in 2usize..4) {
        let m = random_hp(d, &mut seeded(seed));
        let r = decomposability_d(&m, &Tolerances::default()).unwrap();
        let shape = BipartiteShape::square(d);
        let rebuilt = &r.p1 + partial_transpose(&r.p2, shape, Subsystem::Second).unwrap() + &r.s;
        prop_assert!((rebuilt - m.choi()).camax() < 1e-10);
        prop_assert!((trace_norm(&r.s) - r.d_value).abs() < 1e-12);
        prop_assert!(r.dual_bound <= r.d_value + 1e-6 * (1.0 + r.d_value));
        prop_assert!(min_eigenvalue(&r.p1) >= -1e-12 && min_eigenvalue(&r.p2) >= -1e-12);
    }

    #[test]
    fn ppt2_joint_scales_with_normalization(seed: u64) {
        let m = random_hp(2, &mut seeded(seed));
        let tols = Tolerances::default();
        let full = ppt2_joint(&m, 2.0, &tols).unwrap().value;
        let zero = ppt2_joint(&m, 0.0, &tols).unwrap().value;
        prop_assert!(zero.abs() < 1e-6);
        for s in [1e-3, 0.1, 1.0] {
            let v = ppt2_joint(&m, s, &tols).unwrap().value;
            prop_assert!((v - full * s / 2.0).abs() < 1e-5 * (1.0 + full), "{} at {}", v, s);
        }
    }
}
