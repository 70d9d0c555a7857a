use kpos_core::certify::CertifyOptions;
use kpos_core::linalg::frobenius;
use kpos_core::rng::seeded;
use kpos_core::seeds::lambda_prime;
use kpos_core::semigroup::{build_generator, find_t_nd, random_k, run_workflow, WorkflowConfig};
use kpos_core::{Budget, Tolerances};

fn quick_config(n_k: usize) -> WorkflowConfig {
    WorkflowConfig {
        n_k,
        grid_points: 30,
        certify: CertifyOptions::new(
            Tolerances::default(),
            Budget { samples: 2000, restarts: 8, ..Default::default() },
        ),
        ..Default::default()
    }
}

#[test]
fn random_k_threshold_band() {
    let seed = lambda_prime(1.0).unwrap();
    let mut rng = seeded(7);
    for _ in 0..10 {
        let k = random_k(3, &mut rng);
        assert!((frobenius(&k) - 1.0).abs() < 1e-12);
        let gen = build_generator(&k, &seed).unwrap();
        let t_nd = find_t_nd(&gen, 1.0, 20, &Tolerances::default()).unwrap().t_nd.expect("crossing below t = 1");
        assert!((0.15..=0.55).contains(&t_nd), "t_nd = {t_nd}");
    }
}

#[test]
fn two_workflow_layers_emit_valid_seeds() {
    let cfg = quick_config(1);
    let first = run_workflow(&lambda_prime(1.0).unwrap(), "lambda_prime:1", &cfg, &mut seeded(3)).unwrap();
    let parent = first.iter().find(|o| o.is_valid_seed()).expect("first layer yields a valid seed");
    let second = run_workflow(&parent.map, "layer1", &cfg, &mut seeded(4)).unwrap();
    assert!(second.iter().any(|o| o.is_valid_seed()));
    for o in &second {
        assert!(o.t_chosen > 0.0);
        assert_eq!(o.seed_id, "layer1");
    }
}

#[test]
fn workflow_is_deterministic() {
    let cfg = quick_config(2);
    let seed = lambda_prime(1.0).unwrap();
    let a = run_workflow(&seed, "s", &cfg, &mut seeded(9)).unwrap();
    let b = run_workflow(&seed, "s", &cfg, &mut seeded(9)).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.trajectory_json().unwrap(), y.trajectory_json().unwrap());
    }
}
