use mrlocal::{bootstrap_se, generate, run_mr_local, setting_a, GwasRecord, MrLocalConfig, SummaryDataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn cfg(seed: u64) -> MrLocalConfig {
    MrLocalConfig {
        bootstrap_reps: 0,
        seed,
        ..MrLocalConfig::default()
    }
}

#[test]
fn noiseless_data_has_negligible_bootstrap_se() {
    // 0.5 lies exactly on the default grid, so the cluster is found despite tiny errors
    let beta = 0.5;
    let s = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let eps = Normal::new(0.0, 1.0).unwrap();
    let recs: Vec<GwasRecord> = (0..400)
        .map(|j| {
            let g = 0.02 + 0.0001 * j as f64;
            let gd = g + s * eps.sample(&mut rng);
            let gy = beta * g + s * eps.sample(&mut rng);
            GwasRecord::new(format!("s{j}"), gd, s, gy, s).unwrap()
        })
        .collect();
    let ds = SummaryDataset::new(recs).unwrap();
    let boot = bootstrap_se(&ds, &cfg(1), 50).unwrap();
    assert!(boot.n_success >= 2);
    assert!(boot.se < 1e-6, "se {}", boot.se);
}

#[test]
fn bootstrap_se_is_within_factor_two_of_spread() {
    let setting = setting_a(0.1);
    let betas: Vec<f64> = (0..100)
        .map(|seed| {
            let (ds, _) = generate(&setting, seed).unwrap();
            run_mr_local(&ds, &cfg(0)).unwrap().beta_hat
        })
        .collect();
    let m = betas.iter().sum::<f64>() / betas.len() as f64;
    let spread = (betas.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (betas.len() - 1) as f64).sqrt();

    for seed in 1000..1003 {
        let (ds, _) = generate(&setting, seed).unwrap();
        let boot = bootstrap_se(&ds, &cfg(seed), 200).unwrap();
        let ratio = boot.se / spread;
        assert!((0.5..=2.0).contains(&ratio), "seed {seed}: bootstrap {} vs spread {spread}", boot.se);
    }
}

#[test]
fn replicate_estimates_are_reproducible() {
    let (ds, _) = generate(&setting_a(0.1), 8).unwrap();
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| bootstrap_se(&ds, &cfg(42), 12).unwrap())
    };
    let first = run(1);
    assert_eq!(first.estimates.len(), first.n_success);
    assert_eq!(first, run(1));
    assert_eq!(first, run(3));
    assert_ne!(first.estimates, bootstrap_se(&ds, &cfg(43), 12).unwrap().estimates);
}
