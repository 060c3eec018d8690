use mrlocal::simulator::Pleiotropy;
use mrlocal::{
    cluster, divw, generate, run_mr_local, run_mr_local_plus, setting_a, setting_c, setting_e, uncertainty_test,
    GwasRecord, MrLocalConfig, SelectionPath, SimulationSetting, SummaryDataset,
};
use mrlocal::summary_data::partition_by_strength;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn analytic() -> MrLocalConfig {
    MrLocalConfig {
        bootstrap_reps: 0,
        ..MrLocalConfig::default()
    }
}

fn valid_only(beta: f64) -> SimulationSetting {
    SimulationSetting {
        name: "valid".into(),
        pleiotropy: Pleiotropy::Balanced { sigma_pi_sq: 0.0 },
        ..setting_a(beta)
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[test]
fn plurality_setting_is_estimated_accurately() {
    let setting = setting_a(0.1);
    let mut errs = Vec::new();
    let mut plurality = 0;
    for seed in 0..100 {
        let (ds, _) = generate(&setting, seed).unwrap();
        let est = run_mr_local(&ds, &analytic()).unwrap();
        errs.push((est.beta_hat - 0.1).abs());
        plurality += usize::from(est.path == SelectionPath::Plurality);
    }
    let med = median(errs);
    assert!(med < 0.05, "median abs error {med}");
    assert!(plurality >= 95, "plurality path in {plurality}/100");
}

#[test]
fn true_effect_neighbor_passes_with_valid_instruments() {
    let beta = 0.1;
    let setting = valid_only(beta);
    let mut hits = 0;
    for seed in 0..100 {
        let (ds, _) = generate(&setting, seed).unwrap();
        let est = run_mr_local(&ds, &analytic()).unwrap();
        let grid = &est.diagnostics.grid;
        let nearest = (0..grid.len())
            .min_by(|&i, &j| (grid[i].b - beta).abs().total_cmp(&(grid[j].b - beta).abs()))
            .unwrap();
        hits += usize::from(est.diagnostics.b_set.contains(&nearest));
    }
    assert!(hits >= 95, "true effect neighbour in the candidate set for {hits}/100 seeds");
}

#[test]
fn balanced_pleiotropy_falls_back() {
    let setting = setting_c(0.0);
    let n = 50;
    let fallback = (0..n)
        .filter(|&seed| {
            let (ds, _) = generate(&setting, seed).unwrap();
            run_mr_local(&ds, &analytic()).unwrap().path == SelectionPath::BalancedFallback
        })
        .count();
    let rate = fallback as f64 / n as f64;
    assert!(rate >= 0.95, "balanced fallback rate {rate}");
}

#[test]
fn vanishing_exposure_noise_gives_weighted_wald_mean() {
    let beta = 0.4;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let gd = Normal::new(0.0, 0.05).unwrap();
    let noise = Normal::new(0.0, 1.0).unwrap();
    let recs: Vec<GwasRecord> = (0..400)
        .map(|j| {
            let g: f64 = gd.sample(&mut rng) + 0.02;
            let sy = 0.003 + 0.001 * (j % 7) as f64;
            GwasRecord::new(format!("s{j}"), g, 1e-8, beta * g + sy * noise.sample(&mut rng), sy).unwrap()
        })
        .collect();
    let ds = SummaryDataset::new(recs).unwrap();
    let est = run_mr_local(&ds, &analytic()).unwrap();
    assert_eq!(est.path, SelectionPath::Plurality);

    let (mut num, mut den) = (0.0, 0.0);
    for &j in &est.selected_cluster {
        let r = &ds.records()[j];
        let w = (r.gamma_d_hat / r.sigma_y).powi(2);
        num += w * r.gamma_y_hat / r.gamma_d_hat;
        den += w;
    }
    assert!((est.beta_hat - num / den).abs() < 1e-6, "{} vs {}", est.beta_hat, num / den);
}

#[test]
fn skewness_gate_only_removes_candidates() {
    for seed in 0..5 {
        let (ds, _) = generate(&setting_a(0.1), seed).unwrap();
        let base = run_mr_local(&ds, &analytic()).unwrap();
        let plus = run_mr_local_plus(&ds, &analytic()).unwrap();
        let base_set = base.diagnostics.b_values();
        for b in plus.diagnostics.b_values() {
            assert!(base_set.contains(&b), "seed {seed}: {b} passes the gated test only");
        }
    }
}

#[test]
fn looser_slack_only_adds_candidates() {
    for seed in 0..5 {
        let (ds, _) = generate(&setting_a(0.1), seed).unwrap();
        let tight = uncertainty_test(&ds, &analytic()).unwrap();
        let loose = uncertainty_test(
            &ds,
            &MrLocalConfig {
                slack: Some(2.0 * tight.gate.slack),
                ..analytic()
            },
        )
        .unwrap();
        assert!(tight.b_set.iter().all(|i| loose.b_set.contains(i)));
        assert!(loose.b_set.len() >= tight.b_set.len());
    }
}

#[test]
fn reported_cluster_can_be_recomputed() {
    for seed in 0..5 {
        let (ds, _) = generate(&setting_a(0.1), seed).unwrap();
        let cfg = analytic();
        let est = run_mr_local(&ds, &cfg).unwrap();
        let b = est.selected_b.unwrap();

        let (kept, removed) = partition_by_strength(&ds, est.tau0).unwrap();
        assert_eq!(kept, est.instruments);
        assert_eq!(removed, est.screened_out);
        let screened = ds.subset(&kept).unwrap();
        let members: Vec<usize> = cluster(&screened, b, est.tau0).into_iter().map(|i| kept[i]).collect();
        assert_eq!(members, est.selected_cluster);
        assert_eq!(divw(&ds, &members).unwrap(), est.beta_hat);
    }
}

#[test]
fn few_valid_instruments_beat_pooled_estimate() {
    let setting = setting_e(0.0);
    let (mut local, mut pooled) = (0.0, 0.0);
    for seed in 0..30 {
        let (ds, _) = generate(&setting, seed).unwrap();
        local += run_mr_local(&ds, &analytic()).unwrap().beta_hat.abs();
        let all: Vec<usize> = (0..ds.len()).collect();
        pooled += divw(&ds, &all).unwrap().abs();
    }
    assert!(local < pooled, "MAE {} vs pooled {}", local / 30.0, pooled / 30.0);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (ds, _) = generate(&setting_a(0.1), 3).unwrap();
    let cfg = MrLocalConfig {
        bootstrap_reps: 20,
        seed: 5,
        ..MrLocalConfig::default()
    };
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| run_mr_local(&ds, &cfg).unwrap())
    };
    let one = run(1);
    for n in [2, 4] {
        assert_eq!(one, run(n));
    }
}
