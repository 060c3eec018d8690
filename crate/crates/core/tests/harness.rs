use mrlocal::harness::format_report;
use mrlocal::simulator::Pleiotropy;
use mrlocal::{
    monte_carlo, setting_a, setting_e, HarnessMethod, MrLocalConfig, SimulationSetting, Tau0Mode,
};

fn analytic() -> MrLocalConfig {
    MrLocalConfig {
        bootstrap_reps: 0,
        ..MrLocalConfig::default()
    }
}

#[test]
fn valid_instruments_give_nominal_coverage() {
    let setting = SimulationSetting {
        name: "valid".into(),
        pleiotropy: Pleiotropy::Balanced { sigma_pi_sq: 0.0 },
        ..setting_a(0.1)
    };
    let cfg = MrLocalConfig {
        tau0_mode: Tau0Mode::Theory,
        screen: false,
        ..analytic()
    };
    let reports = monte_carlo(&setting, &cfg, &[HarnessMethod::MrLocal], 200, 0).unwrap();
    let r = &reports[&HarnessMethod::MrLocal];
    assert_eq!(r.n_errors, 0);
    let cov = r.coverage.value;
    assert!((0.90..=0.99).contains(&cov), "coverage {cov}");
}

#[test]
fn selected_cluster_is_mostly_valid() {
    let reports = monte_carlo(&setting_a(0.1), &analytic(), &[HarnessMethod::MrLocal], 200, 0).unwrap();
    let vp = reports[&HarnessMethod::MrLocal].valid_prop.value;
    assert!(vp >= 0.9, "valid proportion {vp}");
}

#[test]
fn skewness_variant_covers_under_plurality() {
    let cfg = MrLocalConfig {
        bootstrap_reps: 50,
        ..MrLocalConfig::default()
    };
    let reports = monte_carlo(&setting_a(0.0), &cfg, &[HarnessMethod::MrLocalPlus], 200, 0).unwrap();
    let cov = reports[&HarnessMethod::MrLocalPlus].coverage.value;
    assert!(cov >= 0.90, "coverage {cov}");
}

#[test]
fn cluster_median_beats_pooled_estimate_when_few_are_valid() {
    let methods = [HarnessMethod::ClusterMedian, HarnessMethod::DivwAll];
    let reports = monte_carlo(&setting_e(0.0), &analytic(), &methods, 100, 0).unwrap();
    let med = &reports[&HarnessMethod::ClusterMedian].per_rep;
    let pooled = &reports[&HarnessMethod::DivwAll].per_rep;
    let wins = med
        .iter()
        .zip(pooled)
        .filter(|(m, p)| {
            assert_eq!(m.dataset_hash, p.dataset_hash);
            m.is_ok() && m.beta_hat.abs() < p.beta_hat.abs()
        })
        .count();
    assert!(wins >= 80, "median closer in {wins}/100");
}

#[test]
fn reports_are_reproducible() {
    let methods = [HarnessMethod::MrLocal, HarnessMethod::IvwAll, HarnessMethod::DivwAll];
    let setting = SimulationSetting { p: 400, ..setting_a(0.1) };
    let cfg = MrLocalConfig {
        bootstrap_reps: 5,
        seed: 3,
        ..MrLocalConfig::default()
    };
    let a = format_report(&monte_carlo(&setting, &cfg, &methods, 6, 3).unwrap());
    let b = format_report(&monte_carlo(&setting, &cfg, &methods, 6, 3).unwrap());
    assert_eq!(a, b);
    let c = format_report(&monte_carlo(&setting, &cfg, &methods, 6, 4).unwrap());
    assert_ne!(a, c);
}
