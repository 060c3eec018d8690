//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::f64::consts::PI;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use mrlocal::simulator::Pleiotropy;
use mrlocal::{
    divw, divw_variance_balanced, divw_variance_plurality, generate, monte_carlo, setting_a, setting_c, setting_e,
    trunc_normal_moments, GwasRecord, HarnessMethod, MrLocalConfig, SimulationSetting, SummaryDataset, Tau0Mode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

type Criterion = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, 1e-15, 50)
}

fn criterion_1() -> Outcome {
    let tau0 = 1.6;
    let m = trunc_normal_moments(tau0).unwrap();
    let mass = adaptive_simpson(&phi, -tau0, tau0);
    let g_ref = adaptive_simpson(&|z| z * z * phi(z), -tau0, tau0) / mass;
    let g_err = (m.g - g_ref).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000_000usize;
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    let mut k = 0;
    while k < n {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= tau0 {
            let q = z * z / m.g;
            s1 += q;
            s2 += q * q;
            k += 1;
        }
    }
    let mean = s1 / n as f64;
    let var_mc = s2 / n as f64 - mean * mean;
    let v_err = (m.sigma_q_sq() - var_mc).abs();
    outcome(
        g_err <= 1e-10 && v_err <= 1e-2,
        format!(
            "g(1.6)={:.12} vs quadrature {:.12} (err {g_err:.1e}); sigma_Q^2={:.6} vs Monte Carlo {var_mc:.6} (err {v_err:.1e})",
            m.g,
            g_ref,
            m.sigma_q_sq()
        ),
    )
}

struct NaiveRow {
    gd: f64,
    sd: f64,
    gy: f64,
    sy: f64,
}

fn naive_divw(rows: &[NaiveRow]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for r in rows {
        num += r.gd * r.gy / (r.sy * r.sy);
        den += (r.gd * r.gd - r.sd * r.sd) / (r.sy * r.sy);
    }
    num / den
}

fn naive_variance(rows: &[NaiveRow], beta: f64, s_pi: f64) -> f64 {
    let mut num = 0.0;
    for r in rows {
        num += ((r.sy * r.sy + s_pi) * r.gd * r.gd + beta * beta * r.sd * r.sd * (r.gd * r.gd + r.sd * r.sd))
            / r.sy.powi(4);
    }
    // squared denominator as an explicit double sum
    let mut den_sq = 0.0;
    for a in rows {
        for b in rows {
            den_sq += (a.gd * a.gd - a.sd * a.sd) / (a.sy * a.sy) * (b.gd * b.gd - b.sd * b.sd) / (b.sy * b.sy);
        }
    }
    num / den_sq
}

fn naive_pleiotropy(rows: &[NaiveRow], beta: f64) -> f64 {
    let mut num = 0.0;
    let mut w = 0.0;
    for r in rows {
        let e = r.gy - beta * r.gd;
        num += (e * e - r.sy * r.sy - beta * beta * r.sd * r.sd) / (r.sy * r.sy);
        w += 1.0 / (r.sy * r.sy);
    }
    num / w
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = rng.random_range(2..=100);
        let beta = rng.random_range(0.2..2.0);
        let rows: Vec<NaiveRow> = (0..p)
            .map(|_| {
                let sd = rng.random_range(0.005..0.02);
                let sy = rng.random_range(0.005..0.02);
                let gd = rng.random_range(0.05..0.3) * if rng.random::<bool>() { 1.0 } else { -1.0 };
                let pi = 0.1 * rng.sample::<f64, _>(StandardNormal);
                NaiveRow {
                    gd,
                    sd,
                    gy: beta * gd + pi + sy * rng.sample::<f64, _>(StandardNormal),
                    sy,
                }
            })
            .collect();
        let recs = rows
            .iter()
            .enumerate()
            .map(|(j, r)| GwasRecord::new(format!("s{j}"), r.gd, r.sd, r.gy, r.sy).unwrap())
            .collect();
        let ds = SummaryDataset::new(recs).unwrap();
        let all: Vec<usize> = (0..p).collect();

        let b = divw(&ds, &all).unwrap();
        let b_ref = naive_divw(&rows);
        let v = divw_variance_plurality(&ds, &all, b).unwrap();
        let v_ref = naive_variance(&rows, b, 0.0);
        let bal = divw_variance_balanced(&ds, &all, b).unwrap();
        let s_ref = naive_pleiotropy(&rows, b);
        let vb_ref = naive_variance(&rows, b, s_ref.max(0.0));
        for e in [
            rel(b, b_ref),
            rel(v, v_ref),
            rel(bal.sigma_pi_sq_raw, s_ref),
            rel(bal.var_beta, vb_ref),
        ] {
            worst = worst.max(e);
        }
    }
    outcome(
        worst <= 1e-12,
        format!("1000 datasets, worst relative difference {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let cfg = MrLocalConfig {
        bootstrap_reps: 100,
        ..MrLocalConfig::default()
    };
    let reports = monte_carlo(&setting_c(0.0), &cfg, &[HarnessMethod::MrLocal], 200, 0).unwrap();
    let r = &reports[&HarnessMethod::MrLocal];
    let empty = r.empty_b_rate.value;
    let cov = r.coverage.value;
    outcome(
        empty >= 0.95 && (0.89..=0.99).contains(&cov),
        format!(
            "setting c, beta=0: empty candidate set rate {empty:.3} (need >= 0.95), coverage {cov:.3} (need [0.89, 0.99]), errors {}",
            r.n_errors
        ),
    )
}

fn criterion_4() -> Outcome {
    let cfg = MrLocalConfig {
        bootstrap_reps: 100,
        ..MrLocalConfig::default()
    };
    let reports = monte_carlo(&setting_a(0.1), &cfg, &[HarnessMethod::MrLocal], 200, 0).unwrap();
    let r = &reports[&HarnessMethod::MrLocal];
    let cov = r.coverage.value;
    let vp = r.valid_prop.value;
    outcome(
        cov >= 0.95 && vp >= 0.90,
        format!(
            "setting a, beta=0.1: coverage {cov:.3} (need >= 0.95), valid proportion {vp:.3} (need >= 0.90), mean sd {:.4}, errors {}",
            r.mean_sd.value, r.n_errors
        ),
    )
}

fn criterion_5() -> Outcome {
    // point estimates do not depend on the bootstrap
    let cfg = MrLocalConfig {
        bootstrap_reps: 0,
        ..MrLocalConfig::default()
    };
    let methods = [HarnessMethod::MrLocal, HarnessMethod::IvwAll, HarnessMethod::DivwAll];
    let reports = monte_carlo(&setting_e(0.0), &cfg, &methods, 200, 0).unwrap();
    let mae = |m| reports[&m].mae.value;
    let (local, ivw, divw_all) = (mae(HarnessMethod::MrLocal), mae(HarnessMethod::IvwAll), mae(HarnessMethod::DivwAll));
    outcome(
        local < ivw && local < divw_all,
        format!("setting e, beta=0: MAE MRLocal {local:.4}, IVW_all {ivw:.4}, dIVW_all {divw_all:.4}"),
    )
}

fn criterion_6() -> Outcome {
    let setting = setting_a(0.0);
    let k: f64 = (0..20).map(|seed| generate(&setting, seed).unwrap().1.kappa).sum::<f64>() / 20.0;
    outcome(
        (k - 6.25).abs() <= 0.5,
        format!("average instrument strength over 20 seeds {k:.4} (need 6.25 +/- 0.5)"),
    )
}

/// Asymptotic Kolmogorov p-value with the small-sample correction of Stephens.
fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_normal(mut z: Vec<f64>) -> f64 {
    let n = Normal::standard();
    z.sort_by(f64::total_cmp);
    let len = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = n.cdf(x);
            (f - i as f64 / len).max((i + 1) as f64 / len - f)
        })
        .fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    let setting = SimulationSetting {
        name: "valid".into(),
        p: 500,
        pleiotropy: Pleiotropy::Balanced { sigma_pi_sq: 0.0 },
        ..setting_a(0.1)
    };
    let cfg = MrLocalConfig {
        tau0_mode: Tau0Mode::Theory,
        screen: false,
        bootstrap_reps: 0,
        ..MrLocalConfig::default()
    };
    let reports = monte_carlo(&setting, &cfg, &[HarnessMethod::MrLocal], 500, 0).unwrap();
    let r = &reports[&HarnessMethod::MrLocal];
    let z: Vec<f64> = r
        .per_rep
        .iter()
        .filter(|x| x.is_ok())
        .map(|x| (x.beta_hat - 0.1) / x.sigma_hat)
        .collect();
    let n = z.len();
    let d = ks_normal(z);
    let p = ks_p_value(d, n);
    outcome(
        p >= 0.01 && r.n_errors == 0,
        format!("{n} z-scores, KS distance {d:.4}, p-value {p:.4} (need >= 0.01), errors {}", r.n_errors),
    )
}

fn criterion_8() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let run = |name: &str, threads: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_mrlocal"));
        if let Some(t) = threads {
            cmd.args(["--threads", t]);
        }
        let status = cmd
            .args([
                "benchmark",
                "--setting",
                "a",
                "--beta",
                "0.1",
                "--p",
                "500",
                "--reps",
                "12",
                "--methods",
                "MRLocal,MRLocalPlus,dIVW_all,IVW_all,cluster_median",
                "--bootstrap",
                "10",
                "--seed",
                "17",
                "--output",
            ])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        let per_rep = dir.path().join(name.replace(".tsv", ".per_rep.tsv"));
        (fs::read(&out).unwrap(), fs::read(per_rep).unwrap())
    };
    let reference = run("r0.tsv", None);
    let mut same = 0;
    let mut total = 0;
    for (i, threads) in [None, None, Some("1"), Some("4"), Some("8")].into_iter().enumerate() {
        total += 1;
        same += usize::from(run(&format!("r{}.tsv", i + 1), threads) == reference);
    }
    outcome(
        same == total,
        format!("{same}/{total} reruns byte-identical (3 default runs, threads 1/4/8)"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("truncated-normal moments", criterion_1),
        ("dIVW against naive references", criterion_2),
        ("balanced pleiotropy detected", criterion_3),
        ("plurality coverage and valid share", criterion_4),
        ("few valid instruments", criterion_5),
        ("simulated instrument strength", criterion_6),
        ("valid-instrument null calibration", criterion_7),
        ("benchmark determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!(
            "criterion {} {tag}: {name}: {} [{:.1}s]",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
