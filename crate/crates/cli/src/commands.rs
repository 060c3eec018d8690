use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mrlocal::harness::{write_per_rep, write_report, HarnessMethod};
use mrlocal::simulator::{named_setting, save_truth_tsv, SimulationSetting};
use mrlocal::summary_data::{load_summary_tsv, partition_by_strength, write_summary_tsv, ValidationReport};
use mrlocal::{generate, monte_carlo, run_mr_local, uncertainty_test, CandidateSet, MrLocalConfig, SelectionPath, SummaryDataset, Tau0Mode};

use crate::SettingArgs;

const BALANCED_HINT: &str = "no candidate effect passed the uncertainty test; the pleiotropic effects may be balanced, so the pooled estimate under balanced pleiotropy is likely the more reliable one";

/// `dir/stem.<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load(input: &Path) -> Result<SummaryDataset> {
    let (ds, report) = load_summary_tsv(input).with_context(|| format!("loading {}", input.display()))?;
    warn_rejections(&report);
    Ok(ds)
}

fn warn_rejections(report: &ValidationReport) {
    for (line, reason) in &report.rejection_reasons {
        eprintln!("warning: line {line} skipped: {reason}");
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("NA".into(), |v| v.to_string())
}

fn config_block(out: &mut String, cfg: &MrLocalConfig, tau0: f64, grid: usize, slack: f64) {
    let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    kv("c_beta", cfg.c_beta.to_string());
    kv("tau0_mode", cfg.tau0_mode.to_string());
    kv("tau0", tau0.to_string());
    kv("grid", grid.to_string());
    kv("alpha", cfg.alpha.to_string());
    kv("plus", cfg.use_plus.to_string());
    kv("screen", cfg.screen.to_string());
    kv("bootstrap", cfg.bootstrap_reps.to_string());
    kv("seed", cfg.seed.to_string());
    kv("slack", slack.to_string());
}

fn profile_tsv(cand: &CandidateSet) -> String {
    let mut s = String::from("b\tsize\tq\tskew\tpassed_uncertainty\tpassed_size\tin_b_set\n");
    let mut in_set = vec![false; cand.grid.len()];
    for &i in &cand.b_set {
        in_set[i] = true;
    }
    for (e, inb) in cand.grid.iter().zip(in_set) {
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            e.b,
            e.size(),
            fmt_opt((!e.q.is_nan()).then_some(e.q)),
            fmt_opt(e.skew),
            u8::from(e.passed_uncertainty),
            u8::from(e.passed_size),
            u8::from(inb)
        )
        .unwrap();
    }
    s
}

pub fn analyze(input: &Path, output: &Path, cfg: &MrLocalConfig) -> Result<()> {
    cfg.validate()?;
    let ds = load(input)?;
    let est = run_mr_local(&ds, cfg)?;
    let cand = &est.diagnostics;

    let mut out = String::new();
    writeln!(out, "[input]").unwrap();
    writeln!(out, "file = {}", input.display()).unwrap();
    writeln!(out, "n_records = {}", ds.len()).unwrap();
    writeln!(out, "n_screened_out = {}", est.screened_out.len()).unwrap();
    writeln!(out, "n_instruments = {}", est.instruments.len()).unwrap();
    writeln!(out, "\n[config]").unwrap();
    config_block(&mut out, cfg, est.tau0, cand.grid.len(), cand.gate.slack);

    writeln!(out, "\n[result]").unwrap();
    let se_kind = if est.bootstrap.is_some() { "bootstrap" } else { "analytic" };
    let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    kv("beta_hat", est.beta_hat.to_string());
    kv("se", est.sigma_hat.to_string());
    kv("se_kind", se_kind.into());
    kv("se_analytic", est.sigma_analytic.to_string());
    kv("ci_low", est.ci_low.to_string());
    kv("ci_high", est.ci_high.to_string());
    kv("path", est.path.to_string());
    kv("b_set_empty", est.b_set_empty().to_string());
    kv("b_set_size", cand.b_set.len().to_string());
    kv("selected_b", fmt_opt(est.selected_b));
    kv("cluster_size", est.selected_cluster.len().to_string());
    kv("kappa", est.kappa.to_string());
    kv("sigma_pi_sq", fmt_opt(est.sigma_pi_sq));
    kv("bootstrap_success", est.bootstrap.as_ref().map_or(0, |b| b.n_success).to_string());
    kv("bootstrap_failed", est.bootstrap.as_ref().map_or(0, |b| b.n_failed).to_string());
    kv("bootstrap_error", est.bootstrap_error.clone().unwrap_or_else(|| "NA".into()));
    let hint = (est.path == SelectionPath::BalancedFallback).then_some(BALANCED_HINT);
    kv("hint", hint.unwrap_or("NA").into());
    let ids: Vec<&str> = est
        .selected_cluster
        .iter()
        .map(|&j| ds.records()[j].snp_id.as_str())
        .collect();
    kv("cluster_snps", ids.join(","));

    write_file(output, &out)?;
    write_file(&sibling(output, "profile.tsv"), &profile_tsv(cand))?;
    if let Some(h) = hint {
        eprintln!("note: {h}");
    }
    if let Some(e) = &est.bootstrap_error {
        eprintln!("warning: bootstrap failed ({e}); reporting the analytic standard error");
    }
    Ok(())
}

fn resolve_setting(args: &SettingArgs) -> Result<SimulationSetting> {
    let mut s = if args.setting == "file" {
        let Some(path) = &args.input else {
            bail!("--setting file needs --input <setting file>");
        };
        let mut s = SimulationSetting::load(path).with_context(|| format!("loading {}", path.display()))?;
        if let Some(b) = args.beta {
            s.beta = b;
        }
        s
    } else {
        named_setting(&args.setting, args.beta.unwrap_or(0.0))?
    };
    if let Some(p) = args.p {
        s.p = p;
    }
    if let Some(n) = args.nd {
        s.n_d = n;
    }
    if let Some(n) = args.ny {
        s.n_y = n;
    }
    s.validate()?;
    Ok(s)
}

pub fn simulate(args: &SettingArgs, seed: u64, output: &Path) -> Result<()> {
    let setting = resolve_setting(args)?;
    let (ds, truth) = generate(&setting, seed)?;
    write_summary_tsv(&ds, output)?;
    save_truth_tsv(&ds, &truth, sibling(output, "truth.tsv"))?;
    let mut cfg = setting.to_config();
    writeln!(cfg, "seed = {seed}").unwrap();
    write_file(&sibling(output, "setting.txt"), &cfg)
}

fn parse_methods(list: &str) -> Result<Vec<HarnessMethod>> {
    let methods = list
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(|m| m.parse::<HarnessMethod>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    Ok(methods)
}

pub fn benchmark(args: &SettingArgs, reps: usize, methods: &str, output: &Path, cfg: &MrLocalConfig) -> Result<()> {
    let setting = resolve_setting(args)?;
    let methods = parse_methods(methods)?;
    let reports = monte_carlo(&setting, cfg, &methods, reps, cfg.seed)?;
    write_report(&reports, output)?;
    write_per_rep(&reports, sibling(output, "per_rep.tsv"))?;

    let mut text = String::from("[setting]\n");
    text.push_str(&setting.to_config());
    writeln!(text, "\n[run]\nreps = {reps}\nmaster_seed = {}", cfg.seed).unwrap();
    let names: Vec<String> = reports.keys().map(|m| m.to_string()).collect();
    writeln!(text, "methods = {}", names.join(",")).unwrap();
    writeln!(text, "\n[config]").unwrap();
    let tau0 = match cfg.tau0_mode {
        Tau0Mode::Fixed => cfg.tau0.to_string(),
        Tau0Mode::Theory => "theory".into(),
    };
    writeln!(
        text,
        "c_beta = {}\ntau0_mode = {}\ntau0 = {tau0}\ngrid = {}\nalpha = {}\nplus = {}\nscreen = {}\nbootstrap = {}\nslack = {}",
        cfg.c_beta,
        cfg.tau0_mode,
        cfg.grid_size.map_or("max(p,2000)".into(), |g| g.to_string()),
        cfg.alpha,
        cfg.use_plus,
        cfg.screen,
        cfg.bootstrap_reps,
        fmt_opt(cfg.slack).replace("NA", "1/log(p)")
    )
    .unwrap();
    write_file(&sibling(output, "config.txt"), &text)
}

pub fn density(input: &Path, output: &Path, cfg: &MrLocalConfig) -> Result<()> {
    cfg.validate()?;
    let ds = load(input)?;
    let mut s = String::from("snp\tratio\tweight\n");
    for r in &ds {
        let w = (r.gamma_d_hat / r.sigma_y).powi(2);
        writeln!(s, "{}\t{}\t{}", r.snp_id, r.ratio(), w).unwrap();
    }
    write_file(output, &s)?;

    let tau0 = cfg.resolve_tau0(ds.len())?;
    let analyzed = if cfg.screen {
        let (kept, _) = partition_by_strength(&ds, tau0)?;
        ds.subset(&kept)?
    } else {
        ds
    };
    let fixed = MrLocalConfig {
        tau0,
        tau0_mode: Tau0Mode::Fixed,
        ..cfg.clone()
    };
    let cand = uncertainty_test(&analyzed, &fixed)?;
    let mut p = String::from("b\tsize\tq\n");
    for e in &cand.grid {
        writeln!(p, "{}\t{}\t{}", e.b, e.size(), fmt_opt((!e.q.is_nan()).then_some(e.q))).unwrap();
    }
    write_file(&sibling(output, "profile.tsv"), &p)
}
