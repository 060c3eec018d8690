//! Monte Carlo runner: simulate, estimate with each method on the same
//! replicate dataset, and summarize MAE, coverage, average SE, the valid
//! share of the instruments used and the empty-𝓑̂ rate.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{MrError, Result};
use crate::estimators::{cluster_median, divw_output, ivw};
use crate::mr_local::{run_mr_local, CausalEstimate, MrLocalConfig, SelectionPath};
use crate::numeric::{mean, sample_sd, two_sided_critical};
use crate::seeds::{derive_seed, tags};
use crate::simulator::{generate, SimulationSetting, SimulationTruth};
use crate::summary_data::SummaryDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HarnessMethod {
    MrLocal,
    MrLocalPlus,
    DivwAll,
    IvwAll,
    ClusterMedian,
}

impl HarnessMethod {
    pub const ALL: [HarnessMethod; 5] = [
        HarnessMethod::MrLocal,
        HarnessMethod::MrLocalPlus,
        HarnessMethod::DivwAll,
        HarnessMethod::IvwAll,
        HarnessMethod::ClusterMedian,
    ];

    fn uses_selection(self) -> bool {
        matches!(
            self,
            HarnessMethod::MrLocal | HarnessMethod::MrLocalPlus | HarnessMethod::ClusterMedian
        )
    }
}

impl fmt::Display for HarnessMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HarnessMethod::MrLocal => "MRLocal",
            HarnessMethod::MrLocalPlus => "MRLocalPlus",
            HarnessMethod::DivwAll => "dIVW_all",
            HarnessMethod::IvwAll => "IVW_all",
            HarnessMethod::ClusterMedian => "cluster_median",
        })
    }
}

impl FromStr for HarnessMethod {
    type Err = MrError;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "mrlocal" => Ok(HarnessMethod::MrLocal),
            "mrlocalplus" | "mrlocal+" => Ok(HarnessMethod::MrLocalPlus),
            "divwall" | "divw" => Ok(HarnessMethod::DivwAll),
            "ivwall" | "ivw" => Ok(HarnessMethod::IvwAll),
            "clustermedian" | "median" => Ok(HarnessMethod::ClusterMedian),
            _ => Err(MrError::InvalidParameter(format!("unknown method `{s}`"))),
        }
    }
}

/// One method's outcome on one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub rep: usize,
    pub seed: u64,
    /// SHA-256 prefix of the replicate dataset; equal across methods.
    pub dataset_hash: String,
    pub beta_hat: f64,
    pub sigma_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub path: Option<SelectionPath>,
    /// Share of truly valid instruments among those used.
    pub cluster_valid_frac: f64,
    pub b_set_empty: Option<bool>,
    pub error: Option<String>,
}

impl RepRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn covers(&self, beta: f64) -> bool {
        self.ci_low <= beta && beta <= self.ci_high
    }
}

/// Mean and Monte Carlo standard error of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub value: f64,
    pub mc_se: f64,
}

impl Metric {
    const NA: Metric = Metric {
        value: f64::NAN,
        mc_se: f64::NAN,
    };

    fn of(xs: &[f64]) -> Metric {
        match mean(xs) {
            None => Metric::NA,
            Some(m) => Metric {
                value: m,
                mc_se: sample_sd(xs).map_or(f64::NAN, |s| s / (xs.len() as f64).sqrt()),
            },
        }
    }

    fn rate(hits: usize, n: usize) -> Metric {
        if n == 0 {
            return Metric::NA;
        }
        let r = hits as f64 / n as f64;
        Metric {
            value: r,
            mc_se: (r * (1.0 - r) / n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub setting_name: String,
    pub method: HarnessMethod,
    pub beta: f64,
    pub n_reps: usize,
    /// Replicates where the method failed; excluded from every average.
    pub n_errors: usize,
    pub mae: Metric,
    pub coverage: Metric,
    pub mean_sd: Metric,
    pub valid_prop: Metric,
    pub empty_b_rate: Metric,
    pub per_rep: Vec<RepRecord>,
}

impl MonteCarloReport {
    fn from_reps(setting: &SimulationSetting, method: HarnessMethod, per_rep: Vec<RepRecord>) -> Self {
        let ok: Vec<&RepRecord> = per_rep.iter().filter(|r| r.is_ok()).collect();
        let beta = setting.beta;
        let abs_err: Vec<f64> = ok.iter().map(|r| (r.beta_hat - beta).abs()).collect();
        let sds: Vec<f64> = ok.iter().map(|r| r.sigma_hat).collect();
        let vp: Vec<f64> = ok
            .iter()
            .map(|r| r.cluster_valid_frac)
            .filter(|v| !v.is_nan())
            .collect();
        let hits = ok.iter().filter(|r| r.covers(beta)).count();
        let empty_b_rate = if method.uses_selection() {
            Metric::rate(ok.iter().filter(|r| r.b_set_empty == Some(true)).count(), ok.len())
        } else {
            Metric::NA
        };
        MonteCarloReport {
            setting_name: setting.name.clone(),
            method,
            beta,
            n_reps: per_rep.len(),
            n_errors: per_rep.len() - ok.len(),
            mae: Metric::of(&abs_err),
            coverage: Metric::rate(hits, ok.len()),
            mean_sd: Metric::of(&sds),
            valid_prop: Metric::of(&vp),
            empty_b_rate,
            per_rep,
        }
    }

    /// coverage ± 1.96 Monte Carlo SE.
    pub fn coverage_band(&self) -> (f64, f64) {
        let h = 1.96 * self.coverage.mc_se;
        (self.coverage.value - h, self.coverage.value + h)
    }
}

pub fn dataset_hash(ds: &SummaryDataset) -> String {
    let mut bytes = Vec::new();
    ds.write_tsv(&mut bytes).expect("writing to memory");
    let digest = Sha256::digest(&bytes);
    digest[..8].iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

/// Seed of replicate `r`.
pub fn replicate_seed(master_seed: u64, r: usize) -> u64 {
    derive_seed(master_seed, tags::REPLICATE, r as u64)
}

struct RepContext<'a> {
    rep: usize,
    seed: u64,
    hash: String,
    ds: &'a SummaryDataset,
    truth: &'a SimulationTruth,
}

impl RepContext<'_> {
    fn failed(&self, e: impl fmt::Display) -> RepRecord {
        RepRecord {
            rep: self.rep,
            seed: self.seed,
            dataset_hash: self.hash.clone(),
            beta_hat: f64::NAN,
            sigma_hat: f64::NAN,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
            path: None,
            cluster_valid_frac: f64::NAN,
            b_set_empty: None,
            error: Some(e.to_string()),
        }
    }

    fn from_estimate(&self, est: &CausalEstimate) -> RepRecord {
        RepRecord {
            rep: self.rep,
            seed: self.seed,
            dataset_hash: self.hash.clone(),
            beta_hat: est.beta_hat,
            sigma_hat: est.sigma_hat,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            path: Some(est.path),
            cluster_valid_frac: self.truth.valid_fraction(&est.selected_cluster),
            b_set_empty: Some(est.b_set_empty()),
            error: None,
        }
    }

    fn pooled(&self, beta_hat: f64, sigma_hat: f64, z: f64) -> RepRecord {
        let all: Vec<usize> = (0..self.ds.len()).collect();
        RepRecord {
            rep: self.rep,
            seed: self.seed,
            dataset_hash: self.hash.clone(),
            beta_hat,
            sigma_hat,
            ci_low: beta_hat - z * sigma_hat,
            ci_high: beta_hat + z * sigma_hat,
            path: None,
            cluster_valid_frac: self.truth.valid_fraction(&all),
            b_set_empty: None,
            error: None,
        }
    }
}

fn run_replicate(
    setting: &SimulationSetting,
    cfg: &MrLocalConfig,
    methods: &[HarnessMethod],
    rep: usize,
    master_seed: u64,
) -> Result<Vec<RepRecord>> {
    let seed = replicate_seed(master_seed, rep);
    let (ds, truth) = generate(setting, seed)?;
    let ctx = RepContext {
        rep,
        seed,
        hash: dataset_hash(&ds),
        ds: &ds,
        truth: &truth,
    };
    let z = two_sided_critical(cfg.alpha);
    let base_cfg = MrLocalConfig {
        seed: derive_seed(seed, tags::METHOD_BOOTSTRAP, cfg.seed),
        ..cfg.clone()
    };
    let wants = |m| methods.contains(&m);

    let plain = if wants(HarnessMethod::MrLocal) || wants(HarnessMethod::ClusterMedian) {
        let c = MrLocalConfig {
            use_plus: false,
            bootstrap_reps: if wants(HarnessMethod::MrLocal) { cfg.bootstrap_reps } else { 0 },
            ..base_cfg.clone()
        };
        Some(run_mr_local(&ds, &c))
    } else {
        None
    };

    let records = methods
        .iter()
        .map(|&m| match m {
            HarnessMethod::MrLocal => match plain.as_ref().unwrap() {
                Ok(est) => ctx.from_estimate(est),
                Err(e) => ctx.failed(e),
            },
            HarnessMethod::MrLocalPlus => {
                let c = MrLocalConfig {
                    use_plus: true,
                    ..base_cfg.clone()
                };
                match run_mr_local(&ds, &c) {
                    Ok(est) => ctx.from_estimate(&est),
                    Err(e) => ctx.failed(e),
                }
            }
            HarnessMethod::ClusterMedian => match plain.as_ref().unwrap() {
                Ok(est) => match cluster_median(&ds, &est.selected_cluster) {
                    Ok(b) => {
                        let se = std::f64::consts::FRAC_PI_2.sqrt() * est.sigma_analytic;
                        RepRecord {
                            beta_hat: b,
                            sigma_hat: se,
                            ci_low: b - z * se,
                            ci_high: b + z * se,
                            ..ctx.from_estimate(est)
                        }
                    }
                    Err(e) => ctx.failed(e),
                },
                Err(e) => ctx.failed(e),
            },
            HarnessMethod::DivwAll => {
                let all: Vec<usize> = (0..ds.len()).collect();
                match divw_output(&ds, &all, true) {
                    Ok(o) => ctx.pooled(o.beta_hat, o.sigma_hat, z),
                    Err(e) => ctx.failed(e),
                }
            }
            HarnessMethod::IvwAll => {
                let all: Vec<usize> = (0..ds.len()).collect();
                match ivw(&ds, &all) {
                    Ok(o) => ctx.pooled(o.beta_hat, o.sigma_hat, z),
                    Err(e) => ctx.failed(e),
                }
            }
        })
        .collect();
    Ok(records)
}

/// Runs `reps` replicates. Replicate r draws its dataset from
/// `replicate_seed(master_seed, r)` and every method sees that dataset.
/// Estimator failures are recorded per replicate and never abort the run.
pub fn monte_carlo(
    setting: &SimulationSetting,
    cfg: &MrLocalConfig,
    methods: &[HarnessMethod],
    reps: usize,
    master_seed: u64,
) -> Result<BTreeMap<HarnessMethod, MonteCarloReport>> {
    if reps == 0 {
        return Err(MrError::InvalidParameter("reps must be at least 1".into()));
    }
    setting.validate()?;
    cfg.validate()?;
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();

    let rows: Vec<Vec<RepRecord>> = (0..reps)
        .into_par_iter()
        .map(|r| run_replicate(setting, cfg, &methods, r, master_seed))
        .collect::<Result<_>>()?;

    let mut by_method: Vec<Vec<RepRecord>> = vec![Vec::with_capacity(reps); methods.len()];
    for row in rows {
        for (k, rec) in row.into_iter().enumerate() {
            by_method[k].push(rec);
        }
    }
    Ok(methods
        .iter()
        .zip(by_method)
        .map(|(&m, recs)| (m, MonteCarloReport::from_reps(setting, m, recs)))
        .collect())
}

pub const REPORT_HEADER: [&str; 4] = ["method", "metric", "value", "mc_se"];

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NA".into()
    } else {
        x.to_string()
    }
}

/// Report rows: one per (method, metric), methods in their fixed order and
/// metrics in the order n_reps, n_errors, mae, coverage, coverage_band_low,
/// coverage_band_high, mean_sd, valid_prop, empty_b_rate. Missing values
/// are written as `NA`.
pub fn format_report(reports: &BTreeMap<HarnessMethod, MonteCarloReport>) -> String {
    let mut s = REPORT_HEADER.join("\t");
    s.push('\n');
    for (m, r) in reports {
        let (lo, hi) = r.coverage_band();
        let rows: [(&str, f64, f64); 9] = [
            ("n_reps", r.n_reps as f64, f64::NAN),
            ("n_errors", r.n_errors as f64, f64::NAN),
            ("mae", r.mae.value, r.mae.mc_se),
            ("coverage", r.coverage.value, r.coverage.mc_se),
            ("coverage_band_low", lo, f64::NAN),
            ("coverage_band_high", hi, f64::NAN),
            ("mean_sd", r.mean_sd.value, r.mean_sd.mc_se),
            ("valid_prop", r.valid_prop.value, r.valid_prop.mc_se),
            ("empty_b_rate", r.empty_b_rate.value, r.empty_b_rate.mc_se),
        ];
        for (name, v, se) in rows {
            writeln!(s, "{m}\t{name}\t{}\t{}", fmt_num(v), fmt_num(se)).unwrap();
        }
    }
    s
}

pub const PER_REP_HEADER: [&str; 12] = [
    "method",
    "rep",
    "seed",
    "dataset_hash",
    "beta_hat",
    "sigma_hat",
    "ci_low",
    "ci_high",
    "path",
    "cluster_valid_frac",
    "b_set_empty",
    "error",
];

pub fn format_per_rep(reports: &BTreeMap<HarnessMethod, MonteCarloReport>) -> String {
    let mut s = PER_REP_HEADER.join("\t");
    s.push('\n');
    for (m, r) in reports {
        for rec in &r.per_rep {
            writeln!(
                s,
                "{m}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                rec.rep,
                rec.seed,
                rec.dataset_hash,
                fmt_num(rec.beta_hat),
                fmt_num(rec.sigma_hat),
                fmt_num(rec.ci_low),
                fmt_num(rec.ci_high),
                rec.path.map_or("NA".into(), |p| p.to_string()),
                fmt_num(rec.cluster_valid_frac),
                rec.b_set_empty.map_or("NA", |b| if b { "1" } else { "0" }),
                rec.error.as_deref().unwrap_or("NA").replace(['\t', '\n'], " "),
            )
            .unwrap();
        }
    }
    s
}

fn write_text(text: &str, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| MrError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| MrError::io(path, e))
}

pub fn write_report(reports: &BTreeMap<HarnessMethod, MonteCarloReport>, path: impl AsRef<Path>) -> Result<()> {
    write_text(&format_report(reports), path.as_ref())
}

pub fn write_per_rep(reports: &BTreeMap<HarnessMethod, MonteCarloReport>, path: impl AsRef<Path>) -> Result<()> {
    write_text(&format_per_rep(reports), path.as_ref())
}
