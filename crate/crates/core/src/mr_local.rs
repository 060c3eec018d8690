//! The MR-Local pipeline: scan a grid of candidate effects, keep the
//! candidates whose cluster passes the uncertainty test, take the one with
//! the largest cluster, and estimate within that cluster by dIVW. When no
//! candidate passes, all instruments are pooled under a balanced-pleiotropy
//! variance.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bootstrap::{bootstrap_se, BootstrapResult};
use crate::error::{MrError, Result};
use crate::estimators::{avg_iv_strength, divw, divw_variance_balanced, divw_variance_plurality};
use crate::local_distribution::{
    cluster, evaluate_with_columns, scan_point, ClusterEvaluation, Columns, TruncNormalMoments,
};
use crate::numeric::two_sided_critical;
use crate::summary_data::{partition_by_strength, SummaryDataset};

/// Smallest grid used when the grid size follows the instrument count.
pub const MIN_DEFAULT_GRID: usize = 2000;

/// Multiplier c in τ₀ = c·√(log p) for the theory-driven bandwidth.
pub const THEORY_TAU0_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tau0Mode {
    /// Use `MrLocalConfig::tau0` as given.
    #[default]
    Fixed,
    /// τ₀ = 1.5·√(log p), p the number of input instruments.
    Theory,
}

impl FromStr for Tau0Mode {
    type Err = MrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Tau0Mode::Fixed),
            "theory" => Ok(Tau0Mode::Theory),
            other => Err(MrError::InvalidParameter(format!("unknown tau0 mode `{other}`"))),
        }
    }
}

impl fmt::Display for Tau0Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tau0Mode::Fixed => "fixed",
            Tau0Mode::Theory => "theory",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrLocalConfig {
    /// Half-range C_β of the candidate grid.
    pub c_beta: f64,
    pub tau0: f64,
    pub tau0_mode: Tau0Mode,
    /// Number of grid points; `None` means max(p, 2000).
    pub grid_size: Option<usize>,
    pub alpha: f64,
    /// Add the skewness gate to the uncertainty test.
    pub use_plus: bool,
    /// Drop instruments with |γ̂_D|/σ_D < τ₀ before the scan.
    pub screen: bool,
    pub bootstrap_reps: usize,
    pub seed: u64,
    /// Additive slack in the Q test; `None` means 1/log p.
    pub slack: Option<f64>,
    /// Compute KS distances for every grid point (diagnostic only).
    pub with_ks: bool,
}

impl Default for MrLocalConfig {
    fn default() -> Self {
        MrLocalConfig {
            c_beta: 1.0,
            tau0: 1.6,
            tau0_mode: Tau0Mode::Fixed,
            grid_size: None,
            alpha: 0.05,
            use_plus: false,
            screen: true,
            bootstrap_reps: 200,
            seed: 0,
            slack: None,
            with_ks: false,
        }
    }
}

impl MrLocalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MrError::InvalidParameter(msg));
        if !(self.c_beta > 0.0) || !self.c_beta.is_finite() {
            return bad(format!("c_beta must be positive, got {}", self.c_beta));
        }
        if self.tau0_mode == Tau0Mode::Fixed && (!(self.tau0 > 0.0) || !self.tau0.is_finite()) {
            return bad(format!("tau0 must be positive, got {}", self.tau0));
        }
        if let Some(m) = self.grid_size {
            if m < 2 {
                return bad(format!("grid size must be at least 2, got {m}"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if let Some(s) = self.slack {
            if !(s >= 0.0) || !s.is_finite() {
                return bad(format!("slack must be finite and >= 0, got {s}"));
            }
        }
        Ok(())
    }

    /// τ₀ in effect for an input of `p` instruments.
    pub fn resolve_tau0(&self, p: usize) -> Result<f64> {
        match self.tau0_mode {
            Tau0Mode::Fixed => Ok(self.tau0),
            Tau0Mode::Theory => {
                if p < 2 {
                    return Err(MrError::TooFewInstruments { needed: 2, found: p });
                }
                Ok(THEORY_TAU0_FACTOR * (p as f64).ln().sqrt())
            }
        }
    }

    fn resolved(&self, p: usize) -> Result<MrLocalConfig> {
        self.validate()?;
        Ok(MrLocalConfig {
            tau0: self.resolve_tau0(p)?,
            tau0_mode: Tau0Mode::Fixed,
            ..self.clone()
        })
    }

    pub fn grid_size_for(&self, p: usize) -> usize {
        self.grid_size.unwrap_or(p.max(MIN_DEFAULT_GRID))
    }
}

/// b_j = −C_β + 2C_β·j/m for j = 1..m.
pub fn candidate_grid(c_beta: f64, m: usize) -> Vec<f64> {
    let span = 2.0 * c_beta;
    (1..=m).map(|j| -c_beta + span * j as f64 / m as f64).collect()
}

/// Thresholds of the uncertainty test for one analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyGate {
    pub p: usize,
    pub log_p: f64,
    pub size_floor: usize,
    pub slack: f64,
    pub sigma_q: f64,
    /// Bound on |standardized skewness|, when the skewness gate is active.
    pub skew_bound: Option<f64>,
}

impl UncertaintyGate {
    pub fn new(p: usize, moments: &TruncNormalMoments, slack: Option<f64>, use_plus: bool) -> Result<Self> {
        if p < 2 {
            return Err(MrError::TooFewInstruments { needed: 2, found: p });
        }
        let log_p = (p as f64).ln();
        Ok(UncertaintyGate {
            p,
            log_p,
            size_floor: (p as f64).sqrt().ceil() as usize,
            slack: slack.unwrap_or(1.0 / log_p),
            sigma_q: moments.sigma_q,
            skew_bound: use_plus.then(|| log_p.sqrt()),
        })
    }

    /// |Q̂ − 1| ≤ σ_Q √(log p / |Ĉ|) + slack; false for an empty cluster.
    pub fn q_passes(&self, size: usize, q: f64) -> bool {
        size > 0 && (q - 1.0).abs() <= self.sigma_q * (self.log_p / size as f64).sqrt() + self.slack
    }

    pub fn size_passes(&self, size: usize) -> bool {
        size >= self.size_floor
    }

    pub fn skew_passes(&self, skew: Option<f64>) -> Option<bool> {
        self.skew_bound
            .map(|bound| skew.is_some_and(|k| k.abs() <= bound))
    }
}

/// All grid evaluations and the subset 𝓑̂ passing the uncertainty test.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub grid: Vec<ClusterEvaluation>,
    /// Skewness gate outcome per grid point, when the gate is active.
    pub skew_passed: Option<Vec<bool>>,
    /// Indices into `grid` of the members of 𝓑̂, increasing.
    pub b_set: Vec<usize>,
    pub size_floor: usize,
    pub gate: UncertaintyGate,
    pub moments: TruncNormalMoments,
}

impl CandidateSet {
    pub fn b_values(&self) -> Vec<f64> {
        self.b_set.iter().map(|&i| self.grid[i].b).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.b_set.is_empty()
    }
}

/// Evaluates every grid point and applies the uncertainty test, using
/// p = `ds.len()` in the log p and √p terms.
pub fn uncertainty_test(ds: &SummaryDataset, cfg: &MrLocalConfig) -> Result<CandidateSet> {
    let cfg = cfg.resolved(ds.len())?;
    let moments = TruncNormalMoments::new(cfg.tau0)?;
    let gate = UncertaintyGate::new(ds.len(), &moments, cfg.slack, cfg.use_plus)?;
    let grid_b = candidate_grid(cfg.c_beta, cfg.grid_size_for(ds.len()));
    let cols = Columns::new(ds);
    let mut grid: Vec<ClusterEvaluation> = grid_b
        .par_iter()
        .map(|&b| evaluate_with_columns(&cols, b, &moments, cfg.with_ks))
        .collect();

    let mut b_set = Vec::new();
    let mut skew_flags = cfg.use_plus.then(|| Vec::with_capacity(grid.len()));
    for (i, e) in grid.iter_mut().enumerate() {
        e.passed_uncertainty = gate.q_passes(e.size(), e.q);
        e.passed_size = gate.size_passes(e.size());
        let skew_ok = gate.skew_passes(e.skew);
        if let (Some(flags), Some(ok)) = (skew_flags.as_mut(), skew_ok) {
            flags.push(ok);
        }
        if e.passed_uncertainty && e.passed_size && skew_ok.unwrap_or(true) {
            b_set.push(i);
        }
    }
    Ok(CandidateSet {
        grid,
        skew_passed: skew_flags,
        b_set,
        size_floor: gate.size_floor,
        gate,
        moments,
    })
}

/// Mode among (index, size, q, b) candidates: largest size, then smallest
/// |q − 1|, then smallest |b|, then first index.
fn pick_mode<I: Iterator<Item = (usize, usize, f64, f64)>>(cands: I) -> Option<usize> {
    let mut best: Option<(usize, usize, f64, f64)> = None;
    for c in cands {
        let better = match best {
            None => true,
            Some(cur) => {
                let (_, size, q, b) = c;
                let (_, bsize, bq, bb) = cur;
                size > bsize
                    || (size == bsize
                        && ((q - 1.0).abs() < (bq - 1.0).abs()
                            || ((q - 1.0).abs() == (bq - 1.0).abs() && b.abs() < bb.abs())))
            }
        };
        if better {
            best = Some(c);
        }
    }
    best.map(|c| c.0)
}

/// Grid index of b̂ = argmax over 𝓑̂ of |Ĉ(b)|, or `None` when 𝓑̂ is empty.
pub fn select_mode(cand: &CandidateSet) -> Option<usize> {
    pick_mode(cand.b_set.iter().map(|&i| {
        let e = &cand.grid[i];
        (i, e.size(), e.q, e.b)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionPath {
    Plurality,
    BalancedFallback,
}

impl fmt::Display for SelectionPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionPath::Plurality => "plurality",
            SelectionPath::BalancedFallback => "balanced_fallback",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalEstimate {
    pub beta_hat: f64,
    /// Reported standard error: bootstrap on the plurality path when
    /// requested and available, otherwise the analytic one.
    pub sigma_hat: f64,
    /// Analytic standard error of the path taken.
    pub sigma_analytic: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
    pub path: SelectionPath,
    pub selected_b: Option<f64>,
    /// Input-dataset indices of the instruments used for estimation.
    pub selected_cluster: Vec<usize>,
    /// Input-dataset indices of the instruments that entered the scan.
    pub instruments: Vec<usize>,
    /// Input-dataset indices removed by the strength screen.
    pub screened_out: Vec<usize>,
    /// Clamped σ̂_π² (balanced path only).
    pub sigma_pi_sq: Option<f64>,
    pub bootstrap: Option<BootstrapResult>,
    /// Set when a requested bootstrap could not produce a standard error.
    pub bootstrap_error: Option<String>,
    /// Plug-in average strength of the selected cluster.
    pub kappa: f64,
    pub tau0: f64,
    pub diagnostics: CandidateSet,
}

impl CausalEstimate {
    pub fn b_set_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn covers(&self, beta: f64) -> bool {
        self.ci_low <= beta && beta <= self.ci_high
    }
}

struct Prepared {
    tau0: f64,
    cfg: MrLocalConfig,
    instruments: Vec<usize>,
    screened_out: Vec<usize>,
    analyzed: SummaryDataset,
}

fn prepare(ds: &SummaryDataset, cfg: &MrLocalConfig) -> Result<Prepared> {
    let cfg = cfg.resolved(ds.len())?;
    let tau0 = cfg.tau0;
    let (instruments, screened_out) = if cfg.screen {
        partition_by_strength(ds, tau0)?
    } else {
        ((0..ds.len()).collect(), Vec::new())
    };
    if instruments.is_empty() {
        return Err(MrError::NoInstrumentsAfterScreening);
    }
    if instruments.len() < 2 {
        return Err(MrError::TooFewInstruments {
            needed: 2,
            found: instruments.len(),
        });
    }
    let analyzed = if screened_out.is_empty() {
        ds.clone()
    } else {
        ds.subset(&instruments)?
    };
    Ok(Prepared {
        tau0,
        cfg,
        instruments,
        screened_out,
        analyzed,
    })
}

/// Runs the full pipeline on `ds`.
pub fn run_mr_local(ds: &SummaryDataset, cfg: &MrLocalConfig) -> Result<CausalEstimate> {
    let prep = prepare(ds, cfg)?;
    let analyzed = &prep.analyzed;
    let cand = uncertainty_test(analyzed, &prep.cfg)?;

    let (path, selected_b, local_cluster) = match select_mode(&cand) {
        Some(i) => (
            SelectionPath::Plurality,
            Some(cand.grid[i].b),
            cand.grid[i].members.clone(),
        ),
        None => (
            SelectionPath::BalancedFallback,
            None,
            (0..analyzed.len()).collect(),
        ),
    };

    let beta_hat = divw(analyzed, &local_cluster)?;
    let (sigma_analytic, sigma_pi_sq) = match path {
        SelectionPath::Plurality => (divw_variance_plurality(analyzed, &local_cluster, beta_hat)?.sqrt(), None),
        SelectionPath::BalancedFallback => {
            let bv = divw_variance_balanced(analyzed, &local_cluster, beta_hat)?;
            (bv.sigma_beta(), Some(bv.sigma_pi_sq))
        }
    };

    let mut sigma_hat = sigma_analytic;
    let mut bootstrap = None;
    let mut bootstrap_error = None;
    if path == SelectionPath::Plurality && cfg.bootstrap_reps > 0 {
        match bootstrap_se(ds, cfg, cfg.bootstrap_reps) {
            Ok(res) => {
                sigma_hat = res.se;
                bootstrap = Some(res);
            }
            Err(e) => bootstrap_error = Some(e.to_string()),
        }
    }

    let z = two_sided_critical(cfg.alpha);
    let kappa = avg_iv_strength(analyzed, &local_cluster)?;
    let selected_cluster = local_cluster.iter().map(|&j| prep.instruments[j]).collect();
    Ok(CausalEstimate {
        beta_hat,
        sigma_hat,
        sigma_analytic,
        ci_low: beta_hat - z * sigma_hat,
        ci_high: beta_hat + z * sigma_hat,
        alpha: cfg.alpha,
        path,
        selected_b,
        selected_cluster,
        instruments: prep.instruments,
        screened_out: prep.screened_out,
        sigma_pi_sq,
        bootstrap,
        bootstrap_error,
        kappa,
        tau0: prep.tau0,
        diagnostics: cand,
    })
}

/// Same pipeline with the skewness gate added to the uncertainty test.
pub fn run_mr_local_plus(ds: &SummaryDataset, cfg: &MrLocalConfig) -> Result<CausalEstimate> {
    let cfg = MrLocalConfig {
        use_plus: true,
        ..cfg.clone()
    };
    run_mr_local(ds, &cfg)
}

/// β̂ of the plurality path without retaining diagnostics; `Ok(None)` when
/// 𝓑̂ is empty. Bootstrap replicates run through here.
pub(crate) fn plurality_point_estimate(ds: &SummaryDataset, cfg: &MrLocalConfig) -> Result<Option<f64>> {
    let prep = prepare(ds, cfg)?;
    let analyzed = &prep.analyzed;
    let moments = TruncNormalMoments::new(prep.tau0)?;
    let gate = UncertaintyGate::new(analyzed.len(), &moments, prep.cfg.slack, prep.cfg.use_plus)?;
    let grid_b = candidate_grid(prep.cfg.c_beta, prep.cfg.grid_size_for(analyzed.len()));
    let cols = Columns::new(analyzed);
    let stats: Vec<_> = grid_b
        .par_iter()
        .map(|&b| scan_point(&cols, b, &moments, None, None))
        .collect();
    let mode = pick_mode(stats.iter().zip(&grid_b).enumerate().filter_map(|(i, (s, &b))| {
        let skew = (s.size > 0).then_some(s.skew);
        let ok = gate.q_passes(s.size, s.q)
            && gate.size_passes(s.size)
            && gate.skew_passes(skew).unwrap_or(true);
        ok.then_some((i, s.size, s.q, b))
    }));
    match mode {
        None => Ok(None),
        Some(i) => {
            let members = cluster(analyzed, grid_b[i], prep.tau0);
            divw(analyzed, &members).map(Some)
        }
    }
}
