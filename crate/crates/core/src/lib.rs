//! Mendelian randomization with locally valid instruments.
//!
//! Given GWAS summary statistics for an exposure and an outcome, the
//! estimator searches a grid of candidate causal effects for the largest
//! cluster of instruments whose standardized residuals look like a truncated
//! standard normal, then estimates the effect from that cluster with the
//! debiased inverse-variance weighted estimator. A simulator and a Monte
//! Carlo harness for benchmarking are included.

pub mod bootstrap;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod local_distribution;
pub mod mr_local;
pub mod numeric;
pub mod seeds;
pub mod simulator;
pub mod summary_data;

pub use bootstrap::{bootstrap_se, BootstrapResult};
pub use error::{MrError, Result};
pub use estimators::{
    avg_iv_strength, cluster_median, divw, divw_variance_balanced, divw_variance_plurality, ivw,
    EstimatorMethod, EstimatorOutput,
};
pub use local_distribution::{
    cluster, evaluate_candidate, ks_statistic, q_statistic, skewness_statistic, trunc_normal_moments,
    z_statistic, ClusterEvaluation, TruncNormalMoments,
};
pub use mr_local::{
    candidate_grid, run_mr_local, run_mr_local_plus, select_mode, uncertainty_test, CandidateSet,
    CausalEstimate, MrLocalConfig, SelectionPath, Tau0Mode,
};
pub use summary_data::{
    load_summary_tsv, read_summary_tsv, screen_weak_ivs, write_summary_tsv, GwasRecord,
    SummaryDataset, ValidationReport,
};
pub use harness::{monte_carlo, write_report, HarnessMethod, MonteCarloReport};
pub use simulator::{
    generate, named_setting, setting_a, setting_b, setting_c, setting_d, setting_e,
    setting_from_effects, Pleiotropy, SimulationSetting, SimulationTruth,
};
