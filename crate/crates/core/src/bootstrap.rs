//! Parametric bootstrap of the plurality-path estimate.
//!
//! Each replicate redraws every input instrument as γ̂* ~ N(γ̂, σ²) with the
//! standard errors held fixed and reruns the whole pipeline, screening
//! included, so the variability of the cluster selection is propagated.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{MrError, Result};
use crate::mr_local::{plurality_point_estimate, MrLocalConfig};
use crate::numeric::sample_sd;
use crate::seeds::{derive_seed, stream_rng, tags};
use crate::summary_data::{GwasRecord, SummaryDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub se: f64,
    pub requested: usize,
    pub n_success: usize,
    /// Replicates with an empty candidate set or a degenerate estimator.
    pub n_failed: usize,
    /// Successful replicate estimates in replicate order.
    pub estimates: Vec<f64>,
}

/// One parametric redraw of `ds` for replicate `index`.
pub fn resample(ds: &SummaryDataset, seed: u64, index: u64) -> SummaryDataset {
    let mut rng = stream_rng(derive_seed(seed, tags::BOOTSTRAP, index), 0);
    let records = ds
        .iter()
        .map(|r| {
            let ed: f64 = StandardNormal.sample(&mut rng);
            let ey: f64 = StandardNormal.sample(&mut rng);
            GwasRecord {
                snp_id: r.snp_id.clone(),
                gamma_d_hat: r.gamma_d_hat + r.sigma_d * ed,
                sigma_d: r.sigma_d,
                gamma_y_hat: r.gamma_y_hat + r.sigma_y * ey,
                sigma_y: r.sigma_y,
            }
        })
        .collect();
    SummaryDataset::from_valid(records)
}

pub fn bootstrap_se(ds: &SummaryDataset, cfg: &MrLocalConfig, reps: usize) -> Result<BootstrapResult> {
    cfg.validate()?;
    if reps < 2 {
        return Err(MrError::InvalidParameter(format!(
            "bootstrap needs at least 2 replicates, got {reps}"
        )));
    }
    let inner = MrLocalConfig {
        bootstrap_reps: 0,
        with_ks: false,
        ..cfg.clone()
    };
    let outcomes: Vec<Option<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let star = resample(ds, cfg.seed, r);
            plurality_point_estimate(&star, &inner).ok().flatten()
        })
        .collect();
    let estimates: Vec<f64> = outcomes.into_iter().flatten().collect();
    let n_success = estimates.len();
    if n_success < 2 {
        return Err(MrError::BootstrapDegenerate {
            n_success,
            requested: reps,
        });
    }
    let se = sample_sd(&estimates).expect("at least two estimates");
    Ok(BootstrapResult {
        se,
        requested: reps,
        n_success,
        n_failed: reps - n_success,
        estimates,
    })
}
