//! Point and variance estimators on a set of instruments.
//!
//! All sums run over `members` in the order given, with compensated
//! accumulation.

use std::fmt;

use crate::error::{MrError, Result};
use crate::numeric::{median, CompensatedSum};
use crate::summary_data::{GwasRecord, SummaryDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorMethod {
    DIvw,
    Ivw,
    ClusterMedian,
}

impl fmt::Display for EstimatorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorMethod::DIvw => "dIVW",
            EstimatorMethod::Ivw => "IVW",
            EstimatorMethod::ClusterMedian => "cluster_median",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOutput {
    pub beta_hat: f64,
    pub sigma_hat: f64,
    pub n_used: usize,
    pub method: EstimatorMethod,
}

fn sum_over<F: Fn(&GwasRecord) -> f64>(ds: &SummaryDataset, members: &[usize], f: F) -> f64 {
    let recs = ds.records();
    members.iter().map(|&j| f(&recs[j])).collect::<CompensatedSum>().value()
}

/// Σ σ_Y⁻² (γ̂_D² − σ_D²); must be positive.
pub fn divw_denominator(ds: &SummaryDataset, members: &[usize]) -> Result<f64> {
    ds.check_members(members)?;
    let den = sum_over(ds, members, |r| {
        (r.gamma_d_hat * r.gamma_d_hat - r.sigma_d * r.sigma_d) / (r.sigma_y * r.sigma_y)
    });
    if den > 0.0 {
        Ok(den)
    } else {
        Err(MrError::WeakInstrumentDegeneracy(den))
    }
}

/// Debiased inverse-variance-weighted estimate
/// Σ σ_Y⁻² γ̂_D γ̂_Y / Σ σ_Y⁻² (γ̂_D² − σ_D²).
pub fn divw(ds: &SummaryDataset, members: &[usize]) -> Result<f64> {
    let den = divw_denominator(ds, members)?;
    let num = sum_over(ds, members, |r| {
        r.gamma_d_hat * r.gamma_y_hat / (r.sigma_y * r.sigma_y)
    });
    Ok(num / den)
}

/// Variance of the dIVW estimate when the instruments are valid:
/// Σ σ_Y⁻⁴ [σ_Y² γ̂_D² + β̂² σ_D² (γ̂_D² + σ_D²)] / (dIVW denominator)².
///
/// The σ_Y² factor on γ̂_D² keeps both bracketed terms in the same units and
/// makes this the σ̂_π² = 0 case of [`divw_variance_balanced`].
pub fn divw_variance_plurality(ds: &SummaryDataset, members: &[usize], beta_hat: f64) -> Result<f64> {
    divw_variance_with_pleiotropy(ds, members, beta_hat, 0.0)
}

fn divw_variance_with_pleiotropy(
    ds: &SummaryDataset,
    members: &[usize],
    beta_hat: f64,
    sigma_pi_sq: f64,
) -> Result<f64> {
    let den = divw_denominator(ds, members)?;
    let b2 = beta_hat * beta_hat;
    let num = sum_over(ds, members, |r| {
        let vy = r.sigma_y * r.sigma_y;
        let vd = r.sigma_d * r.sigma_d;
        let gd2 = r.gamma_d_hat * r.gamma_d_hat;
        ((vy + sigma_pi_sq) * gd2 + b2 * vd * (gd2 + vd)) / (vy * vy)
    });
    Ok(num / (den * den))
}

/// Variance estimate under balanced pleiotropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancedVariance {
    /// σ̂_β² including the pleiotropic variance.
    pub var_beta: f64,
    /// σ̂_π² after clamping at zero.
    pub sigma_pi_sq: f64,
    /// Method-of-moments σ̂_π² before clamping.
    pub sigma_pi_sq_raw: f64,
}

impl BalancedVariance {
    pub fn sigma_beta(&self) -> f64 {
        self.var_beta.sqrt()
    }
}

/// σ̂_π² as the σ_Y⁻²-weighted mean of
/// (γ̂_Y − β̂γ̂_D)² − σ_Y² − β̂²σ_D², clamped at 0, and the variance of
/// β̂ with σ_Y² inflated by σ̂_π².
pub fn divw_variance_balanced(ds: &SummaryDataset, members: &[usize], beta_hat: f64) -> Result<BalancedVariance> {
    ds.check_members(members)?;
    let b2 = beta_hat * beta_hat;
    let num = sum_over(ds, members, |r| {
        let resid = r.gamma_y_hat - beta_hat * r.gamma_d_hat;
        let vy = r.sigma_y * r.sigma_y;
        (resid * resid - vy - b2 * r.sigma_d * r.sigma_d) / vy
    });
    let wsum = sum_over(ds, members, |r| 1.0 / (r.sigma_y * r.sigma_y));
    let raw = num / wsum;
    let sigma_pi_sq = raw.max(0.0);
    let var_beta = divw_variance_with_pleiotropy(ds, members, beta_hat, sigma_pi_sq)?;
    Ok(BalancedVariance {
        var_beta,
        sigma_pi_sq,
        sigma_pi_sq_raw: raw,
    })
}

/// Median of the Wald ratios over `members`.
pub fn cluster_median(ds: &SummaryDataset, members: &[usize]) -> Result<f64> {
    ds.check_members(members)?;
    let recs = ds.records();
    let mut ratios = Vec::with_capacity(members.len());
    for &j in members {
        let r = &recs[j];
        if r.gamma_d_hat == 0.0 {
            return Err(MrError::ZeroExposureEffect(r.snp_id.clone()));
        }
        ratios.push(r.gamma_y_hat / r.gamma_d_hat);
    }
    Ok(median(&ratios).expect("members checked non-empty"))
}

/// Conventional fixed-effect IVW estimate with standard error
/// 1/√(Σ σ_Y⁻² γ̂_D²).
pub fn ivw(ds: &SummaryDataset, members: &[usize]) -> Result<EstimatorOutput> {
    ds.check_members(members)?;
    let den = sum_over(ds, members, |r| r.gamma_d_hat * r.gamma_d_hat / (r.sigma_y * r.sigma_y));
    if !(den > 0.0) {
        return Err(MrError::WeakInstrumentDegeneracy(den));
    }
    let num = sum_over(ds, members, |r| r.gamma_d_hat * r.gamma_y_hat / (r.sigma_y * r.sigma_y));
    Ok(EstimatorOutput {
        beta_hat: num / den,
        sigma_hat: den.recip().sqrt(),
        n_used: members.len(),
        method: EstimatorMethod::Ivw,
    })
}

/// dIVW with its plurality-path (`balanced = false`) or balanced-path
/// standard error.
pub fn divw_output(ds: &SummaryDataset, members: &[usize], balanced: bool) -> Result<EstimatorOutput> {
    let beta_hat = divw(ds, members)?;
    let var = if balanced {
        divw_variance_balanced(ds, members, beta_hat)?.var_beta
    } else {
        divw_variance_plurality(ds, members, beta_hat)?
    };
    Ok(EstimatorOutput {
        beta_hat,
        sigma_hat: var.sqrt(),
        n_used: members.len(),
        method: EstimatorMethod::DIvw,
    })
}

/// Plug-in average instrument strength (1/|C|) Σ γ̂_D²/σ_D².
///
/// Not debiased: each term overstates γ_D²/σ_D² by 1 in expectation.
pub fn avg_iv_strength(ds: &SummaryDataset, members: &[usize]) -> Result<f64> {
    ds.check_members(members)?;
    let s = sum_over(ds, members, |r| {
        let t = r.gamma_d_hat / r.sigma_d;
        t * t
    });
    Ok(s / members.len() as f64)
}
