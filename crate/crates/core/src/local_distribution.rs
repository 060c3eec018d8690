//! Statistics of the local distribution of standardized ratio residuals
//! around a candidate effect `b`.
//!
//! For instrument j the residual ẑ_j(b) = (γ̂_Y,j − b γ̂_D,j) / √(σ_Y,j² + b² σ_D,j²)
//! is approximately standard normal when b is the true effect and j is a
//! valid instrument. Restricted to the cluster {j : |ẑ_j(b)| ≤ τ₀} it is
//! approximately a standard normal truncated to [−τ₀, τ₀].

use crate::error::{MrError, Result};
use crate::numeric::{integrate, std_normal_cdf, std_normal_central_mass, std_normal_pdf, CompensatedSum};
use crate::summary_data::{GwasRecord, SummaryDataset};

#[inline]
fn z_from_parts(gamma_y: f64, gamma_d: f64, var_y: f64, var_d: f64, b: f64) -> f64 {
    (gamma_y - b * gamma_d) / (var_y + (b * b) * var_d).sqrt()
}

/// Standardized residual ẑ_j(b).
#[inline]
pub fn z_statistic(rec: &GwasRecord, b: f64) -> f64 {
    z_from_parts(
        rec.gamma_y_hat,
        rec.gamma_d_hat,
        rec.sigma_y * rec.sigma_y,
        rec.sigma_d * rec.sigma_d,
        b,
    )
}

/// Indices j with |ẑ_j(b)| ≤ τ₀ (closed boundary), in dataset order.
pub fn cluster(ds: &SummaryDataset, b: f64, tau0: f64) -> Vec<usize> {
    ds.iter()
        .enumerate()
        .filter(|(_, r)| z_statistic(r, b).abs() <= tau0)
        .map(|(j, _)| j)
        .collect()
}

/// Moments of a standard normal truncated to [−τ₀, τ₀].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncNormalMoments {
    pub tau0: f64,
    /// Variance of the truncated variable, g(τ₀).
    pub g: f64,
    /// Standard deviation of Z²/g under truncation, σ_Q.
    pub sigma_q: f64,
    /// Sixth raw moment E[Z⁶ | |Z| ≤ τ₀].
    pub m6: f64,
}

impl TruncNormalMoments {
    pub fn new(tau0: f64) -> Result<Self> {
        if !(tau0 > 0.0) || !tau0.is_finite() {
            return Err(MrError::InvalidParameter(format!(
                "tau0 must be finite and positive, got {tau0}"
            )));
        }
        let mass = std_normal_central_mass(tau0);
        let g = 1.0 - 2.0 * tau0 * std_normal_pdf(tau0) / mass;
        let t2 = tau0 * tau0;
        let sigma_q_sq = (g * (3.0 + t2) - t2) / (g * g) - 1.0;
        let m6 = integrate(|z| z.powi(6) * std_normal_pdf(z), -tau0, tau0, 1e-13) / mass;
        Ok(TruncNormalMoments {
            tau0,
            g,
            sigma_q: sigma_q_sq.sqrt(),
            m6,
        })
    }

    pub fn sigma_q_sq(&self) -> f64 {
        self.sigma_q * self.sigma_q
    }

    /// Largest attainable Q̂ for a consistent cluster: τ₀²/g.
    pub fn q_upper_bound(&self) -> f64 {
        self.tau0 * self.tau0 / self.g
    }
}

pub fn trunc_normal_moments(tau0: f64) -> Result<TruncNormalMoments> {
    TruncNormalMoments::new(tau0)
}

/// CDF of the standard normal truncated to [−τ₀, τ₀].
pub fn trunc_normal_cdf(t: f64, tau0: f64) -> f64 {
    if t <= -tau0 {
        return 0.0;
    }
    if t >= tau0 {
        return 1.0;
    }
    let lo = std_normal_cdf(-tau0);
    let v = (std_normal_cdf(t) - lo) / std_normal_central_mass(tau0);
    v.clamp(0.0, 1.0)
}

fn member_z(ds: &SummaryDataset, members: &[usize], b: f64) -> Result<Vec<f64>> {
    ds.check_members(members)?;
    let recs = ds.records();
    Ok(members.iter().map(|&j| z_statistic(&recs[j], b)).collect())
}

/// Q̂(b): mean of ẑ_j²(b)/g(τ₀) over the cluster.
pub fn q_statistic(
    ds: &SummaryDataset,
    members: &[usize],
    b: f64,
    moments: &TruncNormalMoments,
) -> Result<f64> {
    let z = member_z(ds, members, b)?;
    let sum: CompensatedSum = z.iter().map(|z| z * z).collect();
    Ok(q_from_sum(sum.value(), z.len(), moments))
}

#[inline]
fn q_from_sum(sum_z2: f64, n: usize, moments: &TruncNormalMoments) -> f64 {
    sum_z2 / n as f64 / moments.g
}

/// Supremum over t ∈ [−τ₀, τ₀] of |F̂_n(t) − F(t)| where F̂_n is the
/// empirical CDF of the cluster's ẑ values and F the truncated-normal CDF.
pub fn ks_statistic(ds: &SummaryDataset, members: &[usize], b: f64, tau0: f64) -> Result<f64> {
    if !(tau0 > 0.0) {
        return Err(MrError::InvalidParameter(format!("tau0 must be positive, got {tau0}")));
    }
    let mut z = member_z(ds, members, b)?;
    Ok(ks_of_values(&mut z, tau0))
}

/// KS distance of a sample to the truncated normal. Sorts `z` in place.
///
/// F̂_n is a right-continuous step function and F is continuous, so the
/// supremum is attained at an endpoint or as a one-sided limit at a sample
/// point; each is checked exactly.
pub(crate) fn ks_of_values(z: &mut [f64], tau0: f64) -> f64 {
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let below_lo = z.partition_point(|&v| v < -tau0);
    let at_or_below_lo = z.partition_point(|&v| v <= -tau0);
    let at_or_below_hi = z.partition_point(|&v| v <= tau0);
    // t = −τ₀ (F = 0) and t = τ₀ (F = 1).
    let mut sup = (at_or_below_lo as f64 / n).max(1.0 - at_or_below_hi as f64 / n);
    let mut i = below_lo;
    while i < z.len() && z[i] <= tau0 {
        let v = z[i];
        let mut k = i;
        while k < z.len() && z[k] == v {
            k += 1;
        }
        let f = trunc_normal_cdf(v, tau0);
        if v > -tau0 {
            sup = sup.max((i as f64 / n - f).abs());
        }
        sup = sup.max((k as f64 / n - f).abs());
        i = k;
    }
    sup.clamp(0.0, 1.0)
}

/// Standardized skewness of the cluster residuals:
/// (Σ ẑ_j³) / √(n · m6), which has mean 0 and unit variance when the
/// residuals follow the symmetric truncated normal.
pub fn skewness_statistic(
    ds: &SummaryDataset,
    members: &[usize],
    b: f64,
    moments: &TruncNormalMoments,
) -> Result<f64> {
    let z = member_z(ds, members, b)?;
    let sum: CompensatedSum = z.iter().map(|z| z * z * z).collect();
    Ok(skew_from_sum(sum.value(), z.len(), moments))
}

#[inline]
fn skew_from_sum(sum_z3: f64, n: usize, moments: &TruncNormalMoments) -> f64 {
    sum_z3 / (n as f64 * moments.m6).sqrt()
}

/// A candidate effect value with its cluster and test diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterEvaluation {
    pub b: f64,
    pub members: Vec<usize>,
    /// Q̂(b); NaN when the cluster is empty.
    pub q: f64,
    pub ks: Option<f64>,
    pub skew: Option<f64>,
    pub passed_uncertainty: bool,
    pub passed_size: bool,
}

impl ClusterEvaluation {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Column-major copy of the fields needed in the grid scan.
#[derive(Debug, Clone)]
pub(crate) struct Columns {
    gamma_y: Vec<f64>,
    gamma_d: Vec<f64>,
    var_y: Vec<f64>,
    var_d: Vec<f64>,
}

impl Columns {
    pub(crate) fn new(ds: &SummaryDataset) -> Self {
        let p = ds.len();
        let mut c = Columns {
            gamma_y: Vec::with_capacity(p),
            gamma_d: Vec::with_capacity(p),
            var_y: Vec::with_capacity(p),
            var_d: Vec::with_capacity(p),
        };
        for r in ds {
            c.gamma_y.push(r.gamma_y_hat);
            c.gamma_d.push(r.gamma_d_hat);
            c.var_y.push(r.sigma_y * r.sigma_y);
            c.var_d.push(r.sigma_d * r.sigma_d);
        }
        c
    }
}

/// Per-candidate summary without the member list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PointStats {
    pub size: usize,
    pub q: f64,
    pub skew: f64,
}

/// Single pass over all instruments at candidate `b`. Member indices are
/// pushed into `members` when given; `z_out` collects member ẑ values.
pub(crate) fn scan_point(
    cols: &Columns,
    b: f64,
    moments: &TruncNormalMoments,
    mut members: Option<&mut Vec<usize>>,
    mut z_out: Option<&mut Vec<f64>>,
) -> PointStats {
    let tau0 = moments.tau0;
    let mut s2 = CompensatedSum::new();
    let mut s3 = CompensatedSum::new();
    let mut size = 0usize;
    for j in 0..cols.gamma_y.len() {
        let z = z_from_parts(cols.gamma_y[j], cols.gamma_d[j], cols.var_y[j], cols.var_d[j], b);
        if z.abs() <= tau0 {
            size += 1;
            let z2 = z * z;
            s2.add(z2);
            s3.add(z2 * z);
            if let Some(m) = members.as_deref_mut() {
                m.push(j);
            }
            if let Some(zs) = z_out.as_deref_mut() {
                zs.push(z);
            }
        }
    }
    if size == 0 {
        return PointStats {
            size,
            q: f64::NAN,
            skew: f64::NAN,
        };
    }
    PointStats {
        size,
        q: q_from_sum(s2.value(), size, moments),
        skew: skew_from_sum(s3.value(), size, moments),
    }
}

/// Evaluates one candidate: cluster, Q̂, standardized skewness and,
/// optionally, the KS distance. Test outcomes are left unset.
pub fn evaluate_candidate(
    ds: &SummaryDataset,
    b: f64,
    moments: &TruncNormalMoments,
    with_ks: bool,
) -> ClusterEvaluation {
    evaluate_with_columns(&Columns::new(ds), b, moments, with_ks)
}

pub(crate) fn evaluate_with_columns(
    cols: &Columns,
    b: f64,
    moments: &TruncNormalMoments,
    with_ks: bool,
) -> ClusterEvaluation {
    let mut members = Vec::new();
    let mut zs = Vec::new();
    let stats = scan_point(
        cols,
        b,
        moments,
        Some(&mut members),
        if with_ks { Some(&mut zs) } else { None },
    );
    let nonempty = stats.size > 0;
    ClusterEvaluation {
        b,
        members,
        q: stats.q,
        ks: (with_ks && nonempty).then(|| ks_of_values(&mut zs, moments.tau0)),
        skew: nonempty.then_some(stats.skew),
        passed_uncertainty: false,
        passed_size: false,
    }
}
