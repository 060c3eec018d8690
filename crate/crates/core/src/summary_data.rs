//! Two-sample GWAS summary statistics: records, datasets, TSV ingestion.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{MrError, Result};

pub const TSV_HEADER: [&str; 5] = [
    "snp",
    "beta_exposure",
    "se_exposure",
    "beta_outcome",
    "se_outcome",
];

/// One instrument: marginal exposure and outcome effects with their
/// standard errors, taken from two independent GWAS.
#[derive(Debug, Clone, PartialEq)]
pub struct GwasRecord {
    pub snp_id: String,
    pub gamma_d_hat: f64,
    pub sigma_d: f64,
    pub gamma_y_hat: f64,
    pub sigma_y: f64,
}

impl GwasRecord {
    pub fn new(
        snp_id: impl Into<String>,
        gamma_d_hat: f64,
        sigma_d: f64,
        gamma_y_hat: f64,
        sigma_y: f64,
    ) -> Result<Self> {
        let rec = GwasRecord {
            snp_id: snp_id.into(),
            gamma_d_hat,
            sigma_d,
            gamma_y_hat,
            sigma_y,
        };
        if let Some(reason) = rec.violation() {
            return Err(MrError::InvalidRecord {
                snp: rec.snp_id,
                reason: reason.to_string(),
            });
        }
        Ok(rec)
    }

    fn violation(&self) -> Option<&'static str> {
        let vals = [self.gamma_d_hat, self.sigma_d, self.gamma_y_hat, self.sigma_y];
        if vals.iter().any(|v| !v.is_finite()) {
            Some("non-finite value")
        } else if self.sigma_d <= 0.0 || self.sigma_y <= 0.0 {
            Some("nonpositive standard error")
        } else {
            None
        }
    }

    /// |γ̂_D| / σ_D.
    pub fn exposure_strength(&self) -> f64 {
        self.gamma_d_hat.abs() / self.sigma_d
    }

    /// Wald ratio γ̂_Y / γ̂_D; NaN when the exposure effect is exactly zero.
    pub fn ratio(&self) -> f64 {
        if self.gamma_d_hat == 0.0 {
            f64::NAN
        } else {
            self.gamma_y_hat / self.gamma_d_hat
        }
    }
}

/// Immutable, non-empty, identifier-unique collection of records in input
/// order. Cloning is cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryDataset {
    records: Arc<[GwasRecord]>,
}

impl SummaryDataset {
    pub fn new(records: Vec<GwasRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(MrError::NoRecords);
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if let Some(reason) = r.violation() {
                return Err(MrError::InvalidRecord {
                    snp: r.snp_id.clone(),
                    reason: reason.to_string(),
                });
            }
            if !seen.insert(r.snp_id.as_str()) {
                return Err(MrError::DuplicateIdentifier(r.snp_id.clone()));
            }
        }
        Ok(SummaryDataset {
            records: records.into(),
        })
    }

    /// Skips the checks; callers guarantee the invariants, e.g. by
    /// perturbing the effects of an existing valid dataset.
    pub(crate) fn from_valid(records: Vec<GwasRecord>) -> Self {
        debug_assert!(!records.is_empty());
        SummaryDataset {
            records: records.into(),
        }
    }

    pub fn records(&self) -> &[GwasRecord] {
        &self.records
    }

    pub fn get(&self, index: usize) -> Option<&GwasRecord> {
        self.records.get(index)
    }

    /// Number of instruments, p.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GwasRecord> {
        self.records.iter()
    }

    /// New dataset made of the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(indices.len());
        for &i in indices {
            let rec = self.records.get(i).ok_or(MrError::MemberOutOfRange {
                index: i,
                len: self.len(),
            })?;
            out.push(rec.clone());
        }
        SummaryDataset::new(out)
    }

    pub(crate) fn check_members(&self, members: &[usize]) -> Result<()> {
        if members.is_empty() {
            return Err(MrError::EmptyMembers);
        }
        if let Some(&bad) = members.iter().find(|&&i| i >= self.len()) {
            return Err(MrError::MemberOutOfRange {
                index: bad,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// Writes the dataset in the summary TSV format. Numbers use Rust's
    /// shortest round-trip representation, so reloading is bit-exact.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", TSV_HEADER.join("\t"))?;
        let mut line = String::new();
        for r in self.iter() {
            line.clear();
            let _ = write!(
                line,
                "{}\t{}\t{}\t{}\t{}",
                r.snp_id, r.gamma_d_hat, r.sigma_d, r.gamma_y_hat, r.sigma_y
            );
            writeln!(w, "{line}")?;
        }
        w.flush()
    }
}

impl<'a> IntoIterator for &'a SummaryDataset {
    type Item = &'a GwasRecord;
    type IntoIter = std::slice::Iter<'a, GwasRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

/// Rows dropped during ingestion, with 1-based file line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub n_records: usize,
    pub n_rejected: usize,
    pub rejection_reasons: Vec<(usize, String)>,
}

impl ValidationReport {
    fn reject(&mut self, line: usize, reason: impl Into<String>) {
        self.n_rejected += 1;
        self.rejection_reasons.push((line, reason.into()));
    }
}

pub fn load_summary_tsv(path: impl AsRef<Path>) -> Result<(SummaryDataset, ValidationReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| MrError::io(path, e))?;
    read_summary_tsv(BufReader::new(file)).map_err(|e| match e {
        MrError::Io { source, .. } => MrError::io(path, source),
        other => other,
    })
}

pub fn read_summary_tsv<R: BufRead>(reader: R) -> Result<(SummaryDataset, ValidationReport)> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| MrError::io("<input>", e))?,
        None => String::new(),
    };
    let header = header.trim_end_matches('\r');
    let expected = TSV_HEADER.join("\t");
    if header != expected {
        return Err(MrError::MalformedHeader {
            expected,
            found: header.to_string(),
        });
    }

    let mut report = ValidationReport::default();
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| MrError::io("<input>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        report.n_records += 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != TSV_HEADER.len() {
            report.reject(
                line_no,
                format!("expected {} columns, found {}", TSV_HEADER.len(), fields.len()),
            );
            continue;
        }
        let mut nums = [0.0f64; 4];
        let mut bad = None;
        for (slot, tok) in nums.iter_mut().zip(&fields[1..]) {
            match tok.trim().parse::<f64>() {
                Ok(v) => *slot = v,
                Err(_) => {
                    bad = Some(format!("unparseable number `{}`", tok.trim()));
                    break;
                }
            }
        }
        if let Some(reason) = bad {
            report.reject(line_no, reason);
            continue;
        }
        let snp = fields[0].trim();
        if snp.is_empty() {
            report.reject(line_no, "empty identifier");
            continue;
        }
        let rec = GwasRecord {
            snp_id: snp.to_string(),
            gamma_d_hat: nums[0],
            sigma_d: nums[1],
            gamma_y_hat: nums[2],
            sigma_y: nums[3],
        };
        match rec.violation() {
            Some(reason) => report.reject(line_no, reason),
            None => records.push(rec),
        }
    }
    if records.is_empty() {
        return Err(MrError::NoRecords);
    }
    let ds = SummaryDataset::new(records)?;
    Ok((ds, report))
}

pub fn write_summary_tsv(ds: &SummaryDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| MrError::io(path, e))?;
    ds.write_tsv(BufWriter::new(file))
        .map_err(|e| MrError::io(path, e))
}

/// Keeps records with |γ̂_D|/σ_D ≥ `threshold`. Returns the screened dataset
/// and the input indices that were removed.
pub fn screen_weak_ivs(ds: &SummaryDataset, threshold: f64) -> Result<(SummaryDataset, Vec<usize>)> {
    let (kept, removed) = partition_by_strength(ds, threshold)?;
    if kept.is_empty() {
        return Err(MrError::NoInstrumentsAfterScreening);
    }
    if removed.is_empty() {
        return Ok((ds.clone(), removed));
    }
    Ok((ds.subset(&kept)?, removed))
}

/// Input indices (kept, removed) under the strength screen.
pub fn partition_by_strength(ds: &SummaryDataset, threshold: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(MrError::InvalidParameter(format!(
            "screening threshold must be finite and >= 0, got {threshold}"
        )));
    }
    Ok((0..ds.len()).partition(|&i| ds.records[i].exposure_strength() >= threshold))
}

/// Per-instrument Wald ratios. Entries with γ̂_D = 0 are NaN.
pub fn ratio_estimates(ds: &SummaryDataset) -> Vec<f64> {
    ds.iter().map(GwasRecord::ratio).collect()
}
