//! Two-sample GWAS summary-statistic simulator with known ground truth.
//!
//! True exposure effects are γ_D,j ~ N(0, h_D/p) (or fixed, for settings
//! built from observed effects), total outcome effects are
//! γ_Y,j = γ_D,j β + π_j, and the observed effects are Gaussian around the
//! truth with standard errors drawn from the SE law.
//!
//! Pleiotropy variances are given as totals over all instruments: a value
//! `s` means Var(π_j) = s/p.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{MrError, Result};
use crate::seeds::stream_rng;
use crate::summary_data::{GwasRecord, SummaryDataset};

mod stream {
    pub const GAMMA_D: u64 = 1;
    pub const SIGMA_D: u64 = 2;
    pub const SIGMA_Y: u64 = 3;
    pub const VALID: u64 = 4;
    pub const PI: u64 = 5;
    pub const NOISE_D: u64 = 6;
    pub const NOISE_Y: u64 = 7;
}

pub const DEFAULT_P: usize = 2000;
pub const DEFAULT_N: u64 = 100_000;
pub const DEFAULT_H_D: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum Pleiotropy {
    /// A random subset of exact size round(valid_frac·p) has π_j = 0; the
    /// rest get N(0, sigma_pi_sq/p) + slope·γ_D,j.
    PointNormalDirectional {
        valid_frac: f64,
        sigma_pi_sq: f64,
        slope: f64,
    },
    /// π_j ~ N(0, sigma_pi_sq/p) for every j.
    Balanced { sigma_pi_sq: f64 },
    /// A random subset of size round(frac·p) gets N(0, s1_sq/p), the rest
    /// N(0, s2_sq/p).
    MixtureBalanced { frac: f64, s1_sq: f64, s2_sq: f64 },
    /// Off the valid subset, π_j = noise_scale·|γ_D,j|·N(0,1) + slope·γ_D,j.
    ScaledDirectional {
        valid_frac: f64,
        noise_scale: f64,
        slope: f64,
    },
    /// Fixed effects `pi`, zeroed on a random valid subset.
    FromEffects { pi: Vec<f64>, valid_frac: f64 },
}

impl Pleiotropy {
    fn kind(&self) -> &'static str {
        match self {
            Pleiotropy::PointNormalDirectional { .. } => "point_normal_directional",
            Pleiotropy::Balanced { .. } => "balanced",
            Pleiotropy::MixtureBalanced { .. } => "mixture_balanced",
            Pleiotropy::ScaledDirectional { .. } => "scaled_directional",
            Pleiotropy::FromEffects { .. } => "from_effects",
        }
    }

    fn validate(&self, p: usize) -> Result<()> {
        let frac_ok = |f: f64| (0.0..=1.0).contains(&f);
        let var_ok = |v: f64| v >= 0.0 && v.is_finite();
        let ok = match self {
            Pleiotropy::PointNormalDirectional {
                valid_frac,
                sigma_pi_sq,
                slope,
            } => frac_ok(*valid_frac) && var_ok(*sigma_pi_sq) && slope.is_finite(),
            Pleiotropy::Balanced { sigma_pi_sq } => var_ok(*sigma_pi_sq),
            Pleiotropy::MixtureBalanced { frac, s1_sq, s2_sq } => {
                frac_ok(*frac) && var_ok(*s1_sq) && var_ok(*s2_sq)
            }
            Pleiotropy::ScaledDirectional {
                valid_frac,
                noise_scale,
                slope,
            } => frac_ok(*valid_frac) && var_ok(*noise_scale) && slope.is_finite(),
            Pleiotropy::FromEffects { pi, valid_frac } => {
                if pi.len() != p {
                    return Err(MrError::LengthMismatch(format!(
                        "pleiotropy vector has {} entries, expected {p}",
                        pi.len()
                    )));
                }
                frac_ok(*valid_frac) && pi.iter().all(|x| x.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(MrError::InvalidParameter(format!("invalid pleiotropy law {self:?}")))
        }
    }
}

/// Law of the standard errors: σ = U[lo, hi]/√n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeLaw {
    pub lo: f64,
    pub hi: f64,
}

impl Default for SeLaw {
    fn default() -> Self {
        SeLaw { lo: 0.8, hi: 1.0 }
    }
}

/// Exposure effects and standard errors held fixed across replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedEffects {
    pub gamma_d: Vec<f64>,
    pub se_d: Vec<f64>,
    pub se_y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSetting {
    pub name: String,
    pub p: usize,
    pub n_d: u64,
    pub n_y: u64,
    pub h_d: f64,
    pub beta: f64,
    pub pleiotropy: Pleiotropy,
    pub se_law: SeLaw,
    /// When set, γ_D and both SE vectors are taken from here instead of
    /// being drawn; `p`, `n_d`, `n_y` and `h_d` are then unused.
    pub effects: Option<FixedEffects>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTruth {
    pub beta: f64,
    pub gamma_d: Vec<f64>,
    pub pi: Vec<f64>,
    /// {j : π_j = 0}, increasing.
    pub valid_set: Vec<usize>,
    /// Realized average strength (1/p) Σ γ_D,j²/σ_D,j².
    pub kappa: f64,
}

impl SimulationTruth {
    pub fn is_valid(&self, j: usize) -> bool {
        self.pi[j] == 0.0
    }

    /// Fraction of `members` that are truly valid.
    pub fn valid_fraction(&self, members: &[usize]) -> f64 {
        if members.is_empty() {
            return f64::NAN;
        }
        members.iter().filter(|&&j| self.is_valid(j)).count() as f64 / members.len() as f64
    }
}

fn base_setting(name: &str, beta: f64, pleiotropy: Pleiotropy) -> SimulationSetting {
    SimulationSetting {
        name: name.to_string(),
        p: DEFAULT_P,
        n_d: DEFAULT_N,
        n_y: DEFAULT_N,
        h_d: DEFAULT_H_D,
        beta,
        pleiotropy,
        se_law: SeLaw::default(),
        effects: None,
    }
}

/// Half the instruments valid; invalid π ~ N(0, 0.05/p) + 2.5γ_D.
pub fn setting_a(beta: f64) -> SimulationSetting {
    base_setting(
        "a",
        beta,
        Pleiotropy::PointNormalDirectional {
            valid_frac: 0.5,
            sigma_pi_sq: 0.05,
            slope: 2.5,
        },
    )
}

/// As (a) with invalid variance 0.5/p.
pub fn setting_b(beta: f64) -> SimulationSetting {
    base_setting(
        "b",
        beta,
        Pleiotropy::PointNormalDirectional {
            valid_frac: 0.5,
            sigma_pi_sq: 0.5,
            slope: 2.5,
        },
    )
}

/// Balanced pleiotropy π ~ N(0, 0.1/p) for all instruments.
pub fn setting_c(beta: f64) -> SimulationSetting {
    base_setting("c", beta, Pleiotropy::Balanced { sigma_pi_sq: 0.1 })
}

/// Balanced pleiotropy π ~ N(0, 0.05/p) for all instruments.
pub fn setting_d(beta: f64) -> SimulationSetting {
    base_setting("d", beta, Pleiotropy::Balanced { sigma_pi_sq: 0.05 })
}

/// 28% valid; the invalid instruments share the slope 2.5, so the
/// plurality rule fails.
pub fn setting_e(beta: f64) -> SimulationSetting {
    base_setting(
        "e",
        beta,
        Pleiotropy::PointNormalDirectional {
            valid_frac: 0.28,
            sigma_pi_sq: 0.05,
            slope: 2.5,
        },
    )
}

/// Named setting `a`–`e`.
pub fn named_setting(name: &str, beta: f64) -> Result<SimulationSetting> {
    match name {
        "a" => Ok(setting_a(beta)),
        "b" => Ok(setting_b(beta)),
        "c" => Ok(setting_c(beta)),
        "d" => Ok(setting_d(beta)),
        "e" => Ok(setting_e(beta)),
        other => Err(MrError::InvalidParameter(format!("unknown setting `{other}`"))),
    }
}

fn tile(v: &[f64], times: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() * times);
    for _ in 0..times {
        out.extend_from_slice(v);
    }
    out
}

/// Setting built from observed effect vectors, each tiled `replicate`
/// times. γ_D and the SEs stay fixed; π is `pi` (tiled) with no valid
/// subset. Replace `pleiotropy` to use another law on the same effects.
pub fn setting_from_effects(
    gamma_d: &[f64],
    se_d: &[f64],
    se_y: &[f64],
    pi: &[f64],
    beta: f64,
    replicate: usize,
) -> Result<SimulationSetting> {
    let n = gamma_d.len();
    if se_d.len() != n || se_y.len() != n || pi.len() != n {
        return Err(MrError::LengthMismatch(format!(
            "effect vectors have lengths {}, {}, {}, {}",
            n,
            se_d.len(),
            se_y.len(),
            pi.len()
        )));
    }
    if n == 0 || replicate == 0 {
        return Err(MrError::InvalidParameter("no effects to replicate".into()));
    }
    let effects = FixedEffects {
        gamma_d: tile(gamma_d, replicate),
        se_d: tile(se_d, replicate),
        se_y: tile(se_y, replicate),
    };
    let setting = SimulationSetting {
        name: "from_effects".into(),
        p: n * replicate,
        n_d: DEFAULT_N,
        n_y: DEFAULT_N,
        h_d: DEFAULT_H_D,
        beta,
        pleiotropy: Pleiotropy::FromEffects {
            pi: tile(pi, replicate),
            valid_frac: 0.0,
        },
        se_law: SeLaw::default(),
        effects: Some(effects),
    };
    setting.validate()?;
    Ok(setting)
}

/// h* = Σ γ_D,j².
pub fn h_star(gamma_d: &[f64]) -> f64 {
    gamma_d.iter().map(|g| g * g).sum()
}

/// Pleiotropy laws (a)–(e) for simulations driven by observed effects with
/// h* = Σγ_D². Shape `b` needs `observed_pi`, the outcome effects used as
/// invalid π (already tiled to length p).
pub fn empirical_shape(label: &str, h_star: f64, observed_pi: Option<&[f64]>) -> Result<Pleiotropy> {
    Ok(match label {
        "a" => Pleiotropy::PointNormalDirectional {
            valid_frac: 0.6,
            sigma_pi_sq: 0.5 * h_star,
            slope: 2.5,
        },
        "b" => Pleiotropy::FromEffects {
            pi: observed_pi
                .ok_or_else(|| MrError::InvalidParameter("shape b needs observed effects".into()))?
                .to_vec(),
            valid_frac: 0.4,
        },
        "c" => Pleiotropy::Balanced { sigma_pi_sq: h_star },
        "d" => Pleiotropy::MixtureBalanced {
            frac: 0.4,
            s1_sq: h_star,
            s2_sq: 4.0 * h_star,
        },
        "e" => Pleiotropy::ScaledDirectional {
            valid_frac: 0.25,
            noise_scale: 1.0,
            slope: 3.0,
        },
        other => return Err(MrError::InvalidParameter(format!("unknown shape `{other}`"))),
    })
}

impl SimulationSetting {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MrError::InvalidParameter(m));
        if self.p == 0 {
            return bad("p must be at least 1".into());
        }
        if !self.beta.is_finite() {
            return bad(format!("beta must be finite, got {}", self.beta));
        }
        match &self.effects {
            None => {
                if !(self.h_d > 0.0 && self.h_d < 1.0) {
                    return bad(format!("h_d must lie in (0, 1), got {}", self.h_d));
                }
                if self.n_d == 0 || self.n_y == 0 {
                    return bad("sample sizes must be positive".into());
                }
                let SeLaw { lo, hi } = self.se_law;
                if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                    return bad(format!("invalid SE law [{lo}, {hi}]"));
                }
            }
            Some(e) => {
                if e.gamma_d.len() != self.p || e.se_d.len() != self.p || e.se_y.len() != self.p {
                    return Err(MrError::LengthMismatch(format!(
                        "fixed effects must all have length p = {}",
                        self.p
                    )));
                }
                if e.gamma_d.iter().any(|x| !x.is_finite())
                    || e.se_d.iter().chain(&e.se_y).any(|s| !(*s > 0.0) || !s.is_finite())
                {
                    return bad("fixed effects must be finite with positive SEs".into());
                }
            }
        }
        self.pleiotropy.validate(self.p)
    }

    /// Expected average IV strength h_D/p · n_D · E[U⁻²] for drawn effects.
    pub fn expected_kappa(&self) -> f64 {
        let SeLaw { lo, hi } = self.se_law;
        self.h_d / self.p as f64 * self.n_d as f64 / (lo * hi)
    }
}

fn se_draws(rng: &mut ChaCha8Rng, p: usize, law: SeLaw, n: u64) -> Vec<f64> {
    let scale = (n as f64).sqrt().recip();
    (0..p)
        .map(|_| (law.lo + (law.hi - law.lo) * rng.random::<f64>()) * scale)
        .collect()
}

fn normals(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| StandardNormal.sample(rng)).collect()
}

/// Random subset of exact size round(frac·p), as a membership mask.
fn subset_mask(seed: u64, p: usize, frac: f64) -> Vec<bool> {
    let k = ((frac * p as f64).round() as usize).min(p);
    let mut rng = stream_rng(seed, stream::VALID);
    let mut mask = vec![false; p];
    for j in sample(&mut rng, p, k) {
        mask[j] = true;
    }
    mask
}

fn draw_pi(law: &Pleiotropy, gamma_d: &[f64], seed: u64) -> Vec<f64> {
    let p = gamma_d.len();
    let pf = p as f64;
    let mut rng = stream_rng(seed, stream::PI);
    let noise = normals(&mut rng, p);
    match law {
        Pleiotropy::PointNormalDirectional {
            valid_frac,
            sigma_pi_sq,
            slope,
        } => {
            let valid = subset_mask(seed, p, *valid_frac);
            let sd = (sigma_pi_sq / pf).sqrt();
            (0..p)
                .map(|j| if valid[j] { 0.0 } else { sd * noise[j] + slope * gamma_d[j] })
                .collect()
        }
        Pleiotropy::Balanced { sigma_pi_sq } => {
            let sd = (sigma_pi_sq / pf).sqrt();
            noise.iter().map(|z| sd * z).collect()
        }
        Pleiotropy::MixtureBalanced { frac, s1_sq, s2_sq } => {
            let first = subset_mask(seed, p, *frac);
            let (sd1, sd2) = ((s1_sq / pf).sqrt(), (s2_sq / pf).sqrt());
            (0..p)
                .map(|j| if first[j] { sd1 } else { sd2 } * noise[j])
                .collect()
        }
        Pleiotropy::ScaledDirectional {
            valid_frac,
            noise_scale,
            slope,
        } => {
            let valid = subset_mask(seed, p, *valid_frac);
            (0..p)
                .map(|j| {
                    if valid[j] {
                        0.0
                    } else {
                        noise_scale * gamma_d[j].abs() * noise[j] + slope * gamma_d[j]
                    }
                })
                .collect()
        }
        Pleiotropy::FromEffects { pi, valid_frac } => {
            let valid = subset_mask(seed, p, *valid_frac);
            (0..p).map(|j| if valid[j] { 0.0 } else { pi[j] }).collect()
        }
    }
}

pub fn snp_id(j: usize) -> String {
    format!("snp{}", j + 1)
}

/// Draws one dataset. Identical (setting, seed) pairs give bit-identical
/// output.
pub fn generate(setting: &SimulationSetting, seed: u64) -> Result<(SummaryDataset, SimulationTruth)> {
    setting.validate()?;
    let p = setting.p;
    let (gamma_d, se_d, se_y) = match &setting.effects {
        Some(e) => (e.gamma_d.clone(), e.se_d.clone(), e.se_y.clone()),
        None => {
            let sd = (setting.h_d / p as f64).sqrt();
            let gamma_d = normals(&mut stream_rng(seed, stream::GAMMA_D), p)
                .into_iter()
                .map(|z| sd * z)
                .collect();
            let se_d = se_draws(&mut stream_rng(seed, stream::SIGMA_D), p, setting.se_law, setting.n_d);
            let se_y = se_draws(&mut stream_rng(seed, stream::SIGMA_Y), p, setting.se_law, setting.n_y);
            (gamma_d, se_d, se_y)
        }
    };
    // + 0.0 turns -0.0 (zero variance times a negative draw) into 0.0
    let pi: Vec<f64> = draw_pi(&setting.pleiotropy, &gamma_d, seed)
        .into_iter()
        .map(|x| x + 0.0)
        .collect();
    let noise_d = normals(&mut stream_rng(seed, stream::NOISE_D), p);
    let noise_y = normals(&mut stream_rng(seed, stream::NOISE_Y), p);

    let records = (0..p)
        .map(|j| {
            let gamma_y = gamma_d[j] * setting.beta + pi[j];
            GwasRecord {
                snp_id: snp_id(j),
                gamma_d_hat: gamma_d[j] + se_d[j] * noise_d[j],
                sigma_d: se_d[j],
                gamma_y_hat: gamma_y + se_y[j] * noise_y[j],
                sigma_y: se_y[j],
            }
        })
        .collect();
    let kappa = (0..p).map(|j| (gamma_d[j] / se_d[j]).powi(2)).sum::<f64>() / p as f64;
    let valid_set = (0..p).filter(|&j| pi[j] == 0.0).collect();
    let truth = SimulationTruth {
        beta: setting.beta,
        gamma_d,
        pi,
        valid_set,
        kappa,
    };
    Ok((SummaryDataset::new(records)?, truth))
}

pub const TRUTH_HEADER: [&str; 4] = ["snp", "gamma_d", "pi", "valid"];

pub fn write_truth_tsv<W: Write>(ds: &SummaryDataset, truth: &SimulationTruth, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", TRUTH_HEADER.join("\t"))?;
    for (j, r) in ds.iter().enumerate() {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            r.snp_id,
            truth.gamma_d[j],
            truth.pi[j],
            u8::from(truth.is_valid(j))
        )?;
    }
    Ok(())
}

pub fn save_truth_tsv(ds: &SummaryDataset, truth: &SimulationTruth, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| MrError::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_truth_tsv(ds, truth, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| MrError::io(path, e))
}

fn join(v: &[f64]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{x}").unwrap();
    }
    s
}

impl SimulationSetting {
    /// Plain-text `key = value` form; vectors are comma-separated. Numbers
    /// round-trip exactly through `from_config`.
    pub fn to_config(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("name", self.name.clone());
        kv("p", self.p.to_string());
        kv("n_d", self.n_d.to_string());
        kv("n_y", self.n_y.to_string());
        kv("h_d", self.h_d.to_string());
        kv("beta", self.beta.to_string());
        kv("se_lo", self.se_law.lo.to_string());
        kv("se_hi", self.se_law.hi.to_string());
        kv("pleiotropy", self.pleiotropy.kind().to_string());
        match &self.pleiotropy {
            Pleiotropy::PointNormalDirectional {
                valid_frac,
                sigma_pi_sq,
                slope,
            } => {
                kv("valid_frac", valid_frac.to_string());
                kv("sigma_pi_sq", sigma_pi_sq.to_string());
                kv("slope", slope.to_string());
            }
            Pleiotropy::Balanced { sigma_pi_sq } => kv("sigma_pi_sq", sigma_pi_sq.to_string()),
            Pleiotropy::MixtureBalanced { frac, s1_sq, s2_sq } => {
                kv("frac", frac.to_string());
                kv("s1_sq", s1_sq.to_string());
                kv("s2_sq", s2_sq.to_string());
            }
            Pleiotropy::ScaledDirectional {
                valid_frac,
                noise_scale,
                slope,
            } => {
                kv("valid_frac", valid_frac.to_string());
                kv("noise_scale", noise_scale.to_string());
                kv("slope", slope.to_string());
            }
            Pleiotropy::FromEffects { pi, valid_frac } => {
                kv("valid_frac", valid_frac.to_string());
                kv("pi", join(pi));
            }
        }
        if let Some(e) = &self.effects {
            kv("gamma_d", join(&e.gamma_d));
            kv("se_d", join(&e.se_d));
            kv("se_y", join(&e.se_y));
        }
        s
    }

    pub fn from_config<R: BufRead>(reader: R) -> Result<Self> {
        let mut map: Vec<(String, String, usize)> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| MrError::SettingParse {
                line: line_no,
                message: e.to_string(),
            })?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t.split_once('=').ok_or_else(|| MrError::SettingParse {
                line: line_no,
                message: format!("expected `key = value`, got `{t}`"),
            })?;
            let k = k.trim().to_string();
            if map.iter().any(|(seen, _, _)| *seen == k) {
                return Err(MrError::SettingParse {
                    line: line_no,
                    message: format!("duplicate key `{k}`"),
                });
            }
            map.push((k, v.trim().to_string(), line_no));
        }
        let cfg = ConfigMap(map);
        let kind = cfg.string("pleiotropy")?;
        let pleiotropy = match kind.as_str() {
            "point_normal_directional" => Pleiotropy::PointNormalDirectional {
                valid_frac: cfg.num("valid_frac")?,
                sigma_pi_sq: cfg.num("sigma_pi_sq")?,
                slope: cfg.num("slope")?,
            },
            "balanced" => Pleiotropy::Balanced {
                sigma_pi_sq: cfg.num("sigma_pi_sq")?,
            },
            "mixture_balanced" => Pleiotropy::MixtureBalanced {
                frac: cfg.num("frac")?,
                s1_sq: cfg.num("s1_sq")?,
                s2_sq: cfg.num("s2_sq")?,
            },
            "scaled_directional" => Pleiotropy::ScaledDirectional {
                valid_frac: cfg.num("valid_frac")?,
                noise_scale: cfg.num("noise_scale")?,
                slope: cfg.num("slope")?,
            },
            "from_effects" => Pleiotropy::FromEffects {
                pi: cfg.vector("pi")?,
                valid_frac: cfg.num("valid_frac")?,
            },
            other => {
                return Err(MrError::SettingParse {
                    line: cfg.line("pleiotropy"),
                    message: format!("unknown pleiotropy law `{other}`"),
                })
            }
        };
        let effects = if cfg.has("gamma_d") {
            Some(FixedEffects {
                gamma_d: cfg.vector("gamma_d")?,
                se_d: cfg.vector("se_d")?,
                se_y: cfg.vector("se_y")?,
            })
        } else {
            None
        };
        let defaults = setting_a(0.0);
        let setting = SimulationSetting {
            name: cfg.opt_string("name").unwrap_or_else(|| "custom".into()),
            p: match &effects {
                Some(e) if !cfg.has("p") => e.gamma_d.len(),
                _ => cfg.num("p")?,
            },
            n_d: cfg.num_or("n_d", defaults.n_d)?,
            n_y: cfg.num_or("n_y", defaults.n_y)?,
            h_d: cfg.num_or("h_d", defaults.h_d)?,
            beta: cfg.num("beta")?,
            pleiotropy,
            se_law: SeLaw {
                lo: cfg.num_or("se_lo", defaults.se_law.lo)?,
                hi: cfg.num_or("se_hi", defaults.se_law.hi)?,
            },
            effects,
        };
        setting.validate()?;
        Ok(setting)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| MrError::io(path, e))?;
        Self::from_config(std::io::BufReader::new(f))
    }
}

struct ConfigMap(Vec<(String, String, usize)>);

impl ConfigMap {
    fn get(&self, key: &str) -> Option<&(String, String, usize)> {
        self.0.iter().find(|(k, _, _)| k == key)
    }

    fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    fn line(&self, key: &str) -> usize {
        self.get(key).map_or(0, |e| e.2)
    }

    fn missing(key: &str) -> MrError {
        MrError::SettingParse {
            line: 0,
            message: format!("missing key `{key}`"),
        }
    }

    fn opt_string(&self, key: &str) -> Option<String> {
        self.get(key).map(|e| e.1.clone())
    }

    fn string(&self, key: &str) -> Result<String> {
        self.opt_string(key).ok_or_else(|| Self::missing(key))
    }

    fn parse<T: std::str::FromStr>(value: &str, key: &str, line: usize) -> Result<T> {
        value.parse().map_err(|_| MrError::SettingParse {
            line,
            message: format!("bad value `{value}` for `{key}`"),
        })
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (_, v, line) = self.get(key).ok_or_else(|| Self::missing(key))?;
        Self::parse(v, key, *line)
    }

    fn num_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        if self.has(key) {
            self.num(key)
        } else {
            Ok(default)
        }
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>> {
        let (_, v, line) = self.get(key).ok_or_else(|| Self::missing(key))?;
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',').map(|x| Self::parse(x.trim(), key, *line)).collect()
    }
}
