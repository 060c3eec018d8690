use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MrError>;

#[derive(Debug, Error)]
pub enum MrError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: expected `{expected}`, found `{found}`")]
    MalformedHeader { expected: String, found: String },

    #[error("no valid records survive validation")]
    NoRecords,

    #[error("duplicate identifier `{0}`")]
    DuplicateIdentifier(String),

    #[error("invalid record `{snp}`: {reason}")]
    InvalidRecord { snp: String, reason: String },

    #[error("no instruments survive screening")]
    NoInstrumentsAfterScreening,

    #[error("need at least {needed} instruments, found {found}")]
    TooFewInstruments { needed: usize, found: usize },

    #[error("empty instrument set")]
    EmptyMembers,

    #[error("member index {index} out of range for {len} records")]
    MemberOutOfRange { index: usize, len: usize },

    #[error("weak-instrument degeneracy: debiasing denominator {0} is not positive")]
    WeakInstrumentDegeneracy(f64),

    #[error("undefined ratio estimate: exposure effect is zero for `{0}`")]
    ZeroExposureEffect(String),

    #[error("bootstrap degenerate: {n_success} of {requested} replicates succeeded")]
    BootstrapDegenerate { n_success: usize, requested: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("setting config line {line}: {message}")]
    SettingParse { line: usize, message: String },
}

impl MrError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MrError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that signal the estimator itself broke down, as opposed
    /// to bad input or configuration.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            MrError::WeakInstrumentDegeneracy(_)
                | MrError::BootstrapDegenerate { .. }
                | MrError::ZeroExposureEffect(_)
                | MrError::NoInstrumentsAfterScreening
        )
    }
}
