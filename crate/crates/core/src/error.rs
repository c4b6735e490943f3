use thiserror::Error;

/// Errors reported by the library.
///
/// Variants are grouped by cause: malformed input data, numerically or
/// geometrically degenerate problems, and I/O failures. The CLI maps the
/// first group to exit code 2 and the degenerate/numeric group to exit
/// code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {context} ({left} vs {right})")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not a rotation matrix: {0}")]
    NotARotation(String),

    #[error("singular matrix cannot be projected to a rotation")]
    SingularMatrix,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("{which} positions have zero spread; scale is undefined")]
    DegenerateScale { which: &'static str },

    #[error("orientations are required for this operation but are missing from the {0} sequence")]
    MissingOrientations(&'static str),

    #[error("timestamps are required for this operation but are missing")]
    MissingTimestamps,

    #[error("requested {requested} outliers but the trajectory has only {available} poses")]
    TooManyOutliers { requested: usize, available: usize },

    #[error("no pose pairs matched within the association tolerance")]
    NoAssociations,

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("{context}: {source}")]
    WithContext {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures caused by degenerate or numerically unusable input,
    /// as opposed to malformed files or bad arguments.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Error::WithContext { source, .. } => source.is_degenerate(),
            Error::DegenerateGeometry(_)
            | Error::DegenerateScale { .. }
            | Error::SingularMatrix
            | Error::NotARotation(_)
            | Error::NonFinite(_)
            | Error::EmptyInput(_)
            | Error::LengthMismatch { .. }
            | Error::MissingOrientations(_)
            | Error::MissingTimestamps
            | Error::TooManyOutliers { .. }
            | Error::NoAssociations => true,
            _ => false,
        }
    }

    /// Wrap with a description of where the failure happened.
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::WithContext {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
