use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Variants are grouped loosely by the stage that raises them. The CLI maps
/// them onto exit codes through [`Error::kind`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed asset: {0}")]
    MalformedAsset(String),
    #[error("validation failure: {0}")]
    ValidationFailure(String),
    #[error("asset manifest declares no unit scale")]
    UnitMissing,
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed motion file: {0}")]
    MalformedMotion(String),
    #[error("joint count mismatch: expected {expected}, found {found}")]
    JointCountMismatch { expected: usize, found: usize },

    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("degenerate triangle (lifting normal norm {0:e})")]
    DegenerateTriangle(f64),
    #[error("size mismatch for {what}: expected {expected}, found {found}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("unknown source topology '{0}'")]
    UnknownTopology(String),

    #[error("joint {0} has an empty regressor support")]
    EmptySupport(usize),
    #[error("singular regressor system for joint {0}")]
    SingularSystem(usize),
    #[error("need at least 3 weighted points, got {0}")]
    InsufficientPoints(usize),
    #[error("cross-covariance is rank deficient")]
    DegenerateCovariance,

    #[error("rotation encoding mismatch: {0}")]
    EncodingMismatch(String),
    #[error("correctives shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("covariance infinity norm below threshold")]
    ZeroCovariance,
    #[error("empty vertex selection")]
    EmptySelection,
    #[error("gradient refinement requires a warm start (pass an init pose or set the unsafe cold-start flag)")]
    MissingInit,
    #[error("optimizer diverged: loss went from {initial:e} to {last:e}")]
    Diverged { initial: f64, last: f64 },

    #[error("sequence needs at least 2 frames")]
    TooFewFrames,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: malformed files, invariant violations, bad flags.
    Validation,
    /// A numerical routine could not produce a result.
    Numeric,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io { .. } => ErrorKind::Io,
            DegenerateTriangle(_)
            | SingularSystem(_)
            | DegenerateCovariance
            | ZeroCovariance
            | Diverged { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Validation,
        }
    }

    /// Variant name, stable across releases; the CLI prints it before the
    /// message.
    pub fn name(&self) -> &'static str {
        use Error::*;
        match self {
            MalformedAsset(_) => "MalformedAsset",
            ValidationFailure(_) => "ValidationFailure",
            UnitMissing => "UnitMissing",
            Io { .. } => "Io",
            MalformedMotion(_) => "MalformedMotion",
            JointCountMismatch { .. } => "JointCountMismatch",
            EmptyMesh => "EmptyMesh",
            DegenerateTriangle(_) => "DegenerateTriangle",
            SizeMismatch { .. } => "SizeMismatch",
            UnknownTopology(_) => "UnknownTopology",
            EmptySupport(_) => "EmptySupport",
            SingularSystem(_) => "SingularSystem",
            InsufficientPoints(_) => "InsufficientPoints",
            DegenerateCovariance => "DegenerateCovariance",
            EncodingMismatch(_) => "EncodingMismatch",
            ShapeMismatch(_) => "ShapeMismatch",
            ZeroCovariance => "ZeroCovariance",
            EmptySelection => "EmptySelection",
            MissingInit => "MissingInit",
            Diverged { .. } => "Diverged",
            TooFewFrames => "TooFewFrames",
            InvalidConfig(_) => "InvalidConfig",
            OutOfRange(_) => "OutOfRange",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
