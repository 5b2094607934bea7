use std::path::PathBuf;

/// Which side of a binary operation an argument sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Left,
    Right,
}

impl std::fmt::Display for Operand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Operand::Left => f.write_str("left"),
            Operand::Right => f.write_str("right"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bad magic at byte 0: expected {expected:?}, found {found:?}")]
    MagicMismatch { expected: String, found: String },

    #[error("unsupported format version {found} at byte {offset} (expected 1)")]
    UnsupportedVersion { found: u32, offset: u64 },

    #[error("file truncated at byte {offset}: needed {needed} more bytes for {field}")]
    TruncatedFile {
        offset: u64,
        needed: u64,
        field: &'static str,
    },

    #[error("{count} unexpected trailing bytes starting at byte {offset}")]
    TrailingData { offset: u64, count: u64 },

    #[error("non-finite value at byte {offset}")]
    NonFiniteValue { offset: u64 },

    #[error("invalid shape at byte {offset}: {detail}")]
    InvalidShape { offset: u64, detail: String },

    #[error("record id at byte {offset} is not valid UTF-8")]
    InvalidUtf8 { offset: u64 },

    #[error("duplicate id `{id}` ({location})")]
    DuplicateId { id: String, location: String },

    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: &'static str },

    #[error("line {line}: field `{field}` must be a non-empty string")]
    EmptyField { line: usize, field: &'static str },

    #[error("cannot pool an empty token matrix")]
    EmptyMatrix,

    #[error("{0} vector has zero norm")]
    ZeroNormVector(Operand),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("missing embedding record `{0}`")]
    MissingEmbedding(String),

    #[error("distance out of range [0, 1]: {}", format_offenders(.0))]
    DistanceOutOfRange(Vec<(String, f64)>),

    #[error("items without a post-tune answer: {}", .0.join(", "))]
    MissingNewAnswer(Vec<String>),

    #[error("empty set")]
    EmptySet,

    #[error("bin width must lie in (0, 1], got {0}")]
    InvalidBinWidth(f64),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: {left} losses vs {right} weights")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("SVD did not converge after {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("factor `{name}` is not orthonormal (max deviation {deviation:e})")]
    NonOrthonormalFactor { name: &'static str, deviation: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_offenders(items: &[(String, f64)]) -> String {
    items
        .iter()
        .map(|(id, d)| format!("{id}={d}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MagicMismatch { .. } => "MagicMismatch",
            Error::UnsupportedVersion { .. } => "UnsupportedVersion",
            Error::TruncatedFile { .. } => "TruncatedFile",
            Error::TrailingData { .. } => "TrailingData",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::InvalidShape { .. } => "InvalidShape",
            Error::InvalidUtf8 { .. } => "InvalidUtf8",
            Error::DuplicateId { .. } => "DuplicateId",
            Error::ParseError { .. } => "ParseError",
            Error::MissingField { .. } => "MissingField",
            Error::EmptyField { .. } => "EmptyField",
            Error::EmptyMatrix => "EmptyMatrix",
            Error::ZeroNormVector(_) => "ZeroNormVector",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::MissingEmbedding(_) => "MissingEmbedding",
            Error::DistanceOutOfRange(_) => "DistanceOutOfRange",
            Error::MissingNewAnswer(_) => "MissingNewAnswer",
            Error::EmptySet => "EmptySet",
            Error::InvalidBinWidth(_) => "InvalidBinWidth",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::RankOutOfRange { .. } => "RankOutOfRange",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::NonOrthonormalFactor { .. } => "NonOrthonormalFactor",
            Error::DegenerateData(_) => "DegenerateData",
            Error::Io { .. } => "IoFailure",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
