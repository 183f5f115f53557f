use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(PathBuf),

    #[error("corrupt bitstream in {path}: {detail}")]
    CorruptBitstream { path: PathBuf, detail: String },

    #[error("image has a zero dimension: {0}")]
    ZeroDimension(PathBuf),

    #[error("JPEG quality must be in 1..=100, got {0}")]
    InvalidQuality(u8),

    #[error("image dimensions {got_w}x{got_h} do not satisfy: {need}")]
    ImageTooSmall {
        got_w: usize,
        got_h: usize,
        need: String,
    },

    #[error("dimension mismatch: {w1}x{h1} vs {w2}x{h2}")]
    DimensionMismatch {
        w1: usize,
        h1: usize,
        w2: usize,
        h2: usize,
    },

    #[error("invalid luminance plane: {0}")]
    InvalidPlane(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("no patches survived selection")]
    NoPatches,

    #[error("corpus too small: {got} usable images, need at least {need}")]
    CorpusTooSmall { got: usize, need: usize },

    #[error("model file {path}: {detail}")]
    ModelFormat { path: PathBuf, detail: String },

    #[error("score is not finite: {0}")]
    NonFiniteScore(String),

    #[error("coincident extremal scores: {0}")]
    CoincidentExtremes(String),

    #[error("sequences have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("constant input sequence: {0}")]
    ConstantInput(String),

    #[error("manifest {path} line {line}: {detail}")]
    ManifestParse {
        path: PathBuf,
        line: u64,
        detail: String,
    },

    #[error("missing file referenced by manifest: {0}")]
    MissingFile(PathBuf),

    #[error("manifest {path} line {line}: duplicate distorted path {dst}")]
    DuplicateDst {
        path: PathBuf,
        line: u64,
        dst: PathBuf,
    },

    #[error(
        "manifest {path} line {line}: content id {content_id} maps to more than one reference"
    )]
    OrphanDst {
        path: PathBuf,
        line: u64,
        content_id: String,
    },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("metric score {metric} missing for record {dst}")]
    MissingScore { metric: String, dst: PathBuf },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
