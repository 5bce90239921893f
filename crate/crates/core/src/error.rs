use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown unit `{unit}` in period `{period}`")]
    UnknownUnit { unit: String, period: String },

    #[error("unit `{unit}` registered twice in period `{period}`")]
    DuplicateUnit { unit: String, period: String },

    #[error("self-loop on unit `{unit}` in period `{period}`")]
    SelfLoop { unit: String, period: String },

    #[error("invalid edge weight {weight} on `{source_unit}` -> `{target_unit}` (must be finite and >= 0)")]
    InvalidWeight {
        source_unit: String,
        target_unit: String,
        weight: f64,
    },

    #[error("period `{period}` has no nonzero edge weight; trade normalizer undefined")]
    DegenerateNormalizer { period: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("covariate `{0}` not found")]
    MissingCovariate(String),

    #[error("dataset has no exposure column; compute exposures first")]
    MissingExposure,

    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("no skewness root on [{lower}, {upper}]: skewness {skew_lower} .. {skew_upper}")]
    NoRoot {
        lower: f64,
        upper: f64,
        skew_lower: f64,
        skew_upper: f64,
    },

    #[error("singular design; offending columns: {columns:?}")]
    SingularDesign { columns: Vec<String> },

    #[error("design has {rows} rows but {cols} columns")]
    InsufficientRows { rows: usize, cols: usize },

    #[error("duplicate design term `{0}`")]
    DuplicateTerm(String),

    #[error("all exposures identical; joint model unidentified (use the naive estimator)")]
    DegenerateExposure,

    #[error("fitted residual scale is zero for the {0} model")]
    DegenerateScale(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty evaluation grid")]
    EmptyGrid,

    #[error("grid must be strictly increasing")]
    UnsortedGrid,

    #[error("{value} lies outside the grid hull [{lower}, {upper}]")]
    OutsideGrid { value: f64, lower: f64, upper: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("bootstrap aborted: {failed} of {total} replicates failed")]
    BootstrapAborted { failed: usize, total: usize },
}
