use thiserror::Error;

/// Errors produced by the library.
///
/// Two broad families matter to callers: input errors (bad JSON, shape
/// mismatches, points that are not where the caller claims they are) and
/// numeric errors (degeneracies the algorithms refuse to push through).
/// The CLI maps the former to exit code 1 and the latter to exit code 2.
#[derive(Error, Debug)]
pub enum Error {
    #[error("matrix JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("declared n = {declared} but entries give {found} rows")]
    SizeMismatch { declared: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {context}")]
    Dimension { context: String },

    #[error("matrix of order {n} is outside the supported range 1..=64")]
    UnsupportedOrder { n: usize },

    #[error(
        "matrix is not positive definite at tolerance {tol:.3e}: \
         minimal eigenvalue {min_eig:.6e} against scale {scale:.6e}"
    )]
    NotPositiveDefinite { min_eig: f64, scale: f64, tol: f64 },

    #[error(
        "eigensolver did not converge after {sweeps} sweeps: \
         off-diagonal norm {off:.3e} of total {norm:.3e}"
    )]
    EigNoConvergence { sweeps: usize, off: f64, norm: f64 },

    #[error(
        "branch matching ambiguous near theta = {theta:.9}: {detail}; \
         increase the grid count"
    )]
    GridTooCoarse { theta: f64, detail: String },

    #[error(
        "point ({re:.9e}, {im:.9e}) is not on the support line at \
         theta = {theta:.9} (offset {offset:.3e}, tolerance {tol:.3e})"
    )]
    NotOnSupportLine {
        re: f64,
        im: f64,
        theta: f64,
        offset: f64,
        tol: f64,
    },

    #[error("degenerate normal form: {detail}")]
    DegenerateNormalForm { detail: String },

    #[error(
        "exact coefficients stop at order 2: minimal second-order eigenvalue \
         is repeated but its block is not scalar; use the numeric fit"
    )]
    UnsupportedExactOrder,

    #[error(
        "split-order fit is ill conditioned: residual {residual:.3e} \
         against leading coefficient scale {scale:.3e}"
    )]
    IllConditionedFit { residual: f64, scale: f64 },

    #[error("preimage search failed: {detail}")]
    EmptyFiber { detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid example parameters: {0}")]
    ExampleParams(String),

    #[error("internal consistency: {0}")]
    Internal(String),
}

impl Error {
    /// Exit code the CLI should use for this error: 1 for input problems,
    /// 2 for numeric degeneracies.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Json(_)
            | Error::NotSquare { .. }
            | Error::RaggedRow { .. }
            | Error::SizeMismatch { .. }
            | Error::NonFinite { .. }
            | Error::Dimension { .. }
            | Error::UnsupportedOrder { .. }
            | Error::Config(_)
            | Error::ExampleParams(_)
            | Error::NotOnSupportLine { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
