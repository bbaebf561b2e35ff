use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate simplex {0:?}")]
    DuplicateSimplex(Vec<usize>),

    #[error("complex is not closed: {dim}-simplex {vertices:?} has {cofaces} cofaces (expected 2)")]
    NotClosed {
        dim: usize,
        vertices: Vec<usize>,
        cofaces: usize,
    },

    #[error("degree {degree} out of range for a complex of dimension {dim}")]
    DegreeOutOfRange { degree: usize, dim: usize },

    #[error("degenerate simplex {vertices:?} (volume {volume:e})")]
    DegenerateSimplex { vertices: Vec<usize>, volume: f64 },

    #[error("operation requires an embedded complex")]
    NotEmbedded,

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("cochains live on different complexes")]
    ComplexMismatch,

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("form expression error: {0}")]
    FormSyntax(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("quadrature did not converge (degree {degree}, relative change {change:e})")]
    QuadratureNotConverged { degree: usize, change: f64 },

    #[error("harmonic threshold is ambiguous: spectral gap {gap:e}")]
    SpectrumNotSeparated { gap: f64 },

    #[error("smooth reference check failed: {0}")]
    Oracle(String),

    #[error("non-finite state at t = {t}")]
    BlowUp { t: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverDiverged { .. }
                | Error::NotPositiveDefinite
                | Error::QuadratureNotConverged { .. }
                | Error::SpectrumNotSeparated { .. }
                | Error::BlowUp { .. }
                | Error::Oracle(_)
        )
    }
}
