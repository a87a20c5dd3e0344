use thiserror::Error;

/// Errors raised by the geometric, quadrature and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The quadrature cell budget ran out before the error target was met.
    #[error(
        "precision target not reached after {cells} cells: value {value} with error bound {err}"
    )]
    Precision { value: f64, err: f64, cells: usize },

    /// A lower-bound certificate exceeded the divergence ceiling (or an
    /// exact non-integrability test fired).
    #[error("integral diverges: partial lower bound {partial}")]
    Diverging { partial: f64 },

    #[error("ball B({center:?}, {radius}) leaves the grid coverage")]
    Coverage { center: [f64; 2], radius: f64 },

    #[error("ratio undefined: {0}")]
    UndefinedRatio(String),

    /// Solver hit its iteration cap; carries the best objective seen.
    #[error("no convergence after {iterations} iterations (best value {best_value}, residual {residual})")]
    Convergence {
        iterations: usize,
        best_value: f64,
        residual: f64,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
