use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular port closure: |T22| = {magnitude:e}")]
    SingularClosure { magnitude: f64 },

    #[error("singular linear system (condition number {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("no table entry satisfies |t|^2 = {requested} +/- {tolerance}; nearest achievable split is {nearest}")]
    Infeasible {
        requested: f64,
        tolerance: f64,
        nearest: f64,
    },

    #[error("phase step of {step} rad between cells {index} and {next} exceeds pi", next = .index + 1)]
    Aliasing { index: usize, step: f64 },

    #[error("correlation undefined for a constant image")]
    UndefinedCorrelation,

    #[error("cells {0:?} have no feasible selection")]
    InfeasibleCells(Vec<usize>),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
