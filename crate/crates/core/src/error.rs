use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("edge endpoint {site} outside 1..={num_sites}")]
    EndpointOutOfRange { site: usize, num_sites: usize },

    #[error("self-loop at site {site}")]
    SelfLoop { site: usize },

    #[error("duplicate edge ({x}, {y})")]
    DuplicateEdge { x: usize, y: usize },

    #[error("state space has {size} states, exceeding the cap of {cap}")]
    SpaceTooLarge { size: u128, cap: u128 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site counts sum to {found}, expected {expected}")]
    TotalMismatch { expected: u32, found: u32 },

    #[error("graph does not match the one the state space was built over")]
    GraphMismatch,

    #[error("state space has the wrong mode for this operation: {0}")]
    WrongMode(&'static str),

    #[error("family condition (1) violated: p_0={p0}, p_hat_0={p_hat0}, 1/nu={inv_nu}")]
    KappaCondition1 { p0: f64, p_hat0: f64, inv_nu: f64 },

    #[error("family condition (2) violated: border entry U[{row}][{col}] = {value}, expected 1")]
    KappaCondition2 { row: usize, col: usize, value: f64 },

    #[error("family condition (3) violated: |nu P U Phat U^T - I| = {residual} > {tol}")]
    KappaCondition3 { residual: f64, tol: f64 },

    #[error("{which} is not a strictly positive probability vector: {detail}")]
    NotAProbability { which: &'static str, detail: String },

    #[error("degenerate input to the orthogonalization: {0}")]
    DegenerateFamily(String),

    #[error("lambda must be positive, got {0}")]
    NonpositiveLambda(f64),

    #[error("routes for {what} disagree: max deviation {residual} > {tol}")]
    RouteMismatch {
        what: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("operator is not a scalar shift of the identity: off-identity residual {residual} > {tol}")]
    NotScalarShift { residual: f64, tol: f64 },

    #[error("unitarity defect {residual} exceeds {tol}")]
    UnitarityDefect { residual: f64, tol: f64 },

    #[error("window exhausted: a raising factor stepped outside the valid sub-window")]
    WindowExhausted,

    #[error("at least one sample is required")]
    ZeroSamples,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
