use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("masked vertex set is not edge-connected")]
    Disconnected,

    #[error("separator line touches a labeled outer-boundary vertex")]
    SigmaTouchesBoundary,

    #[error("sign change without a near-zero separator vertex (edge {0} -- {1})")]
    SignChangeWithoutSeparator(usize, usize),

    #[error("face already carries a Dirichlet/Neumann label")]
    FaceAlreadyLabeled,

    #[error("periodic map required but not present")]
    MissingPeriodicMap,

    #[error("periodic map present; use the periodic assembly path")]
    UnexpectedPeriodicMap,

    #[error("interior (Dirichlet) block is singular at this shift; move lambda")]
    ASingular,

    #[error("matrix is singular at the working tolerance")]
    Singular,

    #[error("indeterminate inertia: pivot magnitude {0:.3e} lies in the guard band")]
    Indeterminate(f64),

    #[error("crossing within tolerance of a homotopy endpoint; trace unreliable")]
    EndpointCrossing,

    #[error("eigensolver did not converge")]
    EigNonConvergence,

    #[error("eigenvalue {0} is not simple at the gap tolerance")]
    NotSimple(usize),

    #[error("all input values below the zero tolerance")]
    AllZero,

    #[error("interface has no vertices")]
    EmptyInterface,

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
