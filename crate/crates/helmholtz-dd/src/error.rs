//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("breakpoint {value} is not on the mesh grid (element size {h})")]
    BreakpointNotOnGrid { value: f64, h: f64 },

    #[error("overlap {delta} too large for cell width {cell}")]
    OverlapTooLarge { delta: f64, cell: f64 },

    #[error("partition-of-unity bump has empty support on subdomain {subdomain}")]
    EmptySupport { subdomain: usize },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("diffusion field is not symmetric positive definite at ({x}, {y})")]
    NonSpdDiffusion { x: f64, y: f64 },

    #[error("vector length {got} does not match subdomain {subdomain} ({expected} dofs)")]
    DofMismatch {
        subdomain: usize,
        expected: usize,
        got: usize,
    },

    #[error("singular pivot in row {row}")]
    SingularPivot { row: usize },

    #[error("trajectory step rejected: Hamiltonian drift {drift} exceeds {tol}")]
    StepRejected { drift: f64, tol: f64 },

    #[error("enumeration budget exceeded ({0})")]
    BudgetExceeded(String),

    #[error("instance too large for brute force: {0}")]
    TooLargeInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code class used by the CLI: 2 for configuration
    /// problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_)
            | Error::InvalidProfile(_)
            | Error::DegenerateDomain(_)
            | Error::OverlapTooLarge { .. }
            | Error::BreakpointNotOnGrid { .. }
            | Error::TooLargeInstance(_)
            | Error::Io { .. } => 2,
            _ => 3,
        }
    }
}
