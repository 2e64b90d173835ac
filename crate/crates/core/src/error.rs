use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin: twice_l = {0} (supported range 1..=20)")]
    InvalidSpin(u32),

    #[error("expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    /// The moments lie outside the feasibility polytope; `sigma_twice` is
    /// twice the spin value of the most negative occupation.
    #[error("infeasible moments: x at sigma = {sigma_twice}/2 is {value:e}")]
    Infeasible { sigma_twice: i32, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no tested eigenvalue set; the coupling needs a sector s")]
    MissingSector,

    #[error("operation requires twice_l = {required}, got {got}")]
    UnsupportedSpin { required: u32, got: u32 },

    #[error("no solution in bracket: {0}")]
    NoSolutionInBracket(String),

    #[error("no convergence after {iterations} iterations (gradient norm {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("enumeration too large: {count} compositions exceeds the cap of {cap}")]
    TooLarge { count: u128, cap: u128 },
}
