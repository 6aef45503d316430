use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("gram matrices differ by {diff:.3e} (tolerance {tol:.3e})")]
    GramMismatch { diff: f64, tol: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("unknown label `{0}`")]
    Label(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("algorithm does not solve the problem (max error {0:.3e})")]
    NotASolution(f64),
    #[error("solution is not feasible (residual {0:.3e})")]
    NotFeasible(f64),
    #[error("oracle kind: {0}")]
    Kind(String),
    #[error("inconsistent gap: {0}")]
    Inconsistent(String),
    #[error("gram matrix not positive definite (min eigenvalue {0:.3e})")]
    NotPosDef(f64),
    #[error("independence assumption violated: {0}")]
    IndependenceViolation(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("outer algorithm is not sliced (b_dim = {0})")]
    NotSliced(usize),
    #[error("not a single n-cycle: {0}")]
    NotACycle(String),
    #[error("entry at ({0}, {1}) is not 0 or ±1")]
    EntryDomain(usize, usize),
    #[error("vector lies outside the subspace (distance {0:.3e})")]
    Subspace(f64),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
