use thiserror::Error;

/// Every failure the library can report.
///
/// The variants are grouped by the kind of caller reaction they call for;
/// [`HvlError::kind`] gives a stable machine-readable name for each.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HvlError {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error(
        "supercritical coupling: P^2 = {p_squared} < 0, no self-adjoint bound state is attempted"
    )]
    Supercritical { p_squared: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("non-finite value during integration at r = {r}")]
    NonFinite { r: f64 },

    #[error("no eigenvalue in [{lo}, {hi}]: {reason}")]
    NoEigenvalue { lo: f64, hi: f64, reason: String },

    #[error("node count {requested} not attainable in bracket (nodes at ends: {at_lo}, {at_hi})")]
    NodeCount {
        requested: usize,
        at_lo: usize,
        at_hi: usize,
    },

    #[error("origin fit failed: {0}")]
    Fit(String),

    #[error("divergent average: {0}")]
    Divergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("finite-difference derivative rejected: {0}")]
    FiniteDifference(String),

    #[error("refused: {0}")]
    Refusal(String),
}

impl HvlError {
    pub fn kind(&self) -> &'static str {
        match self {
            HvlError::InvalidPotential(_) => "invalid-potential",
            HvlError::InvalidProblem(_) => "invalid-problem",
            HvlError::Supercritical { .. } => "supercritical",
            HvlError::Domain(_) => "domain",
            HvlError::Range(_) => "range",
            HvlError::NonFinite { .. } => "non-finite",
            HvlError::NoEigenvalue { .. } => "no-eigenvalue",
            HvlError::NodeCount { .. } => "node-count",
            HvlError::Fit(_) => "fit",
            HvlError::Divergence(_) => "divergence",
            HvlError::Precondition(_) => "precondition",
            HvlError::FiniteDifference(_) => "finite-difference",
            HvlError::Refusal(_) => "refusal",
        }
    }
}

pub type Result<T> = std::result::Result<T, HvlError>;
