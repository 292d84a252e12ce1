use thiserror::Error;

/// One rejected value of the lifting parameter `l` during an automatic search.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LAttempt {
    pub l: usize,
    /// Kernel dimension observed, when the kernel step ran.
    pub kernel_dim: Option<usize>,
    pub expected_dim: Option<usize>,
    pub reason: String,
    /// True when the failure is a violated identifiability condition rather
    /// than a failed post-hoc verification.
    pub condition: bool,
}

#[derive(Debug, Error)]
pub enum CpdError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("resource limit exceeded: {what} = {size} (limit {limit})")]
    ResourceLimit {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    /// The symmetric kernel has the wrong dimension; `tail` carries the
    /// smallest eigenvalues (relative to the largest) around the cut.
    #[error("kernel condition violated: found dimension {found}, expected {expected}")]
    KernelDimension {
        found: usize,
        expected: usize,
        tail: Vec<f64>,
    },

    #[error("kernel vector is not a symmetric power (fit {fit:.3e})")]
    NotAPower { fit: f64 },

    #[error("pencil eigenvalues collide after {retries} retries (min separation {separation:.3e})")]
    Degeneracy { retries: usize, separation: f64 },

    #[error("complex pencil eigenvalues after {retries} retries")]
    ComplexPencil { retries: usize },

    #[error("rank deficiency: {0}")]
    RankDeficiency(String),

    #[error("hyperplane recovery failed: found {found} of {expected} after {samples} samples")]
    RecoveryFailure {
        found: usize,
        expected: usize,
        samples: usize,
    },

    #[error("verification failed: {what} = {value:.3e} exceeds {limit:.1e}")]
    VerificationFailure { what: &'static str, value: f64, limit: f64 },

    #[error("condition violated: {0}")]
    Condition(String),

    #[error("no value of l in 0..={l_max} succeeded")]
    AllRejected { l_max: usize, attempts: Vec<LAttempt> },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CpdError {
    /// Whether the error means an identifiability condition does not hold
    /// (as opposed to a numerical or verification failure).
    pub fn is_condition_violation(&self) -> bool {
        match self {
            CpdError::KernelDimension { .. } | CpdError::NotAPower { .. } | CpdError::Condition(_) => true,
            CpdError::AllRejected { attempts, .. } => attempts.iter().all(|a| a.condition),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, CpdError>;
