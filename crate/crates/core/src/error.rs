use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("qubit {0} appears more than once")]
    QubitCollision(usize),

    #[error("amplitude vector of length {len} is not a power of two")]
    BadDimension { len: usize },

    #[error("branch probability {0:e} is below the degenerate-branch threshold")]
    DegenerateBranch(f64),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("unsharpness {0} outside [0, 1]")]
    EtaOutOfRange(f64),

    #[error("plan shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("NaN entry in {0}")]
    NotANumber(&'static str),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("empty assisting set")]
    EmptyAssisting,

    #[error("instance too large for joint optimization ({params} parameters, limit {limit})")]
    InstanceTooLarge { params: usize, limit: usize },

    #[error("ratio undefined: projective localizable entanglement is zero")]
    UndefinedRatio,

    #[error("unsupported family for this operation: {0}")]
    UnsupportedFamily(String),

    #[error("unknown entanglement measure `{0}`")]
    UnknownMeasure(String),

    #[error("memory budget exceeded: {needed} amplitudes requested, budget {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
