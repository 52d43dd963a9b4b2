use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("polynomials live on different lattices: {0:?} vs {1:?}")]
    LatticeMismatch((u32, u32), (u32, u32)),

    #[error("parity-check matrices are not orthogonal")]
    NotOrthogonal,

    #[error("residual has a nonzero syndrome")]
    NonzeroSyndrome,

    #[error("pattern lies in the image of the check matrix")]
    TrivialClass,

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("move set violates uniqueness: two qubits connect the origin to offset {0:?}")]
    DuplicateMove((u32, u32)),

    #[error("odd number of vertices ({0}) cannot be perfectly matched")]
    OddVertexCount(usize),

    #[error("winding ({dx}, {dy}) does not match the cell displacement")]
    InconsistentWinding { dx: i64, dy: i64 },

    #[error("no matched edge touches the set")]
    UndefinedScore,

    #[error("the curves do not cross inside the sampled range")]
    NoCrossing,

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("unknown code `{0}`")]
    UnknownCode(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
