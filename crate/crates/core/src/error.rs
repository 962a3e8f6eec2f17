use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("characteristic {0} is not prime")]
    NotPrime(u32),
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
    #[error("extension degree must be positive")]
    ZeroDegree,
    #[error("field {p}^{m} exceeds 2^16 elements")]
    TooLarge { p: u32, m: u32 },
    #[error("extension field needs a modulus polynomial")]
    MissingModulus,
    #[error("prime field must not carry a modulus")]
    UnexpectedModulus,
    #[error("modulus must be monic of the field degree with coefficients below p")]
    BadModulus,
    #[error("modulus polynomial is reducible")]
    Reducible,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operands live in different fields")]
    FieldMismatch,
    #[error("value {0} is not an element of the field")]
    InvalidElement(u32),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("linear system has no solution")]
    NoSolution,
    #[error("requested weight {weight} exceeds length {len}")]
    WeightTooLarge { weight: usize, len: usize },
    #[error("rows have unequal lengths")]
    RaggedRows,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("BCH extension degree {0} outside 2..=8")]
    DegreeOutOfRange(u32),
    #[error("BCH capability t={t} invalid for n={n}")]
    CapabilityOutOfRange { n: usize, t: usize },
    #[error("BCH parameters give a degenerate code (k <= 0)")]
    Degenerate,
    #[error("generator matrix does not have full column rank ({rank} < {k})")]
    RankDeficient { rank: usize, k: usize },
    #[error("exhaustive decoding is limited to n <= {max}, got {n}")]
    TooLongForExhaustive { n: usize, max: usize },
    #[error("minimum distance search exceeds the work limit; supply d explicitly")]
    DistanceSearchTooLarge,
    #[error("bad code descriptor `{0}`")]
    BadDescriptor(String),
    #[error("decoding failed")]
    DecodeFailure,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("permutation is not a bijection on 0..{0}")]
    NotPermutation(usize),
    #[error("sigma is not a bijection on the field")]
    NotBijection,
    #[error("transform expects length {expected}, vector has {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("transform field does not match the vector field")]
    FieldMismatch,
    #[error("operation needs a bit permutation")]
    WrongVariant,
    #[error("map is not affine")]
    NotAffine,
    #[error("exhaustive enumeration is limited to n <= 3, got {0}")]
    TooLarge(usize),
}

#[derive(Debug, Error)]
pub enum CommitmentError {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("record parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("bit-flip noise is only defined over GF(2)")]
    NoiseOnNonBinary,
    #[error("cannot flip {z} of {n} positions")]
    TooMuchNoise { z: usize, n: usize },
    #[error("unknown hash algorithm `{0}`")]
    UnknownHash(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttackError {
    #[error("weight bound {b} exceeds length {n}")]
    BoundTooLarge { b: usize, n: usize },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("linear map probability needs q >= 3, got {0}")]
    FieldTooSmall(u32),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(
        "b={b} needs {patterns} patterns per attack, above the limit of {limit}; set force (--force) to run anyway"
    )]
    TooManyPatterns { b: usize, patterns: u64, limit: u64 },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Commitment(#[from] CommitmentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
