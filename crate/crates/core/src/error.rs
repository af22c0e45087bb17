use thiserror::Error;

/// Errors raised by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("generator count must be at least 1")]
    ZeroGenerators,

    #[error("truncation too large: {requested} basis words exceed the cap of {cap}")]
    TruncationTooLarge { requested: u128, cap: usize },

    #[error("letter {letter} is outside the generator range 1..={n}")]
    LetterOutOfRange { letter: u32, n: usize },

    #[error("cannot split a word of length {len} into {parts} nonempty factors")]
    InvalidPartCount { len: usize, parts: usize },

    #[error("word length {len} exceeds the brute-force guard of {guard}")]
    WordTooLong { len: usize, guard: usize },

    #[error("order m must be at least 1")]
    ZeroOrder,

    #[error("polynomial is not positive regular: {0}")]
    NotPositiveRegular(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not in the domain: (id - Phi)^{power}(I) has minimum eigenvalue {min_eig:e}")]
    NotInDomain { power: usize, min_eig: f64 },

    #[error("iterates of Phi overflowed at step {step}")]
    Overflow { step: usize },

    #[error("tuple is not pure: ||Phi^k(I)|| = {residual:e} after {steps} steps")]
    NotPure { residual: f64, steps: usize },

    #[error("constraint {index} is not annihilated: ||q(T)|| = {norm:e}")]
    ConstraintViolated { index: usize, norm: f64 },

    #[error("point is not strictly inside the scalar domain (sum = {sum})")]
    OutsideScalarDomain { sum: f64 },

    #[error("the constraint complement N_Q is trivial at this truncation")]
    DegenerateSubspace,

    #[error("degree budget exceeded: need {needed}, truncation is {available}")]
    DegreeBudget { needed: usize, available: usize },

    #[error("tail certificate {achieved:e} above target {target:e} at truncation cap {cap}")]
    TailUnattainable { achieved: f64, target: f64, cap: usize },

    #[error("Neumann series diverged after {terms} terms")]
    Divergence { terms: usize },

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
