use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QfaError {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("modulus {0} is outside the supported range 2 <= p < 2^32")]
    ModulusOutOfRange(u64),

    #[error("{0} has no inverse modulo {1}")]
    NotInvertible(u64, u64),

    #[error("{g} is not a primitive root modulo {p}")]
    NotPrimitiveRoot { g: u64, p: u64 },

    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),

    #[error("invalid sequence length {d}: {reason}")]
    InvalidLength { d: usize, reason: &'static str },

    #[error("residue {value} is not in [0, {p})")]
    ResidueOutOfRange { value: u64, p: u64 },

    #[error("vector is not normalized (norm {0})")]
    NotUnitVector(f64),

    #[error("no primes in the interval ({lo}, {hi}]")]
    EmptyPrimeInterval { lo: f64, hi: f64 },

    #[error("set T covers every nonzero residue modulo {p} (|T| = {size}); the construction is degenerate")]
    DegenerateSet { p: u64, size: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, QfaError>;
