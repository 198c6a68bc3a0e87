//! Error type shared by every module of the crate.

use thiserror::Error;

/// Everything that can go wrong outside of plain arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Modulus failed a deterministic Miller-Rabin primality check.
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    /// Modulus below the smallest supported prime.
    #[error("modulus {0} is too small; need p >= 3")]
    TooSmall(u64),
    /// Residue divisible by p where a unit was required.
    #[error("residue is 0 mod p; no discrete logarithm")]
    ZeroResidue,
    /// Argument shares a factor with the modulus.
    #[error("{0} is not coprime to the modulus")]
    NotCoprime(u64),
    /// Kernel functions are defined for x > 0 only.
    #[error("kernel argument must be positive, got {0}")]
    NonPositiveArgument(f64),
    /// Central-point machinery is restricted to even characters.
    #[error("character with index {0} is odd")]
    OddCharacter(u64),
    /// Mollifier coefficient tables need at least two entries.
    #[error("mollifier length {0} is below 2")]
    LengthTooSmall(u64),
    /// A block parameter left its admissible range.
    #[error("range violation: {0}")]
    RangeViolation(String),
    /// An enumeration would exceed the configured tuple budget.
    #[error("enumeration of {0} tuples exceeds the scale budget")]
    ScaleExceeded(u64),
    /// An enumeration window contains no integers.
    #[error("window {0} is empty")]
    WindowEmpty(String),
    /// A residue that must be inverted is divisible by p.
    #[error("residue {0} is not invertible mod p")]
    NonInvertible(u64),
    /// Mollifier weights that normalize to nothing.
    #[error("weights c1={0}, c2={1} are degenerate")]
    DegenerateWeights(f64, f64),
    /// Optimization requires theta > 0.
    #[error("theta must be positive, got {0}")]
    NonpositiveTheta(String),
    /// The feasible region of the optimization is empty.
    #[error("feasible region is empty at margin {0}")]
    EmptyRegion(String),
    /// Report output could not be written.
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
