//! Numerical toolkit for nonvanishing experiments on Dirichlet L-functions
//! at the central point.
//!
//! The crate builds the full pipeline at desk scale: exact character
//! orthogonality over a prime modulus, approximate functional equations with
//! incomplete-gamma kernels, a two-piece mollifier with unbalanced lengths,
//! first and second mollified moments accelerated by discrete Fourier
//! transforms, Kloosterman-sum machinery with complete product sums, and the
//! exact rational optimization that turns moment asymptotics into a
//! nonvanishing proportion.

pub mod arith;
pub mod characters;
pub mod cli;
pub mod error;
pub mod expsums;
pub mod lmoments;
pub mod optimize;
pub mod specfun;
pub mod sums;

pub use error::{Error, Result};
