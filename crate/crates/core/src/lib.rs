//! Min-plus matrix algebra, the two semidirect-product key exchanges built
//! on it, and an exponent-recovery attack against the first one.
//!
//! All algebra is generic over the integer entry type (see [`Entry`]). The
//! aliases at the crate root fix it to [`BigInt`], which never overflows;
//! the `*64` aliases use `i64` with every overflow reported as
//! [`Error::Overflow`].

pub mod attack;
pub mod decimal;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod protocol_one;
pub mod protocol_two;
pub mod scalar;

pub use num_bigint::{BigInt, BigUint};

pub use error::{Error, Result};
pub use matrix::{DifferenceMatrix, TropicalMatrix};
pub use scalar::{Entry, TropicalScalar};

pub type Scalar = TropicalScalar<BigInt>;
pub type Matrix = TropicalMatrix<BigInt>;
pub type Difference = DifferenceMatrix<BigInt>;
pub type Pair = protocol_one::PairOne<BigInt>;
pub type PairTwo = protocol_two::PairTwo<BigInt>;

pub type Scalar64 = TropicalScalar<i64>;
pub type Matrix64 = TropicalMatrix<i64>;
pub type Pair64 = protocol_one::PairOne<i64>;
