//! Reductions from Convolution-3SUM to witness search, partial convolution,
//! partial matrix multiplication, and histogram indexing, each checked
//! against brute-force oracles.

pub mod convolution;
pub mod hashing;
pub mod histogram;
pub mod instances;
pub mod partial_ops;
pub mod rng;
pub mod witness_trees;

pub use convolution::{DenseVector, SparseBitVector};
pub use instances::{ConvInstance, SolutionWitness, ThreeSumInstance};
pub use rng::SplitMix64;

/// Matrix over the integer semiring.
pub type IntMatrix = partial_ops::Matrix<i64>;
/// Matrix over the Boolean (OR, AND) semiring.
pub type BoolMatrix = partial_ops::Matrix<bool>;
