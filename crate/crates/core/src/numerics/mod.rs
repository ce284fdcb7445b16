//! Dense arrays, seeded randomness, moments and a symmetric eigensolver.

mod eigen;
mod matrix;
mod rng;
mod stats;

pub use eigen::sym_eig;
pub use matrix::DenseMatrix;
pub use rng::{RngState, SeededRng, Stream};
pub use stats::{mean, pearson, pop_std, pop_var};
