//! Dense vector/matrix arithmetic, activation functions, and seeded
//! pseudo-randomness underpinning the rest of the crate.

mod matrix;
mod rng;

pub use matrix::{sigmoid, sigmoid_scalar, tanh_vec, Matrix, Vector};
pub use rng::{init_uniform, xavier_scale, Rng};
