//! Dense arrays, seeded random streams and the special functions used by the
//! Student's-t estimator.

mod array;
mod rng;
mod special;

pub use array::DenseArray;
pub use rng::{sample_bernoulli_mask, sample_student_t, Rng};
pub use special::{digamma, ln_gamma};
