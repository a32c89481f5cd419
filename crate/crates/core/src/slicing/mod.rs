//! The randomized slicing construction: a scale schedule, the random
//! polytope `K = conv{+-R_k theta_kj, +-n e_i}`, the Gaussian mixture `mu`
//! and estimates of its sections, of `mu(L)` and of `|L|` for `L = 4K`.

mod body;
mod measure;
mod schedule;

pub use body::*;
pub use measure::*;
pub use schedule::*;
