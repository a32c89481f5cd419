//! Gaussian sums `F(eta, t) = (1/N) sum_k phi(r <eta, theta_k> + t)` over a
//! random frame, their expectation and smoothing bounds, and supremum
//! estimators.

mod bounds;
mod frame;
mod sup;

pub use bounds::*;
pub use frame::*;
pub use sup::*;
