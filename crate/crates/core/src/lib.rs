//! Random rounding onto lattice-shell nets of the sphere, with the Gaussian
//! sum, slicing and strip-covering experiments built on it.
//!
//! Numeric types are generic over [`Real`] (`f32` or `f64`) where the
//! computation is cheap; Monte Carlo drivers and solvers run in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod cli;
pub mod error;
pub mod gauss_sum;
pub mod geometry;
pub mod ledger;
pub mod lp;
pub mod net;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod slicing;

pub use error::{Error, Result};
pub use geometry::{sample_gaussian, sample_sphere_uniform, RealMatrix, UnitVector};
pub use ledger::ConstantsLedger;
pub use net::{LatticePoint, NetParams, RoundingLaw};
pub use rng::RngStream;
pub use scalar::{phi, Real};

pub type UnitVector64 = UnitVector<f64>;
pub type UnitVector32 = UnitVector<f32>;
pub type RealMatrix64 = RealMatrix<f64>;
pub type NetParams64 = NetParams<f64>;
pub type NetParams32 = NetParams<f32>;
pub type LatticePoint64 = LatticePoint<f64>;
pub type RoundingLaw64 = RoundingLaw<f64>;
pub type Frame64 = gauss_sum::Frame<f64>;
pub type Frame32 = gauss_sum::Frame<f32>;
pub type ConstantsLedger64 = ConstantsLedger<f64>;
