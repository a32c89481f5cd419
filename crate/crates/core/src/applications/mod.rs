//! Applications of the rounding net: Hilbert-Schmidt comparison of
//! `|A eta|` with `|A xi|`, the `B_kappa` column-reweighting functional, and
//! strip counts of point configurations on the sphere.

mod bkappa;
mod hs;
mod strips;

pub use bkappa::*;
pub use hs::*;
pub use strips::*;
