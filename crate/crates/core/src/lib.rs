//! Exact truncated star products on Kähler charts.
//!
//! Everything is computed as a truncated formal power series in ħ (internally
//! in ε = ħ^{1/2}) with coefficients in a pluggable commutative ring: exact
//! Gaussian rationals by default, double-precision complex for quadrature
//! harnesses, or truncated jets for derivative-carrying ("jet-scalar") runs.
//!
//! Two independent engines compute the non-normalized product `•`:
//! [`laplace`] expands the defining formal integral by Wick calculus, and
//! [`graph`] sums locally oriented diagrams weighted by inverse symmetry
//! factors. Their exact agreement is the central cross-check. On top of `•`
//! sit the unit element, the normalized product `⋆`, contravariant symbols
//! ([`star`]) and the one-dimensional formal Bergman projector ([`bergman`]).

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bergman;
pub mod error;
pub mod graph;
pub mod jet;
pub mod kahler;
pub mod laplace;
pub mod multi_index;
pub mod scalar;
pub mod series;
pub mod star;
pub mod wick;

#[cfg(test)]
pub(crate) mod test_fixtures;

pub use error::{Error, Result};
pub use jet::TruncatedJet;
pub use kahler::{JetContext, PotentialModel};
pub use multi_index::MultiIndex;
pub use scalar::{ExactScalar, Rat, Ring, C64};
pub use series::HbarSeries;
