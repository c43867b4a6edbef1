//! Maxwell–Lorentz dynamics of a spinning extended charge at rest: charge profiles,
//! stationary solitons, the spectral integrator and closed-form Kirchhoff oracles.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod charge;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod kirchhoff;
pub mod model;
pub mod quadrature;
pub mod soliton;

#[cfg(test)]
mod testutil;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use charge::{ChargeProfile, ProfileKind, ProfileSpec, SpectralProfile, SpectralZeros};
pub use error::{Error, Result};
pub use field::{FieldState, SystemState};
pub use grid::SpectralGrid;
pub use model::SystemModel;
pub use soliton::Soliton;
