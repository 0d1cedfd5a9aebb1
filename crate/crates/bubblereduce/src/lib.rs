//! Bubbles, interaction constants, reduced finite-dimensional systems and
//! residual checks for two-peak solutions of
//! −Δu = φ(y, z) u^{N/(N−2)}/|y| on ℝᵏ × ℝʰ and its CR counterpart on the
//! Heisenberg group.

pub mod error;
pub mod geometry;
pub mod model;
pub mod quadrature;
pub mod constants;
pub mod interaction;
pub mod reduction;
pub mod residual;
pub mod asymptotics;
pub mod cli;

pub use error::{Error, Result};
pub use model::{Bubble, HeisenbergBubble, SpaceDims, TwoBubbleConfig};
pub use quadrature::QuadratureSpec;
