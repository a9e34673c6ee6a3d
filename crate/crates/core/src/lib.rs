//! Stability analysis for the operator families `P(t) = W(I − tB)` and
//! `R(t) = I − W + (I + tB)⁻¹(2W − I)` that drive plug-and-play image
//! reconstruction with a linear denoiser `W`.

pub mod eigen;
pub mod error;
pub mod generate;
pub mod io;
pub mod matrix;
pub mod operators;
pub mod pnp;
pub mod stability;

pub use error::{Error, Result};
