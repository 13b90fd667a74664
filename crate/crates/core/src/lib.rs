//! Numerical Finsler geometry on a single coordinate chart.
//!
//! Everything is built on a [`model::FinslerModel`], a positively
//! 1-homogeneous function `F(x, y)` evaluated generically over nested dual
//! numbers so that the fundamental tensor, the Cartan tensor, connection
//! coefficients and their derivatives are exact to rounding.

pub mod classify;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod indicatrix;
pub mod jet;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod sampling;
pub mod scalar;
pub mod transport;

pub use error::{FinslerError, Result};
pub use jet::{ScalarField, SlitPoint};
pub use model::FinslerModel;
