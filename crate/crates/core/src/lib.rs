//! Symbolic and numeric tools for null Lagrangians of one-dimensional
//! dynamics: an expression kernel with jet differentiation, the
//! Euler-Lagrange operator, constructions of null Lagrangians from
//! generating functions, equations of motion from `dL/dt = 0`, a catalog of
//! dissipative systems, and RK4 checks of the resulting dynamics.

pub mod error;
pub mod expr;
pub mod construct;
pub mod composer;
pub mod variational;
pub mod systems;
pub mod numint;
pub mod audit;
pub mod corpus;
mod settings;

pub use error::{Error, Result};
pub use settings::Settings;
