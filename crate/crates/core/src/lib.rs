//! Symplectic twistor geometry on ℝ²ⁿ.
//!
//! Connections are written as `∇ = ∇⁰ + A` in a global Darboux chart; the
//! twistor space Z⁰ is handled in Siegel-disk fibre coordinates.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod connection;
pub mod exprfield;
pub mod flatmaps;
pub mod hermitian;
pub mod levi;
pub mod linalg;
pub mod sampling;
pub mod symplin;
pub mod twistor;

pub use error::{Error, Result};
