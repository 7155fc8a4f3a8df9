//! Exact symbolic kernel for super Euclidean geometry in dimensions 1|1 and
//! 2|1, the associated cocycle double complexes, superconnection Chern
//! characters and the elliptic Euler class.

pub mod error;
pub mod eisenstein;
pub mod scalars;
pub mod grassmann;
pub mod forms;
pub mod supergeom;
pub mod cocycles;
pub mod chern;
pub mod euler;

pub use error::{Error, Result};
