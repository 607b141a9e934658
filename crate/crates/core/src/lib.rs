//! Noncommutative phase-space mechanics: deformed Poisson brackets, Kepler
//! dynamics and circular orbits, canonical representations, a rotationally
//! and time-reversal invariant 3D algebra, and ground-state averaging.

pub mod autodiff;
pub mod averaging;
pub mod bracket;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod observable;
pub mod orbit;
pub mod representation;
pub mod rk4;
pub mod rotinv;

pub use error::{Error, Result};
