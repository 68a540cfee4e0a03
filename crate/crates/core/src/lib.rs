//! Finite-resolution experiments on invariant random compact sets.
//!
//! Symbolic words and the Chacon hierarchy, level-wise presentations of the
//! hyperspace of a Cantor set, permutation actions with their orbit
//! statistics, exact circle dilations, and empirical measures built from
//! orbits.

pub mod actions;
pub mod caps;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod hyperspace;
pub mod rational_string;
pub mod stats;
pub mod symbolic;
pub mod torus;

pub use caps::Caps;
pub use error::{Error, Result};
