//! Two competing traits in a logistic population: trait 1 can escape
//! competition into a dormant seed bank, trait 2 can convert trait-1
//! individuals by horizontal transfer.
//!
//! The crate covers the deterministic mean-field system (equilibria, chains
//! of inequalities, linear stability, regime maps), the branching-process
//! approximations of a rare mutant, and an exact stochastic simulator with
//! invasion studies on top of it.

pub mod branching;
pub mod error;
pub mod experiments;
pub mod model;
pub mod ode;
pub mod regime;
pub mod rng;
pub mod ssa;
pub mod stability;

pub use error::{Error, Result};
pub use model::{Chain, Density, Params};
