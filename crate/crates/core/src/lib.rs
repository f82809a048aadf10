//! Event-driven Monte Carlo for the two-type spatial Lambda-Fleming-Viot
//! process, its coalescing lineage dual and the scaling limits of both.

pub mod error;
pub mod analysis;
pub mod checks;
pub mod config;
pub mod dual;
pub mod events;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod limit;
pub mod recipes;
pub mod rng;

pub use error::{Error, Result};
