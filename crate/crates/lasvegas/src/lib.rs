//! Las Vegas query complexity for quantum query algorithms: simulation,
//! composition, adversary-bound feasible solutions and dual certificates, and
//! compilation of feasible solutions back into algorithms.

pub mod adversary;
pub mod compose;
pub mod error;
pub mod io;
pub mod model;
pub mod numlin;
pub mod problems;
pub mod random;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};
