pub mod bounds;
pub mod coupling;
pub mod error;
pub mod lattice;
pub mod models;
pub mod moments;
pub mod pattern;
pub mod simulate;
pub mod stats;
mod transport;
pub mod urn;

pub use error::{Error, Result};
pub use lattice::{LatticeDistribution, Point, TruncatedPoissonProduct};
