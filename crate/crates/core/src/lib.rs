pub mod cli;
pub mod error;
pub mod grid;
pub mod identity;
pub mod integral;
pub mod ito;
pub mod levy;
pub mod rng;
pub mod spde;
pub mod stats;
pub mod tolerances;

pub use error::{Error, Result};
pub use grid::{PathEnsemble, TimeGrid};
pub use levy::{DriverKind, JumpLaw, JumpRecord, LevySpec};
