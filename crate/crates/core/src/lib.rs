pub mod busemann;
pub mod dp;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod lpp;
pub mod polymer;
pub mod queueing;
pub mod randfield;
pub mod semiring;
pub mod stats;

pub use error::{Error, Result};
