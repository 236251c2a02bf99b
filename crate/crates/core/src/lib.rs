//! Exact sum–product toolkit over finite sets of rationals.

pub mod checks;
pub mod corpus;
pub mod decompose;
pub mod energy;
pub mod error;
pub mod exact;
pub mod families;
pub mod incidence;
pub mod kernel;
pub mod setfile;
pub mod sets;
pub mod soft;
pub mod stats;

pub use error::{Error, Result};
pub use sets::{FiniteRealSet, Rational, SetOp};
