//! Experiment harness over `sumprod-core`: quantity reports, the exact-check
//! suite, parameter sweeps and report serialisation.

pub mod exponents;
pub mod quantities;
pub mod report;
pub mod sweep;
pub mod verify;

pub use exponents::ExponentTable;
pub use report::{Caps, Format, Report};
