//! Hotplug coded caching from placement delivery arrays and t-designs.

pub mod bounds;
pub mod catalog;
pub mod combinatorics;
pub mod design;
pub mod error;
pub mod field;
pub mod hppda;
pub mod improver;
pub mod mds;
pub mod pda;
pub mod report;
pub mod simulator;

pub use error::{Error, Result};

/// Exact rational used for memory ratios and rates.
pub type Rational = num_rational::Ratio<i128>;
