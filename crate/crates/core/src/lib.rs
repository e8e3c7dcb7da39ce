//! Systemic risk measures on finite probability spaces.

pub mod aggregation;
pub mod clearing;
pub mod error;
pub mod extended;
pub mod io;
pub mod model;
pub mod optimizer;
pub mod risk;
pub mod sampling;
pub mod systemic;
pub mod tolerances;

pub use error::{Error, Result};
pub use extended::ExtendedReal;
