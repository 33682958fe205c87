//! Mittag-Leffler functions and least-squares regression of Phillips-curve
//! data with power, exponential and Mittag-Leffler models.

pub mod dataio;
pub mod error;
pub mod fitting;
pub mod models;
pub mod optimizer;
pub mod special;

pub use error::{Error, Result};
