//! Risk measures on finite probability spaces.

pub mod approx;
pub mod error;
pub mod fatou;
pub mod infconv;
pub mod norms;
pub mod prob;
pub mod report;
pub mod risk;
pub mod scalar;

pub use error::{Error, Result};
