pub mod condexp;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod mre_location;
pub mod report;
pub mod rng;
pub mod simharness;
pub mod specfun;

pub use error::{Error, Result};
