//! Reading and writing files: configurations, the Nursery data set and
//! experiment results.

pub mod config;
pub mod nursery;
pub mod results;
