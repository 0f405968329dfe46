pub mod config;
pub mod counterexample;
pub mod error;
pub mod mbasis;
pub mod pipeline;
pub mod scalar;
pub mod project;
pub mod report;
pub mod space;
pub mod sparse;
pub mod variants;

pub use error::{Error, Result};
