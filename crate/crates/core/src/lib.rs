pub mod analysis;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod identity;
pub mod learning;
pub mod optimize;
pub mod provenance;
pub mod sim;
pub mod topology;

pub use error::{Error, Result};
