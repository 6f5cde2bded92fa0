pub mod error;
pub mod metrics;
pub mod alignment;
pub mod cli;
pub mod network;
pub mod numerics;
pub mod receiver;

pub use error::{Error, Result};
