//! Exact classical simulation of von Neumann measurements on the n-party GHZ
//! state.

pub mod accounting;
pub mod cli;
pub mod config;
pub mod error;
pub mod numerics;
pub mod oracle;
pub mod protocol;
pub mod randomness;
pub mod verify;

pub use error::{Error, Result};
