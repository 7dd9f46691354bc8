//! File formats, parallel trial execution, the acceptance checks and the
//! experiment runner built on [`ergossip_core`].
//!
//! Everything user-facing here is 1-based (edge lists, CSV node columns);
//! conversion to the 0-based core happens at the IO boundary.

pub mod checks;
pub mod config;
pub mod csvout;
pub mod edgelist;
mod error;
pub mod experiment;
pub mod parallel;
pub mod plotdata;

pub use error::{Error, Result};
