//! Effective-resistance randomized gossip.
//!
//! The crate is `no_std` + `alloc`: every routine here is pure computation over
//! dense matrices, so it can run anywhere an allocator exists. File formats,
//! the CLI and parallel trial execution live in the `ergossip` crate.
//!
//! Modules, bottom-up:
//!
//! - [`linalg`]: dense square matrices, a symmetric eigensolver and a pivoted
//!   linear solver.
//! - [`graphs`]: weighted graphs and the barbell / c-barbell / small-world
//!   generators.
//! - [`resistance`]: the Laplacian pseudoinverse, effective resistances and
//!   decentralized randomized Kaczmarz (D-RK).
//! - [`spectral`]: activation matrices, expected iteration matrices, spectra,
//!   conductance, hitting/mixing times and the projected-subgradient FMMC
//!   baseline.
//! - [`gossip`]: the asynchronous pairwise-averaging simulator and
//!   averaging-time estimation.
//! - [`optim`]: distributed logistic regression solved with EXTRA.
//!
//! Node indices are 0-based everywhere in this crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod gossip;
pub mod graphs;
pub mod linalg;
pub(crate) mod math;
pub mod optim;
pub mod resistance;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use graphs::{GraphKind, GraphSpec, WeightedGraph};
pub use linalg::Matrix;
