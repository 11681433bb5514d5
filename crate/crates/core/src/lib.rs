//! Zero-temperature random-field Ising model on Z^2.
//!
//! Exact ground states under plus/minus boundary conditions via minimum cut,
//! the three-valued disagreement labeling between them, percolation analytics
//! on disagreement sets, and Monte Carlo drivers that check the perturbation
//! inequalities sample by sample.

pub mod disagreement;
pub mod disorder;
pub mod error;
pub mod experiments;
pub mod groundstate;
pub mod lattice;
pub mod maxflow;
pub mod percolation;
pub mod stats;

pub use error::{Error, Invariant, Result};
