//! Monte Carlo simulator and closed-form analysis for multiuser MIMO
//! limited feedback with pairwise user cooperation.
//!
//! Users are grouped in pairs. Each user quantizes its own combined channel
//! with a random codebook and shares it with its partner over a side link;
//! the pair then acts as one `N + 1` antenna receiver when choosing a
//! random-beamforming codeword, and only the stronger user feeds back.

// Negated comparisons deliberately send NaN down the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod cooperation;
pub mod error;
pub mod link;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod qbc;
pub mod scheduler;

pub use error::{Error, Result};
pub use model::{CodebookMode, Mode, SystemConfig};
