//! Achievability bounds for variable-length stop-feedback codes with a
//! finite number of decoding times.
//!
//! The crate is `no_std` with `alloc`. It covers tail expansions of
//! information-density sums, channel models for the BI-AWGN channel, the
//! BSC and the BEC, decoding-time optimizers, closed-form baselines, the
//! rank Markov chain of systematic random linear fountain coding, and
//! seeded Monte Carlo oracles.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod channels;
pub mod cumulants;
pub mod error;
pub mod expansions;
pub mod mc_oracle;
pub mod quadrature;
pub mod sdo;
pub mod special;

pub use channels::{Channel, ChannelStats, TailEval, TailModel};
pub use cumulants::{CumulantVector, MomentVector, PartitionSolutionSet};
pub use error::{Error, Result};
pub use sdo::{SdoProblem, SdoSolution};
