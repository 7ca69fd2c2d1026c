//! Movable-antenna amplify-and-forward relay optimization.
//!
//! A single-antenna source reaches a single-antenna destination through a
//! half-duplex relay with `N` movable antennas. The relay picks one antenna
//! placement for reception, a second one for retransmission, and an AF weight
//! matrix, to maximize the end-to-end SNR under a relay power budget and a
//! minimum inter-antenna spacing.
//!
//! The crate is `no_std` (it needs `alloc`). IO, file formats and the
//! experiment CLI live in the companion `marelay-sim` crate.
//!
//! Module map:
//! - [`channel`]: field-response channel synthesis, positions, random draws.
//! - [`relay_weights`]: end-to-end SNR, Kronecker lifting and the
//!   Charnes-Cooper SDP for the weight matrix, rank-one recovery.
//! - [`position_opt`]: per-antenna gradient ascent for both placements.
//! - [`ao`]: the alternating-optimization driver.
//! - [`baselines`]: fixed-position (FPA) and one-time adjustment (OTPA) schemes.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ao;
pub mod baselines;
pub mod channel;
pub mod config;
mod error;
mod linalg;
pub mod position_opt;
pub mod relay_weights;
pub mod serde_complex;

pub use ao::{achievable_rate, ao_solve, initialize, SolutionState};
pub use baselines::{fpa_solve, otpa_solve};
pub use channel::{
    min_pairwise_distance, realization_seed, sample_channel, ChannelRealization, Position,
    PositionSet,
};
pub use config::{SolverSettings, SystemConfig};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, Complex64};
pub use position_opt::GaParams;
pub use relay_weights::{AfWeights, LiftedProblem, SdpSolution};
