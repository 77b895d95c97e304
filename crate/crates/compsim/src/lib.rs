//! Downlink coordinated multi-point (CoMP) zero-forcing beamforming in
//! K-tier heterogeneous cellular networks: a Monte Carlo simulator for
//! coverage and throughput under realistic inter-cell overhead messaging
//! (delay and quantized feedback), together with the closed-form SIR
//! distribution bounds the simulator is validated against.
//!
//! The pieces, bottom up:
//!
//! - [`model`]: configuration types, validation, the experiment file schema.
//! - [`geometry`]: per-tier PPP distances, equivalent intensities, truncation
//!   tail compensation.
//! - [`association`]: max-average-power serving selection and the set of the
//!   L strongest interferers (cross- or intra-tier).
//! - [`channel`]: effective fading gains, interference cancellation factors,
//!   and the per-subset SIR.
//! - [`overhead`]: coherence-block and backhaul-delay models, cooperation-
//!   phase time fractions, subset probabilities.
//! - [`analysis`]: closed-form SIR CDF bounds and the distance-moment
//!   identities used as test oracles.
//! - [`evaluate`]: the subset-weighted long-term throughput estimator and
//!   the sweep drivers.
//! - [`cli`]: experiment front end emitting reproducible CSV tables.

pub mod analysis;
pub mod association;
pub mod channel;
pub mod cli;
pub mod evaluate;
pub mod gamma;
pub mod geometry;
pub mod model;
pub mod overhead;
