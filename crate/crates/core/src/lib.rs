//! Simulation and analysis of DFT beam scanning at a semi-passive IRS that
//! serves a communication user and senses a target at the same time.
//!
//! The crate is organized bottom-up:
//!
//! - [`config`]: scenario parameters and unit conversions
//! - [`array`]: ULA steering vectors and their derivatives
//! - [`channel`]: LoS channels and path gains
//! - [`beam`]: DFT codebook, user-side scan, beamforming gain
//! - [`rate`]: achievable rates for simultaneous and orthogonal sensing
//! - [`sensing`]: echo simulation, ML angle estimation, Monte Carlo RMSE
//! - [`crb`]: Fisher information and Cramér-Rao bounds
//! - [`experiment`]: CSV-producing figure and sweep runners

pub mod array;
pub mod beam;
pub mod channel;
pub mod config;
pub mod crb;
pub mod experiment;
pub mod format;
pub mod noise;
pub mod rate;
pub mod sensing;

pub use config::{parse_config, ConfigError, RawConfig, SystemConfig};
