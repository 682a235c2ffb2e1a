//! Link-level simulation and closed-form analysis of NOMA downlink transmission
//! over finite-resolution analog beamformers.
//!
//! A base station with `M` antennas serves a set of users with strict QoS
//! requirements (group S1) through quantized phase-only beams. Each beam is
//! shared, via power-domain superposition, with one opportunistically
//! scheduled user from a second group (S2) that performs successive
//! interference cancellation.
//!
//! * [`channel`] draws user geometry and Rayleigh / LOS mmWave channels.
//! * [`frab`] builds the phase codebook and quantizes channels into beams.
//! * [`noma`] holds the SINR chain, partner selection and outage events.
//! * [`analysis`] evaluates the closed-form and asymptotic outage expressions.
//! * [`engine`] runs deterministic, parallel Monte Carlo sweeps.
//! * [`config`] and [`report`] handle scenario files, presets and CSV/JSON output.

pub mod analysis;
pub mod channel;
pub mod config;
pub mod engine;
mod error;
pub mod frab;
pub mod noma;
pub mod oracle;
pub mod report;
pub mod special;

pub use channel::{ChannelModel, ChannelRealization, Group, UserGeometry};
pub use config::{Preset, SystemConfig};
pub use engine::{run_sweep, stream_for_trial, Estimate, OutageCurve, Provenance, TrialStream};
pub use error::{Error, Result};
pub use frab::{Beamformer, Codebook};
pub use noma::{PowerAllocation, RatePair, TrialOutcome};

pub use num_complex::Complex64;
