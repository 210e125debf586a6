//! Multiband spectrum sensing simulation for cognitive radio.
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`] draws primary-user signals, noise and wideband scenes with
//!   known ground truth.
//! - [`sbdetect`] holds single-band statistics, threshold calibration and the
//!   closed-form detection laws.
//! - [`mbdetect`] runs multiband strategies: parallel PSD detection, serial,
//!   two-stage and sequential scans, and joint threshold design.
//! - [`widebandest`] estimates band structure without known boundaries, by
//!   wavelet edge detection and compressive sensing.
//! - [`coop`] fuses several secondary users' results and assigns bands.
//! - [`perf`] evaluates ROC curves, multiband metrics, throughput and the
//!   sensing/access tradeoffs.
//! - [`experiment`] turns a TOML config into CSV series and a run manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod coop;
pub mod error;
pub mod experiment;
pub mod mbdetect;
pub mod perf;
pub mod rng;
pub mod sbdetect;
pub mod scenario;
pub mod special;
pub mod widebandest;

pub use error::{Error, Result};
pub use rng::SeedTree;
pub use scenario::{FrameSpec, Hypothesis, PuSignalModel, ReceivedFrame, SampleDomain, WidebandScenario};
