//! Simulator and scheduler library for K-pair device-to-device spectrum
//! sharing.
//!
//! The pieces, bottom up:
//!
//! - [`channel`]: square-area drops, dual-slope pathloss link budget,
//!   Rayleigh fading, and the per-receiver all-active SINR prediction.
//! - [`scheduler`]: the SINR-threshold binary power-control scheme with
//!   one-bit feedback, plus the greedy and SNR-based comparison schedulers
//!   behind one decision/rate interface.
//! - [`optimizer`]: empirical ergodic sum rate and the breakpoint search
//!   that finds the optimal threshold by evaluating only observed SINRs.
//! - [`analytic`]: closed-form two-pair ergodic sum rate under i.i.d.
//!   Rayleigh fading and unit noise, built on the exponential integral E1.
//! - [`harness`]: seeded, reproducible Monte Carlo studies (sum rate vs K,
//!   user-rate CDFs, threshold tables, operation counts) with CSV export.
//!
//! All randomness flows through explicit, per-drop derived substreams, so
//! every study is byte-reproducible regardless of thread count.

// Validation guards are written `!(x > 0.0)` on purpose: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod channel;
pub mod config;
mod error;
pub mod harness;
pub mod optimizer;
pub mod scheduler;

pub use channel::{ChannelRealization, FadingModel, NetworkConfig, Topology, DEFAULT_SEED};
pub use error::{Error, Result};
pub use harness::{AggregateResult, ChannelMode, ExperimentSpec, SchemeSpec};
pub use optimizer::{CandidatePolicy, ThresholdSearchResult};
pub use scheduler::{RateReport, ScheduleDecision, SchemeId};
