//! Hub-based multi-fleet truck platooning.
//!
//! Trucks with fixed routes decide how long to wait at each hub so that they
//! depart together with other trucks on shared road segments, trading the
//! platooning benefit their fleet earns against the monetary loss of waiting.
//! This crate provides:
//!
//! - [`network`] — road networks, routes, and seeded scenario generation;
//! - [`reward`] — partner identification and the fleet economic model;
//! - [`dp`] — the exact finite-horizon solver for one truck's waiting-time
//!   schedule, plus an exhaustive-enumeration oracle;
//! - [`coordination`] — the shared hub board and the three coordination
//!   schemes (predictive multi-fleet, spontaneous multi-fleet, single-fleet);
//! - [`sim`] — a deterministic discrete-event simulation with economic and
//!   platooning metrics;
//! - [`testkit`] — seeded fixture builders shared by tests and benchmarks.

pub mod coordination;
pub mod dp;
pub mod error;
pub mod network;
pub mod reward;
pub mod sim;
pub mod testkit;

pub use error::{Error, Result};
