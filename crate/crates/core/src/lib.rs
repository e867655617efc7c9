//! Planning library for UAV-borne network-in-a-box (NIB) fleets backhauled by a
//! high-altitude platform (HAPS).
//!
//! The pipeline covers user generation, disk-cover deployment, max-SINR
//! association, beam geometry, NOMA backhaul power split and RZF/SCA access
//! power allocation, followed by rate, efficiency and fairness metrics.

pub mod access;
pub mod association;
pub mod backhaul;
pub mod beamopt;
pub mod channel;
pub mod deployment;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};
pub use geometry::Point2;
