//! Deterministic driving-scenario simulation and pseudo-expert data
//! generation.
//!
//! A [`scenario::Scenario`] holds a map, an ego log and agent tracks. The
//! ego log is perturbed with entries from a trajectory [`vocab`], the
//! perturbed plan is executed by an LQR tracker inside a reactive IDM
//! traffic simulation ([`reactive`]), a pseudo-expert ([`expert`]) drives
//! the vehicle back, and the result is scored ([`metrics`]) and exported
//! ([`pipeline`]). [`scaling`] fits log-quadratic data-scaling curves.

pub mod cli;
pub mod config;
pub mod error;
pub mod expert;
pub mod geometry;
pub mod kinematics;
pub mod control;
pub mod metrics;
pub mod pipeline;
pub mod reactive;
pub mod rng;
pub mod scaling;
pub mod scenario;
pub mod vocab;

pub use error::{Error, Result};
