//! Analysis toolkit for a three-queue priority polling system with a
//! threshold service policy.
//!
//! Queue 1 has head-of-line priority, queue 2 is served exhaustively, and
//! queue 3 is abandoned as soon as queue 2 holds `N` customers. As the
//! load on queue 3 approaches capacity the two stable queues behave like a
//! two-class preemptive priority queue with an `N`-policy vacation, and the
//! scaled content of queue 3 becomes exponential.
//!
//! * [`model`] parameter containers, loads and normalisation.
//! * [`ctmc`] exact transition structure, truncated generators and the
//!   stationary solve used as ground truth.
//! * [`sim`] an event simulator of the polling system plus empirical CDFs.
//! * [`heavy_traffic`] the exponential limit law and the joint limit CDF.
//! * [`tails`] generating functions and exact tail asymptotics of the
//!   vacation model.

pub mod ctmc;
pub mod error;
pub mod heavy_traffic;
pub mod model;
pub mod sim;
pub mod tails;

pub use error::{Error, Result};
pub use model::{Loads, ModelIIParams, PollingParams, StabilityReport, VacationRates};
