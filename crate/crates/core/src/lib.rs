//! Pickup-and-delivery routing for a fleet of multi-capacity robots on a
//! street network: greedy insertion, one-request-at-a-time rollout over
//! sampled demand scenarios, and fleet sizing.

pub mod counterexample;
pub mod demand;
pub mod error;
pub mod fleetsize;
pub mod greedy;
pub mod io;
pub mod model;
pub mod network;
mod par;
pub mod rollout;
pub mod routesgen;
pub mod sim;

pub use error::{DemandError, FleetSizeError, GraphError, InputError, SimError, StateError};
pub use model::*;
pub use network::{NodeId, Seconds, StreetGraph, TravelTimeOracle};
