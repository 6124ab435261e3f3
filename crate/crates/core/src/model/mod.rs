//! Requests, routes, fleet state and cost accounting.

mod config;
mod request;
mod route;
mod state;
mod validate;

pub use config::ProblemConfig;
pub use request::{canonical_order, Request, RequestId, RobotId};
pub use route::{Route, Stop, StopKind};
pub use state::{stage_cost, Control, Cost, FleetState, Instance, WaitTimes};
pub use validate::{validate_route, RouteViolation, ViolationKind};
