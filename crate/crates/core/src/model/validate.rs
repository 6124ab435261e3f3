use std::fmt;

use serde::{Deserialize, Serialize};

use super::request::RequestId;
use super::route::{Route, StopKind};
use super::state::FleetState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// First stop is not `DepotStart` at the depot at `T_start`.
    BadStart,
    /// Last stop is not `DepotEnd` at the depot, or one of them appears elsewhere.
    BadEnd,
    LateReturn,
    /// Less time between two stops than the shortest path needs.
    TravelTime,
    UnknownRequest(RequestId),
    /// Missing, duplicated or out-of-order pickup/drop-off pair.
    Precedence(RequestId),
    Capacity,
    EarlyPickup(RequestId),
    PickupWait(RequestId),
    DropoffWait(RequestId),
    /// Executed stops differ from the fleet's current route.
    PrefixModified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteViolation {
    pub stop: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for RouteViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stop {}: {:?}", self.stop, self.kind)
    }
}

/// Checks a route against the timing, precedence, capacity and wait-limit
/// rules for the requests known to `state`. Returns the first violation.
pub fn validate_route(route: &Route, state: &FleetState) -> Result<(), RouteViolation> {
    let cfg = state.config();
    let oracle = state.oracle();
    let stops = route.stops();
    let fail = |stop, kind| Err(RouteViolation { stop, kind });

    if stops.len() < 2 || route.traversed() < 1 || route.traversed() >= stops.len() {
        return fail(0, ViolationKind::BadStart);
    }
    let first = stops[0];
    if first.kind != StopKind::DepotStart || first.node != route.depot || first.time != cfg.t_start {
        return fail(0, ViolationKind::BadStart);
    }
    let last_idx = stops.len() - 1;
    let last = stops[last_idx];
    if last.kind != StopKind::DepotEnd || last.node != route.depot {
        return fail(last_idx, ViolationKind::BadEnd);
    }
    if let Some(current) = state.routes().get(route.robot.0) {
        let n = current.traversed();
        if route.traversed() < n || route.stops().get(..n) != current.stops().get(..n) {
            return fail(n.min(last_idx), ViolationKind::PrefixModified);
        }
    }

    let mut load: i64 = 0;
    let mut picks: Vec<(RequestId, usize)> = Vec::new();
    let mut drops: Vec<RequestId> = Vec::new();
    for (i, s) in stops.iter().enumerate() {
        if i > 0 {
            let prev = stops[i - 1];
            if s.time - prev.time < oracle.time(prev.node, s.node) {
                return fail(i, ViolationKind::TravelTime);
            }
            if matches!(s.kind, StopKind::DepotStart) || (matches!(s.kind, StopKind::DepotEnd) && i != last_idx) {
                return fail(i, ViolationKind::BadEnd);
            }
        }
        match s.kind {
            StopKind::Pickup(id) => {
                let Some(r) = state.request(id) else { return fail(i, ViolationKind::UnknownRequest(id)) };
                if r.pickup != s.node || picks.iter().any(|(q, _)| *q == id) {
                    return fail(i, ViolationKind::Precedence(id));
                }
                if s.time < r.desired_pickup {
                    return fail(i, ViolationKind::EarlyPickup(id));
                }
                if s.time - r.desired_pickup > cfg.w_pick {
                    return fail(i, ViolationKind::PickupWait(id));
                }
                picks.push((id, i));
            }
            StopKind::Dropoff(id) => {
                let Some(r) = state.request(id) else { return fail(i, ViolationKind::UnknownRequest(id)) };
                let Some(&(_, p)) = picks.iter().find(|(q, _)| *q == id) else {
                    return fail(i, ViolationKind::Precedence(id));
                };
                if r.dropoff != s.node || drops.contains(&id) {
                    return fail(i, ViolationKind::Precedence(id));
                }
                if s.time - (stops[p].time + oracle.time(r.pickup, r.dropoff)) > cfg.w_drop {
                    return fail(i, ViolationKind::DropoffWait(id));
                }
                drops.push(id);
            }
            _ => {}
        }
        load += s.kind.load_delta();
        if load > cfg.capacity as i64 {
            return fail(i, ViolationKind::Capacity);
        }
    }
    if let Some(&(id, i)) = picks.iter().find(|(q, _)| !drops.contains(q)) {
        return fail(i, ViolationKind::Precedence(id));
    }
    if last.time > cfg.t_end {
        return fail(last_idx, ViolationKind::LateReturn);
    }
    Ok(())
}
