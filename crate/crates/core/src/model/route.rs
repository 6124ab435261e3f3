use serde::{Deserialize, Serialize};

use crate::network::{NodeId, Seconds, TravelTimeOracle};

use super::request::{RequestId, RobotId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopKind {
    DepotStart,
    /// Pass-through node pinning where the robot was committed to be when the
    /// route was last modified. Carries no action.
    Waypoint,
    Pickup(RequestId),
    Dropoff(RequestId),
    DepotEnd,
}

impl StopKind {
    pub fn request(self) -> Option<RequestId> {
        match self {
            StopKind::Pickup(r) | StopKind::Dropoff(r) => Some(r),
            _ => None,
        }
    }

    /// Load change when the stop is executed.
    pub fn load_delta(self) -> i64 {
        match self {
            StopKind::Pickup(_) => 1,
            StopKind::Dropoff(_) => -1,
            _ => 0,
        }
    }
}

/// A stop on a route: the robot is at `node` at `time` and performs `kind`.
/// For pickups `time` is the service time; an early robot waits in place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stop {
    pub node: NodeId,
    pub time: Seconds,
    pub kind: StopKind,
}

/// A robot's timed stop sequence: a path on the time-expanded graph where
/// consecutive stops are joined by shortest paths and slack is spent waiting
/// at the later stop.
///
/// The first stop is always `DepotStart` and the last `DepotEnd`. The first
/// `traversed` stops have been executed and are never modified again.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub robot: RobotId,
    pub depot: NodeId,
    stops: Vec<Stop>,
    traversed: usize,
}

impl Route {
    /// Robot parked at its depot for the whole horizon.
    pub fn idle(robot: RobotId, depot: NodeId, t_start: Seconds) -> Self {
        Route {
            robot,
            depot,
            stops: vec![
                Stop { node: depot, time: t_start, kind: StopKind::DepotStart },
                Stop { node: depot, time: t_start, kind: StopKind::DepotEnd },
            ],
            traversed: 1,
        }
    }

    /// Assembles a route from raw parts. No validation is performed; see
    /// [`crate::model::validate_route`].
    pub fn from_parts(robot: RobotId, depot: NodeId, stops: Vec<Stop>, traversed: usize) -> Self {
        Route { robot, depot, stops, traversed }
    }

    pub fn stops(&self) -> &[Stop] {
        &self.stops
    }

    pub fn traversed(&self) -> usize {
        self.traversed
    }

    /// Stops not executed yet, excluding the final `DepotEnd`.
    pub fn pending(&self) -> &[Stop] {
        &self.stops[self.traversed.min(self.stops.len() - 1)..self.stops.len() - 1]
    }

    /// Time the robot is back at its depot.
    pub fn end_time(&self) -> Seconds {
        self.stops.last().map(|s| s.time).unwrap_or(Seconds::MIN)
    }

    pub fn is_idle(&self) -> bool {
        self.pending().is_empty()
    }

    /// Requests with at least one stop on this route, in stop order, without duplicates.
    pub fn requests(&self) -> Vec<RequestId> {
        let mut out = Vec::new();
        for s in &self.stops {
            if let Some(r) = s.kind.request() {
                if !out.contains(&r) {
                    out.push(r);
                }
            }
        }
        out
    }

    pub fn find(&self, kind: StopKind) -> Option<usize> {
        self.stops.iter().position(|s| s.kind == kind)
    }

    /// Executes stops scheduled at or before `now`, returning them. The final
    /// `DepotEnd` is terminal and never counted as executed.
    pub(crate) fn execute_until(&mut self, now: Seconds) -> &[Stop] {
        let start = self.traversed;
        let last = self.stops.len() - 1;
        while self.traversed < last && self.stops[self.traversed].time <= now {
            self.traversed += 1;
        }
        &self.stops[start..self.traversed]
    }

    /// Where the robot is committed to be: the first node of its current path
    /// reached at or after `now`, or its current node at `now` when it is
    /// waiting. An unexecuted waypoint is always the anchor.
    pub fn anchor(&self, now: Seconds, oracle: &TravelTimeOracle) -> (NodeId, Seconds) {
        let last = &self.stops[self.traversed - 1];
        let next = &self.stops[self.traversed];
        if next.kind == StopKind::Waypoint {
            return (next.node, next.time);
        }
        if next.kind == StopKind::DepotEnd && next.time <= now {
            return (next.node, now);
        }
        oracle
            .timed_path(last.node, next.node, last.time)
            .into_iter()
            .find(|&(_, t)| t >= now)
            .unwrap_or((next.node, now))
    }

    /// Last node reached at or before `now`.
    pub fn location(&self, now: Seconds, oracle: &TravelTimeOracle) -> NodeId {
        let last = &self.stops[self.traversed - 1];
        let next = &self.stops[self.traversed];
        oracle
            .timed_path(last.node, next.node, last.time)
            .into_iter()
            .take_while(|&(_, t)| t <= now)
            .last()
            .map(|(n, _)| n)
            .unwrap_or(last.node)
    }

    /// Copy of the route with the anchor materialized as a waypoint, plus the
    /// index of the anchor stop. Stops after that index may be rearranged.
    pub fn pinned(&self, now: Seconds, oracle: &TravelTimeOracle) -> (Route, usize) {
        let next = &self.stops[self.traversed];
        if next.kind == StopKind::Waypoint {
            return (self.clone(), self.traversed);
        }
        let (node, time) = self.anchor(now, oracle);
        let last = &self.stops[self.traversed - 1];
        if last.node == node && last.time == time {
            return (self.clone(), self.traversed - 1);
        }
        let mut route = self.clone();
        route.stops.insert(self.traversed, Stop { node, time, kind: StopKind::Waypoint });
        if time <= now {
            route.traversed += 1;
            let k = route.traversed - 1;
            (route, k)
        } else {
            (route, self.traversed)
        }
    }

    /// Replaces everything after stop `anchor` with `middle` followed by the
    /// return to the depot, recomputing times along shortest paths. Pickups
    /// wait for their desired time via `earliest`.
    pub(crate) fn rebuild(
        &self,
        anchor: usize,
        middle: &[(NodeId, StopKind)],
        earliest: impl Fn(RequestId) -> Seconds,
        oracle: &TravelTimeOracle,
    ) -> Route {
        let mut stops = Vec::with_capacity(anchor + middle.len() + 2);
        stops.extend_from_slice(&self.stops[..=anchor]);
        let mut prev = self.stops[anchor];
        for &(node, kind) in middle.iter().chain(std::iter::once(&(self.depot, StopKind::DepotEnd))) {
            let mut time = prev.time + oracle.time(prev.node, node);
            if let StopKind::Pickup(r) = kind {
                time = time.max(earliest(r));
            }
            let stop = Stop { node, time, kind };
            stops.push(stop);
            prev = stop;
        }
        Route { robot: self.robot, depot: self.depot, stops, traversed: self.traversed }
    }

    /// Stops after `anchor`, excluding the final `DepotEnd`.
    pub(crate) fn middle(&self, anchor: usize) -> Vec<(NodeId, StopKind)> {
        self.stops[anchor + 1..self.stops.len() - 1].iter().map(|s| (s.node, s.kind)).collect()
    }

    /// Load carried after each stop, starting empty at the depot.
    pub fn loads(&self) -> Vec<i64> {
        let mut load = 0;
        self.stops
            .iter()
            .map(|s| {
                load += s.kind.load_delta();
                load
            })
            .collect()
    }
}
