use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::StateError;
use crate::network::{NodeId, Seconds, TravelTimeOracle};

use super::config::ProblemConfig;
use super::request::{Request, RequestId, RobotId};
use super::route::{Route, StopKind};

/// Street network plus day parameters, shared by every state of a run.
#[derive(Debug)]
pub struct Instance {
    pub oracle: Arc<TravelTimeOracle>,
    pub config: ProblemConfig,
}

impl Instance {
    pub fn new(oracle: impl Into<Arc<TravelTimeOracle>>, config: ProblemConfig) -> Arc<Self> {
        Arc::new(Instance { oracle: oracle.into(), config })
    }

    pub fn with_config(&self, config: ProblemConfig) -> Arc<Self> {
        Arc::new(Instance { oracle: self.oracle.clone(), config })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaitTimes {
    Assigned { pick: Seconds, drop: Seconds },
    /// Both waits are infinite.
    Rejected,
    /// Entered but not yet decided on; contributes nothing.
    Pending,
}

/// Cumulative wait cost. Any rejection makes the cost infinite; the finite
/// part is still tracked so stage costs telescope over serviced requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Cost {
    pub wait: Seconds,
    pub rejected: usize,
}

impl Cost {
    pub fn is_finite(&self) -> bool {
        self.rejected == 0
    }

    /// Finite surrogate charging `penalty` per rejection.
    pub fn penalized(&self, penalty: Seconds) -> Seconds {
        self.wait + penalty * self.rejected as Seconds
    }
}

impl std::ops::Add for Cost {
    type Output = Cost;
    fn add(self, o: Cost) -> Cost {
        Cost { wait: self.wait + o.wait, rejected: self.rejected + o.rejected }
    }
}

impl std::ops::AddAssign for Cost {
    fn add_assign(&mut self, o: Cost) {
        *self = *self + o;
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.wait)
        } else {
            write!(f, "inf")
        }
    }
}

/// New routes for a subset of robots, with the change in wait cost they cause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Control {
    pub routes: Vec<Route>,
    pub delta: Seconds,
}

impl Control {
    pub fn robots(&self) -> impl Iterator<Item = RobotId> + '_ {
        self.routes.iter().map(|r| r.robot)
    }
}

#[derive(Debug, Clone)]
pub struct FleetState {
    instance: Arc<Instance>,
    now: Seconds,
    routes: Vec<Route>,
    requests: BTreeMap<RequestId, Request>,
    rejected: BTreeSet<RequestId>,
}

impl FleetState {
    /// Fleet of `config.fleet_size` idle robots at `T_start`.
    pub fn new(instance: Arc<Instance>) -> Self {
        let m = instance.config.fleet_size;
        Self::with_fleet(instance, m)
    }

    pub fn with_fleet(instance: Arc<Instance>, fleet: usize) -> Self {
        let cfg = &instance.config;
        let routes = (0..fleet).map(|m| Route::idle(RobotId(m), cfg.depot_of(RobotId(m)), cfg.t_start)).collect();
        FleetState {
            now: cfg.t_start,
            instance,
            routes,
            requests: BTreeMap::new(),
            rejected: BTreeSet::new(),
        }
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.instance.config
    }

    pub fn oracle(&self) -> &TravelTimeOracle {
        &self.instance.oracle
    }

    pub fn now(&self) -> Seconds {
        self.now
    }

    pub fn fleet_size(&self) -> usize {
        self.routes.len()
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn route(&self, robot: RobotId) -> &Route {
        &self.routes[robot.0]
    }

    pub fn requests(&self) -> impl Iterator<Item = &Request> {
        self.requests.values()
    }

    pub fn request(&self, id: RequestId) -> Option<&Request> {
        self.requests.get(&id)
    }

    pub fn request_count(&self) -> usize {
        self.requests.len()
    }

    pub fn rejected(&self) -> &BTreeSet<RequestId> {
        &self.rejected
    }

    pub fn is_rejected(&self, id: RequestId) -> bool {
        self.rejected.contains(&id)
    }

    /// Requests assigned to `robot`.
    pub fn assignments(&self, robot: RobotId) -> Vec<RequestId> {
        self.requests.values().filter(|r| r.assigned == Some(robot)).map(|r| r.id).collect()
    }

    /// Entered requests that are neither assigned nor rejected.
    pub fn pending(&self) -> Vec<RequestId> {
        self.requests
            .values()
            .filter(|r| r.assigned.is_none() && !self.rejected.contains(&r.id))
            .map(|r| r.id)
            .collect()
    }

    /// Passengers on board.
    pub fn load(&self, robot: RobotId) -> i64 {
        let route = self.route(robot);
        route.stops()[..route.traversed()].iter().map(|s| s.kind.load_delta()).sum()
    }

    pub fn location(&self, robot: RobotId) -> NodeId {
        self.route(robot).location(self.now, self.oracle())
    }

    /// Records a newly entered request as pending. Re-entering a known id
    /// replaces the old record.
    pub fn enter(&mut self, mut request: Request) {
        request.assigned = None;
        request.planned_pickup = None;
        request.planned_dropoff = None;
        request.picked_up = false;
        request.dropped_off = false;
        self.requests.insert(request.id, request);
    }

    pub fn reject(&mut self, id: RequestId) {
        self.rejected.insert(id);
    }

    /// Installs the control's routes and mirrors their stop times into the
    /// request records.
    pub fn apply(&mut self, control: &Control) {
        for route in &control.routes {
            self.routes[route.robot.0] = route.clone();
        }
        for route in &control.routes {
            for stop in route.stops() {
                match stop.kind {
                    StopKind::Pickup(id) => {
                        if let Some(r) = self.requests.get_mut(&id) {
                            r.assigned = Some(route.robot);
                            r.planned_pickup = Some(stop.time);
                        }
                    }
                    StopKind::Dropoff(id) => {
                        if let Some(r) = self.requests.get_mut(&id) {
                            r.assigned = Some(route.robot);
                            r.planned_dropoff = Some(stop.time);
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    /// Adds an idle robot at `depot`, returning its id.
    pub fn add_robot(&mut self, depot: NodeId) -> RobotId {
        let id = RobotId(self.routes.len());
        self.routes.push(Route::idle(id, depot, self.config().t_start));
        id
    }

    /// One clock tick.
    pub fn advance(&mut self) {
        self.advance_to(self.now + 1);
    }

    /// Moves the clock to `t`, executing every stop scheduled up to it.
    pub fn advance_to(&mut self, t: Seconds) {
        debug_assert!(t >= self.now);
        self.now = t;
        for route in &mut self.routes {
            for stop in route.execute_until(t) {
                match stop.kind {
                    StopKind::Pickup(id) => {
                        let r = self.requests.get_mut(&id).expect("route references an entered request");
                        r.picked_up = true;
                    }
                    StopKind::Dropoff(id) => {
                        let r = self.requests.get_mut(&id).expect("route references an entered request");
                        assert!(r.picked_up, "{id} dropped off before pickup");
                        r.dropped_off = true;
                    }
                    _ => {}
                }
            }
        }
    }

    pub fn wait_times(&self, id: RequestId) -> Result<WaitTimes, StateError> {
        let r = self.requests.get(&id).ok_or(StateError::UnknownRequest(id.0))?;
        if self.rejected.contains(&id) {
            return Ok(WaitTimes::Rejected);
        }
        Ok(match (r.planned_pickup, r.planned_dropoff) {
            (Some(p), Some(d)) => WaitTimes::Assigned {
                pick: p - r.desired_pickup,
                drop: d - (p + self.oracle().time(r.pickup, r.dropoff)),
            },
            _ => WaitTimes::Pending,
        })
    }

    /// Sum of pickup and drop-off waits over entered requests.
    pub fn immediate_cost(&self) -> Cost {
        let mut cost = Cost { wait: 0, rejected: self.rejected.len() };
        for r in self.requests.values() {
            if let Ok(WaitTimes::Assigned { pick, drop }) = self.wait_times(r.id) {
                cost.wait += pick + drop;
            }
        }
        cost
    }

    /// Total wait of the requests with both stops on `route`, using the
    /// route's own stop times.
    pub fn route_wait(&self, route: &Route) -> Seconds {
        let mut picks: Vec<(RequestId, Seconds)> = Vec::new();
        let mut total = 0;
        for stop in route.stops() {
            match stop.kind {
                StopKind::Pickup(id) => {
                    if let Some(r) = self.requests.get(&id) {
                        total += stop.time - r.desired_pickup;
                        picks.push((id, stop.time));
                    }
                }
                StopKind::Dropoff(id) => {
                    if let (Some(r), Some(&(_, p))) = (self.requests.get(&id), picks.iter().find(|(q, _)| *q == id)) {
                        total += stop.time - p - self.oracle().time(r.pickup, r.dropoff);
                    }
                }
                _ => {}
            }
        }
        total
    }

    /// Change in total wait if `routes` replaced the current routes of their robots.
    pub fn wait_delta(&self, routes: &[Route]) -> Seconds {
        routes.iter().map(|r| self.route_wait(r) - self.route_wait(self.route(r.robot))).sum()
    }

    /// Checks the fleet-level invariants: route validity, assignment
    /// disjointness, loads and the mirroring of route times into requests.
    pub fn check_invariants(&self) -> Result<(), String> {
        for route in &self.routes {
            super::validate::validate_route(route, self).map_err(|v| format!("{}: {v}", route.robot))?;
            let load = self.load(route.robot);
            if load < 0 || load > self.config().capacity as i64 {
                return Err(format!("{}: load {load} out of range", route.robot));
            }
        }
        let mut seen: BTreeMap<RequestId, RobotId> = BTreeMap::new();
        for route in &self.routes {
            for id in route.requests() {
                if let Some(other) = seen.insert(id, route.robot) {
                    return Err(format!("{id} appears on {other} and {}", route.robot));
                }
            }
        }
        let mut assigned = 0;
        for r in self.requests.values() {
            let on_route = seen.get(&r.id).copied();
            if self.rejected.contains(&r.id) {
                if r.assigned.is_some() || on_route.is_some() {
                    return Err(format!("{} is rejected but assigned", r.id));
                }
                continue;
            }
            if r.assigned != on_route {
                return Err(format!("{} assigned to {:?} but found on {:?}", r.id, r.assigned, on_route));
            }
            if r.dropped_off && !r.picked_up {
                return Err(format!("{} dropped off but never picked up", r.id));
            }
            if r.assigned.is_some() {
                assigned += 1;
            }
        }
        let pending = self.pending().len();
        if assigned + self.rejected.len() + pending != self.requests.len() {
            return Err("assignment sets do not partition the entered requests".into());
        }
        Ok(())
    }

    /// Checks that no picked-up request changed robot between two states.
    pub fn check_transition(prev: &FleetState, next: &FleetState) -> Result<(), String> {
        for r in prev.requests.values().filter(|r| r.picked_up) {
            let after = next.requests.get(&r.id).and_then(|q| q.assigned);
            if after != r.assigned {
                return Err(format!("{} moved from {:?} to {:?} after pickup", r.id, r.assigned, after));
            }
        }
        Ok(())
    }
}

/// Stage cost of a one-second transition. At the first step of the horizon
/// it is the immediate cost of `next`.
pub fn stage_cost(prev: &FleetState, next: &FleetState) -> Result<Cost, StateError> {
    if next.now != prev.now + 1 {
        return Err(StateError::TimeMismatch { prev: prev.now, next: next.now });
    }
    let h_next = next.immediate_cost();
    if prev.now == prev.config().t_start {
        return Ok(h_next);
    }
    let h_prev = prev.immediate_cost();
    Ok(Cost { wait: h_next.wait - h_prev.wait, rejected: h_next.rejected.saturating_sub(h_prev.rejected) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::StreetGraph;

    fn instance() -> Arc<Instance> {
        let oracle = TravelTimeOracle::new(StreetGraph::grid(4, 1, 60, 0.0, 0.0));
        let config = ProblemConfig {
            t_start: 0,
            t_end: 3600,
            t_last: 2400,
            w_pick: 300,
            w_drop: 300,
            capacity: 2,
            depots: vec![1],
            fleet_size: 1,
        };
        Instance::new(oracle, config)
    }

    fn assign(state: &mut FleetState, id: u64, pick: NodeId, drop: NodeId, pick_t: Seconds, drop_t: Seconds) {
        let route = state.route(RobotId(0));
        let (pinned, k) = route.pinned(state.now(), state.oracle());
        let mut middle = pinned.middle(k);
        middle.push((pick, StopKind::Pickup(RequestId(id))));
        middle.push((drop, StopKind::Dropoff(RequestId(id))));
        let mut new = pinned.rebuild(k, &middle, |_| pick_t, state.oracle());
        // force exact times for the test
        let mut stops = new.stops().to_vec();
        let n = stops.len();
        stops[n - 3].time = pick_t;
        stops[n - 2].time = drop_t;
        stops[n - 1].time = drop_t + state.oracle().time(drop, 1);
        new = Route::from_parts(new.robot, new.depot, stops, new.traversed());
        state.apply(&Control { routes: vec![new], delta: 0 });
    }

    #[test]
    fn empty_state_costs_nothing() {
        let s = FleetState::new(instance());
        assert_eq!(s.immediate_cost(), Cost::default());
        assert!(s.check_invariants().is_ok());
    }

    #[test]
    fn direct_service_has_zero_wait() {
        let mut s = FleetState::new(instance());
        s.enter(Request::new(1, 2, 3, 0, 60));
        assign(&mut s, 1, 2, 3, 60, 120);
        assert_eq!(s.wait_times(RequestId(1)), Ok(WaitTimes::Assigned { pick: 0, drop: 0 }));
    }

    #[test]
    fn late_pickup_and_detour() {
        let mut s = FleetState::new(instance());
        s.enter(Request::new(1, 2, 3, 0, 60));
        assign(&mut s, 1, 2, 3, 180, 300);
        assert_eq!(s.wait_times(RequestId(1)), Ok(WaitTimes::Assigned { pick: 120, drop: 60 }));
        assert_eq!(s.immediate_cost().wait, 180);
    }

    #[test]
    fn rejection_is_infinite() {
        let mut s = FleetState::new(instance());
        s.enter(Request::new(1, 2, 3, 0, 60));
        s.reject(RequestId(1));
        assert_eq!(s.wait_times(RequestId(1)), Ok(WaitTimes::Rejected));
        assert!(!s.immediate_cost().is_finite());
        assert_eq!(s.immediate_cost().to_string(), "inf");
        assert_eq!(s.wait_times(RequestId(9)), Err(StateError::UnknownRequest(9)));
    }

    #[test]
    fn stage_cost_is_difference_of_sums() {
        let mut s = FleetState::new(instance());
        s.advance();
        let prev = s.clone();
        let mut next = s.clone();
        next.enter(Request::new(1, 2, 3, 1, 60));
        assign(&mut next, 1, 2, 3, 360, 420);
        next.advance();
        assert_eq!(stage_cost(&prev, &next).unwrap().wait, 300);
        let mut idle = prev.clone();
        idle.advance();
        assert_eq!(stage_cost(&prev, &idle).unwrap(), Cost::default());
        assert_eq!(
            stage_cost(&prev, &prev),
            Err(StateError::TimeMismatch { prev: 1, next: 1 })
        );
    }

    #[test]
    fn advance_executes_stops() {
        let mut s = FleetState::new(instance());
        s.enter(Request::new(5, 2, 3, 0, 60));
        assign(&mut s, 5, 2, 3, 60, 120);
        s.advance_to(59);
        assert_eq!(s.load(RobotId(0)), 0);
        s.advance();
        assert!(s.request(RequestId(5)).unwrap().picked_up);
        assert_eq!(s.load(RobotId(0)), 1);
        assert_eq!(s.location(RobotId(0)), 2);
        s.advance_to(120);
        assert!(s.request(RequestId(5)).unwrap().dropped_off);
        assert_eq!(s.load(RobotId(0)), 0);
        assert!(s.check_invariants().is_ok());
    }
}
