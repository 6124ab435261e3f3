//! Greedy base policy: exhaustive pickup/drop-off insertion into each robot's
//! remaining stops, keeping the cheapest valid result over the fleet.

use crate::model::{canonical_order, Control, FleetState, Request, RequestId, RobotId, Route, StopKind};
use crate::network::{NodeId, Seconds};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Insertion {
    pub robot: RobotId,
    /// Number of remaining stops placed before the pickup.
    pub pick_index: usize,
    /// Number of remaining stops placed before the drop-off.
    pub drop_index: usize,
    pub route: Route,
    /// Wait cost of `route` minus that of the route inserted into.
    pub delta: Seconds,
}

#[derive(Debug, Clone, Copy)]
struct Item {
    node: NodeId,
    kind: StopKind,
    desired: Seconds,
    direct: Seconds,
}

/// A route pinned at the current time, with what is needed to time and check
/// any rearrangement of the stops after the anchor.
pub(crate) struct Plan<'a> {
    state: &'a FleetState,
    route: Route,
    anchor: usize,
    load: i64,
    /// Pickup times of executed pickups whose drop-off is still ahead.
    picked: Vec<(RequestId, Seconds)>,
    prefix_wait: Seconds,
    rest: Vec<Item>,
}

impl<'a> Plan<'a> {
    pub(crate) fn new(state: &'a FleetState, route: &Route) -> Self {
        let oracle = state.oracle();
        let (route, anchor) = route.pinned(state.now(), oracle);
        let mut load = 0;
        let mut picked: Vec<(RequestId, Seconds)> = Vec::new();
        let mut prefix_wait = 0;
        for s in &route.stops()[..=anchor] {
            load += s.kind.load_delta();
            match s.kind {
                StopKind::Pickup(id) => {
                    let r = state.request(id).expect("route request is known");
                    prefix_wait += s.time - r.desired_pickup;
                    picked.push((id, s.time));
                }
                StopKind::Dropoff(id) => {
                    let r = state.request(id).expect("route request is known");
                    let pos = picked.iter().position(|(q, _)| *q == id).expect("pickup precedes drop-off");
                    let (_, p) = picked.remove(pos);
                    prefix_wait += s.time - p - oracle.time(r.pickup, r.dropoff);
                }
                _ => {}
            }
        }
        let rest = route.middle(anchor).into_iter().map(|(node, kind)| item(state, node, kind)).collect();
        Plan { state, route, anchor, load, picked, prefix_wait, rest }
    }

    /// Remaining stops after the anchor, excluding the return to the depot.
    pub(crate) fn rest(&self) -> Vec<(NodeId, StopKind)> {
        self.rest.iter().map(|i| (i.node, i.kind)).collect()
    }

    /// Total route wait of the sequence, or `None` if it breaks capacity,
    /// a wait limit or the return deadline.
    fn evaluate<'b>(&self, seq: impl Iterator<Item = &'b Item>) -> Option<Seconds> {
        let cfg = self.state.config();
        let oracle = self.state.oracle();
        let anchor = self.route.stops()[self.anchor];
        let (mut node, mut t, mut load) = (anchor.node, anchor.time, self.load);
        let mut picks = self.picked.clone();
        let mut wait = self.prefix_wait;
        for it in seq {
            t += oracle.time(node, it.node);
            node = it.node;
            match it.kind {
                StopKind::Pickup(id) => {
                    t = t.max(it.desired);
                    let w = t - it.desired;
                    if w > cfg.w_pick {
                        return None;
                    }
                    load += 1;
                    if load > cfg.capacity as i64 {
                        return None;
                    }
                    wait += w;
                    picks.push((id, t));
                }
                StopKind::Dropoff(id) => {
                    let &(_, p) = picks.iter().find(|(q, _)| *q == id)?;
                    let w = t - p - it.direct;
                    if w > cfg.w_drop {
                        return None;
                    }
                    load -= 1;
                    wait += w;
                }
                _ => {}
            }
        }
        t += oracle.time(node, self.route.depot);
        (t <= cfg.t_end).then_some(wait)
    }

    /// Materializes the route for a stop sequence after the anchor.
    pub(crate) fn build(&self, seq: &[(NodeId, StopKind)]) -> Route {
        let state = self.state;
        self.route.rebuild(
            self.anchor,
            seq,
            |id| state.request(id).map(|r| r.desired_pickup).unwrap_or(Seconds::MIN),
            state.oracle(),
        )
    }

    /// Checked version of [`Plan::build`].
    pub(crate) fn try_build(&self, seq: &[(NodeId, StopKind)]) -> Option<(Route, Seconds)> {
        let items: Vec<Item> = seq.iter().map(|&(n, k)| item(self.state, n, k)).collect();
        let wait = self.evaluate(items.iter())?;
        Some((self.build(seq), wait))
    }

    fn endpoints(&self, request: &Request) -> (Item, Item) {
        let direct = self.state.oracle().time(request.pickup, request.dropoff);
        let p = Item {
            node: request.pickup,
            kind: StopKind::Pickup(request.id),
            desired: request.desired_pickup,
            direct,
        };
        let d = Item { node: request.dropoff, kind: StopKind::Dropoff(request.id), desired: 0, direct };
        (p, d)
    }

    /// Route wait of every valid `(pick, drop)` placement, in loop order.
    fn placements(&self, request: &Request) -> Vec<(usize, usize, Seconds)> {
        let (p, d) = self.endpoints(request);
        let r = self.rest.len();
        let mut out = Vec::new();
        for i in 0..=r {
            for j in i..=r {
                let seq = self.rest[..i]
                    .iter()
                    .chain(std::iter::once(&p))
                    .chain(&self.rest[i..j])
                    .chain(std::iter::once(&d))
                    .chain(&self.rest[j..]);
                if let Some(w) = self.evaluate(seq) {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Cheapest valid insertion of `request`, lowest `(pick, drop)` on ties.
    pub(crate) fn insert(&self, request: &Request) -> Option<(usize, usize, Route, Seconds)> {
        let mut best: Option<(usize, usize, Seconds)> = None;
        for (i, j, w) in self.placements(request) {
            if best.is_none_or(|(_, _, bw)| w < bw) {
                best = Some((i, j, w));
            }
        }
        let (i, j, w) = best?;
        Some((i, j, self.place(request, i, j), w))
    }

    fn place(&self, request: &Request, i: usize, j: usize) -> Route {
        let oracle = self.state.oracle();
        let (p, d) = self.endpoints(request);
        let r = self.rest.len();
        let mut seq: Vec<(NodeId, StopKind)> = Vec::with_capacity(r + 2);
        seq.extend(self.rest[..i].iter().map(|it| (it.node, it.kind)));
        seq.push((p.node, p.kind));
        seq.extend(self.rest[i..j].iter().map(|it| (it.node, it.kind)));
        seq.push((d.node, d.kind));
        seq.extend(self.rest[j..].iter().map(|it| (it.node, it.kind)));
        self.route.rebuild(
            self.anchor,
            &seq,
            |id| {
                if id == request.id {
                    request.desired_pickup
                } else {
                    self.state.request(id).map(|r| r.desired_pickup).unwrap_or(Seconds::MIN)
                }
            },
            oracle,
        )
    }
}

fn item(state: &FleetState, node: NodeId, kind: StopKind) -> Item {
    match kind.request().and_then(|id| state.request(id)) {
        Some(r) => Item {
            node,
            kind,
            desired: r.desired_pickup,
            direct: state.oracle().time(r.pickup, r.dropoff),
        },
        None => Item { node, kind, desired: Seconds::MIN, direct: 0 },
    }
}

/// Best valid insertion of `request` into `route` (a route of a robot in
/// `state`, possibly already modified), or `None` when every placement
/// breaks a constraint.
pub fn insertion_procedure(state: &FleetState, route: &Route, request: &Request) -> Option<Insertion> {
    let before = state.route_wait(route);
    let plan = Plan::new(state, route);
    let (pick_index, drop_index, route, wait) = plan.insert(request)?;
    Some(Insertion { robot: route.robot, pick_index, drop_index, route, delta: wait - before })
}

/// Every valid insertion of `request` into `route`, ordered by
/// `(pick_index, drop_index)`.
pub fn enumerate_insertions(state: &FleetState, route: &Route, request: &Request) -> Vec<Insertion> {
    let before = state.route_wait(route);
    let plan = Plan::new(state, route);
    plan.placements(request)
        .into_iter()
        .map(|(i, j, w)| Insertion {
            robot: route.robot,
            pick_index: i,
            drop_index: j,
            route: plan.place(request, i, j),
            delta: w - before,
        })
        .collect()
}

/// Removes every stop of `ids` from `route` and re-times what is left.
/// `None` if a listed request was already picked up or the shrunk route is
/// invalid.
pub fn remove_requests(state: &FleetState, route: &Route, ids: &[RequestId]) -> Option<Route> {
    if ids.iter().any(|id| state.request(*id).is_none_or(|r| r.picked_up)) {
        return None;
    }
    let plan = Plan::new(state, route);
    let seq: Vec<_> = plan.rest().into_iter().filter(|(_, k)| k.request().is_none_or(|id| !ids.contains(&id))).collect();
    plan.try_build(&seq).map(|(r, _)| r)
}

/// Greedy control for `request`: the robot whose best insertion adds the
/// least wait, lowest robot id on ties.
pub fn greedy_control(state: &FleetState, request: &Request) -> Option<Control> {
    let mut best: Option<Insertion> = None;
    for route in state.routes() {
        if let Some(ins) = insertion_procedure(state, route, request) {
            if best.as_ref().is_none_or(|b| ins.delta < b.delta) {
                best = Some(ins);
            }
        }
    }
    best.map(|b| Control { delta: b.delta, routes: vec![b.route] })
}

/// Enters `request` and assigns it greedily, rejecting it if no robot can
/// take it. Returns the chosen robot.
pub fn greedy_assign(state: &mut FleetState, request: &Request) -> Option<RobotId> {
    state.enter(request.clone());
    match greedy_control(state, request) {
        Some(control) => {
            let robot = control.routes[0].robot;
            state.apply(&control);
            Some(robot)
        }
        None => {
            state.reject(request.id);
            None
        }
    }
}

/// Processes one step's arrivals greedily in canonical order.
pub fn greedy_plan_step(state: &mut FleetState, arrivals: &[Request]) {
    let mut arrivals = arrivals.to_vec();
    canonical_order(&mut arrivals, state.config().t_start);
    for r in &arrivals {
        greedy_assign(state, r);
    }
}

/// Accumulated cost of running the greedy policy for `horizon` seconds from
/// `state`, feeding in the scenario requests that enter in that window. The
/// result counts wait added after `state` plus a fixed penalty of
/// `W_pick + W_drop` per rejection.
pub fn run_base_policy(state: &FleetState, horizon: Seconds, scenario: &[Request]) -> Seconds {
    let start = state.now();
    let end = start + horizon;
    let t_last = state.config().t_last;
    let penalty = state.config().rejection_penalty();
    let mut future: Vec<&Request> = scenario
        .iter()
        .filter(|r| r.entry_time > start && r.entry_time <= end && r.desired_pickup <= t_last)
        .collect();
    if future.is_empty() {
        return 0;
    }
    future.sort_by_key(|r| (r.entry_time, r.desired_pickup, r.id));
    let mut sim = state.clone();
    let mut cost = 0;
    for r in future {
        if r.entry_time > sim.now() {
            sim.advance_to(r.entry_time);
        }
        sim.enter(r.clone());
        match greedy_control(&sim, r) {
            Some(c) => {
                cost += c.delta;
                sim.apply(&c);
            }
            None => {
                sim.reject(r.id);
                cost += penalty;
            }
        }
    }
    cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_route, Instance, ProblemConfig};
    use crate::network::{StreetGraph, TravelTimeOracle};

    fn state(fleet: usize, capacity: u32) -> FleetState {
        // 5x5 grid, 60 s edges, depot at the center (node 13)
        let oracle = TravelTimeOracle::new(StreetGraph::grid(5, 5, 60, 0.0, 0.0));
        let config = ProblemConfig {
            t_start: 0,
            t_end: 7200,
            t_last: 3600,
            w_pick: 300,
            w_drop: 300,
            capacity,
            depots: vec![13],
            fleet_size: fleet,
        };
        FleetState::new(Instance::new(oracle, config))
    }

    #[test]
    fn empty_route_gets_direct_trip() {
        let mut s = state(1, 4);
        let r = Request::new(1, 14, 15, 0, 60);
        assert_eq!(greedy_assign(&mut s, &r), Some(RobotId(0)));
        let route = s.route(RobotId(0));
        let kinds: Vec<_> = route.stops().iter().map(|s| (s.node, s.time)).collect();
        assert_eq!(kinds, vec![(13, 0), (14, 60), (15, 120), (13, 240)]);
        assert_eq!(s.immediate_cost().wait, 0);
        assert!(s.check_invariants().is_ok());
    }

    #[test]
    fn one_existing_pair_tries_six_placements() {
        let mut s = state(1, 4);
        greedy_assign(&mut s, &Request::new(1, 14, 15, 0, 600));
        let plan = Plan::new(&s, s.route(RobotId(0)));
        assert_eq!(plan.rest.len(), 2);
        let r = plan.rest.len();
        assert_eq!((0..=r).map(|i| r + 1 - i).sum::<usize>(), 6);
    }

    #[test]
    fn unreachable_request_is_rejected() {
        let mut s = state(1, 4);
        // corner is 4 edges = 240 s from depot; desired pickup in 60 s with W_pick 120
        let mut cfg = s.config().clone();
        cfg.w_pick = 120;
        s = FleetState::new(s.instance().with_config(cfg));
        assert_eq!(greedy_assign(&mut s, &Request::new(1, 1, 2, 0, 60)), None);
        assert!(s.is_rejected(RequestId(1)));
    }

    #[test]
    fn idle_robot_preferred_over_busy_one() {
        let mut s = state(2, 4);
        greedy_assign(&mut s, &Request::new(1, 14, 25, 0, 60));
        let chosen = greedy_assign(&mut s, &Request::new(2, 12, 11, 1, 61));
        assert_eq!(chosen, Some(RobotId(1)));
    }

    #[test]
    fn capacity_forces_sequential_service() {
        let mut s = state(1, 1);
        greedy_assign(&mut s, &Request::new(1, 14, 15, 0, 60));
        greedy_assign(&mut s, &Request::new(2, 14, 15, 0, 60));
        let route = s.route(RobotId(0));
        for w in route.loads() {
            assert!(w <= 1);
        }
        assert_eq!(validate_route(route, &s), Ok(()));
    }

    #[test]
    fn removal_restores_shorter_route() {
        let mut s = state(1, 4);
        greedy_assign(&mut s, &Request::new(1, 14, 15, 0, 60));
        greedy_assign(&mut s, &Request::new(2, 8, 3, 0, 120));
        let shrunk = remove_requests(&s, s.route(RobotId(0)), &[RequestId(2)]).unwrap();
        assert!(!shrunk.requests().contains(&RequestId(2)));
        assert!(s.route_wait(&shrunk) <= s.route_wait(s.route(RobotId(0))));
    }

    #[test]
    fn base_policy_on_empty_scenario_is_free() {
        let s = state(2, 4);
        assert_eq!(run_base_policy(&s, 3600, &[]), 0);
        assert_eq!(run_base_policy(&s, 0, &[Request::new(9, 1, 2, 10, 70)]), 0);
    }

    #[test]
    fn base_policy_charges_rejections() {
        let s = state(1, 1);
        let scen = vec![Request::new(100, 1, 25, 10, 70), Request::new(101, 5, 21, 10, 70)];
        let cost = run_base_policy(&s, 3600, &scen);
        assert!(cost >= s.config().rejection_penalty());
    }
}
