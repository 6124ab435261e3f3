//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fleetroll::demand::Scenario;
use fleetroll::greedy::{greedy_assign, greedy_control};
use fleetroll::io::DayLog;
use fleetroll::model::canonical_order;
use fleetroll::network::{Edge, Node};
use fleetroll::rollout::{evaluate_control, rollout_assign, RolloutConfig};
use fleetroll::routesgen::{generate_promising_controls, Hdbscan, Point, RoutesGen};
use fleetroll::sim::Planner;
use fleetroll::{
    FleetState, Instance, NodeId, ProblemConfig, Request, RequestId, RobotId, Route, Seconds, StopKind, StreetGraph,
    TravelTimeOracle,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Grid whose two directions of every block get independent travel times.
pub fn random_grid(rng: &mut impl Rng, cols: u32, rows: u32) -> StreetGraph {
    let id = |c: u32, r: u32| r * cols + c + 1;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(Node { id: id(c, r), x: c as f64, y: r as f64 });
            let mut link = |a: NodeId, b: NodeId| {
                edges.push(Edge { from: a, to: b, travel_time: rng.random_range(30..=120) });
                edges.push(Edge { from: b, to: a, travel_time: rng.random_range(30..=120) });
            };
            if c + 1 < cols {
                link(id(c, r), id(c + 1, r));
            }
            if r + 1 < rows {
                link(id(c, r), id(c, r + 1));
            }
        }
    }
    StreetGraph::new(nodes, edges).expect("grid is strongly connected")
}

/// A random day setting on a random grid: horizon of two hours, wait limits
/// large enough for the grid, one or two depots.
pub fn random_instance(rng: &mut impl Rng, fleet: usize) -> Arc<Instance> {
    let (cols, rows) = (rng.random_range(3..=5), rng.random_range(3..=5));
    let graph = random_grid(rng, cols, rows);
    let n = graph.node_count() as NodeId;
    let oracle = TravelTimeOracle::new(graph);
    let diameter = oracle.diameter();
    let w = diameter + rng.random_range(0..=300);
    let mut depots = vec![rng.random_range(1..=n)];
    if rng.random_bool(0.3) {
        let d = rng.random_range(1..=n);
        if d != depots[0] {
            depots.push(d);
        }
    }
    let config = ProblemConfig {
        t_start: 0,
        t_end: 7200 + 3 * diameter,
        t_last: 7200,
        w_pick: w,
        w_drop: w,
        capacity: rng.random_range(1..=4),
        depots,
        fleet_size: fleet,
    };
    Instance::new(oracle, config)
}

/// Requests with random endpoints, sorted entry times in `[-600, t_last)` and
/// desired pickups inside the operating horizon.
pub fn random_requests(rng: &mut impl Rng, instance: &Instance, count: usize) -> Vec<Request> {
    let n = instance.oracle.graph().node_count() as NodeId;
    let t_last = instance.config.t_last;
    let mut out: Vec<Request> = (0..count)
        .map(|i| {
            let p = rng.random_range(1..=n);
            let mut d = rng.random_range(1..=n);
            while d == p {
                d = rng.random_range(1..=n);
            }
            let entry = rng.random_range(-600..t_last - 60);
            let desired = (entry + rng.random_range(1..=900)).min(t_last);
            Request::new(i as u64 + 1, p, d, entry, desired.max(entry + 1).max(instance.config.t_start + 1))
        })
        .collect();
    out.sort_by_key(|r| (r.entry_time, r.id));
    out
}

/// Remaining stops of `route` after its anchor at `now`, without the depot
/// return, plus the anchor stop itself.
pub fn remaining(route: &Route, now: Seconds, oracle: &TravelTimeOracle) -> (Route, usize, Vec<(NodeId, StopKind)>) {
    let (pinned, a) = route.pinned(now, oracle);
    let stops = pinned.stops();
    let rest = stops[a + 1..stops.len() - 1].iter().map(|s| (s.node, s.kind)).collect();
    (pinned, a, rest)
}

/// Total wait of the pinned route with `seq` after the anchor, checking every
/// constraint from scratch; `None` if infeasible.
pub fn oracle_route_wait(
    state: &FleetState,
    pinned: &Route,
    anchor: usize,
    seq: &[(NodeId, StopKind)],
    extra: &Request,
) -> Option<Seconds> {
    let cfg = state.config();
    let tt = |a: NodeId, b: NodeId| state.oracle().time(a, b);
    let req = |id: RequestId| if id == extra.id { extra.clone() } else { state.request(id).unwrap().clone() };
    let mut wait = 0;
    let mut load: i64 = 0;
    let mut picked: BTreeMap<RequestId, Seconds> = BTreeMap::new();
    let prefix = &pinned.stops()[..=anchor];
    for s in prefix {
        match s.kind {
            StopKind::Pickup(id) => {
                wait += s.time - req(id).desired_pickup;
                picked.insert(id, s.time);
                load += 1;
            }
            StopKind::Dropoff(id) => {
                let r = req(id);
                wait += s.time - picked[&id] - tt(r.pickup, r.dropoff);
                load -= 1;
            }
            _ => {}
        }
    }
    let last = prefix[anchor];
    let (mut node, mut t) = (last.node, last.time);
    for &(next, kind) in seq {
        t += tt(node, next);
        node = next;
        match kind {
            StopKind::Pickup(id) => {
                let r = req(id);
                t = t.max(r.desired_pickup);
                if t - r.desired_pickup > cfg.w_pick {
                    return None;
                }
                wait += t - r.desired_pickup;
                picked.insert(id, t);
                load += 1;
                if load > cfg.capacity as i64 {
                    return None;
                }
            }
            StopKind::Dropoff(id) => {
                let r = req(id);
                let p = *picked.get(&id)?;
                let w = t - p - tt(r.pickup, r.dropoff);
                if w > cfg.w_drop {
                    return None;
                }
                wait += w;
                load -= 1;
            }
            _ => {}
        }
    }
    (t + tt(node, pinned.depot) <= cfg.t_end).then_some(wait)
}

/// Every ordering of `items`.
pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut others = items.to_vec();
        let first = others.remove(i);
        for mut tail in permutations(&others) {
            tail.insert(0, first.clone());
            out.push(tail);
        }
    }
    out
}

/// Lowest total route wait over all orderings of the remaining stops plus the
/// new pickup and drop-off that keep the existing stops in their order.
pub fn brute_force_best(state: &FleetState, route: &Route, request: &Request) -> Option<Seconds> {
    let (pinned, a, rest) = remaining(route, state.now(), state.oracle());
    let mut all = rest.clone();
    all.push((request.pickup, StopKind::Pickup(request.id)));
    all.push((request.dropoff, StopKind::Dropoff(request.id)));
    permutations(&all)
        .into_iter()
        .filter(|seq| {
            let kept: Vec<_> = seq.iter().filter(|s| rest.contains(s)).copied().collect();
            let pi = seq.iter().position(|s| s.1 == StopKind::Pickup(request.id)).unwrap();
            let di = seq.iter().position(|s| s.1 == StopKind::Dropoff(request.id)).unwrap();
            kept == rest && pi < di
        })
        .filter_map(|seq| oracle_route_wait(state, &pinned, a, &seq, request))
        .min()
}

/// A state reached by greedy assignment of random requests up to a random
/// time, plus a fresh request entering now.
pub fn random_midday_state(rng: &mut impl Rng, fleet: usize, count: usize) -> (FleetState, Request) {
    let instance = random_instance(rng, fleet);
    let reqs = random_requests(rng, &instance, count);
    let stop = rng.random_range(0..=reqs.len());
    let mut state = FleetState::with_fleet(instance.clone(), fleet);
    for r in &reqs[..stop] {
        if r.entry_time > state.now() {
            state.advance_to(r.entry_time);
        }
        greedy_assign(&mut state, r);
    }
    let now = state.now() + rng.random_range(0..=600);
    state.advance_to(now.min(instance.config.t_last - 1));
    let n = instance.oracle.graph().node_count() as NodeId;
    let p = rng.random_range(1..=n);
    let d = (p % n) + 1;
    let desired = (state.now() + rng.random_range(1..=600)).min(instance.config.t_last).max(state.now() + 1);
    let new = Request::new(10_000, p, d, state.now(), desired);
    (state, new)
}

/// Wraps a planner and checks after every step that nothing picked up was
/// moved to another robot or had its executed stops altered.
pub struct Audit<P> {
    pub inner: P,
    pub violations: Vec<String>,
}

impl<P: Planner> Audit<P> {
    pub fn new(inner: P) -> Self {
        Audit { inner, violations: Vec::new() }
    }
}

impl<P: Planner> Planner for Audit<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn plan_step(&mut self, state: &mut FleetState, arrivals: &[Request]) {
        let before = state.clone();
        self.inner.plan_step(state, arrivals);
        for r in before.requests().filter(|r| r.picked_up) {
            let after = state.request(r.id).unwrap();
            if after.assigned != r.assigned || after.planned_pickup != r.planned_pickup {
                self.violations.push(format!("t={} request {} moved after pickup", state.now(), r.id));
            }
        }
        for (old, new) in before.routes().iter().zip(state.routes()) {
            if new.stops().len() < old.traversed() || old.stops()[..old.traversed()] != new.stops()[..old.traversed()] {
                self.violations.push(format!("t={} robot {} executed prefix changed", state.now(), old.robot));
            }
        }
    }
}

/// End-of-day constraint check on the final state, independent of the
/// library's own validators.
pub fn audit_final(state: &FleetState) -> Vec<String> {
    let cfg = state.config();
    let mut out = Vec::new();
    let mut owner: BTreeMap<RequestId, RobotId> = BTreeMap::new();
    for route in state.routes() {
        let stops = route.stops();
        if stops.first().map(|s| (s.kind, s.node)) != Some((StopKind::DepotStart, route.depot)) {
            out.push(format!("robot {} does not start at its depot", route.robot));
        }
        let end = stops.last().unwrap();
        if end.kind != StopKind::DepotEnd || end.node != route.depot || end.time > cfg.t_end {
            out.push(format!("robot {} not back at its depot by T_end", route.robot));
        }
        let mut load = 0i64;
        let mut seen: BTreeSet<RequestId> = BTreeSet::new();
        for w in stops.windows(2) {
            if w[1].time < w[0].time + state.oracle().time(w[0].node, w[1].node) {
                out.push(format!("robot {} moves faster than the street graph allows", route.robot));
            }
        }
        for s in stops {
            load += s.kind.load_delta();
            if load > cfg.capacity as i64 || load < 0 {
                out.push(format!("robot {} load {load} at t={}", route.robot, s.time));
            }
            if let Some(id) = s.kind.request() {
                if let StopKind::Pickup(_) = s.kind {
                    if let Some(prev) = owner.insert(id, route.robot) {
                        out.push(format!("request {id} on robots {prev} and {}", route.robot));
                    }
                    seen.insert(id);
                } else if !seen.contains(&id) {
                    out.push(format!("request {id} dropped before pickup"));
                }
            }
        }
        if load != 0 {
            out.push(format!("robot {} ends with load {load}", route.robot));
        }
    }
    for r in state.requests() {
        let tt = state.oracle().time(r.pickup, r.dropoff);
        match (r.planned_pickup, r.planned_dropoff) {
            (Some(p), Some(d)) => {
                if p - r.desired_pickup > cfg.w_pick || p < r.desired_pickup {
                    out.push(format!("request {} pickup wait {}", r.id, p - r.desired_pickup));
                }
                if d - p - tt > cfg.w_drop {
                    out.push(format!("request {} drop-off wait {}", r.id, d - p - tt));
                }
                if !owner.contains_key(&r.id) {
                    out.push(format!("request {} has times but no route", r.id));
                }
            }
            _ => {
                if !state.is_rejected(r.id) {
                    out.push(format!("request {} neither served nor rejected", r.id));
                }
                if owner.contains_key(&r.id) {
                    out.push(format!("rejected request {} is on a route", r.id));
                }
            }
        }
    }
    out
}

/// L1 distance between two distributions keyed alike.
pub fn l1<K: Ord + Copy>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let keys: BTreeSet<K> = a.keys().chain(b.keys()).copied().collect();
    keys.iter().map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs()).sum()
}

/// Empirical distribution of `items`.
pub fn frequencies<K: Ord + Copy>(items: impl IntoIterator<Item = K>) -> BTreeMap<K, f64> {
    let mut counts: BTreeMap<K, f64> = BTreeMap::new();
    let mut n = 0.0;
    for k in items {
        *counts.entry(k).or_default() += 1.0;
        n += 1.0;
    }
    for v in counts.values_mut() {
        *v /= n;
    }
    counts
}

/// Greedy continuation cost written out step by step: commit the control,
/// hand the remaining same-step arrivals to greedy, then play each scenario
/// forward for the horizon.
pub fn greedy_decision_cost(state: &FleetState, request: &Request, later: &[Request], scenarios: &[Scenario], horizon: i64) -> i64 {
    let penalty = state.config().w_pick + state.config().w_drop;
    let mut s = state.clone();
    let c = greedy_control(&s, request).unwrap();
    let mut base = c.delta;
    s.apply(&c);
    for r in later {
        s.enter(r.clone());
        match greedy_control(&s, r) {
            Some(c) => {
                base += c.delta;
                s.apply(&c);
            }
            None => {
                s.reject(r.id);
                base += penalty;
            }
        }
    }
    if scenarios.is_empty() {
        return base;
    }
    let mut total = 0;
    for sc in scenarios {
        let mut sim = s.clone();
        let mut cost = base;
        let mut fut: Vec<&Request> = sc
            .requests
            .iter()
            .filter(|r| r.entry_time > s.now() && r.entry_time <= s.now() + horizon && r.desired_pickup <= s.config().t_last)
            .collect();
        fut.sort_by_key(|r| (r.entry_time, r.desired_pickup, r.id));
        for r in fut {
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
        total += cost;
    }
    total
}

/// Rollout with the true day as its only scenario, checking every decision
/// against the step-by-step greedy cost.
pub struct CheckedOracle {
    pub cfg: RolloutConfig,
    pub scenarios: Vec<Scenario>,
    pub decisions: usize,
    pub deviations: usize,
    pub failures: Vec<String>,
}

impl CheckedOracle {
    pub fn new(cfg: RolloutConfig, day: &[Request]) -> Self {
        CheckedOracle { cfg, scenarios: vec![Scenario { requests: day.to_vec() }], decisions: 0, deviations: 0, failures: Vec::new() }
    }
}

impl Planner for CheckedOracle {
    fn name(&self) -> &str {
        "checked-oracle"
    }

    fn plan_step(&mut self, state: &mut FleetState, arrivals: &[Request]) {
        let mut arrivals = arrivals.to_vec();
        canonical_order(&mut arrivals, state.config().t_start);
        let clusterer = self.cfg.clusterer();
        for (q, r) in arrivals.iter().enumerate() {
            state.enter(r.clone());
            let later = &arrivals[q + 1..];
            match rollout_assign(state, r, later, &self.scenarios, &self.cfg, &clusterer) {
                Some((control, d)) => {
                    self.decisions += 1;
                    if d.chosen_cost > d.greedy_cost {
                        self.failures.push(format!("{:?}: chosen {} > greedy {}", d.request, d.chosen_cost, d.greedy_cost));
                    }
                    if d.candidates > 1 {
                        let want = greedy_decision_cost(state, r, later, &self.scenarios, self.cfg.horizon);
                        if d.greedy_cost != want {
                            self.failures.push(format!("{:?}: greedy cost {} but recomputed {}", d.request, d.greedy_cost, want));
                        }
                        let mean = evaluate_control(state, &control, later, &self.scenarios, self.cfg.horizon);
                        if mean != d.chosen_cost as f64 {
                            self.failures.push(format!("{:?}: chosen cost {} but evaluated {}", d.request, d.chosen_cost, mean));
                        }
                    }
                    if d.chosen != d.greedy {
                        self.deviations += 1;
                    }
                    state.apply(&control);
                }
                None => {
                    if greedy_control(state, r).is_some() {
                        self.failures.push(format!("{:?}: rejected though greedy could serve it", r.id));
                    }
                    state.reject(r.id);
                }
            }
        }
    }
}

/// A Tuesday in May: pickups at 8pm over four nodes with weights 1:2:3:4,
/// drop-offs after node 10 spread 4:3:2:1 over four other nodes.
pub fn target_history() -> DayLog {
    let mut reqs = Vec::new();
    let mut id = 0;
    let mut push = |p: NodeId, d: NodeId, k: usize| {
        for _ in 0..k {
            id += 1;
            reqs.push(Request::new(id, p, d, 71_000, 72_000 + (id as i64 % 3000)));
        }
    };
    for (i, p) in [10, 11, 12, 13].into_iter().enumerate() {
        // pickup weight i+1; the drop-off pattern below is attached to node 10
        if p == 10 {
            for (j, d) in [20, 21, 22, 23].into_iter().enumerate() {
                push(p, d, 4 - j);
            }
        } else {
            push(p, 30, 10 * (i + 1));
        }
    }
    DayLog { label: "2024-05-07".into(), weekday: 1, month: 5, requests: reqs }
}

/// Random 5-d points with some exact duplicates; returns duplicate index pairs.
pub fn random_points(rng: &mut impl Rng) -> (Vec<Point>, Vec<(usize, usize)>) {
    let n = rng.random_range(0..14);
    let mut pts: Vec<Point> = Vec::new();
    let mut dups = Vec::new();
    for i in 0..n {
        if i > 0 && rng.random_bool(0.25) {
            let j = rng.random_range(0..i);
            pts.push(pts[j]);
            dups.push((j, i));
        } else {
            let mut p = [0.0; 5];
            for x in &mut p {
                *x = (rng.random_range(0..6) as f64) * rng.random_range(0.5..2.0);
            }
            pts.push(p);
        }
    }
    (pts, dups)
}

/// Clusters are disjoint, sorted, at least `min` long, and keep every
/// duplicate pair together.
pub fn check_partition(clusters: &[Vec<usize>], n: usize, min: usize, dups: &[(usize, usize)]) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for c in clusters {
        if c.len() < min {
            return Err(format!("cluster {c:?} below minimum size {min}"));
        }
        if !c.windows(2).all(|w| w[0] < w[1]) {
            return Err(format!("cluster {c:?} not sorted"));
        }
        for &i in c {
            if i >= n || !seen.insert(i) {
                return Err(format!("index {i} repeated or out of range"));
            }
        }
    }
    for &(a, b) in dups {
        let ca = clusters.iter().position(|c| c.contains(&a));
        let cb = clusters.iter().position(|c| c.contains(&b));
        if ca != cb || ca.is_none() {
            return Err(format!("duplicates {a} and {b} not clustered together"));
        }
    }
    Ok(())
}

/// Enters a fresh request into `state` and checks every promising control:
/// picked-up requests stay on their robot, executed stops are untouched, and
/// the greedy control is among the candidates. Returns the candidate count.
pub fn check_controls(state: &FleetState, seed: u64) -> Result<usize, String> {
    let mut state = state.clone();
    let mut rng = rng(seed ^ 0x5eed);
    let n = state.oracle().graph().node_count() as NodeId;
    let p = rng.random_range(1..=n);
    let r = Request::new(99_999, p, p % n + 1, state.now(), state.now() + rng.random_range(1..=600));
    state.enter(r.clone());
    let h = Hdbscan::default();
    let controls = generate_promising_controls(&state, &r, &RoutesGen { n_routes: 15, clusterer: &h, time_weight: 1.0 });
    let greedy = greedy_control(&state, &r);
    if controls.is_empty() != greedy.is_none() || greedy.as_ref().is_some_and(|g| !controls.contains(g)) {
        return Err(format!("seed {seed}: greedy control missing from the candidates"));
    }
    for c in &controls {
        for route in &c.routes {
            let old = state.route(route.robot);
            let k = old.traversed();
            if route.stops()[..k] != old.stops()[..k] {
                return Err(format!("seed {seed}: executed stops of robot {} changed", route.robot));
            }
            let new: BTreeSet<RequestId> = route.requests().into_iter().collect();
            for id in old.requests() {
                if state.request(id).is_some_and(|q| q.picked_up) && !new.contains(&id) {
                    return Err(format!("seed {seed}: picked-up {id} left robot {}", route.robot));
                }
            }
            for id in &new {
                if let Some(q) = state.request(*id) {
                    if q.picked_up && q.assigned != Some(route.robot) {
                        return Err(format!("seed {seed}: picked-up {id} moved to robot {}", route.robot));
                    }
                }
            }
        }
    }
    Ok(controls.len())
}
