//! Candidate controls for one request: plain insertion into each robot that
//! can take it, plus variants that hand a cluster of that robot's
//! not-yet-picked-up requests to another robot.

mod cluster;

pub use cluster::{Clusterer, Hdbscan, Point, SingleLinkage};

use crate::greedy::{greedy_control, insertion_procedure, remove_requests};
use crate::model::{Control, FleetState, Request, RequestId, RobotId};

/// Feature vector `[pickup x, pickup y, drop-off x, drop-off y, scaled desired pickup]`.
/// Time is scaled so that one pickup wait limit spans the map's coordinate
/// extent, times `time_weight`.
pub fn request_features(state: &FleetState, ids: &[RequestId], time_weight: f64) -> Vec<Point> {
    let g = state.oracle().graph();
    let scale = time_weight * g.coordinate_extent().max(1e-9) / state.config().w_pick as f64;
    ids.iter()
        .map(|id| {
            let r = state.request(*id).expect("known request");
            let (p, d) = (g.node(r.pickup), g.node(r.dropoff));
            [p.x, p.y, d.x, d.y, r.desired_pickup as f64 * scale]
        })
        .collect()
}

/// Clusters of `robot`'s requests that are not dropped off yet, excluding
/// `skip`, as request ids.
pub fn robot_clusters(
    state: &FleetState,
    robot: RobotId,
    skip: RequestId,
    clusterer: &dyn Clusterer,
    time_weight: f64,
) -> Vec<Vec<RequestId>> {
    let avail: Vec<RequestId> = state
        .assignments(robot)
        .into_iter()
        .filter(|id| *id != skip && !state.request(*id).is_some_and(|r| r.dropped_off))
        .collect();
    if avail.len() < 2 {
        return Vec::new();
    }
    let feats = request_features(state, &avail, time_weight);
    clusterer.cluster(&feats).into_iter().map(|g| g.into_iter().map(|i| avail[i]).collect()).collect()
}

/// A cluster can move only if none of its members is on board or done.
pub fn cluster_is_valid(state: &FleetState, members: &[RequestId]) -> bool {
    members.iter().all(|id| state.request(*id).is_some_and(|r| !r.picked_up))
}

/// Settings of the candidate generator.
pub struct RoutesGen<'a> {
    pub n_routes: usize,
    pub clusterer: &'a dyn Clusterer,
    pub time_weight: f64,
}

/// Builds the candidate control list for `request`, already entered in
/// `state` and unassigned.
///
/// The greedy control is always kept and comes first among equal costs. The
/// list is sorted by wait delta and holds at most `n_routes` controls. Empty
/// means no robot can take the request.
pub fn generate_promising_controls(state: &FleetState, request: &Request, gen: &RoutesGen<'_>) -> Vec<Control> {
    promising_controls(state, request, gen).0
}

/// Candidate list plus the position of the greedy control in it.
pub(crate) fn promising_controls(state: &FleetState, request: &Request, gen: &RoutesGen<'_>) -> (Vec<Control>, usize) {
    let Some(greedy) = greedy_control(state, request) else { return (Vec::new(), 0) };
    if gen.n_routes <= 1 {
        return (vec![greedy], 0);
    }
    let mut others: Vec<Control> = Vec::new();
    for route in state.routes() {
        let m = route.robot;
        let Some(ins) = insertion_procedure(state, route, request) else { continue };
        let plain = Control { delta: ins.delta, routes: vec![ins.route.clone()] };
        if plain != greedy {
            others.push(plain);
        }
        for members in robot_clusters(state, m, request.id, gen.clusterer, gen.time_weight) {
            if !cluster_is_valid(state, &members) {
                continue;
            }
            let Some(shrunk) = remove_requests(state, &ins.route, &members) else { continue };
            let mut order: Vec<&Request> = members.iter().map(|id| state.request(*id).expect("member")).collect();
            order.sort_by_key(|r| (r.desired_pickup, r.entry_time, r.id));
            for target in state.routes().iter().filter(|r| r.robot != m) {
                let mut moved = target.clone();
                let mut ok = true;
                for r in &order {
                    match insertion_procedure(state, &moved, r) {
                        Some(i) => moved = i.route,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    let routes = vec![shrunk.clone(), moved];
                    others.push(Control { delta: state.wait_delta(&routes), routes });
                }
            }
        }
    }
    others.sort_by_key(|c| c.delta);
    others.truncate(gen.n_routes - 1);
    let mut out = Vec::with_capacity(others.len() + 1);
    let at = others.partition_point(|c| c.delta < greedy.delta);
    out.extend(others.drain(..at));
    out.push(greedy);
    out.extend(others);
    (out, at)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::greedy_assign;
    use crate::model::{validate_route, Instance, ProblemConfig};
    use crate::network::{StreetGraph, TravelTimeOracle};

    fn state(fleet: usize) -> FleetState {
        let oracle = TravelTimeOracle::new(StreetGraph::grid(6, 6, 60, 0.0, 0.0));
        let config = ProblemConfig {
            t_start: 0,
            t_end: 7200,
            t_last: 3600,
            w_pick: 600,
            w_drop: 600,
            capacity: 4,
            depots: vec![1, 36],
            fleet_size: fleet,
        };
        FleetState::new(Instance::new(oracle, config))
    }

    fn gen(n: usize, h: &Hdbscan) -> RoutesGen<'_> {
        RoutesGen { n_routes: n, clusterer: h, time_weight: 1.0 }
    }

    #[test]
    fn single_robot_has_only_plain_insertion() {
        let mut s = state(1);
        greedy_assign(&mut s, &Request::new(1, 2, 3, 0, 300));
        greedy_assign(&mut s, &Request::new(2, 2, 3, 0, 300));
        let r = Request::new(3, 8, 9, 0, 400);
        s.enter(r.clone());
        let h = Hdbscan::default();
        let u = generate_promising_controls(&s, &r, &gen(15, &h));
        assert_eq!(u.len(), 1);
        assert_eq!(u[0], greedy_control(&s, &r).unwrap());
    }

    #[test]
    fn swap_candidates_are_sorted_and_valid() {
        let mut s = state(2);
        // a tight pair near robot 1's depot, both on robot 1
        greedy_assign(&mut s, &Request::new(1, 2, 3, 0, 600));
        greedy_assign(&mut s, &Request::new(2, 2, 3, 0, 600));
        let r = Request::new(3, 7, 13, 0, 300);
        s.enter(r.clone());
        let h = Hdbscan::default();
        let u = generate_promising_controls(&s, &r, &gen(15, &h));
        assert!(u.len() >= 2, "plain and swapped variants");
        assert!(u.windows(2).all(|w| w[0].delta <= w[1].delta));
        let greedy = greedy_control(&s, &r).unwrap();
        assert!(u.contains(&greedy));
        for c in &u {
            let mut next = s.clone();
            next.apply(c);
            for route in &c.routes {
                assert_eq!(validate_route(route, &s), Ok(()));
            }
            assert!(next.check_invariants().is_ok());
            assert_eq!(next.immediate_cost().wait - s.immediate_cost().wait, c.delta);
        }
        assert_eq!(generate_promising_controls(&s, &r, &gen(1, &h)), vec![greedy]);
    }
}
