//! Small street grid and three-request day on which single-pass fleet sizing
//! undershoots the fleet the greedy policy needs online.
//!
//! The grid spans x in -3..=3 and y in -6..=3 with 60 s edges and one depot
//! at the origin. Wait limits are 300 s and every request wants to be picked
//! up 60 s after it enters. `r1` and `r2` lie east of the depot and `r3` far
//! south; by the time `r3` enters, a robot busy with the first two requests
//! cannot reach it, while an idle one at the depot can.

use std::sync::Arc;

use crate::io::DayLog;
use crate::model::{Instance, ProblemConfig, Request};
use crate::network::{NodeId, StreetGraph, TravelTimeOracle};

const COLS: u32 = 7;
const ROWS: u32 = 10;
const X0: i32 = -3;
const Y0: i32 = -6;

/// Node at grid coordinate `(x, y)`.
pub fn node_at(x: i32, y: i32) -> NodeId {
    assert!((X0..X0 + COLS as i32).contains(&x) && (Y0..Y0 + ROWS as i32).contains(&y), "({x}, {y}) is off the grid");
    ((y - Y0) as u32) * COLS + (x - X0) as u32 + 1
}

pub fn graph() -> StreetGraph {
    StreetGraph::grid(COLS, ROWS, 60, X0 as f64, Y0 as f64)
}

pub fn config(fleet_size: usize) -> ProblemConfig {
    ProblemConfig {
        t_start: 0,
        t_end: 3600,
        t_last: 600,
        w_pick: 300,
        w_drop: 300,
        capacity: 4,
        depots: vec![node_at(0, 0)],
        fleet_size,
    }
}

pub fn instance(fleet_size: usize) -> Arc<Instance> {
    Instance::new(TravelTimeOracle::new(graph()), config(fleet_size))
}

/// `[r1, r2, r3]` entering one minute apart.
pub fn requests() -> Vec<Request> {
    vec![
        Request::new(1, node_at(-2, 0), node_at(3, 0), 60, 120),
        Request::new(2, node_at(2, 0), node_at(3, 3), 120, 180),
        Request::new(3, node_at(0, -5), node_at(0, -6), 180, 240),
    ]
}

pub fn day() -> DayLog {
    DayLog { label: "counterexample".into(), weekday: 0, month: 1, requests: requests() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleetsize::{replay_greedy, restart_and_optimize, single_pass};
    use crate::model::{RequestId, RobotId, StopKind};

    #[test]
    fn graph_file_round_trip_has_minute_edges() {
        let g = StreetGraph::parse(&graph().to_string()).unwrap();
        assert!(g.edges().iter().all(|e| e.travel_time == 60));
        assert_eq!(node_at(0, 0), 46);
    }

    #[test]
    fn single_pass_gives_two() {
        let inst = instance(1);
        let rep = single_pass(&inst, &[day()]).unwrap();
        assert_eq!(rep.fleet, 2);
        let trace = &rep.days[0].trace;
        assert!(trace.contains(&(RequestId(1), RobotId(0))));
        assert!(trace.contains(&(RequestId(2), RobotId(0))));
        assert!(trace.contains(&(RequestId(3), RobotId(1))));
    }

    #[test]
    fn online_greedy_with_two_rejects_r3() {
        let inst = instance(2);
        let s = replay_greedy(&inst, &requests(), 2, false);
        assert_eq!(s.rejected().iter().copied().collect::<Vec<_>>(), vec![RequestId(3)]);
        assert_eq!(s.request(RequestId(2)).unwrap().assigned, Some(RobotId(1)));
    }

    #[test]
    fn second_request_has_a_single_valid_sequence() {
        let inst = instance(1);
        let reqs = requests();
        let mut s = crate::model::FleetState::new(inst);
        s.advance_to(60);
        crate::greedy::greedy_assign(&mut s, &reqs[0]);
        s.advance_to(120);
        // one intersection closer to the pickup of r1
        assert_eq!(s.location(RobotId(0)), node_at(-1, 0));
        s.enter(reqs[1].clone());
        let all = crate::greedy::enumerate_insertions(&s, s.route(RobotId(0)), &reqs[1]);
        assert_eq!(all.len(), 1);
        let order: Vec<_> = all[0].route.stops().iter().filter_map(|st| match st.kind {
            StopKind::Pickup(r) => Some(format!("p{}", r.0)),
            StopKind::Dropoff(r) => Some(format!("d{}", r.0)),
            _ => None,
        }).collect();
        assert_eq!(order, vec!["p1", "p2", "d1", "d2"]);
    }

    #[test]
    fn replay_at_three_serves_everyone() {
        let s = replay_greedy(&instance(3), &requests(), 3, false);
        let mut s = s;
        s.advance_to(3600);
        assert!(s.requests().all(|r| r.picked_up && r.dropped_off));
        assert!(s.routes().iter().all(|r| r.end_time() <= 3600));
    }

    #[test]
    fn restart_and_optimize_gives_three() {
        let inst = instance(1);
        let rep = restart_and_optimize(&inst, &[day()], 100).unwrap();
        assert_eq!(rep.fleet, 3);
        assert!(replay_greedy(&inst, &requests(), 3, false).rejected().is_empty());
    }
}
