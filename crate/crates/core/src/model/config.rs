use serde::{Deserialize, Serialize};

use crate::error::InputError;
use crate::network::{NodeId, Seconds, TravelTimeOracle};

use super::request::RobotId;

/// Horizon, service limits, capacity and fleet layout for one operating day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub t_start: Seconds,
    pub t_end: Seconds,
    /// Latest admissible desired pickup time.
    pub t_last: Seconds,
    pub w_pick: Seconds,
    pub w_drop: Seconds,
    pub capacity: u32,
    pub depots: Vec<NodeId>,
    pub fleet_size: usize,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        // 7pm to 3am, 15 minute wait limits, 16-seat vehicles
        ProblemConfig {
            t_start: 19 * 3600,
            t_end: 27 * 3600,
            t_last: 26 * 3600,
            w_pick: 900,
            w_drop: 900,
            capacity: 16,
            depots: vec![1],
            fleet_size: 3,
        }
    }
}

impl ProblemConfig {
    pub fn validate(&self, oracle: &TravelTimeOracle) -> Result<(), InputError> {
        let fail = |msg: String| Err(InputError::Config(msg));
        if !(self.t_start < self.t_last && self.t_last < self.t_end) {
            return fail(format!(
                "need t_start < t_last < t_end, got {} / {} / {}",
                self.t_start, self.t_last, self.t_end
            ));
        }
        if self.w_pick <= 0 || self.w_drop <= 0 {
            return fail("wait limits must be positive".into());
        }
        if self.capacity < 1 {
            return fail("capacity must be at least 1".into());
        }
        if self.depots.is_empty() {
            return fail("at least one depot is required".into());
        }
        if let Some(d) = self.depots.iter().find(|&&d| !oracle.graph().contains(d)) {
            return fail(format!("depot node {d} is not in the graph"));
        }
        Ok(())
    }

    /// Depot of robot `robot` in a fixed fleet: depots are handed out round-robin.
    pub fn depot_of(&self, robot: RobotId) -> NodeId {
        self.depots[robot.0 % self.depots.len()]
    }

    /// End-of-day buffer is at least three graph diameters.
    pub fn satisfies_buffer_assumption(&self, oracle: &TravelTimeOracle) -> bool {
        self.t_end - self.t_last >= 3 * oracle.diameter()
    }

    /// Every node is within the pickup wait limit of some depot.
    pub fn satisfies_depot_coverage(&self, oracle: &TravelTimeOracle) -> bool {
        let n = oracle.graph().node_count() as NodeId;
        (1..=n).all(|i| self.depots.iter().any(|&b| oracle.time(b, i) <= self.w_pick))
    }

    /// Depot closest (by travel time) to `node`, lowest id on ties.
    pub fn nearest_depot(&self, node: NodeId, oracle: &TravelTimeOracle) -> NodeId {
        let mut depots = self.depots.clone();
        depots.sort_unstable();
        depots.into_iter().min_by_key(|&b| oracle.time(b, node)).expect("non-empty depot list")
    }

    /// Penalty charged for a rejected request inside cost estimates.
    pub fn rejection_penalty(&self) -> Seconds {
        self.w_pick + self.w_drop
    }
}
