use std::fmt;

use serde::{Deserialize, Serialize};

use crate::network::{NodeId, Seconds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RequestId(pub u64);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RobotId(pub usize);

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "robot{}", self.0 + 1)
    }
}

/// A pickup-and-delivery task together with its assignment status.
///
/// `assigned`, `planned_pickup` and `planned_dropoff` mirror the route that
/// currently carries the request; `None` means unassigned or unset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub pickup: NodeId,
    pub dropoff: NodeId,
    pub entry_time: Seconds,
    pub desired_pickup: Seconds,
    pub assigned: Option<RobotId>,
    pub planned_pickup: Option<Seconds>,
    pub planned_dropoff: Option<Seconds>,
    pub picked_up: bool,
    pub dropped_off: bool,
}

impl Request {
    pub fn new(id: u64, pickup: NodeId, dropoff: NodeId, entry_time: Seconds, desired_pickup: Seconds) -> Self {
        Request {
            id: RequestId(id),
            pickup,
            dropoff,
            entry_time,
            desired_pickup,
            assigned: None,
            planned_pickup: None,
            planned_dropoff: None,
            picked_up: false,
            dropped_off: false,
        }
    }

    /// Scheduled ahead of the operating horizon.
    pub fn is_scheduled(&self, t_start: Seconds) -> bool {
        self.entry_time < t_start
    }

    /// Checks the static fields: distinct endpoints and entry strictly before
    /// the desired pickup.
    pub fn check_fields(&self) -> Result<(), String> {
        if self.pickup == self.dropoff {
            return Err(format!("{}: pickup and drop-off are both node {}", self.id, self.pickup));
        }
        if self.entry_time >= self.desired_pickup {
            return Err(format!(
                "{}: entry time {} is not before desired pickup {}",
                self.id, self.entry_time, self.desired_pickup
            ));
        }
        Ok(())
    }
}

/// Order in which same-step arrivals are considered: scheduled requests
/// first, then desired pickup time, entry time and id.
pub fn canonical_order(requests: &mut [Request], t_start: Seconds) {
    requests.sort_by_key(|r| (!r.is_scheduled(t_start), r.desired_pickup, r.entry_time, r.id));
}
