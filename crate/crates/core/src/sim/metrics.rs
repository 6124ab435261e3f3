use std::fmt::Write as _;

use serde::Serialize;

use crate::model::{Cost, RequestId, RobotId, WaitTimes};
use crate::network::Seconds;

use super::DayRun;

pub const CSV_HEADER: &str = "date,policy,fleet,avg_wait_pick,avg_trip,pct_rejected,total_cost,mean_plan_time";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RequestOutcome {
    Served { robot: RobotId, wait_pick: Seconds, wait_drop: Seconds, trip: Seconds },
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequestRecord {
    pub id: RequestId,
    pub outcome: RequestOutcome,
}

/// Service metrics for one simulated day. Rejected requests are counted
/// separately and left out of every average and of `total_cost`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayMetrics {
    pub date: String,
    pub policy: String,
    pub fleet: usize,
    pub entered: usize,
    pub rejected: usize,
    pub avg_wait_pick: f64,
    /// Planned drop-off minus planned pickup, averaged over serviced requests.
    pub avg_trip: f64,
    pub pct_rejected: f64,
    /// Sum of stage costs over the horizon.
    pub total_cost: Cost,
    /// Mean wall-clock seconds per decision, when measured.
    pub mean_plan_time: Option<f64>,
    pub records: Vec<RequestRecord>,
}

impl DayMetrics {
    pub fn from_run(date: &str, policy: &str, run: &DayRun) -> Self {
        let state = &run.state;
        let mut records = Vec::new();
        let (mut wait_sum, mut trip_sum, mut served) = (0i64, 0i64, 0usize);
        for r in state.requests() {
            let outcome = match state.wait_times(r.id).expect("request is known") {
                WaitTimes::Assigned { pick, drop } => {
                    let trip = r.planned_dropoff.unwrap_or(0) - r.planned_pickup.unwrap_or(0);
                    wait_sum += pick;
                    trip_sum += trip;
                    served += 1;
                    RequestOutcome::Served {
                        robot: r.assigned.expect("assigned"),
                        wait_pick: pick,
                        wait_drop: drop,
                        trip,
                    }
                }
                WaitTimes::Rejected | WaitTimes::Pending => RequestOutcome::Rejected,
            };
            records.push(RequestRecord { id: r.id, outcome });
        }
        let entered = state.request_count();
        let rejected = records.iter().filter(|r| r.outcome == RequestOutcome::Rejected).count();
        let mean = |s: i64| if served == 0 { 0.0 } else { s as f64 / served as f64 };
        DayMetrics {
            date: date.to_string(),
            policy: policy.to_string(),
            fleet: state.fleet_size(),
            entered,
            rejected,
            avg_wait_pick: mean(wait_sum),
            avg_trip: mean(trip_sum),
            pct_rejected: if entered == 0 { 0.0 } else { 100.0 * rejected as f64 / entered as f64 },
            total_cost: run.stage_total,
            mean_plan_time: run
                .plan_time
                .map(|d| if run.decisions == 0 { 0.0 } else { d.as_secs_f64() / run.decisions as f64 }),
            records,
        }
    }

    /// One CSV row matching [`CSV_HEADER`], fixed precision.
    pub fn csv_row(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "{},{},{},{:.3},{:.3},{:.3},{},",
            self.date, self.policy, self.fleet, self.avg_wait_pick, self.avg_trip, self.pct_rejected, self.total_cost.wait
        );
        match self.mean_plan_time {
            Some(t) => {
                let _ = write!(out, "{t:.6}");
            }
            None => out.push_str("NA"),
        }
        out
    }
}
