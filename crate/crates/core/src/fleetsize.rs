//! Offline fleet sizing over a set of historical days.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::FleetSizeError;
use crate::greedy::greedy_control;
use crate::io::DayLog;
use crate::model::{canonical_order, FleetState, Instance, Request, RequestId, RobotId};
use crate::par::par_map;
use crate::sim::{simulate_day, Planner, SimOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FleetAlgorithm {
    SinglePass,
    RestartAndOptimize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DaySize {
    pub day: String,
    pub size: usize,
    /// Robot that took each request in the sizing run.
    pub trace: Vec<(RequestId, RobotId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FleetSizingReport {
    pub algorithm: FleetAlgorithm,
    pub m_max: Option<usize>,
    pub days: Vec<DaySize>,
    /// Maximum over the per-day sizes.
    pub fleet: usize,
}

impl FleetSizingReport {
    fn new(algorithm: FleetAlgorithm, m_max: Option<usize>, days: Vec<DaySize>) -> Self {
        let fleet = days.iter().map(|d| d.size).max().unwrap_or(1);
        FleetSizingReport { algorithm, m_max, days, fleet }
    }

    /// `day <date> size <m>` lines followed by `fleet <max>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for d in &self.days {
            let _ = writeln!(out, "day {} size {}", d.day, d.size);
        }
        let _ = writeln!(out, "fleet {}", self.fleet);
        out
    }
}

/// Arrival groups in processing order: effective entry time (scheduled
/// requests enter at `T_start`), canonical order within a group.
fn arrival_groups(instance: &Instance, requests: &[Request]) -> Vec<Vec<Request>> {
    let t_start = instance.config.t_start;
    let mut sorted = requests.to_vec();
    sorted.sort_by_key(|r| (r.entry_time.max(t_start), r.id));
    let mut groups: Vec<Vec<Request>> = Vec::new();
    for r in sorted {
        match groups.last_mut() {
            Some(g) if g[0].entry_time.max(t_start) == r.entry_time.max(t_start) => g.push(r),
            _ => groups.push(vec![r]),
        }
    }
    for g in &mut groups {
        canonical_order(g, t_start);
    }
    groups
}

/// Greedy replay of a day with a fixed fleet, jumping between arrival times.
/// With `stop_on_reject` the replay ends at the first rejection.
pub fn replay_greedy(instance: &Arc<Instance>, requests: &[Request], fleet: usize, stop_on_reject: bool) -> FleetState {
    let mut state = FleetState::with_fleet(instance.clone(), fleet);
    for group in arrival_groups(instance, requests) {
        let t = group[0].entry_time.max(instance.config.t_start);
        state.advance_to(t);
        for r in &group {
            state.enter(r.clone());
            match greedy_control(&state, r) {
                Some(c) => state.apply(&c),
                None => {
                    state.reject(r.id);
                    if stop_on_reject {
                        return state;
                    }
                }
            }
        }
    }
    state
}

fn trace(state: &FleetState) -> Vec<(RequestId, RobotId)> {
    state.requests().filter_map(|r| r.assigned.map(|m| (r.id, m))).collect()
}

fn single_pass_day(instance: &Arc<Instance>, day: &DayLog) -> Result<DaySize, FleetSizeError> {
    let cfg = &instance.config;
    let mut state = FleetState::with_fleet(instance.clone(), 1);
    for group in arrival_groups(instance, &day.requests) {
        state.advance_to(group[0].entry_time.max(cfg.t_start));
        for r in &group {
            state.enter(r.clone());
            let control = match greedy_control(&state, r) {
                Some(c) => c,
                None => {
                    state.add_robot(cfg.nearest_depot(r.pickup, &instance.oracle));
                    greedy_control(&state, r)
                        .ok_or_else(|| FleetSizeError::DepotCoverage { day: day.label.clone(), request: r.id.0 })?
                }
            };
            state.apply(&control);
        }
    }
    Ok(DaySize { day: day.label.clone(), size: state.fleet_size(), trace: trace(&state) })
}

/// Grows the fleet by one robot whenever a request cannot be placed and
/// retries that request, without replaying the day.
pub fn single_pass(instance: &Arc<Instance>, history: &[DayLog]) -> Result<FleetSizingReport, FleetSizeError> {
    if history.is_empty() {
        return Err(FleetSizeError::EmptyHistory);
    }
    let days = par_map(history, |d| single_pass_day(instance, d)).into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(FleetSizingReport::new(FleetAlgorithm::SinglePass, None, days))
}

/// Smallest fleet in `1..=m_max` whose greedy replay of the day rejects nothing.
pub fn minimal_fleet(instance: &Arc<Instance>, day: &DayLog, m_max: usize) -> Result<DaySize, FleetSizeError> {
    for size in 1..=m_max {
        let state = replay_greedy(instance, &day.requests, size, true);
        if state.rejected().is_empty() {
            return Ok(DaySize { day: day.label.clone(), size, trace: trace(&state) });
        }
    }
    Err(FleetSizeError::ExceedsMax { day: day.label.clone(), max: m_max })
}

/// Replays every day from the start at fleet sizes 1, 2, ... and keeps the
/// first size with no rejection; the report holds the maximum over days.
pub fn restart_and_optimize(
    instance: &Arc<Instance>,
    history: &[DayLog],
    m_max: usize,
) -> Result<FleetSizingReport, FleetSizeError> {
    if history.is_empty() {
        return Err(FleetSizeError::EmptyHistory);
    }
    let days = par_map(history, |d| minimal_fleet(instance, d, m_max)).into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(FleetSizingReport::new(FleetAlgorithm::RestartAndOptimize, Some(m_max), days))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilityReport {
    pub fleet: usize,
    /// (day, entered, rejected)
    pub days: Vec<(String, usize, usize)>,
    pub total_rejected: usize,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.total_rejected == 0
    }
}

/// Replays each day with the planner built by `make_planner` at a fixed
/// fleet size and counts rejections.
pub fn verify_stability<F>(instance: &Arc<Instance>, fleet: usize, days: &[DayLog], make_planner: F) -> StabilityReport
where
    F: Fn(&DayLog) -> Box<dyn Planner> + Sync + Send,
{
    let per_day = par_map(days, |d| {
        let mut planner = make_planner(d);
        let run = simulate_day(instance, &d.requests, fleet, planner.as_mut(), SimOptions::default())
            .expect("simulation without invariant checks cannot fail");
        (d.label.clone(), run.state.request_count(), run.state.rejected().len())
    });
    let total_rejected = per_day.iter().map(|d| d.2).sum();
    StabilityReport { fleet, days: per_day, total_rejected }
}
