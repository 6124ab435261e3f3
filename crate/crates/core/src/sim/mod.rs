//! Day simulation, metrics, experiments and synthetic workloads.

mod experiment;
mod metrics;
mod synthetic;

pub use experiment::{
    fit_forecaster, make_planner, run_experiment, ExperimentConfig, ExperimentReport, ExperimentRow, ForecasterKind,
    PolicyKind, SamplingParamsConfig, TrainedModels,
};
pub use metrics::{DayMetrics, RequestOutcome, RequestRecord, CSV_HEADER};
pub use synthetic::{generate_synthetic_history, HistorySpec, Workload};

use std::sync::Arc;
use std::time::Duration;

use crate::error::SimError;
use crate::greedy::greedy_plan_step;
use crate::model::{stage_cost, Cost, FleetState, Instance, Request};

/// A policy that commits controls for the requests arriving at one step.
pub trait Planner {
    fn name(&self) -> &str;

    /// Assigns or rejects every request in `arrivals`. The clock is not moved.
    fn plan_step(&mut self, state: &mut FleetState, arrivals: &[Request]);

    /// Set when the planner hit an error it worked around, making the run
    /// unfit for reporting.
    fn failure(&self) -> Option<String> {
        None
    }
}

impl<P: Planner + ?Sized> Planner for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn plan_step(&mut self, state: &mut FleetState, arrivals: &[Request]) {
        (**self).plan_step(state, arrivals)
    }

    fn failure(&self) -> Option<String> {
        (**self).failure()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Greedy;

impl Planner for Greedy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn plan_step(&mut self, state: &mut FleetState, arrivals: &[Request]) {
        greedy_plan_step(state, arrivals);
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// Check fleet invariants and the stage-cost bookkeeping at every step.
    pub check_invariants: bool,
    /// Measure wall-clock planning time per decision.
    pub time_decisions: bool,
}

#[derive(Debug, Clone)]
pub struct DayRun {
    pub state: FleetState,
    /// Sum of stage costs over the horizon.
    pub stage_total: Cost,
    pub decisions: usize,
    pub plan_time: Option<Duration>,
}

/// Replays `requests` from `T_start` to `T_end` one second at a time.
///
/// Requests entering before `T_start` are handed to the planner together
/// with those entering at `T_start`. Stage costs are only recomputed on steps
/// with arrivals; moving along routes never changes planned times.
pub fn simulate_day(
    instance: &Arc<Instance>,
    requests: &[Request],
    fleet: usize,
    planner: &mut dyn Planner,
    opts: SimOptions,
) -> Result<DayRun, SimError> {
    let cfg = &instance.config;
    let mut reqs: Vec<&Request> = requests.iter().collect();
    reqs.sort_by_key(|r| (r.entry_time.max(cfg.t_start), r.id));
    let mut state = FleetState::with_fleet(instance.clone(), fleet);
    let mut next = 0;
    let mut h_prev = Cost::default();
    let mut stage_total = Cost::default();
    let mut decisions = 0;
    let mut plan_time = Duration::ZERO;
    let mut arrivals: Vec<Request> = Vec::new();

    for t in cfg.t_start..cfg.t_end {
        debug_assert_eq!(state.now(), t);
        arrivals.clear();
        while next < reqs.len() && reqs[next].entry_time.max(cfg.t_start) <= t {
            arrivals.push(reqs[next].clone());
            next += 1;
        }
        let before = (opts.check_invariants && !arrivals.is_empty()).then(|| state.clone());
        if !arrivals.is_empty() {
            decisions += arrivals.len();
            if opts.time_decisions {
                let started = std::time::Instant::now();
                planner.plan_step(&mut state, &arrivals);
                plan_time += started.elapsed();
            } else {
                planner.plan_step(&mut state, &arrivals);
            }
        }
        state.advance();

        if !arrivals.is_empty() || opts.check_invariants {
            let h = state.immediate_cost();
            let g = Cost { wait: h.wait - h_prev.wait, rejected: h.rejected - h_prev.rejected };
            let fail = |msg: String| SimError::Invariant { t, msg };
            if opts.check_invariants {
                match &before {
                    Some(before) => {
                        let expected = stage_cost(before, &state).map_err(|e| fail(e.to_string()))?;
                        if expected != g {
                            return Err(fail(format!("stage cost {g:?} differs from {expected:?}")));
                        }
                        FleetState::check_transition(before, &state).map_err(fail)?;
                    }
                    None if g != Cost::default() => {
                        return Err(fail(format!("cost changed without arrivals: {g:?}")));
                    }
                    None => {}
                }
                state.check_invariants().map_err(fail)?;
            }
            stage_total += g;
            h_prev = h;
        }
    }
    Ok(DayRun {
        state,
        stage_total,
        decisions,
        plan_time: opts.time_decisions.then_some(plan_time),
    })
}
