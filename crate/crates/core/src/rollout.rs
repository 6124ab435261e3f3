//! One-request-at-a-time rollout: each arriving request picks, from its
//! promising controls, the one with the lowest immediate wait plus the cost
//! of running the greedy policy over sampled future requests.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::demand::{DemandModel, Scenario};
use crate::error::{DemandError, InputError};
use crate::greedy::{greedy_control, run_base_policy};
use crate::model::{canonical_order, Control, FleetState, Request, RequestId};
use crate::network::Seconds;
use crate::par::par_map;
use crate::routesgen::{promising_controls, Clusterer, Hdbscan, RoutesGen};
use crate::sim::Planner;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    /// Lookahead horizon in seconds.
    pub horizon: Seconds,
    pub n_scenarios: usize,
    pub n_routes: usize,
    pub min_cluster_size: usize,
    /// Weight of desired pickup time in the clustering features.
    pub time_weight: f64,
    pub seed: u64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig { horizon: 3600, n_scenarios: 20, n_routes: 15, min_cluster_size: 2, time_weight: 1.0, seed: 0 }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<(), InputError> {
        let fail = |m: &str| Err(InputError::Config(m.to_string()));
        if self.horizon < 0 {
            return fail("rollout horizon must be non-negative");
        }
        if self.n_scenarios == 0 {
            return fail("n_scenarios must be at least 1");
        }
        if self.n_routes == 0 {
            return fail("n_routes must be at least 1");
        }
        if self.min_cluster_size < 2 {
            return fail("min_cluster_size must be at least 2");
        }
        if !(self.time_weight.is_finite() && self.time_weight >= 0.0) {
            return fail("time_weight must be a non-negative number");
        }
        Ok(())
    }

    pub fn clusterer(&self) -> Hdbscan {
        Hdbscan { min_cluster_size: self.min_cluster_size, min_samples: 2 }
    }
}

/// State after committing `control` and handing `later` to the greedy
/// policy, with the cost accrued so far.
fn prepare(state: &FleetState, control: &Control, later: &[Request]) -> (FleetState, Seconds) {
    let mut s = state.clone();
    s.apply(control);
    let mut cost = control.delta;
    let penalty = s.config().rejection_penalty();
    for r in later {
        s.enter(r.clone());
        match greedy_control(&s, r) {
            Some(c) => {
                cost += c.delta;
                s.apply(&c);
            }
            None => {
                s.reject(r.id);
                cost += penalty;
            }
        }
    }
    (s, cost)
}

/// Summed cost of `control` over all scenarios; with no scenarios, the cost
/// up to the end of the current step.
fn control_cost_sum(state: &FleetState, control: &Control, later: &[Request], scenarios: &[Scenario], horizon: Seconds) -> i64 {
    let (s, base) = prepare(state, control, later);
    if scenarios.is_empty() {
        return base;
    }
    scenarios.iter().map(|sc| base + run_base_policy(&s, horizon, &sc.requests)).sum()
}

/// Mean over `scenarios` of the control's added wait, the greedy handling of
/// `later` requests from the same step, and the greedy cost of the scenario's
/// requests within `horizon`. Rejections cost `W_pick + W_drop` each.
pub fn evaluate_control(
    state: &FleetState,
    control: &Control,
    later: &[Request],
    scenarios: &[Scenario],
    horizon: Seconds,
) -> f64 {
    let sum = control_cost_sum(state, control, later, scenarios, horizon);
    sum as f64 / scenarios.len().max(1) as f64
}

/// Outcome of one rollout decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub request: RequestId,
    pub candidates: usize,
    /// Index of the chosen control in the candidate list.
    pub chosen: usize,
    pub greedy: usize,
    /// Scenario-summed costs; means are these divided by `scenarios`. Both
    /// are zero when there was a single candidate and nothing was evaluated.
    pub chosen_cost: i64,
    pub greedy_cost: i64,
    pub scenarios: usize,
}

/// Rollout choice for `request`, already entered in `state`. `None` means no
/// robot can take it.
pub fn rollout_assign(
    state: &FleetState,
    request: &Request,
    later: &[Request],
    scenarios: &[Scenario],
    cfg: &RolloutConfig,
    clusterer: &dyn Clusterer,
) -> Option<(Control, Decision)> {
    let gen = RoutesGen { n_routes: cfg.n_routes, clusterer, time_weight: cfg.time_weight };
    let (mut controls, greedy) = promising_controls(state, request, &gen);
    if controls.is_empty() {
        return None;
    }
    let costs: Vec<i64> = if controls.len() == 1 {
        vec![0]
    } else {
        let prepared = par_map(&controls, |c| prepare(state, c, later));
        let pairs: Vec<(usize, usize)> =
            (0..controls.len()).flat_map(|i| (0..scenarios.len().max(1)).map(move |k| (i, k))).collect();
        let parts = par_map(&pairs, |&(i, k)| {
            let (s, base) = &prepared[i];
            match scenarios.get(k) {
                Some(sc) => base + run_base_policy(s, cfg.horizon, &sc.requests),
                None => *base,
            }
        });
        let mut costs = vec![0i64; controls.len()];
        for (&(i, _), c) in pairs.iter().zip(parts) {
            costs[i] += c;
        }
        costs
    };
    // lowest index wins ties
    let chosen = (0..costs.len()).min_by_key(|&i| (costs[i], i)).expect("non-empty");
    let decision = Decision {
        request: request.id,
        candidates: controls.len(),
        chosen,
        greedy,
        chosen_cost: costs[chosen],
        greedy_cost: costs[greedy],
        scenarios: scenarios.len(),
    };
    Some((controls.swap_remove(chosen), decision))
}

/// Supplies the scenarios used for decisions at the state's current time.
pub trait ScenarioSource: Send {
    fn scenarios(&mut self, state: &FleetState) -> Result<Arc<Vec<Scenario>>, DemandError>;
}

/// Scenarios drawn from a demand model, refreshed at each new clock hour.
pub struct SampledScenarios {
    model: Arc<DemandModel>,
    date: String,
    month: u8,
    weekday: u8,
    seed: u64,
    n: usize,
    cache: Option<(Seconds, Arc<Vec<Scenario>>)>,
}

impl SampledScenarios {
    pub fn new(model: Arc<DemandModel>, date: &str, month: u8, weekday: u8, seed: u64, n: usize) -> Self {
        SampledScenarios { model, date: date.to_string(), month, weekday, seed, n, cache: None }
    }
}

impl ScenarioSource for SampledScenarios {
    fn scenarios(&mut self, state: &FleetState) -> Result<Arc<Vec<Scenario>>, DemandError> {
        let hour_start = state.now().div_euclid(3600) * 3600;
        if let Some((h, s)) = &self.cache {
            if *h == hour_start {
                return Ok(s.clone());
            }
        }
        let seen: Vec<Request> = state.requests().cloned().collect();
        let s = Arc::new(self.model.scenarios(&self.date, self.month, self.weekday, hour_start, &seen, self.seed, self.n)?);
        self.cache = Some((hour_start, s.clone()));
        Ok(s)
    }
}

/// The day's actual requests as a single scenario.
pub struct OracleScenario(Arc<Vec<Scenario>>);

impl OracleScenario {
    pub fn new(requests: &[Request]) -> Self {
        OracleScenario(Arc::new(vec![Scenario { requests: requests.to_vec() }]))
    }
}

impl ScenarioSource for OracleScenario {
    fn scenarios(&mut self, _state: &FleetState) -> Result<Arc<Vec<Scenario>>, DemandError> {
        Ok(self.0.clone())
    }
}

/// Rollout as a step planner.
pub struct RolloutPolicy {
    cfg: RolloutConfig,
    source: Box<dyn ScenarioSource>,
    clusterer: Box<dyn Clusterer>,
    decisions: Vec<Decision>,
    error: Option<DemandError>,
}

impl RolloutPolicy {
    pub fn new(cfg: RolloutConfig, source: Box<dyn ScenarioSource>) -> Self {
        let clusterer = Box::new(cfg.clusterer());
        RolloutPolicy { cfg, source, clusterer, decisions: Vec::new(), error: None }
    }

    pub fn with_clusterer(mut self, clusterer: Box<dyn Clusterer>) -> Self {
        self.clusterer = clusterer;
        self
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    /// First failure of the scenario source. Decisions after it used no
    /// scenarios.
    pub fn error(&self) -> Option<&DemandError> {
        self.error.as_ref()
    }
}

impl Planner for RolloutPolicy {
    fn name(&self) -> &str {
        "rollout"
    }

    fn failure(&self) -> Option<String> {
        self.error.as_ref().map(|e| e.to_string())
    }

    fn plan_step(&mut self, state: &mut FleetState, arrivals: &[Request]) {
        let mut arrivals = arrivals.to_vec();
        canonical_order(&mut arrivals, state.config().t_start);
        let scenarios = match self.source.scenarios(state) {
            Ok(s) => s,
            Err(e) => {
                self.error.get_or_insert(e);
                Arc::new(Vec::new())
            }
        };
        for (q, r) in arrivals.iter().enumerate() {
            state.enter(r.clone());
            match rollout_assign(state, r, &arrivals[q + 1..], &scenarios, &self.cfg, self.clusterer.as_ref()) {
                Some((control, decision)) => {
                    state.apply(&control);
                    self.decisions.push(decision);
                }
                None => state.reject(r.id),
            }
        }
    }
}
