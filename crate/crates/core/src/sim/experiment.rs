//! Sweeps over fleet sizes, policies and days.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::demand::{Bootstrap, ConditionalHistograms, CountForecaster, DemandModel, ForecastTable, HistoricalMean, Precomputed, SamplingParams};
use crate::error::DemandError;
use crate::io::DayLog;
use crate::model::Instance;
use crate::par::par_map;
use crate::rollout::{OracleScenario, RolloutConfig, RolloutPolicy, SampledScenarios};

use super::{simulate_day, DayMetrics, Greedy, Planner, SimOptions, CSV_HEADER};

/// Interval count model behind sampled scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForecasterKind {
    HistoricalMean,
    Bootstrap,
    /// Counts from a forecast file.
    File,
}

impl ForecasterKind {
    pub fn name(self) -> &'static str {
        match self {
            ForecasterKind::HistoricalMean => "mean",
            ForecasterKind::Bootstrap => "bootstrap",
            ForecasterKind::File => "file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    Greedy,
    Rollout(ForecasterKind),
    /// Rollout whose single scenario is the day's actual requests.
    RolloutOracle,
}

impl PolicyKind {
    pub fn name(self) -> String {
        match self {
            PolicyKind::Greedy => "greedy".into(),
            PolicyKind::Rollout(ForecasterKind::HistoricalMean) => "rollout".into(),
            PolicyKind::Rollout(f) => format!("rollout-{}", f.name()),
            PolicyKind::RolloutOracle => "rollout-oracle".into(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "greedy" => PolicyKind::Greedy,
            "rollout" | "rollout-mean" => PolicyKind::Rollout(ForecasterKind::HistoricalMean),
            "rollout-bootstrap" => PolicyKind::Rollout(ForecasterKind::Bootstrap),
            "rollout-file" => PolicyKind::Rollout(ForecasterKind::File),
            "rollout-oracle" => PolicyKind::RolloutOracle,
            _ => return None,
        })
    }
}

/// Fits one count model on `history`. `File` needs `forecasts`.
pub fn fit_forecaster(
    kind: ForecasterKind,
    history: &[DayLog],
    params: SamplingParams,
    operating_hours: f64,
    seed: u64,
    forecasts: Option<&ForecastTable>,
) -> Result<Box<dyn CountForecaster>, DemandError> {
    Ok(match kind {
        ForecasterKind::HistoricalMean => Box::new(HistoricalMean::fit(history, params.intervals)?),
        ForecasterKind::Bootstrap => Box::new(Bootstrap::fit(history, params.intervals, operating_hours, seed)?),
        ForecasterKind::File => Box::new(Precomputed::new(forecasts.ok_or(DemandError::NotTrained)?.clone(), params.intervals)),
    })
}

/// Demand models fitted on training days, one per forecaster in use.
pub struct TrainedModels {
    models: BTreeMap<ForecasterKind, Arc<DemandModel>>,
}

impl TrainedModels {
    pub fn fit(
        instance: &Instance,
        train: &[DayLog],
        kinds: &[ForecasterKind],
        params: SamplingParams,
        seed: u64,
        forecasts: Option<&ForecastTable>,
    ) -> Result<Self, DemandError> {
        let mut models = BTreeMap::new();
        if kinds.is_empty() {
            return Ok(TrainedModels { models });
        }
        let histograms = ConditionalHistograms::build(train)?;
        let cfg = &instance.config;
        let hours = ((cfg.t_last - cfg.t_start) as f64 / 3600.0).ceil().max(1.0);
        for &k in kinds {
            let forecaster = fit_forecaster(k, train, params, hours, seed, forecasts)?;
            models.insert(k, Arc::new(DemandModel { forecaster, histograms: histograms.clone(), params }));
        }
        Ok(TrainedModels { models })
    }

    pub fn get(&self, kind: ForecasterKind) -> Option<&Arc<DemandModel>> {
        self.models.get(&kind)
    }
}

/// Planner for `policy` on `day`. Sampled rollout needs the matching model.
pub fn make_planner(
    policy: PolicyKind,
    day: &DayLog,
    rollout: &RolloutConfig,
    models: &TrainedModels,
) -> Result<Box<dyn Planner>, DemandError> {
    Ok(match policy {
        PolicyKind::Greedy => Box::new(Greedy),
        PolicyKind::RolloutOracle => Box::new(RolloutPolicy::new(*rollout, Box::new(OracleScenario::new(&day.requests)))),
        PolicyKind::Rollout(kind) => {
            let model = models.get(kind).ok_or(DemandError::NotTrained)?.clone();
            let source = SampledScenarios::new(model, &day.label, day.month, day.weekday, rollout.seed, rollout.n_scenarios);
            Box::new(RolloutPolicy::new(*rollout, Box::new(source)))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub fleets: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    pub rollout: RolloutConfig,
    pub sampling: SamplingParamsConfig,
    pub check_invariants: bool,
    pub time_decisions: bool,
}

/// Serializable mirror of [`SamplingParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingParamsConfig {
    pub intervals: usize,
    pub lead: i64,
}

impl Default for SamplingParamsConfig {
    fn default() -> Self {
        let p = SamplingParams::default();
        SamplingParamsConfig { intervals: p.intervals, lead: p.lead }
    }
}

impl From<SamplingParamsConfig> for SamplingParams {
    fn from(c: SamplingParamsConfig) -> Self {
        SamplingParams { intervals: c.intervals, lead: c.lead, ..SamplingParams::default() }
    }
}

/// One (day, policy, fleet) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub date: String,
    pub policy: String,
    pub fleet: usize,
    pub result: Result<DayMetrics, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    /// Per-day CSV; failed cells are written as comments.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            match &row.result {
                Ok(m) => out.push_str(&m.csv_row()),
                Err(e) => {
                    let _ = write!(out, "# failed {},{},{}: {}", row.date, row.policy, row.fleet, e.replace('\n', " "));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Totals per (policy, fleet).
    pub fn summary(&self) -> String {
        #[derive(Default)]
        struct Acc {
            days: usize,
            failed: usize,
            entered: usize,
            rejected: usize,
            wait: f64,
            trip: f64,
            cost: i64,
        }
        let mut groups: BTreeMap<(String, usize), Acc> = BTreeMap::new();
        for row in &self.rows {
            let a = groups.entry((row.policy.clone(), row.fleet)).or_default();
            match &row.result {
                Ok(m) => {
                    a.days += 1;
                    a.entered += m.entered;
                    a.rejected += m.rejected;
                    a.wait += m.avg_wait_pick;
                    a.trip += m.avg_trip;
                    a.cost += m.total_cost.wait;
                }
                Err(_) => a.failed += 1,
            }
        }
        let mut out = String::from("policy fleet days failed entered rejected pct_rejected mean_avg_wait_pick mean_avg_trip total_cost\n");
        for ((policy, fleet), a) in &groups {
            let n = a.days.max(1) as f64;
            let pct = if a.entered == 0 { 0.0 } else { 100.0 * a.rejected as f64 / a.entered as f64 };
            let _ = writeln!(
                out,
                "{policy} {fleet} {} {} {} {} {pct:.3} {:.3} {:.3} {}",
                a.days,
                a.failed,
                a.entered,
                a.rejected,
                a.wait / n,
                a.trip / n,
                a.cost
            );
        }
        out
    }

    /// Rejections per (policy, fleet) over successful days.
    pub fn rejections(&self) -> BTreeMap<(String, usize), usize> {
        let mut out = BTreeMap::new();
        for row in &self.rows {
            if let Ok(m) = &row.result {
                *out.entry((row.policy.clone(), row.fleet)).or_insert(0) += m.rejected;
            }
        }
        out
    }
}

/// Runs every (fleet, policy, day) combination on the test days. A day that
/// fails is recorded and the sweep goes on.
pub fn run_experiment(instance: &Arc<Instance>, models: &TrainedModels, test: &[DayLog], cfg: &ExperimentConfig) -> ExperimentReport {
    let mut jobs = Vec::new();
    for &fleet in &cfg.fleets {
        for &policy in &cfg.policies {
            for day in test {
                jobs.push((fleet, policy, day));
            }
        }
    }
    let opts = SimOptions { check_invariants: cfg.check_invariants, time_decisions: cfg.time_decisions };
    let rows = par_map(&jobs, |&(fleet, policy, day)| {
        let name = policy.name();
        let result = run_cell(instance, models, day, fleet, policy, &cfg.rollout, opts, &name);
        ExperimentRow { date: day.label.clone(), policy: name, fleet, result }
    });
    ExperimentReport { rows }
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    instance: &Arc<Instance>,
    models: &TrainedModels,
    day: &DayLog,
    fleet: usize,
    policy: PolicyKind,
    rollout: &RolloutConfig,
    opts: SimOptions,
    name: &str,
) -> Result<DayMetrics, String> {
    let mut planner: Box<dyn Planner> = make_planner(policy, day, rollout, models).map_err(|e| e.to_string())?;
    let run = simulate_day(instance, &day.requests, fleet, planner.as_mut(), opts).map_err(|e| e.to_string())?;
    if let Some(e) = planner.failure() {
        return Err(e);
    }
    Ok(DayMetrics::from_run(&day.label, name, &run))
}
