//! Browser bindings. Every export returns a JSON string; errors come back as
//! `{"error": "..."}`.

use std::collections::BTreeMap;

use fleetroll::counterexample;
use fleetroll::demand::{ConditionalHistograms, DemandModel, SamplingParams};
use fleetroll::fleetsize::{restart_and_optimize, single_pass, verify_stability};
use fleetroll::rollout::RolloutConfig;
use fleetroll::sim::{
    fit_forecaster, generate_synthetic_history, make_planner, simulate_day, ForecasterKind, Greedy, PolicyKind,
    SimOptions, TrainedModels, Workload,
};
use fleetroll::{Instance, NodeId, Request, TravelTimeOracle};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Stop {
    id: u64,
    pickup: NodeId,
    dropoff: NodeId,
    entry: i64,
    desired: i64,
}

impl From<&Request> for Stop {
    fn from(r: &Request) -> Self {
        Stop { id: r.id.0, pickup: r.pickup, dropoff: r.dropoff, entry: r.entry_time, desired: r.desired_pickup }
    }
}

fn json<T: Serialize>(v: Result<T, String>) -> String {
    match v {
        Ok(v) => serde_json::to_string(&v).expect("serializable"),
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

#[derive(Serialize)]
struct Counterexample {
    requests: Vec<Stop>,
    single_pass: usize,
    restart_and_optimize: usize,
    /// Request ids greedy rejects at the single-pass fleet size.
    rejected_at_single_pass: Vec<u64>,
    rejected_at_restart: Vec<u64>,
}

/// Runs both sizing algorithms on the built-in counter-example day and
/// replays greedy at each answer.
#[wasm_bindgen]
pub fn counterexample_run() -> String {
    json((|| {
        let day = counterexample::day();
        let days = std::slice::from_ref(&day);
        let sp = single_pass(&counterexample::instance(1), days).map_err(|e| e.to_string())?;
        let ro = restart_and_optimize(&counterexample::instance(1), days, 100).map_err(|e| e.to_string())?;
        let rejected = |fleet| {
            simulate_day(&counterexample::instance(fleet), &day.requests, fleet, &mut Greedy, SimOptions::default())
                .map(|run| run.state.rejected().iter().map(|r| r.0).collect::<Vec<_>>())
                .map_err(|e| e.to_string())
        };
        Ok(Counterexample {
            requests: day.requests.iter().map(Stop::from).collect(),
            single_pass: sp.fleet,
            restart_and_optimize: ro.fleet,
            rejected_at_single_pass: rejected(sp.fleet)?,
            rejected_at_restart: rejected(ro.fleet)?,
        })
    })())
}

#[derive(Serialize)]
struct Sweep {
    days: usize,
    requests: usize,
    fleet: usize,
    /// Per policy, total rejections at fleet sizes 1 ..= fleet.
    rejections: BTreeMap<String, Vec<usize>>,
}

/// Sizes the fleet on `days` synthetic evenings of the grid workload, then
/// counts rejections of greedy and rollout at every smaller fleet.
#[wasm_bindgen]
pub fn fleet_sweep(days: u32, seed: u32, n_scenarios: u32) -> String {
    json((|| {
        if days == 0 || days > 60 || n_scenarios == 0 || n_scenarios > 100 {
            return Err("days must be 1..=60 and scenarios 1..=100".to_string());
        }
        let w = Workload::evening_grid();
        let inst = Instance::new(TravelTimeOracle::new(w.graph.clone()), w.config.clone());
        let logs = generate_synthetic_history(&w.spec, days as usize, seed as u64).map_err(|e| e.to_string())?;
        let ro = restart_and_optimize(&inst, &logs, 100).map_err(|e| e.to_string())?;
        let hm = ForecasterKind::HistoricalMean;
        let models =
            TrainedModels::fit(&inst, &logs, &[hm], SamplingParams::default(), seed as u64, None).map_err(|e| e.to_string())?;
        let cfg = RolloutConfig { n_scenarios: n_scenarios as usize, seed: seed as u64, ..Default::default() };
        let mut rejections = BTreeMap::new();
        for policy in [PolicyKind::Greedy, PolicyKind::Rollout(hm)] {
            let counts = (1..=ro.fleet)
                .map(|f| {
                    verify_stability(&inst, f, &logs, |d| make_planner(policy, d, &cfg, &models).expect("model fitted"))
                        .total_rejected
                })
                .collect();
            rejections.insert(policy.name().to_string(), counts);
        }
        Ok(Sweep { days: logs.len(), requests: logs.iter().map(|d| d.requests.len()).sum(), fleet: ro.fleet, rejections })
    })())
}

#[derive(Serialize)]
struct Node {
    id: NodeId,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct Sampled {
    nodes: Vec<Node>,
    depots: Vec<NodeId>,
    scenarios: Vec<Vec<Stop>>,
}

/// Fits the demand model on 20 synthetic evenings and draws `n` scenarios
/// for the hour starting at `hour` on a held-out Monday.
#[wasm_bindgen]
pub fn sample_demand(hour: u32, n: u32, seed: u32) -> String {
    json((|| {
        if !(19..=25).contains(&hour) || n == 0 || n > 200 {
            return Err("hour must be 19..=25 and n 1..=200".to_string());
        }
        let w = Workload::evening_grid();
        let logs = generate_synthetic_history(&w.spec, 20, 1).map_err(|e| e.to_string())?;
        let params = SamplingParams::default();
        let model = DemandModel {
            forecaster: fit_forecaster(ForecasterKind::HistoricalMean, &logs, params, 8.0, seed as u64, None)
                .map_err(|e| e.to_string())?,
            histograms: ConditionalHistograms::build(&logs).map_err(|e| e.to_string())?,
            params,
        };
        let scenarios = model
            .scenarios("2024-07-01", 7, 0, hour as i64 * 3600, &[], seed as u64, n as usize)
            .map_err(|e| e.to_string())?;
        Ok(Sampled {
            nodes: w.graph.nodes().iter().map(|n| Node { id: n.id, x: n.x, y: n.y }).collect(),
            depots: w.config.depots.clone(),
            scenarios: scenarios.iter().map(|s| s.requests.iter().map(Stop::from).collect()).collect(),
        })
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_sizes() {
        let v: serde_json::Value = serde_json::from_str(&counterexample_run()).unwrap();
        assert_eq!(v["single_pass"], 2);
        assert_eq!(v["restart_and_optimize"], 3);
        assert_eq!(v["rejected_at_single_pass"], serde_json::json!([3]));
        assert_eq!(v["rejected_at_restart"], serde_json::json!([]));
    }

    #[test]
    fn sweep_ends_at_zero() {
        let v: serde_json::Value = serde_json::from_str(&fleet_sweep(2, 1, 4)).unwrap();
        let fleet = v["fleet"].as_u64().unwrap() as usize;
        for policy in ["greedy", "rollout"] {
            let counts = v["rejections"][policy].as_array().unwrap();
            assert_eq!(counts.len(), fleet);
            assert_eq!(counts[fleet - 1], 0);
        }
    }

    #[test]
    fn sampling_is_seeded_and_checked() {
        assert_eq!(sample_demand(21, 3, 5), sample_demand(21, 3, 5));
        let v: serde_json::Value = serde_json::from_str(&sample_demand(21, 3, 5)).unwrap();
        assert_eq!(v["scenarios"].as_array().unwrap().len(), 3);
        assert!(v["error"].is_null());
        assert!(sample_demand(3, 3, 5).contains("error"));
    }
}
