//! Config file (TOML: `key = value` lines grouped under `[section]` headers)
//! and the settings it resolves to. Flags win over the file, the file wins
//! over built-in defaults.

use std::path::Path;

use fleetroll::demand::SamplingParams;
use fleetroll::rollout::RolloutConfig;
use fleetroll::sim::{ForecasterKind, HistorySpec, PolicyKind};
use fleetroll::ProblemConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub problem: ProblemSection,
    pub rollout: RolloutSection,
    pub demand: DemandSection,
    pub sizing: SizingSection,
    pub experiment: ExperimentSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub history: Option<HistorySpec>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_start: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_last: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_pick: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_drop: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depots: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fleet: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_scenarios: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_routes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_cluster_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_weight: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lead: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forecaster: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizingSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fleets: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<String>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// A file holding `problem` in full.
    pub fn from_problem(problem: &ProblemConfig) -> Self {
        FileConfig {
            problem: ProblemSection {
                t_start: Some(problem.t_start),
                t_end: Some(problem.t_end),
                t_last: Some(problem.t_last),
                w_pick: Some(problem.w_pick),
                w_drop: Some(problem.w_drop),
                capacity: Some(problem.capacity),
                depots: Some(problem.depots.clone()),
                fleet: Some(problem.fleet_size),
            },
            ..Default::default()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Every tunable after merging defaults, file and flags.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub problem: ProblemConfig,
    pub rollout: RolloutConfig,
    pub sampling: SamplingParams,
    pub forecaster: ForecasterKind,
    pub m_max: usize,
    pub fleets: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    pub history: Option<HistorySpec>,
}

pub fn parse_forecaster(s: &str) -> Result<ForecasterKind, CliError> {
    match s {
        "mean" => Ok(ForecasterKind::HistoricalMean),
        "bootstrap" => Ok(ForecasterKind::Bootstrap),
        "file" => Ok(ForecasterKind::File),
        _ => Err(CliError::Input(format!("unknown forecaster `{s}` (mean, bootstrap, file)"))),
    }
}

pub fn parse_policy(s: &str) -> Result<PolicyKind, CliError> {
    PolicyKind::parse(s).ok_or_else(|| {
        CliError::Input(format!("unknown policy `{s}` (greedy, rollout, rollout-bootstrap, rollout-file, rollout-oracle)"))
    })
}

impl Settings {
    /// Defaults, overlaid with the file at `path` when given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Settings::from_file(file)
    }

    pub fn from_file(file: FileConfig) -> Result<Self, CliError> {
        let mut problem = ProblemConfig::default();
        let p = file.problem;
        set(&mut problem.t_start, p.t_start);
        set(&mut problem.t_end, p.t_end);
        set(&mut problem.t_last, p.t_last);
        set(&mut problem.w_pick, p.w_pick);
        set(&mut problem.w_drop, p.w_drop);
        set(&mut problem.capacity, p.capacity);
        set(&mut problem.depots, p.depots);
        set(&mut problem.fleet_size, p.fleet);

        let mut rollout = RolloutConfig::default();
        let r = file.rollout;
        set(&mut rollout.horizon, r.horizon);
        set(&mut rollout.n_scenarios, r.n_scenarios);
        set(&mut rollout.n_routes, r.n_routes);
        set(&mut rollout.min_cluster_size, r.min_cluster_size);
        set(&mut rollout.time_weight, r.time_weight);

        let mut sampling = SamplingParams::default();
        set(&mut sampling.intervals, file.demand.intervals);
        set(&mut sampling.lead, file.demand.lead);
        let forecaster = match &file.demand.forecaster {
            Some(f) => parse_forecaster(f)?,
            None => ForecasterKind::HistoricalMean,
        };
        let policies = match &file.experiment.policies {
            Some(list) => list.iter().map(|s| parse_policy(s)).collect::<Result<_, _>>()?,
            None => vec![PolicyKind::Greedy, PolicyKind::Rollout(ForecasterKind::HistoricalMean)],
        };
        let seed = file.seed.unwrap_or(0);
        rollout.seed = seed;
        Ok(Settings {
            seed,
            problem,
            rollout,
            sampling,
            forecaster,
            m_max: file.sizing.m_max.unwrap_or(100),
            fleets: file.experiment.fleets.unwrap_or_else(|| vec![2, 3]),
            policies,
            history: file.history,
        })
    }

    pub fn set_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed {
            self.seed = s;
            self.rollout.seed = s;
        }
    }

    /// Checks that do not need the graph.
    pub fn check(&self) -> Result<(), CliError> {
        self.rollout.validate().map_err(|e| CliError::Input(e.to_string()))?;
        let n = self.sampling.intervals;
        if n == 0 || 3600 % n != 0 {
            return Err(CliError::Input(format!("intervals must divide 3600, got {n}")));
        }
        if self.sampling.lead < 1 {
            return Err(CliError::Input("lead must be at least 1 second".into()));
        }
        if self.m_max == 0 {
            return Err(CliError::Input("m_max must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
