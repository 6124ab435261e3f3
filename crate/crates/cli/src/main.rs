mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_forecaster, set, Settings};
use crate::error::CliError;

/// Routing, rollout and fleet sizing for an on-demand multi-seat robot fleet.
///
/// Exit codes: 0 success, 1 input error or failed run, 2 infeasible (for
/// example no fleet up to the maximum size serves a day).
#[derive(Parser, Debug)]
#[command(name = "fleetroll", version)]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one day under a policy and write its metrics as CSV.
    Simulate(SimulateArgs),
    /// Size the fleet from a history of days.
    FleetSize(FleetSizeArgs),
    /// Draw demand scenarios for one hour.
    SampleDemand(SampleDemandArgs),
    /// Write a synthetic request history.
    GenHistory(GenHistoryArgs),
    /// Sweep fleet sizes and policies over test days.
    Experiment(ExperimentArgs),
    /// Check a graph, config, request logs and histories.
    Validate(ValidateArgs),
}

/// Settings shared by every subcommand.
#[derive(Args, Debug, Clone)]
struct Common {
    /// Config file (TOML sections `problem`, `rollout`, `demand`, `sizing`,
    /// `experiment`, `history`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long)]
    seed: Option<u64>,
}

/// Day configuration overrides.
#[derive(Args, Debug, Clone, Default)]
struct ProblemArgs {
    /// Start of operations, seconds since midnight.
    #[arg(long)]
    t_start: Option<i64>,
    /// End of operations; robots are back at their depot by then.
    #[arg(long)]
    t_end: Option<i64>,
    /// Latest admissible desired pickup time.
    #[arg(long)]
    t_last: Option<i64>,
    /// Pickup wait limit in seconds.
    #[arg(long)]
    w_pick: Option<i64>,
    /// Drop-off delay limit in seconds.
    #[arg(long)]
    w_drop: Option<i64>,
    /// Seats per robot.
    #[arg(long)]
    capacity: Option<u32>,
    /// Depot nodes, comma separated; robots are assigned round-robin.
    #[arg(long, value_delimiter = ',')]
    depots: Option<Vec<u32>>,
}

/// Rollout overrides.
#[derive(Args, Debug, Clone, Default)]
struct RolloutArgs {
    /// Lookahead horizon in seconds.
    #[arg(long)]
    horizon: Option<i64>,
    /// Scenarios per decision.
    #[arg(long)]
    n_scenarios: Option<usize>,
    /// Candidate controls per decision.
    #[arg(long)]
    n_routes: Option<usize>,
    /// Smallest cluster considered for reassignment.
    #[arg(long)]
    min_cluster_size: Option<usize>,
    /// Weight of desired pickup time in clustering.
    #[arg(long)]
    time_weight: Option<f64>,
}

/// Demand model overrides.
#[derive(Args, Debug, Clone, Default)]
struct DemandArgs {
    /// Intervals per hour in the count forecast.
    #[arg(long)]
    intervals: Option<usize>,
    /// Seconds between a sampled request's entry and its desired pickup.
    #[arg(long)]
    lead: Option<i64>,
    /// Count model for `rollout`: mean, bootstrap or file.
    #[arg(long)]
    forecaster: Option<String>,
    /// Precomputed forecasts (`forecast <date> <hour> <k> <count>` lines).
    #[arg(long)]
    forecasts: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Street graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Request log of the day.
    #[arg(long)]
    day: PathBuf,
    /// greedy, rollout, rollout-bootstrap, rollout-file or rollout-oracle.
    #[arg(long, default_value = "greedy")]
    policy: String,
    /// Number of robots.
    #[arg(long)]
    fleet: Option<usize>,
    /// Training days for the demand model of sampled rollout.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Metrics CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-request outcome CSV.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Check every state invariant after each step.
    #[arg(long)]
    check_invariants: bool,
    /// Measure planning time (makes `mean_plan_time` vary between runs).
    #[arg(long)]
    time_decisions: bool,
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    rollout: RolloutArgs,
    #[command(flatten)]
    demand: DemandArgs,
}

#[derive(Args, Debug)]
struct FleetSizeArgs {
    #[command(flatten)]
    common: Common,
    /// Street graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Directory of day files.
    #[arg(long)]
    history: PathBuf,
    /// `single` (grow on first failure) or `restart` (replay each day at
    /// growing sizes).
    #[arg(long, default_value = "restart")]
    algo: String,
    /// Largest fleet tried by `restart`.
    #[arg(long)]
    mmax: Option<usize>,
    /// Report file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
}

#[derive(Args, Debug)]
struct SampleDemandArgs {
    #[command(flatten)]
    common: Common,
    /// Directory of training day files.
    #[arg(long)]
    history: PathBuf,
    /// Date the scenarios are for, `YYYY-MM-DD`.
    #[arg(long)]
    date: String,
    /// Clock hour the scenarios cover (24 and up run past midnight).
    #[arg(long)]
    hour: u32,
    /// Number of scenarios.
    #[arg(long)]
    n: Option<usize>,
    /// Requests seen so far that day; those of the previous hour drive the
    /// forecast.
    #[arg(long)]
    observed: Option<PathBuf>,
    /// Scenario file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    demand: DemandArgs,
}

#[derive(Args, Debug)]
struct GenHistoryArgs {
    #[command(flatten)]
    common: Common,
    /// Number of days.
    #[arg(long)]
    days: usize,
    /// Directory for the day files.
    #[arg(long)]
    out: PathBuf,
    /// First day, overriding the distribution's start date.
    #[arg(long)]
    start: Option<String>,
    /// Graph to check node ids against; with the built-in workload, this is
    /// where its grid is written instead.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Write the built-in workload's day configuration here.
    #[arg(long)]
    config_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    /// Street graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Directory of training day files.
    #[arg(long)]
    train: PathBuf,
    /// Directory of test day files.
    #[arg(long)]
    test: PathBuf,
    /// Fleet sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    fleets: Option<Vec<usize>>,
    /// Policies, comma separated.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    /// Directory for `days.csv` and `summary.txt`.
    #[arg(long)]
    out_dir: PathBuf,
    /// Check every state invariant after each step.
    #[arg(long)]
    check_invariants: bool,
    /// Measure planning time (makes `mean_plan_time` vary between runs).
    #[arg(long)]
    time_decisions: bool,
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    rollout: RolloutArgs,
    #[command(flatten)]
    demand: DemandArgs,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Street graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Request logs to check, repeatable.
    #[arg(long)]
    requests: Vec<PathBuf>,
    /// History directories to check, repeatable.
    #[arg(long)]
    history: Vec<PathBuf>,
    /// Forecast file to check.
    #[arg(long)]
    forecasts: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
}

impl ProblemArgs {
    fn apply(&self, s: &mut Settings) {
        let p = &mut s.problem;
        set(&mut p.t_start, self.t_start);
        set(&mut p.t_end, self.t_end);
        set(&mut p.t_last, self.t_last);
        set(&mut p.w_pick, self.w_pick);
        set(&mut p.w_drop, self.w_drop);
        set(&mut p.capacity, self.capacity);
        set(&mut p.depots, self.depots.clone());
    }
}

impl RolloutArgs {
    fn apply(&self, s: &mut Settings) {
        let r = &mut s.rollout;
        set(&mut r.horizon, self.horizon);
        set(&mut r.n_scenarios, self.n_scenarios);
        set(&mut r.n_routes, self.n_routes);
        set(&mut r.min_cluster_size, self.min_cluster_size);
        set(&mut r.time_weight, self.time_weight);
    }
}

impl DemandArgs {
    fn apply(&self, s: &mut Settings) -> Result<(), CliError> {
        set(&mut s.sampling.intervals, self.intervals);
        set(&mut s.sampling.lead, self.lead);
        if let Some(f) = &self.forecaster {
            s.forecaster = parse_forecaster(f)?;
        }
        Ok(())
    }
}

impl Common {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = Settings::load(self.config.as_deref())?;
        s.set_seed(self.seed);
        Ok(s)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Input("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Failed(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate(a) => {
            let mut s = a.common.settings()?;
            a.problem.apply(&mut s);
            a.rollout.apply(&mut s);
            a.demand.apply(&mut s)?;
            set(&mut s.problem.fleet_size, a.fleet);
            s.check()?;
            commands::simulate(
                &s,
                &commands::SimulateJob {
                    graph: &a.graph,
                    day: &a.day,
                    policy: &a.policy,
                    history: a.history.as_deref(),
                    forecasts: a.demand.forecasts.as_deref(),
                    out: a.out.as_deref(),
                    records: a.records.as_deref(),
                    check_invariants: a.check_invariants,
                    time_decisions: a.time_decisions,
                },
            )
        }
        Command::FleetSize(a) => {
            let mut s = a.common.settings()?;
            a.problem.apply(&mut s);
            set(&mut s.m_max, a.mmax);
            s.check()?;
            commands::fleet_size(&s, &a.graph, &a.history, &a.algo, a.out.as_deref())
        }
        Command::SampleDemand(a) => {
            let mut s = a.common.settings()?;
            a.problem.apply(&mut s);
            a.demand.apply(&mut s)?;
            set(&mut s.rollout.n_scenarios, a.n);
            s.check()?;
            commands::sample_demand(
                &s,
                &commands::SampleJob {
                    history: &a.history,
                    date: &a.date,
                    hour: a.hour,
                    observed: a.observed.as_deref(),
                    forecasts: a.demand.forecasts.as_deref(),
                    out: a.out.as_deref(),
                },
            )
        }
        Command::GenHistory(a) => {
            let s = a.common.settings()?;
            commands::gen_history(
                &s,
                &commands::GenJob {
                    days: a.days,
                    out: &a.out,
                    start: a.start.as_deref(),
                    graph: a.graph.as_deref(),
                    config_out: a.config_out.as_deref(),
                },
            )
        }
        Command::Experiment(a) => {
            let mut s = a.common.settings()?;
            a.problem.apply(&mut s);
            a.rollout.apply(&mut s);
            a.demand.apply(&mut s)?;
            set(&mut s.fleets, a.fleets);
            if let Some(p) = &a.policies {
                s.policies = p.iter().map(|x| config::parse_policy(x)).collect::<Result<_, _>>()?;
            }
            s.check()?;
            commands::experiment(
                &s,
                &commands::ExperimentJob {
                    graph: &a.graph,
                    train: &a.train,
                    test: &a.test,
                    forecasts: a.demand.forecasts.as_deref(),
                    out_dir: &a.out_dir,
                    check_invariants: a.check_invariants,
                    time_decisions: a.time_decisions,
                },
            )
        }
        Command::Validate(a) => {
            let mut s = a.common.settings()?;
            a.problem.apply(&mut s);
            s.check()?;
            commands::validate(&s, &a.graph, &a.requests, &a.history, a.forecasts.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fleetroll: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
