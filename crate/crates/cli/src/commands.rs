use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use fleetroll::demand::{ConditionalHistograms, DemandModel, ForecastTable};
use fleetroll::fleetsize::{restart_and_optimize, single_pass};
use fleetroll::io::{check_requests, load_day, load_history, parse_forecasts, write_requests, DayLog};
use fleetroll::sim::{
    fit_forecaster, generate_synthetic_history, run_experiment, ExperimentConfig, ExperimentReport, ForecasterKind,
    PolicyKind, RequestOutcome, SamplingParamsConfig, TrainedModels, Workload, CSV_HEADER,
};
use fleetroll::{Instance, StreetGraph, TravelTimeOracle};

use crate::config::{parse_policy, FileConfig, Settings};
use crate::error::CliError;


fn load_graph(path: &Path) -> Result<StreetGraph, CliError> {
    StreetGraph::load(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn build_instance(s: &Settings, graph: StreetGraph) -> Result<Arc<Instance>, CliError> {
    let oracle = TravelTimeOracle::new(graph);
    s.problem.validate(&oracle)?;
    Ok(Instance::new(oracle, s.problem.clone()))
}

fn load_checked_history(dir: &Path, inst: &Instance) -> Result<Vec<DayLog>, CliError> {
    let days = load_history(dir)?;
    if days.is_empty() {
        return Err(CliError::Input(format!("{}: no day files (*.txt)", dir.display())));
    }
    for d in &days {
        check_requests(&d.requests, inst.oracle.graph(), &inst.config)
            .map_err(|e| CliError::Input(format!("{} day {}: {e}", dir.display(), d.label)))?;
    }
    Ok(days)
}

fn load_forecasts(path: Option<&Path>) -> Result<Option<ForecastTable>, CliError> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(Some(parse_forecasts(&text, &path.display().to_string())?))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Failed(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))
}

/// Writes `text` to `out`, or to standard output.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Demand models for the sampled-rollout policies in `policies`.
fn train(
    inst: &Instance,
    s: &Settings,
    policies: &[PolicyKind],
    history: Option<&[DayLog]>,
    forecasts: Option<&ForecastTable>,
) -> Result<TrainedModels, CliError> {
    let mut kinds: Vec<ForecasterKind> =
        policies.iter().filter_map(|p| if let PolicyKind::Rollout(k) = p { Some(*k) } else { None }).collect();
    kinds.sort();
    kinds.dedup();
    if kinds.contains(&ForecasterKind::File) && forecasts.is_none() {
        return Err(CliError::Input("the file forecaster needs --forecasts".into()));
    }
    let days = match history {
        Some(d) => d,
        None if kinds.is_empty() => &[],
        None => return Err(CliError::Input("sampled rollout needs training days (--history / --train)".into())),
    };
    Ok(TrainedModels::fit(inst, days, &kinds, s.sampling, s.seed, forecasts)?)
}

fn experiment_config(s: &Settings, fleets: Vec<usize>, policies: Vec<PolicyKind>, check: bool, timed: bool) -> ExperimentConfig {
    ExperimentConfig {
        fleets,
        policies,
        rollout: s.rollout,
        sampling: SamplingParamsConfig { intervals: s.sampling.intervals, lead: s.sampling.lead },
        check_invariants: check,
        time_decisions: timed,
    }
}

pub struct SimulateJob<'a> {
    pub graph: &'a Path,
    pub day: &'a Path,
    pub policy: &'a str,
    pub history: Option<&'a Path>,
    pub forecasts: Option<&'a Path>,
    pub out: Option<&'a Path>,
    pub records: Option<&'a Path>,
    pub check_invariants: bool,
    pub time_decisions: bool,
}

pub fn simulate(s: &Settings, job: &SimulateJob<'_>) -> Result<(), CliError> {
    let inst = build_instance(s, load_graph(job.graph)?)?;
    let mut policy = parse_policy(job.policy)?;
    if policy == PolicyKind::Rollout(ForecasterKind::HistoricalMean) {
        policy = PolicyKind::Rollout(s.forecaster);
    }
    let day = load_day(job.day)?;
    check_requests(&day.requests, inst.oracle.graph(), &inst.config)?;
    let history = job.history.map(|h| load_checked_history(h, &inst)).transpose()?;
    let forecasts = load_forecasts(job.forecasts)?;
    let models = train(&inst, s, &[policy], history.as_deref(), forecasts.as_ref())?;
    let cfg = experiment_config(s, vec![s.problem.fleet_size], vec![policy], job.check_invariants, job.time_decisions);
    let report = run_experiment(&inst, &models, std::slice::from_ref(&day), &cfg);
    let metrics = match &report.rows[0].result {
        Ok(m) => m,
        Err(e) => return Err(CliError::Failed(e.clone())),
    };
    emit(job.out, &format!("{CSV_HEADER}\n{}\n", metrics.csv_row()))?;
    if let Some(path) = job.records {
        let mut text = String::from("id,outcome,robot,wait_pick,wait_drop,trip\n");
        for r in &metrics.records {
            let _ = match r.outcome {
                RequestOutcome::Served { robot, wait_pick, wait_drop, trip } => {
                    writeln!(text, "{},served,{},{wait_pick},{wait_drop},{trip}", r.id.0, robot.0)
                }
                RequestOutcome::Rejected => writeln!(text, "{},rejected,,,,", r.id.0),
            };
        }
        write_file(path, &text)?;
    }
    Ok(())
}

pub fn fleet_size(s: &Settings, graph: &Path, history: &Path, algo: &str, out: Option<&Path>) -> Result<(), CliError> {
    let inst = build_instance(s, load_graph(graph)?)?;
    let days = load_checked_history(history, &inst)?;
    let report = match algo {
        "single" | "single-pass" => single_pass(&inst, &days)?,
        "restart" | "restart-and-optimize" => restart_and_optimize(&inst, &days, s.m_max)?,
        _ => return Err(CliError::Input(format!("unknown algorithm `{algo}` (single, restart)"))),
    };
    emit(out, &report.to_text())
}

pub struct SampleJob<'a> {
    pub history: &'a Path,
    pub date: &'a str,
    pub hour: u32,
    pub observed: Option<&'a Path>,
    pub forecasts: Option<&'a Path>,
    pub out: Option<&'a Path>,
}

pub fn sample_demand(s: &Settings, job: &SampleJob<'_>) -> Result<(), CliError> {
    let date = NaiveDate::parse_from_str(job.date, "%Y-%m-%d")
        .map_err(|_| CliError::Input(format!("bad date `{}`, expected YYYY-MM-DD", job.date)))?;
    if job.hour >= 48 {
        return Err(CliError::Input(format!("hour {} is out of range", job.hour)));
    }
    let days = load_history(job.history)?;
    let forecasts = load_forecasts(job.forecasts)?;
    let hours = ((s.problem.t_last - s.problem.t_start) as f64 / 3600.0).ceil().max(1.0);
    let model = DemandModel {
        forecaster: fit_forecaster(s.forecaster, &days, s.sampling, hours, s.seed, forecasts.as_ref())?,
        histograms: ConditionalHistograms::build(&days)?,
        params: s.sampling,
    };
    let seen = match job.observed {
        Some(p) => load_day(p)?.requests,
        None => Vec::new(),
    };
    let (month, weekday) = (date.month() as u8, date.weekday().num_days_from_monday() as u8);
    let n = s.rollout.n_scenarios;
    let scenarios = model.scenarios(job.date, month, weekday, job.hour as i64 * 3600, &seen, s.seed, n)?;
    let mut text = format!("# date {} hour {} scenarios {n}\n", job.date, job.hour);
    for (i, sc) in scenarios.iter().enumerate() {
        let _ = writeln!(text, "scenario {i} {}", sc.requests.len());
        text.push_str(&write_requests(&sc.requests));
    }
    emit(job.out, &text)
}

pub struct GenJob<'a> {
    pub days: usize,
    pub out: &'a Path,
    pub start: Option<&'a str>,
    pub graph: Option<&'a Path>,
    pub config_out: Option<&'a Path>,
}

/// Uses the config's `history` section when present, the built-in evening
/// grid workload otherwise.
pub fn gen_history(s: &Settings, job: &GenJob<'_>) -> Result<(), CliError> {
    let (mut spec, workload) = match &s.history {
        Some(spec) => (spec.clone(), None),
        None => {
            let w = Workload::evening_grid();
            (w.spec.clone(), Some(w))
        }
    };
    if let Some(start) = job.start {
        spec.start_date = start.to_string();
    }
    let days = generate_synthetic_history(&spec, job.days, s.seed)?;
    match &workload {
        Some(w) => {
            if let Some(g) = job.graph {
                write_file(g, &w.graph.to_string())?;
            }
        }
        None => {
            if let Some(g) = job.graph {
                let graph = load_graph(g)?;
                for (n, _) in spec.pickup_weights.iter().chain(&spec.dropoff_weights) {
                    if !graph.contains(*n) {
                        return Err(CliError::Input(format!("history node {n} is not in {}", g.display())));
                    }
                }
            }
        }
    }
    if let Some(c) = job.config_out {
        let problem = workload.as_ref().map_or(&s.problem, |w| &w.config);
        write_file(c, &FileConfig::from_problem(problem).to_toml())?;
    }
    std::fs::create_dir_all(job.out).map_err(|e| CliError::Failed(format!("cannot create {}: {e}", job.out.display())))?;
    for d in &days {
        write_file(&job.out.join(format!("{}.txt", d.label)), &d.to_text())?;
    }
    Ok(())
}

pub struct ExperimentJob<'a> {
    pub graph: &'a Path,
    pub train: &'a Path,
    pub test: &'a Path,
    pub forecasts: Option<&'a Path>,
    pub out_dir: &'a Path,
    pub check_invariants: bool,
    pub time_decisions: bool,
}

pub fn experiment(s: &Settings, job: &ExperimentJob<'_>) -> Result<(), CliError> {
    if s.fleets.is_empty() || s.policies.is_empty() {
        return Err(CliError::Input("need at least one fleet size and one policy".into()));
    }
    let inst = build_instance(s, load_graph(job.graph)?)?;
    let train_days = load_checked_history(job.train, &inst)?;
    let test_days = load_checked_history(job.test, &inst)?;
    let forecasts = load_forecasts(job.forecasts)?;
    let models = train(&inst, s, &s.policies, Some(&train_days), forecasts.as_ref())?;
    let cfg = experiment_config(s, s.fleets.clone(), s.policies.clone(), job.check_invariants, job.time_decisions);
    let report: ExperimentReport = run_experiment(&inst, &models, &test_days, &cfg);
    write_file(&job.out_dir.join("days.csv"), &report.to_csv())?;
    let summary = report.summary();
    write_file(&job.out_dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    let failed = report.rows.iter().filter(|r| r.result.is_err()).count();
    if failed > 0 {
        eprintln!("fleetroll: {failed} of {} runs failed; see days.csv", report.rows.len());
    }
    Ok(())
}

pub fn validate(s: &Settings, graph: &Path, requests: &[std::path::PathBuf], history: &[std::path::PathBuf], forecasts: Option<&Path>) -> Result<(), CliError> {
    let g = load_graph(graph)?;
    let (n, m) = (g.node_count(), g.edges().len());
    let inst = build_instance(s, g)?;
    println!("graph {}: {n} nodes, {m} edges, diameter {} s", graph.display(), inst.oracle.diameter());
    println!("config: ok");
    if !inst.config.satisfies_buffer_assumption(&inst.oracle) {
        println!("note: t_end - t_last is below three graph diameters");
    }
    if !inst.config.satisfies_depot_coverage(&inst.oracle) {
        println!("note: some nodes are farther than w_pick from every depot");
    }
    for p in requests {
        let day = load_day(p)?;
        check_requests(&day.requests, inst.oracle.graph(), &inst.config)
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        println!("requests {}: {} requests ok", p.display(), day.requests.len());
    }
    for h in history {
        let days = load_checked_history(h, &inst)?;
        let total: usize = days.iter().map(|d| d.requests.len()).sum();
        println!("history {}: {} days, {total} requests ok", h.display(), days.len());
    }
    if let Some(f) = load_forecasts(forecasts)? {
        println!("forecasts: {} hours ok", f.len());
    }
    Ok(())
}
