//! Synthetic request histories: node-weighted pickup and drop-off draws and
//! a Poisson arrival count per hour, every day drawn independently from the
//! same distribution.

use chrono::{Days, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::demand::mix_seed;
use crate::error::InputError;
use crate::io::DayLog;
use crate::model::{ProblemConfig, Request};
use crate::network::{NodeId, Seconds, StreetGraph};

/// Distribution parameters of a synthetic history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistorySpec {
    /// First day, `YYYY-MM-DD`.
    pub start_date: String,
    /// Relative pickup weight per node.
    pub pickup_weights: Vec<(NodeId, f64)>,
    /// Relative drop-off weight per node; a draw equal to the pickup is redrawn.
    pub dropoff_weights: Vec<(NodeId, f64)>,
    /// Expected arrivals per hour, keyed by hours since midnight (24 and up
    /// run past midnight).
    pub hourly_rates: Vec<(u32, f64)>,
    /// Desired pickup minus entry time, drawn uniformly from this range.
    pub lead: (Seconds, Seconds),
    /// Requests wanting a pickup later than this are dropped.
    pub latest_pickup: Option<Seconds>,
}

impl HistorySpec {
    pub fn validate(&self) -> Result<NaiveDate, InputError> {
        let fail = |m: String| Err(InputError::Config(m));
        let date = NaiveDate::parse_from_str(&self.start_date, "%Y-%m-%d")
            .map_err(|_| InputError::Config(format!("bad start date `{}`", self.start_date)))?;
        for (what, w) in [("pickup", &self.pickup_weights), ("drop-off", &self.dropoff_weights)] {
            if w.iter().any(|&(_, x)| !(x.is_finite() && x >= 0.0)) {
                return fail(format!("{what} weights must be non-negative numbers"));
            }
        }
        if !self.pickup_weights.iter().any(|&(_, x)| x > 0.0) {
            return fail("pickup weights have no mass".into());
        }
        if self.dropoff_weights.iter().filter(|&&(_, x)| x > 0.0).count() < 2 {
            return fail("drop-off weights need mass on at least two nodes".into());
        }
        if self.hourly_rates.iter().any(|&(h, r)| h >= 48 || !(r.is_finite() && r >= 0.0)) {
            return fail("hourly rates need hours below 48 and non-negative rates".into());
        }
        if self.lead.0 < 1 || self.lead.1 < self.lead.0 {
            return fail("lead range must satisfy 1 <= min <= max".into());
        }
        Ok(date)
    }

    /// Normalized pickup distribution, ascending by node.
    pub fn pickup_distribution(&self) -> Vec<(NodeId, f64)> {
        normalize(&self.pickup_weights)
    }

    /// Normalized hourly profile of expected arrivals.
    pub fn hourly_distribution(&self) -> Vec<(u32, f64)> {
        let total: f64 = self.hourly_rates.iter().map(|r| r.1).sum();
        let mut out: Vec<(u32, f64)> = self.hourly_rates.iter().map(|&(h, r)| (h, r / total)).collect();
        out.sort_by_key(|x| x.0);
        out
    }
}

fn normalize(w: &[(NodeId, f64)]) -> Vec<(NodeId, f64)> {
    let mut acc = std::collections::BTreeMap::new();
    for &(n, x) in w {
        *acc.entry(n).or_insert(0.0) += x;
    }
    let total: f64 = acc.values().sum();
    acc.into_iter().map(|(n, x)| (n, x / total)).collect()
}

/// `n_days` consecutive days from `spec.start_date`. Each day has its own
/// random stream derived from `seed` and the date. Ids restart at 1 per day.
pub fn generate_synthetic_history(spec: &HistorySpec, n_days: usize, seed: u64) -> Result<Vec<DayLog>, InputError> {
    let start = spec.validate()?;
    let (pick_nodes, pick_w): (Vec<NodeId>, Vec<f64>) = spec.pickup_weights.iter().copied().unzip();
    let (drop_nodes, drop_w): (Vec<NodeId>, Vec<f64>) = spec.dropoff_weights.iter().copied().unzip();
    let pick = WeightedIndex::new(&pick_w).map_err(|e| InputError::Config(e.to_string()))?;
    let drop = WeightedIndex::new(&drop_w).map_err(|e| InputError::Config(e.to_string()))?;
    let mut days = Vec::with_capacity(n_days);
    for d in 0..n_days {
        let date = start
            .checked_add_days(Days::new(d as u64))
            .ok_or_else(|| InputError::Config("date out of range".into()))?;
        let label = date.format("%Y-%m-%d").to_string();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[label.as_bytes()]));
        let mut reqs: Vec<Request> = Vec::new();
        for &(hour, rate) in &spec.hourly_rates {
            let count = if rate > 0.0 {
                Poisson::new(rate).map_err(|e| InputError::Config(e.to_string()))?.sample(&mut rng) as u64
            } else {
                0
            };
            let base = hour as Seconds * 3600;
            for _ in 0..count {
                let entry = base + rng.random_range(0..3600);
                let desired = entry + rng.random_range(spec.lead.0..=spec.lead.1);
                let p = pick_nodes[pick.sample(&mut rng)];
                let q = loop {
                    let q = drop_nodes[drop.sample(&mut rng)];
                    if q != p {
                        break q;
                    }
                };
                if spec.latest_pickup.is_some_and(|l| desired > l) {
                    continue;
                }
                reqs.push(Request::new(0, p, q, entry, desired));
            }
        }
        reqs.sort_by_key(|r| (r.entry_time, r.desired_pickup, r.pickup, r.dropoff));
        for (i, r) in reqs.iter_mut().enumerate() {
            r.id.0 = i as u64 + 1;
        }
        days.push(DayLog::new(date, reqs));
    }
    Ok(days)
}

/// A complete synthetic setting: street grid, day configuration and demand.
#[derive(Debug, Clone)]
pub struct Workload {
    pub graph: StreetGraph,
    pub config: ProblemConfig,
    pub spec: HistorySpec,
}

impl Workload {
    /// An evening shuttle on a 7 x 7 grid with 60 s blocks and a central
    /// depot. Demand is heavier at two hubs and rises towards 10pm.
    pub fn evening_grid() -> Self {
        let (cols, rows) = (7u32, 7u32);
        let graph = StreetGraph::grid(cols, rows, 60, 0.0, 0.0);
        let node = |c: u32, r: u32| r * cols + c + 1;
        let depot = node(3, 3);
        let hubs = [node(1, 1), node(5, 5)];
        let mut pickup = Vec::new();
        let mut dropoff = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let n = node(c, r);
                let hub = hubs.contains(&n);
                pickup.push((n, if hub { 6.0 } else { 1.0 }));
                dropoff.push((n, if hub { 3.0 } else { 1.0 }));
            }
        }
        let config = ProblemConfig {
            t_start: 19 * 3600,
            t_end: 24 * 3600,
            t_last: 23 * 3600,
            w_pick: 600,
            w_drop: 600,
            capacity: 4,
            depots: vec![depot],
            fleet_size: 3,
        };
        let spec = HistorySpec {
            start_date: "2024-05-06".into(),
            pickup_weights: pickup,
            dropoff_weights: dropoff,
            hourly_rates: vec![(19, 10.0), (20, 14.0), (21, 18.0), (22, 14.0)],
            lead: (120, 600),
            latest_pickup: Some(config.t_last),
        };
        Workload { graph, config, spec }
    }
}
