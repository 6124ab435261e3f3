use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::DemandError;
use crate::io::DayLog;
use crate::network::Seconds;

use super::histogram::hour_of;
use super::{mix_seed, CountForecast, DemandContext};

/// What a forecaster sees: the date, the counts observed in the hour that
/// just ended, and the context of the hour to predict.
#[derive(Debug, Clone, Copy)]
pub struct ForecastQuery<'a> {
    pub date: &'a str,
    pub observed: &'a [u32],
    pub next: &'a [DemandContext],
}

impl ForecastQuery<'_> {
    pub fn hour(&self) -> u8 {
        self.next.first().map_or(0, |c| c.hour)
    }
}

/// Predicts per-interval request counts for the next hour.
pub trait CountForecaster: Send + Sync {
    fn name(&self) -> &str;

    /// Intervals per hour.
    fn intervals(&self) -> usize;

    fn predict(&self, query: &ForecastQuery<'_>) -> Result<CountForecast, DemandError>;

    /// Checks the query shape, then predicts.
    fn forecast(&self, query: &ForecastQuery<'_>) -> Result<CountForecast, DemandError> {
        let n = self.intervals();
        if query.observed.len() != n {
            return Err(DemandError::ObservedLength { expected: n, got: query.observed.len() });
        }
        if query.next.len() != n {
            return Err(DemandError::ObservedLength { expected: n, got: query.next.len() });
        }
        self.predict(query)
    }
}

/// Interval index of `t` within its hour.
pub fn interval_of(t: Seconds, intervals: usize) -> usize {
    let len = 3600 / intervals as Seconds;
    ((t.rem_euclid(3600)) / len) as usize
}

/// Per-interval request counts of a day by entry time, keyed by hour.
pub fn interval_counts(day: &DayLog, intervals: usize) -> BTreeMap<u8, Vec<u32>> {
    let mut out: BTreeMap<u8, Vec<u32>> = BTreeMap::new();
    for r in &day.requests {
        let v = out.entry(hour_of(r.entry_time)).or_insert_with(|| vec![0; intervals]);
        v[interval_of(r.entry_time, intervals)] += 1;
    }
    out
}

/// Rounded mean count per (month, weekday, hour, interval), averaged over the
/// history days sharing the month and weekday. A (month, weekday) pair never
/// seen in training backs off to all days of that weekday, then to all days.
#[derive(Debug, Clone, Default)]
pub struct HistoricalMean {
    intervals: usize,
    /// Interval sums keyed by (month, weekday, hour); `None` stands for "any".
    sums: BTreeMap<(Option<u8>, Option<u8>, u8), Vec<u64>>,
    days: BTreeMap<(Option<u8>, Option<u8>), u64>,
}

impl HistoricalMean {
    pub fn fit(history: &[DayLog], intervals: usize) -> Result<Self, DemandError> {
        if history.is_empty() {
            return Err(DemandError::EmptyHistory);
        }
        let mut m = HistoricalMean { intervals, ..Default::default() };
        for day in history {
            let keys = [(Some(day.month), Some(day.weekday)), (None, Some(day.weekday)), (None, None)];
            for k in keys {
                *m.days.entry(k).or_default() += 1;
            }
            for (hour, counts) in interval_counts(day, intervals) {
                for (month, weekday) in keys {
                    let s = m.sums.entry((month, weekday, hour)).or_insert_with(|| vec![0; intervals]);
                    for (a, c) in s.iter_mut().zip(&counts) {
                        *a += *c as u64;
                    }
                }
            }
        }
        Ok(m)
    }
}

impl CountForecaster for HistoricalMean {
    fn name(&self) -> &str {
        "historical-mean"
    }

    fn intervals(&self) -> usize {
        self.intervals
    }

    fn predict(&self, q: &ForecastQuery<'_>) -> Result<CountForecast, DemandError> {
        if self.intervals == 0 {
            return Err(DemandError::NotTrained);
        }
        let counts = q
            .next
            .iter()
            .map(|c| {
                let level = [(Some(c.month), Some(c.weekday)), (None, Some(c.weekday)), (None, None)]
                    .into_iter()
                    .find(|k| self.days.get(k).is_some_and(|&d| d > 0))
                    .expect("fit saw at least one day");
                let days = self.days[&level];
                match self.sums.get(&(level.0, level.1, c.hour)) {
                    Some(s) => (s[c.interval] as f64 / days as f64).round() as u32,
                    None => 0,
                }
            })
            .collect();
        Ok(CountForecast(counts))
    }
}

/// Day total drawn from a normal fit of historical day totals, split evenly
/// over the operating hours, each request dropped into a uniformly random
/// interval. Draws are seeded by (seed, date, hour).
#[derive(Debug, Clone)]
pub struct Bootstrap {
    intervals: usize,
    hours: f64,
    normal: Option<Normal<f64>>,
    seed: u64,
}

impl Bootstrap {
    pub fn fit(history: &[DayLog], intervals: usize, operating_hours: f64, seed: u64) -> Result<Self, DemandError> {
        if history.is_empty() {
            return Err(DemandError::EmptyHistory);
        }
        let totals: Vec<f64> = history.iter().map(|d| d.requests.len() as f64).collect();
        let n = totals.len() as f64;
        let mean = totals.iter().sum::<f64>() / n;
        let var = if totals.len() > 1 { totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let normal = Normal::new(mean, var.sqrt()).map_err(|_| DemandError::NotTrained)?;
        Ok(Bootstrap { intervals, hours: operating_hours.max(1.0), normal: Some(normal), seed })
    }
}

impl CountForecaster for Bootstrap {
    fn name(&self) -> &str {
        "bootstrap"
    }

    fn intervals(&self) -> usize {
        self.intervals
    }

    fn predict(&self, q: &ForecastQuery<'_>) -> Result<CountForecast, DemandError> {
        let normal = self.normal.ok_or(DemandError::NotTrained)?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, &[q.date.as_bytes(), &[q.hour()]]));
        let total = normal.sample(&mut rng).max(0.0);
        let in_hour = (total / self.hours).round() as u32;
        let mut counts = vec![0u32; self.intervals];
        for _ in 0..in_hour {
            counts[rng.random_range(0..self.intervals)] += 1;
        }
        Ok(CountForecast(counts))
    }
}

/// Interval counts keyed by (date label, hour), then interval index.
pub type ForecastTable = BTreeMap<(String, u32), BTreeMap<usize, u32>>;

/// Counts read from a file of externally produced forecasts.
#[derive(Debug, Clone)]
pub struct Precomputed {
    intervals: usize,
    table: ForecastTable,
}

impl Precomputed {
    pub fn new(table: ForecastTable, intervals: usize) -> Self {
        Precomputed { intervals, table }
    }
}

impl CountForecaster for Precomputed {
    fn name(&self) -> &str {
        "file"
    }

    fn intervals(&self) -> usize {
        self.intervals
    }

    fn predict(&self, q: &ForecastQuery<'_>) -> Result<CountForecast, DemandError> {
        let hour = q.hour() as u32;
        let row = self
            .table
            .get(&(q.date.to_string(), hour))
            .ok_or_else(|| DemandError::MissingForecast { date: q.date.to_string(), hour })?;
        Ok(CountForecast((0..self.intervals).map(|k| row.get(&k).copied().unwrap_or(0)).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Request;

    fn ctx(hour: u8) -> Vec<DemandContext> {
        (0..12).map(|k| DemandContext::new(5, 1, hour, k)).collect()
    }

    fn constant_day(per_interval: u32) -> DayLog {
        let mut reqs = Vec::new();
        let mut id = 0;
        for k in 0..12 {
            for _ in 0..per_interval {
                id += 1;
                let t = 20 * 3600 + k * 300 + 10;
                reqs.push(Request::new(id, 1, 2, t, t + 60));
            }
        }
        DayLog { label: "2024-05-07".into(), weekday: 1, month: 5, requests: reqs }
    }

    #[test]
    fn mean_of_constant_history() {
        let f = HistoricalMean::fit(&[constant_day(2), constant_day(2)], 12).unwrap();
        let obs = vec![0; 12];
        let out = f.forecast(&ForecastQuery { date: "x", observed: &obs, next: &ctx(20) }).unwrap();
        assert_eq!(out.0, vec![2; 12]);
        let empty = f.forecast(&ForecastQuery { date: "x", observed: &obs, next: &ctx(3) }).unwrap();
        assert_eq!(empty.0, vec![0; 12]);
    }

    #[test]
    fn unseen_month_backs_off() {
        let mut tuesday_june = constant_day(4);
        tuesday_june.month = 6;
        let mut wednesday = constant_day(6);
        wednesday.weekday = 2;
        let f = HistoricalMean::fit(&[constant_day(2), tuesday_june, wednesday], 12).unwrap();
        let obs = vec![0; 12];
        let at = |month, weekday| {
            let next: Vec<_> = (0..12).map(|k| DemandContext::new(month, weekday, 20, k)).collect();
            f.forecast(&ForecastQuery { date: "x", observed: &obs, next: &next }).unwrap().0[0]
        };
        assert_eq!(at(5, 1), 2);
        assert_eq!(at(6, 1), 4);
        // July Tuesday: mean over both Tuesdays
        assert_eq!(at(7, 1), 3);
        // Friday never seen: mean over all three days
        assert_eq!(at(7, 4), 4);
    }

    #[test]
    fn wrong_observed_length() {
        let f = HistoricalMean::fit(&[constant_day(1)], 12).unwrap();
        let err = f.forecast(&ForecastQuery { date: "x", observed: &[1, 2], next: &ctx(20) }).unwrap_err();
        assert!(matches!(err, DemandError::ObservedLength { expected: 12, got: 2 }));
    }

    #[test]
    fn bootstrap_is_seeded() {
        let hist = [constant_day(1), constant_day(3)];
        let a = Bootstrap::fit(&hist, 12, 1.0, 7).unwrap();
        let b = Bootstrap::fit(&hist, 12, 1.0, 7).unwrap();
        let obs = vec![0; 12];
        let q = ForecastQuery { date: "2024-05-07", observed: &obs, next: &ctx(20) };
        assert_eq!(a.forecast(&q).unwrap(), b.forecast(&q).unwrap());
    }

    #[test]
    fn precomputed_lookup() {
        let table = crate::io::parse_forecasts("forecast 2024-05-07 20 3 4\n", "f").unwrap();
        let f = Precomputed::new(table, 12);
        let obs = vec![0; 12];
        let out = f.forecast(&ForecastQuery { date: "2024-05-07", observed: &obs, next: &ctx(20) }).unwrap();
        assert_eq!(out.0[3], 4);
        assert_eq!(out.0.iter().sum::<u32>(), 4);
        assert!(f.forecast(&ForecastQuery { date: "2024-05-08", observed: &obs, next: &ctx(20) }).is_err());
    }
}
