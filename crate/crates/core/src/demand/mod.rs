//! Generative model of future requests: interval counts from a pluggable
//! forecaster, locations from empirical conditional histograms.

mod forecast;
mod histogram;

pub use forecast::{interval_counts, interval_of, Bootstrap, CountForecaster, ForecastQuery, ForecastTable, HistoricalMean, Precomputed};
pub use histogram::{hour_of, ConditionalHistograms, NodeCounts};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::DemandError;
use crate::model::Request;
use crate::network::Seconds;

/// Calendar context of one forecast interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandContext {
    /// 1 to 12.
    pub month: u8,
    /// 0 = Monday.
    pub weekday: u8,
    pub hour: u8,
    pub interval: usize,
    pub temperature: Option<f64>,
    pub precipitation: Option<f64>,
}

impl DemandContext {
    pub fn new(month: u8, weekday: u8, hour: u8, interval: usize) -> Self {
        DemandContext { month, weekday, hour, interval, temperature: None, precipitation: None }
    }

    /// Contexts of all `intervals` slots of one hour.
    pub fn hour(month: u8, weekday: u8, hour: u8, intervals: usize) -> Vec<Self> {
        (0..intervals).map(|k| Self::new(month, weekday, hour, k)).collect()
    }
}

/// Predicted request count per interval of the next hour.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountForecast(pub Vec<u32>);

/// One sampled sequence of hypothetical future requests.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scenario {
    pub requests: Vec<Request>,
}

/// Timing of sampled requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingParams {
    pub intervals: usize,
    /// Desired pickup minus entry time.
    pub lead: Seconds,
    /// First id handed to synthetic requests; keep it above every real id.
    pub id_base: u64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams { intervals: 12, lead: 60, id_base: 1 << 40 }
    }
}

/// Stable 64-bit seed derived from a base seed and byte strings.
pub fn mix_seed(seed: u64, parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for p in parts {
        for &b in p.iter().chain(&[0xff]) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    // splitmix64 finalizer
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Draws `n` scenarios for the hour starting at `hour_start`. Each request
/// of interval `k` enters at the end of that interval.
#[allow(clippy::too_many_arguments)]
pub fn sample_scenarios(
    forecast: &CountForecast,
    hist: &ConditionalHistograms,
    month: u8,
    weekday: u8,
    hour_start: Seconds,
    params: SamplingParams,
    seed: u64,
    n: usize,
) -> Vec<Scenario> {
    let hour = hour_of(hour_start);
    let len = 3600 / params.intervals as Seconds;
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[&(i as u64).to_le_bytes()]));
            let mut requests = Vec::new();
            let mut next_id = params.id_base + (i as u64) * 1_000_000;
            for (k, &count) in forecast.0.iter().enumerate() {
                let entry = hour_start + (k as Seconds + 1) * len;
                for _ in 0..count {
                    let Some(pickup) = hist.sample_pickup(&mut rng, month, weekday, hour) else { continue };
                    let Some(dropoff) = hist.sample_dropoff(&mut rng, month, weekday, pickup) else { continue };
                    requests.push(Request::new(next_id, pickup, dropoff, entry, entry + params.lead));
                    next_id += 1;
                }
            }
            Scenario { requests }
        })
        .collect()
}

/// Forecaster, histograms and sampling parameters bundled for the planner.
pub struct DemandModel {
    pub forecaster: Box<dyn CountForecaster>,
    pub histograms: ConditionalHistograms,
    pub params: SamplingParams,
}

impl DemandModel {
    /// Scenarios for the hour starting at `hour_start`, given the requests
    /// that entered during the previous hour.
    #[allow(clippy::too_many_arguments)]
    pub fn scenarios(
        &self,
        date: &str,
        month: u8,
        weekday: u8,
        hour_start: Seconds,
        seen: &[Request],
        seed: u64,
        n: usize,
    ) -> Result<Vec<Scenario>, DemandError> {
        let intervals = self.params.intervals;
        let mut observed = vec![0u32; intervals];
        for r in seen.iter().filter(|r| r.entry_time >= hour_start - 3600 && r.entry_time < hour_start) {
            observed[interval_of(r.entry_time, intervals)] += 1;
        }
        let next = DemandContext::hour(month, weekday, hour_of(hour_start), intervals);
        let forecast = self.forecaster.forecast(&ForecastQuery { date, observed: &observed, next: &next })?;
        let seed = mix_seed(seed, &[date.as_bytes(), &hour_start.to_le_bytes()]);
        Ok(sample_scenarios(&forecast, &self.histograms, month, weekday, hour_start, self.params, seed, n))
    }
}
