//! Request logs, history day files and precomputed forecast files.
//!
//! ```text
//! day 2024-05-07 1 5
//! request 1 68400 69000 12 40
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::demand::ForecastTable;
use crate::error::InputError;
use crate::model::{ProblemConfig, Request};
use crate::network::StreetGraph;

/// One operating day of requests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayLog {
    /// Date string from the manifest, or the file stem when there is none.
    pub label: String,
    /// 0 = Monday.
    pub weekday: u8,
    /// 1 to 12.
    pub month: u8,
    pub requests: Vec<Request>,
}

impl DayLog {
    pub fn new(date: NaiveDate, requests: Vec<Request>) -> Self {
        DayLog {
            label: date.format("%Y-%m-%d").to_string(),
            weekday: date.weekday().num_days_from_monday() as u8,
            month: date.month() as u8,
            requests,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("day {} {} {}\n", self.label, self.weekday, self.month);
        out.push_str(&write_requests(&self.requests));
        out
    }
}

fn int<T: std::str::FromStr>(tok: &str, what: &str, origin: &str, line: usize) -> Result<T, InputError> {
    tok.parse().map_err(|_| InputError::parse(origin, line, format!("{what} `{tok}` is not an integer")))
}

/// Parses a request log, with an optional `day` manifest line. Checks record
/// shape, unique ids, ascending entry times, distinct endpoints and
/// `entry_time < desired_pickup_time`.
pub fn parse_day(text: &str, origin: &str) -> Result<DayLog, InputError> {
    let mut manifest: Option<(String, u8, u8)> = None;
    let mut requests: Vec<Request> = Vec::new();
    let mut ids = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let f: Vec<&str> = content.split_whitespace().collect();
        match f[0] {
            "day" => {
                if f.len() != 4 {
                    return Err(InputError::parse(origin, line, "expected `day <date> <weekday> <month>`"));
                }
                if manifest.is_some() || !requests.is_empty() {
                    return Err(InputError::parse(origin, line, "manifest must be the first record"));
                }
                NaiveDate::parse_from_str(f[1], "%Y-%m-%d")
                    .map_err(|_| InputError::parse(origin, line, format!("bad date `{}`", f[1])))?;
                let wd: u8 = int(f[2], "weekday", origin, line)?;
                let m: u8 = int(f[3], "month", origin, line)?;
                if wd > 6 || !(1..=12).contains(&m) {
                    return Err(InputError::parse(origin, line, "weekday must be 0-6 and month 1-12"));
                }
                manifest = Some((f[1].to_string(), wd, m));
            }
            "request" => {
                if f.len() != 6 {
                    return Err(InputError::parse(
                        origin,
                        line,
                        "expected `request <id> <entry_time> <desired_pickup_time> <pickup_node> <dropoff_node>`",
                    ));
                }
                let r = Request::new(
                    int(f[1], "id", origin, line)?,
                    int(f[4], "pickup node", origin, line)?,
                    int(f[5], "drop-off node", origin, line)?,
                    int(f[2], "entry time", origin, line)?,
                    int(f[3], "desired pickup time", origin, line)?,
                );
                r.check_fields().map_err(|e| InputError::parse(origin, line, e))?;
                if !ids.insert(r.id) {
                    return Err(InputError::parse(origin, line, format!("duplicate id {}", r.id.0)));
                }
                if requests.last().is_some_and(|p| p.entry_time > r.entry_time) {
                    return Err(InputError::parse(origin, line, "records are not sorted by entry time"));
                }
                requests.push(r);
            }
            other => return Err(InputError::parse(origin, line, format!("unknown record `{other}`"))),
        }
    }
    let (label, weekday, month) = manifest.unwrap_or_else(|| {
        let stem = Path::new(origin).file_stem().and_then(|s| s.to_str()).unwrap_or(origin);
        (stem.to_string(), 0, 1)
    });
    Ok(DayLog { label, weekday, month, requests })
}

pub fn load_day(path: impl AsRef<Path>) -> Result<DayLog, InputError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| InputError::io(path, e))?;
    parse_day(&text, &path.display().to_string())
}

/// Loads every `*.txt` day file in `dir`, ordered by label.
pub fn load_history(dir: impl AsRef<Path>) -> Result<Vec<DayLog>, InputError> {
    let dir = dir.as_ref();
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| InputError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    let mut days = files.iter().map(load_day).collect::<Result<Vec<_>, _>>()?;
    days.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(days)
}

/// Checks requests against a graph and day configuration: nodes exist and
/// desired pickups fall no later than `T_last`.
pub fn check_requests(requests: &[Request], graph: &StreetGraph, config: &ProblemConfig) -> Result<(), InputError> {
    for r in requests {
        for n in [r.pickup, r.dropoff] {
            if !graph.contains(n) {
                return Err(InputError::Config(format!("{}: node {n} is not in the graph", r.id)));
            }
        }
        if r.desired_pickup > config.t_last {
            return Err(InputError::Config(format!(
                "{}: desired pickup {} is after T_last {}",
                r.id, r.desired_pickup, config.t_last
            )));
        }
    }
    Ok(())
}

pub fn write_requests(requests: &[Request]) -> String {
    let mut out = String::new();
    for r in requests {
        let _ = writeln!(out, "request {} {} {} {} {}", r.id.0, r.entry_time, r.desired_pickup, r.pickup, r.dropoff);
    }
    out
}

/// Precomputed interval counts keyed by (date label, hour), each a list of
/// per-interval counts. Lines read `forecast <date> <hour> <k> <count>`.
pub fn parse_forecasts(text: &str, origin: &str) -> Result<ForecastTable, InputError> {
    let mut out: ForecastTable = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let f: Vec<&str> = content.split_whitespace().collect();
        if f.len() != 5 || f[0] != "forecast" {
            return Err(InputError::parse(origin, line, "expected `forecast <date> <hour> <k> <count>`"));
        }
        let hour: u32 = int(f[2], "hour", origin, line)?;
        if hour > 23 {
            return Err(InputError::parse(origin, line, "hour must be 0-23"));
        }
        let k: usize = int(f[3], "interval", origin, line)?;
        let count: u32 = int(f[4], "count", origin, line)?;
        if out.entry((f[1].to_string(), hour)).or_default().insert(k, count).is_some() {
            return Err(InputError::parse(origin, line, "duplicate forecast entry"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_manifest_and_requests() {
        let text = "day 2024-05-07 1 5\n# comment\nrequest 1 10 70 3 4\nrequest 2 10 80 4 3\n";
        let day = parse_day(text, "d.txt").unwrap();
        assert_eq!(day.label, "2024-05-07");
        assert_eq!((day.weekday, day.month), (1, 5));
        assert_eq!(day.requests.len(), 2);
        assert_eq!(parse_day(&day.to_text(), "x").unwrap(), day);
    }

    #[test]
    fn manifest_is_optional() {
        let day = parse_day("request 1 10 70 3 4\n", "dir/monday.txt").unwrap();
        assert_eq!(day.label, "monday");
    }

    #[test]
    fn rejects_bad_records() {
        let err = |t: &str| parse_day(t, "f").unwrap_err().to_string();
        assert!(err("request 1 70 70 3 4\n").contains("f:1"));
        assert!(err("request 1 10 70 3 3\n").contains("pickup and drop-off"));
        assert!(err("request 1 20 70 3 4\nrequest 2 10 70 3 4\n").contains("sorted"));
        assert!(err("request 1 10 70 3 4\nrequest 1 10 70 3 4\n").contains("duplicate"));
        assert!(err("request 1 10 7.5 3 4\n").contains("not an integer"));
        assert!(err("day 2024-13-01 1 5\n").contains("bad date"));
    }

    #[test]
    fn request_checks_against_config() {
        let g = StreetGraph::grid(2, 2, 10, 0.0, 0.0);
        let cfg = ProblemConfig { t_start: 0, t_last: 100, t_end: 200, ..ProblemConfig::default() };
        assert!(check_requests(&[Request::new(1, 1, 2, 0, 100)], &g, &cfg).is_ok());
        assert!(check_requests(&[Request::new(1, 1, 2, 0, 101)], &g, &cfg).is_err());
        assert!(check_requests(&[Request::new(1, 1, 9, 0, 50)], &g, &cfg).is_err());
    }

    #[test]
    fn forecast_file() {
        let f = parse_forecasts("forecast 2024-05-07 20 0 3\nforecast 2024-05-07 20 1 0\n", "f").unwrap();
        assert_eq!(f[&("2024-05-07".to_string(), 20)][&0], 3);
        assert!(parse_forecasts("forecast 2024-05-07 25 0 3\n", "f").is_err());
    }
}
