use thiserror::Error;

use crate::network::{NodeId, Seconds};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph file is empty")]
    Empty,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("record {record}: edge endpoint {node} does not exist")]
    DanglingEndpoint { record: usize, node: NodeId },
    #[error("record {record}: travel time `{time}` is not a positive integer number of seconds")]
    NonPositiveTime { record: usize, time: String },
    #[error("node ids must be dense 1..n: expected {expected}, found {found}")]
    NotDense { expected: NodeId, found: NodeId },
    #[error("graph is not strongly connected (node {node} is cut off from node 1)")]
    NotStronglyConnected { node: NodeId },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl GraphError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        GraphError::Parse { line, msg: msg.into() }
    }
}

/// Errors from request logs, histories, forecast files and config values.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("{origin}:{line}: {msg}")]
    Parse { origin: String, line: usize, msg: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl InputError {
    pub(crate) fn parse(origin: &str, line: usize, msg: impl Into<String>) -> Self {
        InputError::Parse { origin: origin.to_string(), line, msg: msg.into() }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        InputError::Io { path: path.display().to_string(), source }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateError {
    #[error("unknown request {0}")]
    UnknownRequest(u64),
    #[error("stage cost needs consecutive states, got t={prev} and t={next}")]
    TimeMismatch { prev: Seconds, next: Seconds },
}

#[derive(Debug, Error)]
pub enum DemandError {
    #[error("history contains no days")]
    EmptyHistory,
    #[error("forecaster has not been trained")]
    NotTrained,
    #[error("expected {expected} observed interval counts, got {got}")]
    ObservedLength { expected: usize, got: usize },
    #[error("no precomputed forecast for {date} hour {hour}")]
    MissingForecast { date: String, hour: u32 },
}

#[derive(Debug, Error)]
pub enum FleetSizeError {
    #[error("history contains no days")]
    EmptyHistory,
    #[error(
        "day {day}: request {request} could not be served even by a fresh robot; \
         no depot covers its pickup within the pickup wait limit"
    )]
    DepotCoverage { day: String, request: u64 },
    #[error("day {day} still rejects requests with the maximum fleet size {max}")]
    ExceedsMax { day: String, max: usize },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invariant violated at t={t}: {msg}")]
    Invariant { t: Seconds, msg: String },
}
