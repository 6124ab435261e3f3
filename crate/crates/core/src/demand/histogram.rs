use std::collections::BTreeMap;

use rand::Rng;

use crate::error::DemandError;
use crate::io::DayLog;
use crate::network::{NodeId, Seconds};

/// Hour of day for a time in seconds since the day's midnight; times past
/// midnight wrap around.
pub fn hour_of(t: Seconds) -> u8 {
    (t.div_euclid(3600) % 24) as u8
}

/// Node counts with a cumulative table for sampling.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeCounts {
    counts: BTreeMap<NodeId, u64>,
    nodes: Vec<NodeId>,
    cum: Vec<u64>,
}

impl NodeCounts {
    fn add(&mut self, node: NodeId, n: u64) {
        *self.counts.entry(node).or_default() += n;
    }

    fn seal(&mut self) {
        self.nodes = self.counts.keys().copied().collect();
        let mut acc = 0;
        self.cum = self
            .counts
            .values()
            .map(|&c| {
                acc += c;
                acc
            })
            .collect();
    }

    pub fn total(&self) -> u64 {
        self.cum.last().copied().unwrap_or(0)
    }

    pub fn count(&self, node: NodeId) -> u64 {
        self.counts.get(&node).copied().unwrap_or(0)
    }

    /// Normalized distribution, ascending by node.
    pub fn probabilities(&self) -> Vec<(NodeId, f64)> {
        let t = self.total() as f64;
        self.counts.iter().map(|(&n, &c)| (n, c as f64 / t)).collect()
    }

    /// True if some node other than `except` has mass.
    fn has_mass_besides(&self, except: Option<NodeId>) -> bool {
        self.total() > except.map_or(0, |e| self.count(e))
    }

    /// Draws a node proportionally to its count, redrawing `except`.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, except: Option<NodeId>) -> NodeId {
        debug_assert!(self.has_mass_besides(except));
        loop {
            let u = rng.random_range(0..self.total());
            let i = self.cum.partition_point(|&c| c <= u);
            let node = self.nodes[i];
            if Some(node) != except {
                return node;
            }
        }
    }
}

/// Empirical pickup counts conditioned on (month, weekday, hour) and drop-off
/// counts conditioned on (month, weekday, pickup node), with coarser tables
/// used when a bucket is empty.
///
/// Pickups back off (m, w, h) -> (m, w) -> (m) -> all. Drop-offs back off
/// (m, w, pickup) -> (m, pickup) -> (pickup) -> all.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConditionalHistograms {
    pick_mwh: BTreeMap<(u8, u8, u8), NodeCounts>,
    pick_mw: BTreeMap<(u8, u8), NodeCounts>,
    pick_m: BTreeMap<u8, NodeCounts>,
    pick_all: NodeCounts,
    drop_mwr: BTreeMap<(u8, u8, NodeId), NodeCounts>,
    drop_mr: BTreeMap<(u8, NodeId), NodeCounts>,
    drop_r: BTreeMap<NodeId, NodeCounts>,
    drop_all: NodeCounts,
}

impl ConditionalHistograms {
    pub fn build(history: &[DayLog]) -> Result<Self, DemandError> {
        if history.is_empty() {
            return Err(DemandError::EmptyHistory);
        }
        let mut h = ConditionalHistograms::default();
        for day in history {
            let (m, w) = (day.month, day.weekday);
            for r in &day.requests {
                let hr = hour_of(r.desired_pickup);
                h.pick_mwh.entry((m, w, hr)).or_default().add(r.pickup, 1);
                h.pick_mw.entry((m, w)).or_default().add(r.pickup, 1);
                h.pick_m.entry(m).or_default().add(r.pickup, 1);
                h.pick_all.add(r.pickup, 1);
                h.drop_mwr.entry((m, w, r.pickup)).or_default().add(r.dropoff, 1);
                h.drop_mr.entry((m, r.pickup)).or_default().add(r.dropoff, 1);
                h.drop_r.entry(r.pickup).or_default().add(r.dropoff, 1);
                h.drop_all.add(r.dropoff, 1);
            }
        }
        let tables = h
            .pick_mwh
            .values_mut()
            .chain(h.pick_mw.values_mut())
            .chain(h.pick_m.values_mut())
            .chain(h.drop_mwr.values_mut())
            .chain(h.drop_mr.values_mut())
            .chain(h.drop_r.values_mut());
        for t in tables {
            t.seal();
        }
        h.pick_all.seal();
        h.drop_all.seal();
        Ok(h)
    }

    /// True when no request was seen at all.
    pub fn is_empty(&self) -> bool {
        self.pick_all.total() == 0
    }

    /// Exact (month, weekday, hour) pickup bucket, if any.
    pub fn pickup_bucket(&self, month: u8, weekday: u8, hour: u8) -> Option<&NodeCounts> {
        self.pick_mwh.get(&(month, weekday, hour))
    }

    /// Exact (month, weekday, pickup) drop-off bucket, if any.
    pub fn dropoff_bucket(&self, month: u8, weekday: u8, pickup: NodeId) -> Option<&NodeCounts> {
        self.drop_mwr.get(&(month, weekday, pickup))
    }

    /// Pickup table used for a context after back-off.
    pub fn pickup_table(&self, month: u8, weekday: u8, hour: u8) -> &NodeCounts {
        [self.pick_mwh.get(&(month, weekday, hour)), self.pick_mw.get(&(month, weekday)), self.pick_m.get(&month)]
            .into_iter()
            .flatten()
            .find(|t| t.total() > 0)
            .unwrap_or(&self.pick_all)
    }

    /// Drop-off table used for a context after back-off; never one whose only
    /// mass is at the pickup node.
    pub fn dropoff_table(&self, month: u8, weekday: u8, pickup: NodeId) -> Option<&NodeCounts> {
        [
            self.drop_mwr.get(&(month, weekday, pickup)),
            self.drop_mr.get(&(month, pickup)),
            self.drop_r.get(&pickup),
            Some(&self.drop_all),
        ]
        .into_iter()
        .flatten()
        .find(|t| t.has_mass_besides(Some(pickup)))
    }

    /// Pickup probabilities for a context, after back-off.
    pub fn pickup_probabilities(&self, month: u8, weekday: u8, hour: u8) -> Vec<(NodeId, f64)> {
        self.pickup_table(month, weekday, hour).probabilities()
    }

    /// Drop-off probabilities given the pickup, with the pickup node excluded
    /// and the rest renormalized.
    pub fn dropoff_probabilities(&self, month: u8, weekday: u8, pickup: NodeId) -> Vec<(NodeId, f64)> {
        let Some(t) = self.dropoff_table(month, weekday, pickup) else { return Vec::new() };
        let mass = (t.total() - t.count(pickup)) as f64;
        t.probabilities()
            .into_iter()
            .filter(|&(n, _)| n != pickup)
            .map(|(n, _)| (n, t.count(n) as f64 / mass))
            .collect()
    }

    pub fn sample_pickup<R: Rng + ?Sized>(&self, rng: &mut R, month: u8, weekday: u8, hour: u8) -> Option<NodeId> {
        let t = self.pickup_table(month, weekday, hour);
        (t.total() > 0).then(|| t.sample(rng, None))
    }

    /// Drop-off draw given the pickup; a draw equal to the pickup is redrawn.
    pub fn sample_dropoff<R: Rng + ?Sized>(&self, rng: &mut R, month: u8, weekday: u8, pickup: NodeId) -> Option<NodeId> {
        self.dropoff_table(month, weekday, pickup).map(|t| t.sample(rng, Some(pickup)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Request;

    fn day(month: u8, weekday: u8, reqs: Vec<Request>) -> DayLog {
        DayLog { label: "d".into(), weekday, month, requests: reqs }
    }

    #[test]
    fn single_sample_bucket() {
        // Tuesday 8pm in May
        let h = ConditionalHistograms::build(&[day(5, 1, vec![Request::new(1, 7, 2, 71000, 72000)])]).unwrap();
        assert_eq!(h.pickup_probabilities(5, 1, 20), vec![(7, 1.0)]);
    }

    #[test]
    fn ratio_of_counts() {
        let reqs = vec![
            Request::new(1, 3, 1, 0, 72000),
            Request::new(2, 3, 1, 0, 72100),
            Request::new(3, 5, 1, 0, 72200),
        ];
        let h = ConditionalHistograms::build(&[day(5, 1, reqs)]).unwrap();
        let p = h.pickup_probabilities(5, 1, 20);
        assert_eq!(p[0].0, 3);
        assert!((p[0].1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[1].1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_history_is_an_error() {
        assert!(matches!(ConditionalHistograms::build(&[]), Err(DemandError::EmptyHistory)));
    }

    #[test]
    fn backs_off_to_coarser_buckets() {
        let h = ConditionalHistograms::build(&[day(5, 1, vec![Request::new(1, 7, 2, 71000, 72000)])]).unwrap();
        // other hour, then other weekday, then other month
        assert_eq!(h.pickup_probabilities(5, 1, 3), vec![(7, 1.0)]);
        assert_eq!(h.pickup_probabilities(5, 4, 20), vec![(7, 1.0)]);
        assert_eq!(h.pickup_probabilities(9, 4, 20), vec![(7, 1.0)]);
        assert_eq!(h.dropoff_probabilities(9, 4, 7), vec![(2, 1.0)]);
        // pickup never seen: global drop-off table
        assert_eq!(h.dropoff_probabilities(5, 1, 11), vec![(2, 1.0)]);
    }

    #[test]
    fn dropoff_excludes_pickup_node() {
        let reqs = vec![Request::new(1, 2, 7, 0, 72000), Request::new(2, 7, 2, 0, 72000), Request::new(3, 7, 4, 0, 72000)];
        let h = ConditionalHistograms::build(&[day(5, 1, reqs)]).unwrap();
        // only drop-off seen after pickup 2 is node 7; for pickup 7 the global table holds 7, 2, 4
        assert_eq!(h.dropoff_probabilities(5, 1, 2), vec![(7, 1.0)]);
        let p = h.dropoff_probabilities(1, 1, 9);
        assert_eq!(p.len(), 3);
        assert!(h.dropoff_probabilities(1, 1, 7).iter().all(|&(n, _)| n != 7));
    }
}
