mod common;

use std::collections::BTreeSet;

use common::*;
use fleetroll::routesgen::{robot_clusters, Clusterer, Hdbscan, Point, SingleLinkage};
use fleetroll::RequestId;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn hdbscan_contract_on_10k_point_sets() {
    for seed in 0..10_000u64 {
        let mut rng = rng(seed);
        let (pts, dups) = random_points(&mut rng);
        let min = 2 + (seed % 3) as usize;
        let h = Hdbscan { min_cluster_size: min, min_samples: 2 };
        // a duplicate pair can only stand on its own when pairs are allowed
        let dups: Vec<_> = if min == 2 { dups } else { Vec::new() };
        check_partition(&h.cluster(&pts), pts.len(), min, &dups).unwrap();
    }
}

#[test]
fn single_linkage_contract() {
    for seed in 0..2000u64 {
        let mut rng = rng(seed);
        let (pts, dups) = random_points(&mut rng);
        let s = SingleLinkage { threshold: rng.random_range(0.0..3.0), min_cluster_size: 2 };
        check_partition(&s.cluster(&pts), pts.len(), 2, &dups).unwrap();
    }
}

#[test]
fn no_picked_up_request_is_ever_swapped_on_10k_states() {
    let mut multi = 0;
    for seed in 0..10_000u64 {
        let mut rng = rng(seed);
        let fleet = 2 + (seed % 2) as usize;
        let (state, _) = random_midday_state(&mut rng, fleet, 4 + (seed % 10) as usize);
        if check_controls(&state, seed).unwrap() > 1 {
            multi += 1;
        }
    }
    assert!(multi > 1000, "only {multi} states had alternatives to greedy");
}

#[test]
fn clusters_only_cover_the_robots_own_open_requests() {
    for seed in 0..500u64 {
        let mut rng = rng(seed);
        let (state, _) = random_midday_state(&mut rng, 2, 12);
        for route in state.routes() {
            let own: BTreeSet<RequestId> = state.assignments(route.robot).into_iter().collect();
            for c in robot_clusters(&state, route.robot, RequestId(0), &Hdbscan::default(), 1.0) {
                assert!(c.len() >= 2);
                for id in c {
                    assert!(own.contains(&id));
                    assert!(!state.request(id).unwrap().dropped_off);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hdbscan_is_deterministic_and_order_free(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (pts, _) = random_points(&mut rng);
        let h = Hdbscan::default();
        prop_assert_eq!(h.cluster(&pts), h.cluster(&pts));
        // reversing the input reverses the labels, not the grouping
        let rev: Vec<Point> = pts.iter().rev().copied().collect();
        let n = pts.len();
        let mut back: Vec<Vec<usize>> =
            h.cluster(&rev).into_iter().map(|c| { let mut c: Vec<usize> = c.into_iter().map(|i| n - 1 - i).collect(); c.sort(); c }).collect();
        back.sort();
        let sizes = |v: &Vec<Vec<usize>>| { let mut s: Vec<usize> = v.iter().map(|c| c.len()).collect(); s.sort(); s };
        prop_assert_eq!(sizes(&back), sizes(&h.cluster(&pts)));
    }
}
