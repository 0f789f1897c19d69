//! Moderate-scale simulation runs: cross-scheme behavior and run invariants
//! on generated scenarios.

use std::collections::HashMap;

use platoon_core::coordination::SchemeKind;
use platoon_core::network::{make_scenario, ScenarioConfig, Seconds, TruckId};
use platoon_core::sim::{compare_schemes, comparison_csv, run_simulation};

fn scenario_100(seed: u64) -> platoon_core::network::Scenario {
    make_scenario(&ScenarioConfig {
        hub_count: 12,
        truck_count: 100,
        seed,
        ..ScenarioConfig::default()
    })
    .unwrap()
}

#[test]
fn all_schemes_meet_deadlines_and_commit_valid_waits() {
    let scenario = scenario_100(7);
    for scheme in SchemeKind::ALL {
        let out = run_simulation(&scenario, scheme).unwrap();
        assert_eq!(out.final_arrivals.len(), scenario.trucks.len());
        for truck in &scenario.trucks {
            assert!(
                out.final_arrivals[&truck.id] <= truck.deadline,
                "{scheme}: truck {} late",
                truck.id
            );
        }
        for d in &out.decisions {
            assert!(d.committed_wait >= 0);
            if d.committed_wait > 0 {
                assert!(
                    !d.partners_matched.is_empty(),
                    "{scheme}: positive wait without a matched partner"
                );
            }
        }
        // every truck decides once per non-final hub
        let expected: usize = scenario
            .trucks
            .iter()
            .map(|t| t.route.num_edges())
            .sum();
        assert_eq!(out.decisions.len(), expected, "{scheme}");
    }
}

#[test]
fn realized_waits_match_committed_decisions() {
    let scenario = scenario_100(13);
    let out = run_simulation(&scenario, SchemeKind::PredictiveMultiFleet).unwrap();
    let mut by_truck: HashMap<TruckId, Vec<(usize, Seconds)>> = HashMap::new();
    for d in &out.decisions {
        by_truck.entry(d.truck).or_default().push((d.stage, d.committed_wait));
    }
    for truck in &scenario.trucks {
        let mut waits = by_truck.remove(&truck.id).unwrap_or_default();
        waits.sort_unstable();
        let total_wait: Seconds = waits.iter().map(|(_, w)| w).sum();
        let expected_arrival = truck.start_time + truck.route.total_travel_time() + total_wait;
        assert_eq!(out.final_arrivals[&truck.id], expected_arrival);
    }
}

#[test]
fn histogram_counts_platoons_and_rates_stay_in_range() {
    let scenario = scenario_100(29);
    let out = run_simulation(&scenario, SchemeKind::PredictiveMultiFleet).unwrap();
    let histogram_total: usize = out.metrics.platoon_size_histogram.values().sum();
    assert_eq!(histogram_total, out.platoons.len());
    for er in &out.metrics.edge_platooning_rate {
        assert!((0.0..=1.0).contains(&er.rate));
    }
    for hr in &out.metrics.hub_formation_rate {
        assert!((0.0..=1.0).contains(&hr.rate));
    }
    assert!((0.0..=1.0).contains(&out.metrics.system_platooning_rate));
}

#[test]
fn cross_scheme_comparison_is_reproducible() {
    let scenario = scenario_100(31);
    let first = comparison_csv(&compare_schemes(&scenario).unwrap());
    let second = comparison_csv(&compare_schemes(&scenario).unwrap());
    assert_eq!(first, second);
    assert_eq!(first.lines().count(), 4); // header + three schemes
}

#[test]
fn multi_fleet_schemes_find_more_reward_than_single_fleet() {
    // a single seed can be unlucky at this size; aggregate a few
    let mut predictive = 0.0;
    let mut single = 0.0;
    for seed in [3, 5, 11] {
        let scenario = scenario_100(seed);
        predictive += run_simulation(&scenario, SchemeKind::PredictiveMultiFleet)
            .unwrap()
            .metrics
            .total_reward;
        single += run_simulation(&scenario, SchemeKind::SingleFleet)
            .unwrap()
            .metrics
            .total_reward;
    }
    assert!(
        predictive > single,
        "predictive {predictive} <= single-fleet {single}"
    );
}
