//! Seeded fixture builders shared by unit tests, integration tests, and the
//! benchmark command.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dp::{DpInstance, DpStage};
use crate::network::{
    FleetId, Hub, RoadNetwork, RoadSegment, Route, Seconds, Truck, TruckId,
};
use crate::reward::{EconomicParams, PartnerPrediction};

/// A line network 0 - 1 - ... - n-1 with both directions of every link and a
/// constant per-edge travel time.
pub fn line_network(hub_count: usize, travel_time: Seconds) -> RoadNetwork {
    let hubs: Vec<Hub> = (0..hub_count)
        .map(|id| Hub {
            id,
            x: id as f64 * 10.0,
            y: 0.0,
        })
        .collect();
    let mut segments = Vec::new();
    for a in 0..hub_count.saturating_sub(1) {
        segments.push(RoadSegment {
            from: a,
            to: a + 1,
            travel_time,
        });
        segments.push(RoadSegment {
            from: a + 1,
            to: a,
            travel_time,
        });
    }
    RoadNetwork::new(hubs, segments).expect("line network is valid")
}

/// A truck on an explicit hub sequence with a waiting budget in seconds.
pub fn truck_on(
    network: &RoadNetwork,
    id: u32,
    fleet: u32,
    hubs: &[usize],
    start_time: Seconds,
    budget: Seconds,
) -> Truck {
    let route = Route::new(hubs.to_vec(), network).expect("valid route");
    let deadline = start_time + route.total_travel_time() + budget;
    Truck::new(
        TruckId(id),
        FleetId(fleet),
        route,
        start_time,
        deadline,
        EconomicParams::default().default_waiting_loss_per_hour,
    )
    .expect("valid truck")
}

/// A random solver instance: 1..=5 stages, up to `max_partners` partners per
/// stage with departures spread around the no-wait arrival times, a waiting
/// budget of a few percent of travel time, and the default economics.
pub fn random_instance_with(seed: u64, max_stages: usize, max_partners: usize) -> DpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_stages = rng.gen_range(1..=max_stages.max(1));
    let taus: Vec<Seconds> = (0..n_stages).map(|_| rng.gen_range(600..=7200)).collect();
    let total: Seconds = taus.iter().sum();
    let arrival: Seconds = 28_800 + rng.gen_range(0..3600);
    let budget = (total as f64 * rng.gen_range(0.03..0.25)) as Seconds;
    let deadline = arrival + total + budget;

    let mut no_wait = arrival;
    let mut stages = Vec::with_capacity(n_stages);
    let mut next_truck = 1u32;
    for &tau in &taus {
        let partner_count = rng.gen_range(0..=max_partners);
        let mut partners = Vec::with_capacity(partner_count);
        for _ in 0..partner_count {
            // departures both before the no-wait arrival (unreachable) and
            // inside the waiting window, so exclusion paths are exercised
            let offset = rng.gen_range(-(budget / 2 + 60)..=budget + 120);
            partners.push(PartnerPrediction {
                truck: TruckId(next_truck),
                fleet: FleetId(rng.gen_range(0..5)),
                predicted_departure: (no_wait + offset).max(0),
            });
            next_truck += 1;
        }
        stages.push(DpStage {
            edge_travel_time: tau,
            partners,
        });
        no_wait += tau;
    }

    DpInstance {
        arrival,
        deadline,
        own_fleet: FleetId(0),
        waiting_loss_per_hour: 25.0,
        econ: EconomicParams::default(),
        stages,
    }
}

/// Default random instance shape: up to 5 stages and 10 partners per stage.
pub fn random_instance(seed: u64) -> DpInstance {
    random_instance_with(seed, 5, 10)
}

/// A large instance with roughly `partners_per_stage` distinct wait options
/// per stage, for scale and timing checks.
pub fn wide_instance(seed: u64, partners_per_stage: usize, n_stages: usize) -> DpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taus: Vec<Seconds> = (0..n_stages).map(|_| rng.gen_range(1800..=5400)).collect();
    let total: Seconds = taus.iter().sum();
    let arrival: Seconds = 30_000;
    let budget: Seconds = (partners_per_stage as Seconds * 2).max(1800);
    let deadline = arrival + total + budget;

    let mut no_wait = arrival;
    let mut stages = Vec::with_capacity(n_stages);
    let mut next_truck = 1u32;
    for &tau in &taus {
        let mut partners = Vec::with_capacity(partners_per_stage);
        for i in 0..partners_per_stage {
            // distinct departures packed into the waiting window
            let offset = (i as Seconds * budget) / partners_per_stage.max(1) as Seconds;
            partners.push(PartnerPrediction {
                truck: TruckId(next_truck),
                fleet: FleetId(rng.gen_range(0..6)),
                predicted_departure: no_wait + offset,
            });
            next_truck += 1;
        }
        stages.push(DpStage {
            edge_travel_time: tau,
            partners,
        });
        no_wait += tau;
    }

    DpInstance {
        arrival,
        deadline,
        own_fleet: FleetId(0),
        waiting_loss_per_hour: 25.0,
        econ: EconomicParams::default(),
        stages,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_instances_are_valid_and_deterministic() {
        for seed in 0..50 {
            let inst = random_instance(seed);
            inst.validate().unwrap();
            assert_eq!(inst, random_instance(seed));
        }
    }

    #[test]
    fn wide_instance_has_requested_width() {
        let inst = wide_instance(1, 200, 4);
        inst.validate().unwrap();
        assert_eq!(inst.stages.len(), 4);
        assert_eq!(inst.stages[0].partners.len(), 200);
    }
}
