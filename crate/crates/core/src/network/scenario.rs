//! Scenario assembly: fleet assignment, truck generation, and the scenario
//! JSON format.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

use super::{
    build_synthetic_network, sample_missions, shortest_route, FleetId, FlowMatrix, Hub,
    RoadNetwork, RoadSegment, Route, Seconds, Truck, TruckId,
};
use crate::error::{Error, Result};
use crate::reward::EconomicParams;

/// One class of fleet sizes: `fleet_count` fleets of `trucks_per_fleet`
/// trucks each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FleetBucket {
    pub trucks_per_fleet: usize,
    pub fleet_count: usize,
}

/// A fleet-size distribution given as explicit buckets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FleetDistribution {
    buckets: Vec<FleetBucket>,
}

impl FleetDistribution {
    pub fn new(buckets: Vec<FleetBucket>) -> Result<Self> {
        if buckets.is_empty() {
            return Err(Error::InvalidArgument("no fleet buckets given".into()));
        }
        for b in &buckets {
            if b.trucks_per_fleet == 0 || b.fleet_count == 0 {
                return Err(Error::InvalidArgument(
                    "fleet buckets must have positive size and count".into(),
                ));
            }
        }
        Ok(FleetDistribution { buckets })
    }

    /// The Swedish national fleet-size mix: 855 fleets covering 5000 trucks,
    /// dominated by small carriers (325 single-truck fleets) with a tail up
    /// to one 340-truck fleet.
    pub fn sweden() -> Self {
        let buckets = [
            (1, 325),
            (3, 362),
            (7, 80),
            (15, 49),
            (34, 27),
            (74, 8),
            (148, 3),
            (340, 1),
        ];
        FleetDistribution {
            buckets: buckets
                .iter()
                .map(|&(trucks_per_fleet, fleet_count)| FleetBucket {
                    trucks_per_fleet,
                    fleet_count,
                })
                .collect(),
        }
    }

    pub fn buckets(&self) -> &[FleetBucket] {
        &self.buckets
    }

    pub fn total_trucks(&self) -> usize {
        self.buckets
            .iter()
            .map(|b| b.trucks_per_fleet * b.fleet_count)
            .sum()
    }

    pub fn total_fleets(&self) -> usize {
        self.buckets.iter().map(|b| b.fleet_count).sum()
    }

    /// Rescale the distribution to cover exactly `truck_count` trucks while
    /// keeping the size mix proportional. Rounding residue is settled with
    /// single-truck fleets, shrinking small buckets first when over-assigned.
    pub fn scaled_to(&self, truck_count: usize) -> Result<FleetDistribution> {
        if truck_count == 0 {
            return Err(Error::InvalidArgument(
                "cannot scale a fleet distribution to zero trucks".into(),
            ));
        }
        if truck_count == self.total_trucks() {
            return Ok(self.clone());
        }
        let factor = truck_count as f64 / self.total_trucks() as f64;
        let mut buckets: Vec<FleetBucket> = self
            .buckets
            .iter()
            .map(|b| FleetBucket {
                trucks_per_fleet: b.trucks_per_fleet,
                fleet_count: (b.fleet_count as f64 * factor + 0.5).floor() as usize,
            })
            .collect();
        buckets.sort_by_key(|b| b.trucks_per_fleet);

        let assigned: usize = buckets
            .iter()
            .map(|b| b.trucks_per_fleet * b.fleet_count)
            .sum();
        let mut residual = truck_count as i64 - assigned as i64;
        while residual < 0 {
            let bucket = buckets
                .iter_mut()
                .find(|b| b.fleet_count > 0)
                .expect("over-assignment implies a nonempty bucket");
            bucket.fleet_count -= 1;
            residual += bucket.trucks_per_fleet as i64;
        }
        if residual > 0 {
            match buckets.iter_mut().find(|b| b.trucks_per_fleet == 1) {
                Some(singles) => singles.fleet_count += residual as usize,
                None => buckets.insert(
                    0,
                    FleetBucket {
                        trucks_per_fleet: 1,
                        fleet_count: residual as usize,
                    },
                ),
            }
        }
        buckets.retain(|b| b.fleet_count > 0);
        let scaled = FleetDistribution::new(buckets)?;
        debug_assert_eq!(scaled.total_trucks(), truck_count);
        Ok(scaled)
    }
}

/// Partition `truck_count` trucks into fleets with exactly the distribution's
/// bucket sizes. Which trucks land in which fleet is a seeded permutation.
pub fn assign_fleets(
    truck_count: usize,
    dist: &FleetDistribution,
    seed: u64,
) -> Result<Vec<FleetId>> {
    let covered = dist.total_trucks();
    if covered != truck_count {
        return Err(Error::InvalidArgument(format!(
            "fleet distribution covers {covered} trucks but {truck_count} were requested \
             (residual {})",
            truck_count as i64 - covered as i64
        )));
    }
    let mut tags = Vec::with_capacity(truck_count);
    let mut fleet = 0u32;
    for bucket in dist.buckets() {
        for _ in 0..bucket.fleet_count {
            for _ in 0..bucket.trucks_per_fleet {
                tags.push(FleetId(fleet));
            }
            fleet += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tags.shuffle(&mut rng);
    Ok(tags)
}

/// How a config names its fleet distribution: a preset or explicit buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FleetSpec {
    Preset(String),
    Buckets(Vec<FleetBucket>),
}

/// Everything needed to generate a scenario deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub hub_count: usize,
    pub truck_count: usize,
    pub fleets: FleetSpec,
    pub window_start_s: Seconds,
    pub window_end_s: Seconds,
    pub waiting_budget_fraction: f64,
    pub speed_kmh: f64,
    pub economics: EconomicParams,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// The national-scale default: 105 hubs, 5000 trucks in the Swedish fleet
    /// mix, start times spread over 08:00-09:00, a waiting budget of 10% of
    /// travel time, and 80 km/h roads.
    fn default() -> Self {
        ScenarioConfig {
            hub_count: 105,
            truck_count: 5000,
            fleets: FleetSpec::Preset("sweden".into()),
            window_start_s: 8 * 3600,
            window_end_s: 9 * 3600,
            waiting_budget_fraction: 0.10,
            speed_kmh: 80.0,
            economics: EconomicParams::default(),
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hub_count < 2 {
            return Err(Error::InvalidArgument("need at least 2 hubs".into()));
        }
        if self.truck_count == 0 {
            return Err(Error::InvalidArgument("need at least 1 truck".into()));
        }
        if self.window_start_s >= self.window_end_s {
            return Err(Error::InvalidArgument(format!(
                "start window [{}, {}) is empty",
                self.window_start_s, self.window_end_s
            )));
        }
        if self.window_start_s < 0 {
            return Err(Error::InvalidArgument("start window must be non-negative".into()));
        }
        if !(0.0..=10.0).contains(&self.waiting_budget_fraction) {
            return Err(Error::InvalidArgument(format!(
                "waiting budget fraction {} out of range",
                self.waiting_budget_fraction
            )));
        }
        if self.speed_kmh <= 0.0 {
            return Err(Error::InvalidArgument("speed must be positive".into()));
        }
        self.economics.validate()
    }

    pub fn resolve_fleet_distribution(&self) -> Result<FleetDistribution> {
        match &self.fleets {
            FleetSpec::Preset(name) => match name.as_str() {
                "sweden" => FleetDistribution::sweden().scaled_to(self.truck_count),
                other => Err(Error::InvalidArgument(format!(
                    "unknown fleet preset '{other}' (available: sweden)"
                ))),
            },
            FleetSpec::Buckets(buckets) => FleetDistribution::new(buckets.clone()),
        }
    }
}

/// A complete, immutable simulation input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioRepr", into = "ScenarioRepr")]
pub struct Scenario {
    pub network: RoadNetwork,
    pub trucks: Vec<Truck>,
    pub economics: EconomicParams,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        network: RoadNetwork,
        trucks: Vec<Truck>,
        economics: EconomicParams,
        seed: u64,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for truck in &trucks {
            if !seen.insert(truck.id) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate truck id {}",
                    truck.id
                )));
            }
            for k in 0..truck.route.num_edges() {
                let (from, to) = truck.route.edge(k);
                if network.travel_time(from, to) != Some(truck.route.travel_time(k)) {
                    return Err(Error::InvalidArgument(format!(
                        "truck {} route edge ({from}, {to}) does not match the network",
                        truck.id
                    )));
                }
            }
        }
        Ok(Scenario {
            network,
            trucks,
            economics,
            seed,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("invalid scenario JSON: {e}")))
    }

    pub fn truck(&self, id: TruckId) -> Option<&Truck> {
        self.trucks.iter().find(|t| t.id == id)
    }

    /// Fleets present in the scenario with their truck counts.
    pub fn fleet_sizes(&self) -> BTreeMap<FleetId, usize> {
        let mut sizes = BTreeMap::new();
        for t in &self.trucks {
            *sizes.entry(t.fleet).or_insert(0) += 1;
        }
        sizes
    }
}

#[derive(Serialize, Deserialize)]
struct TruckRepr {
    id: TruckId,
    fleet: FleetId,
    route: Vec<usize>,
    start_time_s: Seconds,
    deadline_s: Seconds,
    waiting_loss_per_h: f64,
}

#[derive(Serialize, Deserialize)]
struct ScenarioRepr {
    hubs: Vec<Hub>,
    segments: Vec<RoadSegment>,
    trucks: Vec<TruckRepr>,
    economics: EconomicParams,
    seed: u64,
}

impl From<Scenario> for ScenarioRepr {
    fn from(s: Scenario) -> Self {
        ScenarioRepr {
            hubs: s.network.hubs().to_vec(),
            segments: s.network.segments().collect(),
            trucks: s
                .trucks
                .iter()
                .map(|t| TruckRepr {
                    id: t.id,
                    fleet: t.fleet,
                    route: t.route.hubs().to_vec(),
                    start_time_s: t.start_time,
                    deadline_s: t.deadline,
                    waiting_loss_per_h: t.waiting_loss_per_hour,
                })
                .collect(),
            economics: s.economics,
            seed: s.seed,
        }
    }
}

impl TryFrom<ScenarioRepr> for Scenario {
    type Error = Error;

    fn try_from(repr: ScenarioRepr) -> Result<Self> {
        let network = RoadNetwork::new(repr.hubs, repr.segments)?;
        let mut trucks = Vec::with_capacity(repr.trucks.len());
        for t in repr.trucks {
            let route = Route::new(t.route, &network)?;
            trucks.push(Truck::new(
                t.id,
                t.fleet,
                route,
                t.start_time_s,
                t.deadline_s,
                t.waiting_loss_per_h,
            )?);
        }
        Scenario::new(network, trucks, repr.economics, repr.seed)
    }
}

/// Deadline rule: the no-wait arrival plus a waiting budget proportional to
/// total travel time, rounded half-up to whole seconds.
pub(crate) fn deadline_for(
    start: Seconds,
    total_travel: Seconds,
    budget_fraction: f64,
) -> Seconds {
    let budget = (budget_fraction * total_travel as f64 + 0.5).floor() as Seconds;
    start + total_travel + budget
}

fn derive_seed(master: u64, stream: u64) -> u64 {
    // splitmix64 over a salted master so sub-generators are independent
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generate a full scenario from a config. Fully deterministic under the
/// config's seed.
pub fn make_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let network =
        build_synthetic_network(config.hub_count, derive_seed(config.seed, 1), config.speed_kmh)?;
    let flow = FlowMatrix::gravity(&network, derive_seed(config.seed, 2))?;
    let missions = sample_missions(
        &network,
        &flow,
        config.truck_count,
        derive_seed(config.seed, 3),
    )?;
    let dist = config.resolve_fleet_distribution()?;
    let fleet_tags = assign_fleets(config.truck_count, &dist, derive_seed(config.seed, 4))?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 5));
    let mut route_cache: HashMap<(usize, usize), Route> = HashMap::new();
    let mut trucks = Vec::with_capacity(config.truck_count);
    for (i, &(origin, destination)) in missions.iter().enumerate() {
        let route = match route_cache.get(&(origin, destination)) {
            Some(r) => r.clone(),
            None => {
                let r = shortest_route(&network, origin, destination)?;
                route_cache.insert((origin, destination), r.clone());
                r
            }
        };
        let start = rng.gen_range(config.window_start_s..config.window_end_s);
        let deadline = deadline_for(
            start,
            route.total_travel_time(),
            config.waiting_budget_fraction,
        );
        trucks.push(Truck::new(
            TruckId(i as u32),
            fleet_tags[i],
            route,
            start,
            deadline,
            config.economics.default_waiting_loss_per_hour,
        )?);
    }
    Scenario::new(network, trucks, config.economics, config.seed)
}
