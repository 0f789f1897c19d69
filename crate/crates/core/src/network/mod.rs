//! Road-network representation, route construction, and scenario generation.
//!
//! Hubs are nodes of a directed graph; road segments are ordered hub pairs
//! with an integral travel time. All times in this crate are integer seconds
//! since the simulation epoch, so departure-time coincidences can be tested
//! with exact equality.

mod scenario;
mod synth;

pub use scenario::{
    assign_fleets, make_scenario, FleetBucket, FleetDistribution, FleetSpec, Scenario,
    ScenarioConfig,
};
pub use synth::{build_synthetic_network, sample_missions, FlowMatrix};

use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Integer seconds since the simulation epoch.
pub type Seconds = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TruckId(pub u32);

impl fmt::Display for TruckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FleetId(pub u32);

impl fmt::Display for FleetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A hub where trucks may wait and merge into platoons. Positions are in
/// kilometers and only used to derive synthetic travel times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hub {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

impl Hub {
    pub fn distance_km(&self, other: &Hub) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// A directed road segment. A segment and its reverse are distinct edges:
/// platooning requires traveling in the same direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub from: usize,
    pub to: usize,
    #[serde(rename = "travel_time_s")]
    pub travel_time: Seconds,
}

/// Directed hub graph with per-edge travel times.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    hubs: Vec<Hub>,
    segments: BTreeMap<(usize, usize), Seconds>,
}

impl RoadNetwork {
    pub fn new(hubs: Vec<Hub>, segments: Vec<RoadSegment>) -> Result<Self> {
        for (i, hub) in hubs.iter().enumerate() {
            if hub.id != i {
                return Err(Error::InvalidArgument(format!(
                    "hub ids must be dense: found id {} at index {i}",
                    hub.id
                )));
            }
        }
        let mut map = BTreeMap::new();
        for seg in segments {
            if seg.from >= hubs.len() || seg.to >= hubs.len() {
                return Err(Error::InvalidArgument(format!(
                    "segment ({}, {}) references an unknown hub",
                    seg.from, seg.to
                )));
            }
            if seg.from == seg.to {
                return Err(Error::InvalidArgument(format!(
                    "self-loop segment at hub {}",
                    seg.from
                )));
            }
            if seg.travel_time <= 0 {
                return Err(Error::InvalidArgument(format!(
                    "segment ({}, {}) has non-positive travel time",
                    seg.from, seg.to
                )));
            }
            if map.insert((seg.from, seg.to), seg.travel_time).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate segment ({}, {})",
                    seg.from, seg.to
                )));
            }
        }
        Ok(RoadNetwork {
            hubs,
            segments: map,
        })
    }

    pub fn hub_count(&self) -> usize {
        self.hubs.len()
    }

    pub fn hubs(&self) -> &[Hub] {
        &self.hubs
    }

    pub fn hub(&self, id: usize) -> Option<&Hub> {
        self.hubs.get(id)
    }

    pub fn travel_time(&self, from: usize, to: usize) -> Option<Seconds> {
        self.segments.get(&(from, to)).copied()
    }

    /// Segments in ascending (from, to) order.
    pub fn segments(&self) -> impl Iterator<Item = RoadSegment> + '_ {
        self.segments.iter().map(|(&(from, to), &travel_time)| RoadSegment {
            from,
            to,
            travel_time,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Strong connectivity under the directed segment set.
    pub fn is_connected(&self) -> bool {
        if self.hubs.is_empty() {
            return false;
        }
        let forward = self.reachable_from(0, false);
        let backward = self.reachable_from(0, true);
        forward.len() == self.hubs.len() && backward.len() == self.hubs.len()
    }

    fn reachable_from(&self, start: usize, reversed: bool) -> HashSet<usize> {
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(h) = queue.pop_front() {
            for &(from, to) in self.segments.keys() {
                let (a, b) = if reversed { (to, from) } else { (from, to) };
                if a == h && seen.insert(b) {
                    queue.push_back(b);
                }
            }
        }
        seen
    }
}

/// A truck's fixed path: an ordered hub sequence whose consecutive pairs are
/// segments of the network. Travel times are captured at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    hubs: Vec<usize>,
    travel_times: Vec<Seconds>,
}

impl Route {
    pub fn new(hubs: Vec<usize>, network: &RoadNetwork) -> Result<Self> {
        if hubs.len() < 2 {
            return Err(Error::InvalidArgument(
                "a route needs at least two hubs".into(),
            ));
        }
        let mut travel_times = Vec::with_capacity(hubs.len() - 1);
        for pair in hubs.windows(2) {
            let tau = network.travel_time(pair[0], pair[1]).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "route edge ({}, {}) is not a road segment",
                    pair[0], pair[1]
                ))
            })?;
            travel_times.push(tau);
        }
        Ok(Route { hubs, travel_times })
    }

    /// Number of hubs on the route.
    pub fn num_hubs(&self) -> usize {
        self.hubs.len()
    }

    /// Number of road segments (= decision stages).
    pub fn num_edges(&self) -> usize {
        self.travel_times.len()
    }

    pub fn hub_at(&self, index: usize) -> usize {
        self.hubs[index]
    }

    pub fn hubs(&self) -> &[usize] {
        &self.hubs
    }

    /// Ordered pair for the edge leaving the `stage`-th hub.
    pub fn edge(&self, stage: usize) -> (usize, usize) {
        (self.hubs[stage], self.hubs[stage + 1])
    }

    pub fn travel_time(&self, stage: usize) -> Seconds {
        self.travel_times[stage]
    }

    pub fn total_travel_time(&self) -> Seconds {
        self.travel_times.iter().sum()
    }

    /// Stage index at which this route traverses `edge`, if any.
    pub fn stage_of_edge(&self, edge: (usize, usize)) -> Option<usize> {
        (0..self.num_edges()).find(|&k| self.edge(k) == edge)
    }
}

/// A transport mission: identity, fleet membership, fixed route, timing, and
/// the per-hour cost its fleet bears while it waits.
#[derive(Debug, Clone, PartialEq)]
pub struct Truck {
    pub id: TruckId,
    pub fleet: FleetId,
    pub route: Route,
    pub start_time: Seconds,
    pub deadline: Seconds,
    pub waiting_loss_per_hour: f64,
}

impl Truck {
    pub fn new(
        id: TruckId,
        fleet: FleetId,
        route: Route,
        start_time: Seconds,
        deadline: Seconds,
        waiting_loss_per_hour: f64,
    ) -> Result<Self> {
        if waiting_loss_per_hour < 0.0 {
            return Err(Error::InvalidArgument(
                "waiting loss rate must be non-negative".into(),
            ));
        }
        if deadline < start_time + route.total_travel_time() {
            return Err(Error::Infeasible(format!(
                "truck {id}: deadline {deadline} precedes the no-wait arrival {}",
                start_time + route.total_travel_time()
            )));
        }
        Ok(Truck {
            id,
            fleet,
            route,
            start_time,
            deadline,
            waiting_loss_per_hour,
        })
    }

    /// Slack usable for waiting over the whole trip.
    pub fn waiting_budget(&self) -> Seconds {
        self.deadline - self.start_time - self.route.total_travel_time()
    }
}

/// Minimum-total-travel-time route between two hubs.
///
/// Ties are broken toward the lexicographically smallest hub sequence, which
/// makes route choice deterministic across runs and platforms.
pub fn shortest_route(network: &RoadNetwork, origin: usize, destination: usize) -> Result<Route> {
    if origin == destination {
        return Err(Error::InvalidArgument(format!(
            "origin and destination are both hub {origin}"
        )));
    }
    if origin >= network.hub_count() || destination >= network.hub_count() {
        return Err(Error::InvalidArgument(format!(
            "hub pair ({origin}, {destination}) outside the network"
        )));
    }

    // Adjacency in ascending neighbor order so heap contents are canonical.
    let mut adjacency: Vec<Vec<(usize, Seconds)>> = vec![Vec::new(); network.hub_count()];
    for seg in network.segments() {
        adjacency[seg.from].push((seg.to, seg.travel_time));
    }

    // Entries ordered by (distance, hub sequence); the first pop of a hub
    // finalizes its lexicographically smallest shortest path.
    let mut heap: BinaryHeap<Reverse<(Seconds, Vec<usize>)>> = BinaryHeap::new();
    heap.push(Reverse((0, vec![origin])));
    let mut finalized = HashSet::new();

    while let Some(Reverse((dist, path))) = heap.pop() {
        let here = *path.last().expect("paths are nonempty");
        if here == destination {
            return Route::new(path, network);
        }
        if !finalized.insert(here) {
            continue;
        }
        for &(next, tau) in &adjacency[here] {
            if !finalized.contains(&next) {
                let mut extended = path.clone();
                extended.push(next);
                heap.push(Reverse((dist + tau, extended)));
            }
        }
    }

    Err(Error::NoRoute {
        from: origin,
        to: destination,
    })
}

/// Travel time for a distance at constant speed, rounded half-up to whole
/// seconds and clamped to at least one second.
pub fn travel_time_for_distance(distance_km: f64, speed_kmh: f64) -> Seconds {
    debug_assert!(speed_kmh > 0.0);
    let seconds = distance_km / speed_kmh * 3600.0;
    ((seconds + 0.5).floor() as Seconds).max(1)
}
