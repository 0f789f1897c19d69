//! The shared hub-board information layer and the coordination schemes.
//!
//! Every truck uploads its route, fleet tag, and zero-wait departure
//! predictions before starting. On each hub arrival it reads the board,
//! solves its waiting-time problem, commits the wait for the current hub, and
//! uploads its updated departure chain. Board mutations are strictly
//! serialized: the simulation processes arrivals in (time, truck id) order,
//! so each decision is an atomic read-solve-write transaction.

use serde::Serialize;
use std::collections::{BTreeMap, HashMap};

use crate::dp::{self, DpInstance, DpStage, SolveResult};
use crate::error::{Error, Result};
use crate::network::{FleetId, Route, Seconds, Truck, TruckId};
use crate::reward::{EconomicParams, PartnerPrediction};

/// Which trucks a decision may consider as platoon partners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SchemeKind {
    /// Board-predicted departures of all fleets at every remaining hub.
    #[serde(rename = "predictive")]
    PredictiveMultiFleet,
    /// Departure predictions of the current hub only: trucks align with the
    /// traffic through the hub they are at, with no lookahead at future hubs.
    #[serde(rename = "spontaneous")]
    SpontaneousMultiFleet,
    /// Board predictions restricted to the truck's own fleet.
    #[serde(rename = "single-fleet")]
    SingleFleet,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::PredictiveMultiFleet,
        SchemeKind::SpontaneousMultiFleet,
        SchemeKind::SingleFleet,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::PredictiveMultiFleet => "predictive",
            SchemeKind::SpontaneousMultiFleet => "spontaneous",
            SchemeKind::SingleFleet => "single-fleet",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predictive" => Ok(SchemeKind::PredictiveMultiFleet),
            "spontaneous" => Ok(SchemeKind::SpontaneousMultiFleet),
            "single-fleet" => Ok(SchemeKind::SingleFleet),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme '{other}' (expected predictive, spontaneous, or single-fleet)"
            ))),
        }
    }
}

/// Where a truck currently is, as far as the board knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Position {
    /// Registered but not yet arrived at its first hub.
    NotStarted,
    /// At the hub with this route index (the destination once the trip ends).
    AtHub(usize),
    /// Traversing the edge with this route index.
    InTransit(usize),
}

/// One committed decision: the wait applied at the current hub plus the
/// predicted waits uploaded for the remaining hubs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionEvent {
    pub truck: TruckId,
    /// Route index of the hub where the decision was made.
    pub stage: usize,
    /// Physical hub id.
    pub hub: usize,
    pub time: Seconds,
    pub committed_wait: Seconds,
    pub predicted_remaining_waits: Vec<Seconds>,
    /// Partners whose predicted departure equals the committed departure.
    pub partners_matched: Vec<TruckId>,
}

#[derive(Serialize)]
struct DecisionLine<'a> {
    t: Seconds,
    truck: TruckId,
    hub: usize,
    wait_s: Seconds,
    partners_matched: &'a [TruckId],
}

impl DecisionEvent {
    /// One JSON line in the decision stream format.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&DecisionLine {
            t: self.time,
            truck: self.truck,
            hub: self.hub,
            wait_s: self.committed_wait,
            partners_matched: &self.partners_matched,
        })
        .expect("decision serialization cannot fail")
    }
}

/// Everything produced by one arrival decision.
#[derive(Debug, Clone)]
pub struct DecisionOutcome {
    pub event: DecisionEvent,
    pub instance: DpInstance,
    pub result: SolveResult,
}

#[derive(Debug, Clone, Serialize)]
struct BoardEntry {
    fleet: FleetId,
    #[serde(skip)]
    route: Route,
    /// Predicted departure from each hub, indexed by route stage.
    predicted_departures: Vec<Seconds>,
    /// Predicted arrival at each hub, indexed 0..=num_edges.
    arrival_predictions: Vec<Seconds>,
    position: Position,
}

impl BoardEntry {
    fn route_hubs(&self) -> &[usize] {
        self.route.hubs()
    }
}

/// The shared information store: per-truck routes, fleet tags, and predicted
/// departure chains.
#[derive(Debug, Default)]
pub struct HubBoard {
    entries: BTreeMap<TruckId, BoardEntry>,
    /// (from, to) edge -> trucks traversing it with the stage index at which
    /// they do. Built at registration; routes are fixed.
    edge_index: HashMap<(usize, usize), Vec<(TruckId, usize)>>,
}

impl HubBoard {
    pub fn new() -> Self {
        HubBoard::default()
    }

    /// Upload a truck's route, fleet tag, and zero-wait departure chain.
    pub fn register(&mut self, truck: &Truck) -> Result<()> {
        if self.entries.contains_key(&truck.id) {
            return Err(Error::InvalidState(format!(
                "truck {} is already registered",
                truck.id
            )));
        }
        let n = truck.route.num_edges();
        let mut arrivals = Vec::with_capacity(n + 1);
        let mut departures = Vec::with_capacity(n);
        let mut t = truck.start_time;
        for k in 0..n {
            arrivals.push(t);
            departures.push(t); // zero predicted wait
            t += truck.route.travel_time(k);
        }
        arrivals.push(t);

        for k in 0..n {
            self.edge_index
                .entry(truck.route.edge(k))
                .or_default()
                .push((truck.id, k));
        }
        self.entries.insert(
            truck.id,
            BoardEntry {
                fleet: truck.fleet,
                route: truck.route.clone(),
                predicted_departures: departures,
                arrival_predictions: arrivals,
                position: Position::NotStarted,
            },
        );
        Ok(())
    }

    pub fn predicted_departures(&self, truck: TruckId) -> Option<&[Seconds]> {
        self.entries
            .get(&truck)
            .map(|e| e.predicted_departures.as_slice())
    }

    pub fn arrival_predictions(&self, truck: TruckId) -> Option<&[Seconds]> {
        self.entries
            .get(&truck)
            .map(|e| e.arrival_predictions.as_slice())
    }

    pub fn position(&self, truck: TruckId) -> Option<Position> {
        self.entries.get(&truck).map(|e| e.position)
    }

    /// Record that a truck reached its `stage`-th hub at `time`.
    pub fn mark_arrival(&mut self, truck: &Truck, stage: usize, time: Seconds) -> Result<()> {
        let entry = self
            .entries
            .get_mut(&truck.id)
            .ok_or_else(|| Error::InvalidState(format!("truck {} not registered", truck.id)))?;
        entry.position = Position::AtHub(stage);
        entry.arrival_predictions[stage] = time;
        Ok(())
    }

    /// Record that a truck departed onto its `stage`-th edge.
    pub fn mark_departed(&mut self, truck: TruckId, stage: usize) -> Result<()> {
        let entry = self
            .entries
            .get_mut(&truck)
            .ok_or_else(|| Error::InvalidState(format!("truck {truck} not registered")))?;
        entry.position = Position::InTransit(stage);
        Ok(())
    }

    /// Build the solver instance a truck sees at (`stage`, `arrival`) under
    /// the given scheme.
    pub fn build_instance(
        &self,
        truck: &Truck,
        stage: usize,
        arrival: Seconds,
        scheme: SchemeKind,
        econ: &EconomicParams,
    ) -> Result<DpInstance> {
        let n = truck.route.num_edges();
        if stage >= n {
            return Err(Error::InvalidState(format!(
                "truck {} has no decision at route index {stage}",
                truck.id
            )));
        }
        if !self.entries.contains_key(&truck.id) {
            return Err(Error::InvalidState(format!(
                "truck {} not registered",
                truck.id
            )));
        }

        let mut stages = Vec::with_capacity(n - stage);
        let mut no_wait_arrival = arrival;
        let mut remaining: Seconds = (stage..n).map(|k| truck.route.travel_time(k)).sum();
        for m in stage..n {
            let tau = truck.route.travel_time(m);
            // departures outside [no-wait arrival, deadline - remaining] can
            // never be matched from any reachable state
            let latest_departure = truck.deadline - remaining;
            let window = no_wait_arrival..=latest_departure;

            // the spontaneous scheme sees departures at the current hub only
            let visible = match scheme {
                SchemeKind::PredictiveMultiFleet | SchemeKind::SingleFleet => true,
                SchemeKind::SpontaneousMultiFleet => m == stage,
            };
            let mut partners = Vec::new();
            if visible {
                if let Some(users) = self.edge_index.get(&truck.route.edge(m)) {
                    for &(other, other_stage) in users {
                        if other == truck.id {
                            continue;
                        }
                        let entry = &self.entries[&other];
                        if scheme == SchemeKind::SingleFleet && entry.fleet != truck.fleet {
                            continue;
                        }
                        let departure = entry.predicted_departures[other_stage];
                        if window.contains(&departure) {
                            partners.push(PartnerPrediction {
                                truck: other,
                                fleet: entry.fleet,
                                predicted_departure: departure,
                            });
                        }
                    }
                }
            }
            stages.push(DpStage {
                edge_travel_time: tau,
                partners,
            });
            no_wait_arrival += tau;
            remaining -= tau;
        }

        Ok(DpInstance {
            arrival,
            deadline: truck.deadline,
            own_fleet: truck.fleet,
            waiting_loss_per_hour: truck.waiting_loss_per_hour,
            econ: *econ,
            stages,
        })
    }

    /// Full arrival transaction: mark the arrival, build the instance, solve
    /// it, commit the wait for this hub, and upload the updated departure
    /// chain.
    pub fn on_arrival(
        &mut self,
        truck: &Truck,
        stage: usize,
        arrival: Seconds,
        scheme: SchemeKind,
        econ: &EconomicParams,
    ) -> Result<DecisionOutcome> {
        self.mark_arrival(truck, stage, arrival)?;
        let instance = self.build_instance(truck, stage, arrival, scheme, econ)?;
        let result = dp::solve(&instance)?;

        let committed_wait = result.waits[0];
        let departure = arrival + committed_wait;
        let mut partners_matched: Vec<TruckId> = instance.stages[0]
            .partners
            .iter()
            .filter(|p| p.predicted_departure == departure)
            .map(|p| p.truck)
            .collect();
        partners_matched.sort_unstable();

        let entry = self
            .entries
            .get_mut(&truck.id)
            .expect("registration checked above");
        let n = truck.route.num_edges();
        let mut t = arrival;
        for m in stage..n {
            let wait = result.waits[m - stage];
            entry.arrival_predictions[m] = t;
            entry.predicted_departures[m] = t + wait;
            t += wait + truck.route.travel_time(m);
        }
        entry.arrival_predictions[n] = t;
        debug_assert!(t <= truck.deadline);

        let hub = truck.route.hub_at(stage);
        Ok(DecisionOutcome {
            event: DecisionEvent {
                truck: truck.id,
                stage,
                hub,
                time: arrival,
                committed_wait,
                predicted_remaining_waits: result.waits[1..].to_vec(),
                partners_matched,
            },
            instance,
            result,
        })
    }

    /// Consistency of every entry's chain: departure after arrival at each
    /// hub and arrivals that follow from departures plus travel times.
    pub fn validate_chains(&self) -> Result<()> {
        for (id, entry) in &self.entries {
            let n = entry.route.num_edges();
            for k in 0..n {
                if entry.predicted_departures[k] < entry.arrival_predictions[k] {
                    return Err(Error::Internal(format!(
                        "truck {id}: departure before arrival at route index {k}"
                    )));
                }
                let chained = entry.predicted_departures[k] + entry.route.travel_time(k);
                if entry.arrival_predictions[k + 1] != chained {
                    return Err(Error::Internal(format!(
                        "truck {id}: broken chain at route index {k}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Ordered JSON snapshot for debugging and golden tests.
    pub fn snapshot_json(&self) -> String {
        #[derive(Serialize)]
        struct Snapshot<'a> {
            trucks: BTreeMap<u32, SnapshotEntry<'a>>,
        }
        #[derive(Serialize)]
        struct SnapshotEntry<'a> {
            fleet: FleetId,
            route: &'a [usize],
            predicted_departures: &'a [Seconds],
            arrival_predictions: &'a [Seconds],
            position: Position,
        }
        let snapshot = Snapshot {
            trucks: self
                .entries
                .iter()
                .map(|(id, e)| {
                    (
                        id.0,
                        SnapshotEntry {
                            fleet: e.fleet,
                            route: e.route_hubs(),
                            predicted_departures: &e.predicted_departures,
                            arrival_predictions: &e.arrival_predictions,
                            position: e.position,
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&snapshot).expect("snapshot serialization cannot fail")
    }
}
