//! Deterministic discrete-event simulation of a scenario under one
//! coordination scheme, plus the metric suite.
//!
//! Trucks are advanced by arrival events in (time, truck id) order; each
//! non-final arrival runs the full board transaction of
//! [`HubBoard::on_arrival`]. Trucks that leave the same hub in the same
//! second onto the same directed road segment form one platoon on that
//! segment.

use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::time::Duration;

use crate::coordination::{DecisionEvent, HubBoard, SchemeKind};
use crate::dp::{DpInstance, SolveResult};
use crate::error::{Error, Result};
use crate::network::{FleetId, Scenario, Seconds, Truck, TruckId};
use crate::reward::average_platoon_profit;

/// Event kinds, ordered so same-second arrivals process before departures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    ArriveHub(usize),
    DepartHub(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub time: Seconds,
    pub truck: TruckId,
    pub kind: EventKind,
}

/// Min-ordered event queue over (time, truck id, kind).
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    last_popped: Option<Seconds>,
}

impl EventQueue {
    pub fn new() -> Self {
        EventQueue::default()
    }

    pub fn push(&mut self, event: Event) {
        self.heap.push(Reverse(event));
    }

    pub fn pop(&mut self) -> Option<Event> {
        let event = self.heap.pop().map(|Reverse(e)| e)?;
        debug_assert!(
            self.last_popped.is_none_or(|t| t <= event.time),
            "event times must be non-decreasing"
        );
        self.last_popped = Some(event.time);
        Some(event)
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Trucks that left one hub at one second onto one directed segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlatoonRecord {
    pub edge: (usize, usize),
    pub departure_time: Seconds,
    /// Sorted member ids, always at least two.
    pub members: Vec<TruckId>,
}

impl PlatoonRecord {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Wall-clock summary of the per-decision solver times. Excluded from
/// serialized reports so that identical inputs produce identical bytes.
#[derive(Debug, Clone, Copy, Default)]
pub struct TimingStats {
    pub decisions: usize,
    pub total: Duration,
    pub max: Duration,
}

impl TimingStats {
    fn record(&mut self, elapsed: Duration) {
        self.decisions += 1;
        self.total += elapsed;
        self.max = self.max.max(elapsed);
    }

    pub fn mean(&self) -> Duration {
        if self.decisions == 0 {
            Duration::ZERO
        } else {
            self.total / self.decisions as u32
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeRate {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HubRate {
    pub hub: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HubWait {
    pub hub: usize,
    pub mean_wait_s: f64,
    pub decisions: usize,
}

/// The economic and platooning metrics of one run.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub scheme: SchemeKind,
    pub n_trucks: usize,
    pub n_decisions: usize,
    /// Sum of the per-fleet realized rewards.
    pub total_reward: f64,
    /// Realized platooning profit minus waiting loss per fleet.
    pub fleet_rewards: BTreeMap<FleetId, f64>,
    /// Fleet-wide fuel saving as a fraction of baseline consumption.
    pub fuel_saving_fraction: f64,
    /// Equal to the fuel saving under the linear conversion model.
    pub co2_reduction_fraction: f64,
    /// Fraction of total travel time driven as a platoon follower.
    pub system_platooning_rate: f64,
    pub n_platoons: usize,
    pub platoon_size_histogram: BTreeMap<usize, usize>,
    /// Follower share of traversals per used edge; unused edges are absent.
    pub edge_platooning_rate: Vec<EdgeRate>,
    /// Share of all trucks that gained new platoon partners at each hub.
    pub hub_formation_rate: Vec<HubRate>,
    /// Mean committed wait per decision at each hub.
    pub hub_mean_wait_s: Vec<HubWait>,
    /// Mean total wait per truck over its whole trip.
    pub mean_wait_s: f64,
    #[serde(skip)]
    pub timing: TimingStats,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialization cannot fail")
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub metrics: MetricsReport,
    pub platoons: Vec<PlatoonRecord>,
    pub decisions: Vec<DecisionEvent>,
    /// Final arrival time of every truck at its destination.
    pub final_arrivals: BTreeMap<TruckId, Seconds>,
}

/// Hook into each decision as it happens; used by the benchmark command and
/// by tests that need the solver instances a run produced.
pub trait DecisionObserver {
    fn on_decision(&mut self, instance: &DpInstance, event: &DecisionEvent, result: &SolveResult);
}

struct NoopObserver;

impl DecisionObserver for NoopObserver {
    fn on_decision(&mut self, _: &DpInstance, _: &DecisionEvent, _: &SolveResult) {}
}

/// Run a scenario under one scheme. Bit-deterministic given its inputs.
pub fn run_simulation(scenario: &Scenario, scheme: SchemeKind) -> Result<SimOutput> {
    run_simulation_observed(scenario, scheme, &mut NoopObserver)
}

pub fn run_simulation_observed(
    scenario: &Scenario,
    scheme: SchemeKind,
    observer: &mut dyn DecisionObserver,
) -> Result<SimOutput> {
    let trucks: HashMap<TruckId, &Truck> =
        scenario.trucks.iter().map(|t| (t.id, t)).collect();

    let mut board = HubBoard::new();
    let mut queue = EventQueue::new();
    for truck in &scenario.trucks {
        board.register(truck)?;
        queue.push(Event {
            time: truck.start_time,
            truck: truck.id,
            kind: EventKind::ArriveHub(0),
        });
    }

    let mut decisions: Vec<DecisionEvent> = Vec::new();
    let mut departures: Vec<(TruckId, usize, (usize, usize), Seconds)> = Vec::new();
    let mut final_arrivals = BTreeMap::new();
    let mut timing = TimingStats::default();

    while let Some(event) = queue.pop() {
        let truck = trucks[&event.truck];
        match event.kind {
            EventKind::ArriveHub(stage) => {
                if stage == truck.route.num_edges() {
                    board.mark_arrival(truck, stage, event.time)?;
                    if event.time > truck.deadline {
                        return Err(Error::Internal(format!(
                            "truck {} missed its deadline: arrived {} > {}",
                            truck.id, event.time, truck.deadline
                        )));
                    }
                    final_arrivals.insert(truck.id, event.time);
                } else {
                    let outcome =
                        board.on_arrival(truck, stage, event.time, scheme, &scenario.economics)?;
                    timing.record(outcome.result.stats.wall_time);
                    observer.on_decision(&outcome.instance, &outcome.event, &outcome.result);

                    let depart = event.time + outcome.event.committed_wait;
                    departures.push((truck.id, stage, truck.route.edge(stage), depart));
                    queue.push(Event {
                        time: depart,
                        truck: truck.id,
                        kind: EventKind::DepartHub(stage),
                    });
                    queue.push(Event {
                        time: depart + truck.route.travel_time(stage),
                        truck: truck.id,
                        kind: EventKind::ArriveHub(stage + 1),
                    });
                    decisions.push(outcome.event);
                }
            }
            EventKind::DepartHub(stage) => {
                board.mark_departed(event.truck, stage)?;
            }
        }
    }

    let platoons = group_platoons(&departures);
    let metrics = compute_metrics(scenario, scheme, &platoons, &decisions, timing);
    Ok(SimOutput {
        metrics,
        platoons,
        decisions,
        final_arrivals,
    })
}

/// Group realized departures into platoons: the equivalence classes of
/// (directed edge, departure second) with at least two members.
fn group_platoons(
    departures: &[(TruckId, usize, (usize, usize), Seconds)],
) -> Vec<PlatoonRecord> {
    let mut groups: BTreeMap<((usize, usize), Seconds), Vec<TruckId>> = BTreeMap::new();
    for &(truck, _stage, edge, time) in departures {
        groups.entry((edge, time)).or_default().push(truck);
    }
    groups
        .into_iter()
        .filter(|(_, members)| members.len() >= 2)
        .map(|((edge, departure_time), mut members)| {
            members.sort_unstable();
            PlatoonRecord {
                edge,
                departure_time,
                members,
            }
        })
        .collect()
}

/// Per-fleet realized reward: each platoon member earns its fleet the
/// even-share profit of its platoon; each committed wait costs its fleet the
/// truck's waiting rate.
pub fn realized_fleet_reward(
    platoons: &[PlatoonRecord],
    decisions: &[DecisionEvent],
    scenario: &Scenario,
) -> BTreeMap<FleetId, f64> {
    let trucks: HashMap<TruckId, &Truck> =
        scenario.trucks.iter().map(|t| (t.id, t)).collect();
    let mut rewards: BTreeMap<FleetId, f64> =
        scenario.trucks.iter().map(|t| (t.fleet, 0.0)).collect();

    for platoon in platoons {
        let tau = scenario
            .network
            .travel_time(platoon.edge.0, platoon.edge.1)
            .expect("platoon edges exist in the network");
        let share = average_platoon_profit(platoon.size(), tau, &scenario.economics);
        for member in &platoon.members {
            *rewards.entry(trucks[member].fleet).or_insert(0.0) += share;
        }
    }
    for decision in decisions {
        let truck = trucks[&decision.truck];
        *rewards.entry(truck.fleet).or_insert(0.0) -=
            truck.waiting_loss_per_hour * decision.committed_wait as f64 / 3600.0;
    }
    rewards
}

fn traversal_counts(scenario: &Scenario) -> BTreeMap<(usize, usize), u64> {
    let mut counts = BTreeMap::new();
    for truck in &scenario.trucks {
        for k in 0..truck.route.num_edges() {
            *counts.entry(truck.route.edge(k)).or_insert(0) += 1;
        }
    }
    counts
}

fn follower_counts(platoons: &[PlatoonRecord]) -> BTreeMap<(usize, usize), u64> {
    let mut counts = BTreeMap::new();
    for platoon in platoons {
        *counts.entry(platoon.edge).or_insert(0) += platoon.size() as u64 - 1;
    }
    counts
}

/// Fleet-wide fuel saving: the follower fraction of total travel time scaled
/// by the per-follower fuel reduction.
pub fn fuel_saving_fraction(platoons: &[PlatoonRecord], scenario: &Scenario) -> f64 {
    scenario.economics.fuel_saving_fraction * follower_time_share(platoons, scenario)
}

fn follower_time_share(platoons: &[PlatoonRecord], scenario: &Scenario) -> f64 {
    let tau = |edge: (usize, usize)| -> f64 {
        scenario
            .network
            .travel_time(edge.0, edge.1)
            .expect("edges exist") as f64
    };
    let total: f64 = traversal_counts(scenario)
        .iter()
        .map(|(&edge, &n)| n as f64 * tau(edge))
        .sum();
    if total == 0.0 {
        return 0.0;
    }
    // empty float sums are -0.0; keep reported zeros positive
    let follower: f64 = 0.0
        + follower_counts(platoons)
            .iter()
            .map(|(&edge, &n)| n as f64 * tau(edge))
            .sum::<f64>();
    follower / total
}

/// Follower share of the traversals of one edge, or `None` if no truck uses
/// it.
pub fn platooning_rate(
    platoons: &[PlatoonRecord],
    scenario: &Scenario,
    edge: (usize, usize),
) -> Option<f64> {
    let traversals = *traversal_counts(scenario).get(&edge)?;
    if traversals == 0 {
        return None;
    }
    let followers = *follower_counts(platoons).get(&edge).unwrap_or(&0);
    Some(followers as f64 / traversals as f64)
}

/// Trucks that departed each hub in a platoon containing at least one truck
/// they did not arrive platooned with, keyed by physical hub.
fn formation_counts(
    decisions: &[DecisionEvent],
    platoons: &[PlatoonRecord],
    scenario: &Scenario,
) -> BTreeMap<usize, usize> {
    let members: HashMap<((usize, usize), Seconds), &Vec<TruckId>> = platoons
        .iter()
        .map(|p| ((p.edge, p.departure_time), &p.members))
        .collect();
    let by_truck_stage: HashMap<(TruckId, usize), &DecisionEvent> = decisions
        .iter()
        .map(|d| ((d.truck, d.stage), d))
        .collect();
    let trucks: HashMap<TruckId, &Truck> =
        scenario.trucks.iter().map(|t| (t.id, t)).collect();

    let mut gained: BTreeMap<usize, BTreeSet<TruckId>> = BTreeMap::new();
    for decision in decisions {
        let truck = trucks[&decision.truck];
        let edge = truck.route.edge(decision.stage);
        let departure = decision.time + decision.committed_wait;
        let Some(depart_group) = members.get(&(edge, departure)) else {
            continue; // departed solo
        };

        let arrived_with: Option<&Vec<TruckId>> = if decision.stage == 0 {
            None
        } else {
            by_truck_stage.get(&(decision.truck, decision.stage - 1)).and_then(|prev| {
                let prev_edge = truck.route.edge(prev.stage);
                let prev_departure = prev.time + prev.committed_wait;
                members.get(&(prev_edge, prev_departure)).copied()
            })
        };

        let new_partner = depart_group.iter().any(|&j| {
            j != decision.truck && arrived_with.is_none_or(|group| !group.contains(&j))
        });
        if new_partner {
            gained.entry(decision.hub).or_default().insert(decision.truck);
        }
    }
    gained.into_iter().map(|(hub, set)| (hub, set.len())).collect()
}

/// Share of all trucks that found new platoon partners at `hub`.
pub fn formation_rate(
    decisions: &[DecisionEvent],
    platoons: &[PlatoonRecord],
    scenario: &Scenario,
    hub: usize,
) -> f64 {
    if scenario.trucks.is_empty() {
        return 0.0;
    }
    let counts = formation_counts(decisions, platoons, scenario);
    *counts.get(&hub).unwrap_or(&0) as f64 / scenario.trucks.len() as f64
}

fn compute_metrics(
    scenario: &Scenario,
    scheme: SchemeKind,
    platoons: &[PlatoonRecord],
    decisions: &[DecisionEvent],
    timing: TimingStats,
) -> MetricsReport {
    let n_trucks = scenario.trucks.len();
    let fleet_rewards = realized_fleet_reward(platoons, decisions, scenario);
    let total_reward: f64 = 0.0 + fleet_rewards.values().sum::<f64>();

    let traversals = traversal_counts(scenario);
    let followers = follower_counts(platoons);
    let edge_platooning_rate: Vec<EdgeRate> = traversals
        .iter()
        .map(|(&(from, to), &n)| EdgeRate {
            from,
            to,
            rate: *followers.get(&(from, to)).unwrap_or(&0) as f64 / n as f64,
        })
        .collect();

    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for platoon in platoons {
        *histogram.entry(platoon.size()).or_insert(0) += 1;
    }

    let formation = formation_counts(decisions, platoons, scenario);
    let hub_formation_rate: Vec<HubRate> = formation
        .into_iter()
        .map(|(hub, count)| HubRate {
            hub,
            rate: if n_trucks == 0 {
                0.0
            } else {
                count as f64 / n_trucks as f64
            },
        })
        .collect();

    let mut hub_waits: BTreeMap<usize, (Seconds, usize)> = BTreeMap::new();
    for d in decisions {
        let entry = hub_waits.entry(d.hub).or_insert((0, 0));
        entry.0 += d.committed_wait;
        entry.1 += 1;
    }
    let hub_mean_wait_s: Vec<HubWait> = hub_waits
        .into_iter()
        .map(|(hub, (sum, count))| HubWait {
            hub,
            mean_wait_s: sum as f64 / count as f64,
            decisions: count,
        })
        .collect();

    let total_wait: Seconds = decisions.iter().map(|d| d.committed_wait).sum();
    let fuel = fuel_saving_fraction(platoons, scenario);

    MetricsReport {
        scheme,
        n_trucks,
        n_decisions: decisions.len(),
        total_reward,
        fleet_rewards,
        fuel_saving_fraction: fuel,
        co2_reduction_fraction: fuel,
        system_platooning_rate: follower_time_share(platoons, scenario),
        n_platoons: platoons.len(),
        platoon_size_histogram: histogram,
        edge_platooning_rate,
        hub_formation_rate,
        hub_mean_wait_s,
        mean_wait_s: if n_trucks == 0 {
            0.0
        } else {
            total_wait as f64 / n_trucks as f64
        },
        timing,
    }
}

/// Run all three schemes on one scenario. `PLATOON_THREADS` caps how many run
/// in parallel (default: all three).
pub fn compare_schemes(scenario: &Scenario) -> Result<Vec<(SchemeKind, SimOutput)>> {
    let threads = std::env::var("PLATOON_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(3)
        .clamp(1, 3);

    let mut outputs = Vec::with_capacity(3);
    for batch in SchemeKind::ALL.chunks(threads) {
        let results = std::thread::scope(|scope| {
            let handles: Vec<_> = batch
                .iter()
                .map(|&scheme| scope.spawn(move || run_simulation(scenario, scheme)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("scheme run panicked"))
                .collect::<Vec<_>>()
        });
        for (&scheme, result) in batch.iter().zip(results) {
            outputs.push((scheme, result?));
        }
    }
    Ok(outputs)
}

/// The side-by-side comparison table.
pub fn comparison_csv(runs: &[(SchemeKind, SimOutput)]) -> String {
    let mut csv =
        String::from("scheme,total_reward,fuel_saving,system_platooning_rate,n_platoons,mean_wait_s\n");
    for (scheme, output) in runs {
        let m = &output.metrics;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            scheme,
            m.total_reward,
            m.fuel_saving_fraction,
            m.system_platooning_rate,
            m.n_platoons,
            m.mean_wait_s
        ));
    }
    csv
}

/// The per-platoon table: `edge_from,edge_to,depart_s,size,members` with
/// members separated by semicolons.
pub fn platoons_csv(platoons: &[PlatoonRecord]) -> String {
    let mut csv = String::from("edge_from,edge_to,depart_s,size,members\n");
    for p in platoons {
        let members: Vec<String> = p.members.iter().map(|m| m.to_string()).collect();
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.edge.0,
            p.edge.1,
            p.departure_time,
            p.size(),
            members.join(";")
        ));
    }
    csv
}

/// The decision stream, one JSON object per line.
pub fn decisions_jsonl(decisions: &[DecisionEvent]) -> String {
    let mut out = String::new();
    for d in decisions {
        out.push_str(&d.to_json_line());
        out.push('\n');
    }
    out
}
