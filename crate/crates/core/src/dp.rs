//! Exact finite-horizon solver for one truck's waiting-time schedule.
//!
//! The stage reward is non-zero only at waits that align the truck's
//! departure with some partner's predicted departure, so the continuous wait
//! choice at each hub collapses without loss of optimality to a finite set:
//! zero plus every deadline-feasible partner alignment. The induced arrival
//! times form a finite state space per stage, and backward induction over it
//! is exact. An exhaustive enumeration over the same discrete wait options
//! serves as the independent oracle.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::network::{FleetId, Seconds};
use crate::reward::{
    matched_counts, stage_reward, terminal_reward, EconomicParams, PartnerPrediction,
};

/// Two candidate values within this distance are treated as a tie and the
/// smaller wait wins. Both the solver and the enumeration oracle apply the
/// same rule, so exact-arithmetic ties survive the differing float summation
/// orders of the two methods.
pub const VALUE_TIE_EPSILON: f64 = 1e-9;

/// Enumeration guard: maximum wait-option combinations the oracle will visit.
pub const DEFAULT_ENUMERATION_GUARD: u64 = 100_000_000;

/// One remaining road segment with the partner departures predicted for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpStage {
    #[serde(rename = "tau_s")]
    pub edge_travel_time: Seconds,
    pub partners: Vec<PartnerPrediction>,
}

/// One truck's decision problem upon arriving at a hub: the remaining stages,
/// the delivery deadline, and the economics of waiting versus platooning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpInstance {
    #[serde(rename = "arrival_s")]
    pub arrival: Seconds,
    #[serde(rename = "deadline_s")]
    pub deadline: Seconds,
    pub own_fleet: FleetId,
    #[serde(rename = "epsilon_per_h")]
    pub waiting_loss_per_hour: f64,
    #[serde(default)]
    pub econ: EconomicParams,
    pub stages: Vec<DpStage>,
}

impl DpInstance {
    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn total_travel_time(&self) -> Seconds {
        self.stages.iter().map(|s| s.edge_travel_time).sum()
    }

    /// Travel time from the start of `stage` to the destination.
    pub fn remaining_travel(&self, stage: usize) -> Seconds {
        self.stages[stage..].iter().map(|s| s.edge_travel_time).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::InvalidArgument("instance has no stages".into()));
        }
        for (m, s) in self.stages.iter().enumerate() {
            if s.edge_travel_time <= 0 {
                return Err(Error::InvalidArgument(format!(
                    "stage {m} has non-positive travel time"
                )));
            }
            for p in &s.partners {
                if p.predicted_departure < 0 {
                    return Err(Error::InvalidArgument(format!(
                        "stage {m} partner {} has negative departure",
                        p.truck
                    )));
                }
            }
        }
        if self.waiting_loss_per_hour < 0.0 {
            return Err(Error::InvalidArgument(
                "waiting loss rate must be non-negative".into(),
            ));
        }
        self.econ.validate()?;
        if self.arrival + self.total_travel_time() > self.deadline {
            return Err(Error::Infeasible(format!(
                "no-wait arrival {} exceeds deadline {}",
                self.arrival + self.total_travel_time(),
                self.deadline
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("invalid instance JSON: {e}")))
    }
}

/// Admissible waits at (`stage`, `state`): zero plus every partner alignment
/// that keeps the deadline reachable. Sorted ascending, deduplicated.
pub fn decision_space(instance: &DpInstance, stage: usize, state: Seconds) -> Vec<Seconds> {
    let bound = instance.deadline - state - instance.remaining_travel(stage);
    debug_assert!(bound >= 0, "decision space queried at an infeasible state");
    let mut waits = vec![0];
    for p in &instance.stages[stage].partners {
        let wait = p.predicted_departure - state;
        if wait >= 0 && wait <= bound {
            waits.push(wait);
        }
    }
    waits.sort_unstable();
    waits.dedup();
    waits
}

/// Reachable arrival times per stage. Index 0 is the decision hub (a single
/// state), index `num_stages()` the destination.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    per_stage: Vec<Vec<Seconds>>,
}

impl StateSpace {
    pub fn states(&self, stage: usize) -> &[Seconds] {
        &self.per_stage[stage]
    }

    pub fn num_levels(&self) -> usize {
        self.per_stage.len()
    }

    pub fn state_counts(&self) -> Vec<usize> {
        self.per_stage.iter().map(|s| s.len()).collect()
    }
}

/// Forward recursion of the reachable arrival-time sets under the discrete
/// wait options.
///
/// The wait bound at state `t` caps the departure at the stage constant
/// `deadline - remaining_travel`, so the successor set is the image of the
/// current states (zero wait) plus the image of every feasible partner
/// departure at or after the earliest state.
pub fn generate_state_space(instance: &DpInstance) -> StateSpace {
    let n = instance.num_stages();
    let mut per_stage = Vec::with_capacity(n + 1);
    per_stage.push(vec![instance.arrival]);
    let mut remaining = instance.total_travel_time();
    for m in 0..n {
        let tau = instance.stages[m].edge_travel_time;
        let latest_departure = instance.deadline - remaining;
        let current = &per_stage[m];
        let earliest = *current.first().expect("state sets are nonempty");

        let mut next: Vec<Seconds> = current.iter().map(|&t| t + tau).collect();
        for p in &instance.stages[m].partners {
            let d = p.predicted_departure;
            if d >= earliest && d <= latest_departure {
                next.push(d + tau);
            }
        }
        next.sort_unstable();
        next.dedup();
        per_stage.push(next);
        remaining -= tau;
    }
    StateSpace { per_stage }
}

/// Optimal value and argmax wait per reachable state, filled by the backward
/// pass. The terminal level stores values only.
#[derive(Debug, Clone)]
pub struct ValueTable {
    levels: Vec<LevelValues>,
}

#[derive(Debug, Clone)]
struct LevelValues {
    states: Vec<Seconds>,
    values: Vec<f64>,
    best_waits: Vec<Seconds>,
}

impl ValueTable {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn states(&self, stage: usize) -> &[Seconds] {
        &self.levels[stage].states
    }

    pub fn value_at(&self, stage: usize, state: Seconds) -> Option<f64> {
        let level = self.levels.get(stage)?;
        let idx = level.states.binary_search(&state).ok()?;
        Some(level.values[idx])
    }

    pub fn best_wait_at(&self, stage: usize, state: Seconds) -> Option<Seconds> {
        let level = self.levels.get(stage)?;
        if level.best_waits.is_empty() {
            return None;
        }
        let idx = level.states.binary_search(&state).ok()?;
        Some(level.best_waits[idx])
    }
}

/// Stage reward at (`state`, `wait`) plus the optimal value of the successor
/// state, looked up in `values`.
pub fn q_value(
    instance: &DpInstance,
    stage: usize,
    state: Seconds,
    wait: Seconds,
    values: &ValueTable,
) -> Result<f64> {
    let s = &instance.stages[stage];
    let counts = matched_counts(state, wait, &s.partners, instance.own_fleet);
    let g = stage_reward(
        s.edge_travel_time,
        counts,
        counts.total() == 0,
        &instance.econ,
    );
    let next_state = state + wait + s.edge_travel_time;
    let next_value = values.value_at(stage + 1, next_state).ok_or_else(|| {
        Error::Internal(format!(
            "state {next_state} missing from the level {} value table",
            stage + 1
        ))
    })?;
    Ok(g + next_value)
}

/// Complexity counters of one solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveStats {
    /// Stage-reward-plus-continuation evaluations performed.
    pub q_evaluations: u64,
    /// Reachable states per level (length `num_stages() + 1`).
    pub state_counts: Vec<usize>,
    /// Distinct wait options per stage, unioned over that stage's states.
    pub decision_option_counts: Vec<usize>,
    /// Maximum of `decision_option_counts`.
    pub n_tilde: usize,
    pub wall_time: Duration,
}

/// The optimal waiting plan for one instance.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Optimal wait per remaining stage.
    pub waits: Vec<Seconds>,
    /// Induced arrival times, starting at the decision hub and ending at the
    /// destination (length `num_stages() + 1`).
    pub arrivals: Vec<Seconds>,
    /// Optimal objective value at the decision hub.
    pub value: f64,
    pub stats: SolveStats,
}

/// Per-stage partner departures sorted and deduplicated, with matched-set
/// counts split by fleet. Lets the backward pass look up the stage reward of
/// a departure in O(log n) instead of rescanning the partner list.
struct StageTable {
    departures: Vec<Seconds>,
    same_fleet: Vec<u32>,
    other_fleet: Vec<u32>,
}

impl StageTable {
    fn build(stage: &DpStage, own_fleet: FleetId) -> StageTable {
        let mut sorted: Vec<&PartnerPrediction> = stage.partners.iter().collect();
        sorted.sort_by_key(|p| p.predicted_departure);
        let mut table = StageTable {
            departures: Vec::new(),
            same_fleet: Vec::new(),
            other_fleet: Vec::new(),
        };
        for p in sorted {
            if table.departures.last() != Some(&p.predicted_departure) {
                table.departures.push(p.predicted_departure);
                table.same_fleet.push(0);
                table.other_fleet.push(0);
            }
            let last = table.departures.len() - 1;
            if p.fleet == own_fleet {
                table.same_fleet[last] += 1;
            } else {
                table.other_fleet[last] += 1;
            }
        }
        table
    }

    /// Reward for departing at `departure` (zero when no partner matches).
    fn reward_at(&self, departure: Seconds, tau: Seconds, econ: &EconomicParams) -> f64 {
        match self.departures.binary_search(&departure) {
            Ok(idx) => self.reward_at_index(idx, tau, econ),
            Err(_) => 0.0,
        }
    }

    fn reward_at_index(&self, idx: usize, tau: Seconds, econ: &EconomicParams) -> f64 {
        let counts = crate::reward::PartnerCounts {
            same_fleet: self.same_fleet[idx] as usize,
            other_fleet: self.other_fleet[idx] as usize,
        };
        stage_reward(tau, counts, false, econ)
    }
}

fn backward_pass(instance: &DpInstance) -> Result<(ValueTable, u64, Vec<usize>)> {
    let n = instance.num_stages();
    let space = generate_state_space(instance);
    let tables: Vec<StageTable> = instance
        .stages
        .iter()
        .map(|s| StageTable::build(s, instance.own_fleet))
        .collect();

    let mut levels: Vec<LevelValues> = Vec::with_capacity(n + 1);
    for stage in 0..=n {
        levels.push(LevelValues {
            states: space.states(stage).to_vec(),
            values: Vec::new(),
            best_waits: Vec::new(),
        });
    }

    // Terminal level: the accumulated waiting loss.
    let no_wait_arrival = instance.arrival + instance.total_travel_time();
    levels[n].values = levels[n]
        .states
        .iter()
        .map(|&t| {
            terminal_reward(
                t,
                instance.arrival,
                no_wait_arrival - instance.arrival,
                instance.waiting_loss_per_hour,
            )
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut q_evaluations = 0u64;
    let mut option_counts = vec![0usize; n];
    let mut remaining = instance.total_travel_time();
    let suffix: Vec<Seconds> = instance
        .stages
        .iter()
        .map(|s| {
            let r = remaining;
            remaining -= s.edge_travel_time;
            r
        })
        .collect();

    for m in (0..n).rev() {
        let tau = instance.stages[m].edge_travel_time;
        let latest_departure = instance.deadline - suffix[m];
        let table = &tables[m];
        let (current, rest) = levels.split_at_mut(m + 1);
        let level = &mut current[m];
        let next_level = &rest[0];

        let next_value = |state: Seconds| -> Result<f64> {
            let idx = next_level.states.binary_search(&state).map_err(|_| {
                Error::Internal(format!(
                    "state {state} missing from the level {} value table",
                    m + 1
                ))
            })?;
            Ok(next_level.values[idx])
        };

        let mut stage_options: HashSet<Seconds> = HashSet::new();
        level.values.reserve(level.states.len());
        level.best_waits.reserve(level.states.len());
        for &t in &level.states {
            debug_assert!(t <= latest_departure);

            // Zero wait first: it is the smallest option, so later options
            // must beat it by more than the tie tolerance.
            let mut best_q = table.reward_at(t, tau, &instance.econ) + next_value(t + tau)?;
            let mut best_wait = 0;
            q_evaluations += 1;
            stage_options.insert(0);

            let lo = table.departures.partition_point(|&d| d <= t);
            let hi = table.departures.partition_point(|&d| d <= latest_departure);
            for idx in lo..hi {
                let departure = table.departures[idx];
                let q = table.reward_at_index(idx, tau, &instance.econ)
                    + next_value(departure + tau)?;
                q_evaluations += 1;
                stage_options.insert(departure - t);
                if q > best_q + VALUE_TIE_EPSILON {
                    best_q = q;
                    best_wait = departure - t;
                }
            }
            level.values.push(best_q);
            level.best_waits.push(best_wait);
        }
        option_counts[m] = stage_options.len();
    }

    Ok((ValueTable { levels }, q_evaluations, option_counts))
}

/// Run the backward pass and return the filled value table.
pub fn value_table(instance: &DpInstance) -> Result<ValueTable> {
    instance.validate()?;
    backward_pass(instance).map(|(table, _, _)| table)
}

/// Solve the instance exactly: backward induction over the discrete decision
/// and state spaces, then forward extraction of the argmax waits. Ties are
/// broken toward the smallest wait.
pub fn solve(instance: &DpInstance) -> Result<SolveResult> {
    let started = Instant::now();
    instance.validate()?;
    let n = instance.num_stages();
    let (table, q_evaluations, option_counts) = backward_pass(instance)?;

    let mut waits = Vec::with_capacity(n);
    let mut arrivals = Vec::with_capacity(n + 1);
    let mut t = instance.arrival;
    arrivals.push(t);
    for m in 0..n {
        let wait = table.best_wait_at(m, t).ok_or_else(|| {
            Error::Internal(format!("forward pass visited unknown state {t} at stage {m}"))
        })?;
        waits.push(wait);
        t = t + wait + instance.stages[m].edge_travel_time;
        arrivals.push(t);
    }
    debug_assert!(t <= instance.deadline);

    let value = table
        .value_at(0, instance.arrival)
        .ok_or_else(|| Error::Internal("root state missing from the value table".into()))?;

    let state_counts: Vec<usize> = table.levels.iter().map(|l| l.states.len()).collect();
    let n_tilde = option_counts.iter().copied().max().unwrap_or(0);
    Ok(SolveResult {
        waits,
        arrivals,
        value,
        stats: SolveStats {
            q_evaluations,
            state_counts,
            decision_option_counts: option_counts,
            n_tilde,
            wall_time: started.elapsed(),
        },
    })
}

/// Evaluate the objective of a fixed wait plan by direct forward summation:
/// the stage rewards of each induced departure plus the terminal waiting
/// loss. This is the evaluation route the enumeration oracle uses; the solver
/// never calls it.
pub fn evaluate_wait_plan(instance: &DpInstance, waits: &[Seconds]) -> Result<f64> {
    let n = instance.num_stages();
    if waits.len() != n {
        return Err(Error::InvalidArgument(format!(
            "wait plan has {} entries for {n} stages",
            waits.len()
        )));
    }
    let mut t = instance.arrival;
    let mut total = 0.0;
    for (m, &wait) in waits.iter().enumerate() {
        let bound = instance.deadline - t - instance.remaining_travel(m);
        if wait < 0 || wait > bound {
            return Err(Error::Infeasible(format!(
                "wait {wait} at stage {m} violates the deadline bound {bound}"
            )));
        }
        let stage = &instance.stages[m];
        let counts = matched_counts(t, wait, &stage.partners, instance.own_fleet);
        total += stage_reward(
            stage.edge_travel_time,
            counts,
            counts.total() == 0,
            &instance.econ,
        );
        t += wait + stage.edge_travel_time;
    }
    total += terminal_reward(
        t,
        instance.arrival,
        instance.total_travel_time(),
        instance.waiting_loss_per_hour,
    )?;
    Ok(total)
}

/// Exhaustive oracle: enumerate every combination of discrete wait options
/// along the induced trajectories and keep the best value, with the same
/// smallest-wait tie rule as [`solve`].
pub fn brute_force_solve(instance: &DpInstance) -> Result<SolveResult> {
    brute_force_solve_with_guard(instance, DEFAULT_ENUMERATION_GUARD)
}

pub fn brute_force_solve_with_guard(instance: &DpInstance, guard: u64) -> Result<SolveResult> {
    let started = Instant::now();
    instance.validate()?;
    let n = instance.num_stages();
    let space = generate_state_space(instance);

    // Upper bound on combinations: the product of per-stage option unions.
    let option_counts: Vec<usize> = (0..n)
        .map(|m| {
            let earliest = *space.states(m).first().expect("nonempty state set");
            let latest_departure = instance.deadline - instance.remaining_travel(m);
            let unique: HashSet<Seconds> = instance.stages[m]
                .partners
                .iter()
                .map(|p| p.predicted_departure)
                .filter(|&d| d >= earliest && d <= latest_departure)
                .collect();
            // +1 for the zero wait
            unique.len() + 1
        })
        .collect();
    let product = option_counts
        .iter()
        .fold(1u128, |acc, &c| acc.saturating_mul(c as u128));
    if product > guard as u128 {
        return Err(Error::ResourceLimit(format!(
            "enumeration would visit up to {product} combinations (guard {guard})"
        )));
    }

    struct Search<'a> {
        instance: &'a DpInstance,
        guard: u64,
        leaves: u64,
        best_value: f64,
        best_waits: Vec<Seconds>,
        prefix: Vec<Seconds>,
        found: bool,
    }

    impl Search<'_> {
        fn descend(&mut self, stage: usize, t: Seconds, accumulated: f64) -> Result<()> {
            if stage == self.instance.num_stages() {
                self.leaves += 1;
                if self.leaves > self.guard {
                    return Err(Error::ResourceLimit(format!(
                        "enumeration exceeded the guard of {} combinations",
                        self.guard
                    )));
                }
                let total = accumulated
                    + terminal_reward(
                        t,
                        self.instance.arrival,
                        self.instance.total_travel_time(),
                        self.instance.waiting_loss_per_hour,
                    )?;
                // Plans are visited in ascending lexicographic wait order, so
                // keeping the first within-tolerance maximum matches the
                // solver's smallest-wait tie rule.
                if !self.found || total > self.best_value + VALUE_TIE_EPSILON {
                    self.found = true;
                    self.best_value = total;
                    self.best_waits = self.prefix.clone();
                }
                return Ok(());
            }
            let stage_data = &self.instance.stages[stage];
            for wait in decision_space(self.instance, stage, t) {
                let counts =
                    matched_counts(t, wait, &stage_data.partners, self.instance.own_fleet);
                let g = stage_reward(
                    stage_data.edge_travel_time,
                    counts,
                    counts.total() == 0,
                    &self.instance.econ,
                );
                self.prefix.push(wait);
                self.descend(stage + 1, t + wait + stage_data.edge_travel_time, accumulated + g)?;
                self.prefix.pop();
            }
            Ok(())
        }
    }

    let mut search = Search {
        instance,
        guard,
        leaves: 0,
        best_value: f64::NEG_INFINITY,
        best_waits: Vec::new(),
        prefix: Vec::with_capacity(n),
        found: false,
    };
    search.descend(0, instance.arrival, 0.0)?;
    debug_assert!(search.found, "every instance admits the all-zero plan");

    let mut arrivals = Vec::with_capacity(n + 1);
    let mut t = instance.arrival;
    arrivals.push(t);
    for (m, &w) in search.best_waits.iter().enumerate() {
        t = t + w + instance.stages[m].edge_travel_time;
        arrivals.push(t);
    }

    let n_tilde = option_counts.iter().copied().max().unwrap_or(0);
    Ok(SolveResult {
        waits: search.best_waits,
        arrivals,
        value: search.best_value,
        stats: SolveStats {
            q_evaluations: search.leaves,
            state_counts: space.state_counts(),
            decision_option_counts: option_counts,
            n_tilde,
            wall_time: started.elapsed(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::TruckId;

    fn partner(id: u32, fleet: u32, departure: Seconds) -> PartnerPrediction {
        PartnerPrediction {
            truck: TruckId(id),
            fleet: FleetId(fleet),
            predicted_departure: departure,
        }
    }

    fn one_stage_instance(
        arrival: Seconds,
        tau: Seconds,
        budget: Seconds,
        partners: Vec<PartnerPrediction>,
    ) -> DpInstance {
        DpInstance {
            arrival,
            deadline: arrival + tau + budget,
            own_fleet: FleetId(0),
            waiting_loss_per_hour: 25.0,
            econ: EconomicParams::default(),
            stages: vec![DpStage {
                edge_travel_time: tau,
                partners,
            }],
        }
    }

    /// One edge of an hour, a partner from another fleet departing 360 s
    /// after arrival, enough budget to wait for it.
    fn instance_a() -> DpInstance {
        one_stage_instance(36_000, 3600, 400, vec![partner(1, 1, 36_360)])
    }

    /// Same but the partner departs 600 s after arrival: waiting costs more
    /// than the platoon earns.
    fn instance_b() -> DpInstance {
        one_stage_instance(36_000, 3600, 700, vec![partner(1, 1, 36_600)])
    }

    #[test]
    fn decision_space_no_partners() {
        let inst = one_stage_instance(100, 3600, 500, vec![]);
        assert_eq!(decision_space(&inst, 0, 100), vec![0]);
    }

    #[test]
    fn decision_space_respects_bound_and_past() {
        let inst = one_stage_instance(
            36_000,
            3600,
            480,
            vec![
                partner(1, 1, 36_300),
                partner(2, 1, 36_600), // 600 s wait exceeds the 480 s bound
                partner(3, 1, 35_900), // already departed
            ],
        );
        assert_eq!(decision_space(&inst, 0, 36_000), vec![0, 300]);
    }

    #[test]
    fn decision_space_dedupes_alignments() {
        let inst = one_stage_instance(
            100,
            3600,
            500,
            vec![partner(1, 1, 300), partner(2, 2, 300), partner(3, 1, 100)],
        );
        // two partners at 300 collapse to one option; one at the arrival
        // itself matches the zero wait
        assert_eq!(decision_space(&inst, 0, 100), vec![0, 200]);
    }

    #[test]
    fn state_space_no_partners_is_singleton_chain() {
        let mut inst = one_stage_instance(1000, 600, 300, vec![]);
        inst.stages.push(DpStage {
            edge_travel_time: 400,
            partners: vec![],
        });
        let space = generate_state_space(&inst);
        assert_eq!(space.states(0), &[1000]);
        assert_eq!(space.states(1), &[1600]);
        assert_eq!(space.states(2), &[2000]);
    }

    #[test]
    fn state_space_hand_recursion() {
        // stage-0 options {0, 300}, tau 3600 -> next states {39600, 39900}
        let mut inst = one_stage_instance(36_000, 3600, 480, vec![partner(1, 1, 36_300)]);
        inst.stages.push(DpStage {
            edge_travel_time: 1800,
            partners: vec![],
        });
        inst.deadline = 36_000 + 3600 + 1800 + 480;
        let space = generate_state_space(&inst);
        assert_eq!(space.states(0), &[36_000]);
        assert_eq!(space.states(1), &[39_600, 39_900]);
    }

    #[test]
    fn state_space_merges_coinciding_states() {
        // from states {39600, 39900}, waiting for a partner departing 39900
        // collapses both onto the same successor
        let mut inst = one_stage_instance(36_000, 3600, 480, vec![partner(1, 1, 36_300)]);
        inst.stages.push(DpStage {
            edge_travel_time: 1800,
            partners: vec![partner(2, 1, 39_900)],
        });
        inst.deadline = 36_000 + 3600 + 1800 + 480;
        let space = generate_state_space(&inst);
        assert_eq!(space.states(1), &[39_600, 39_900]);
        assert_eq!(space.states(2), &[41_400, 41_700]);
    }

    #[test]
    fn q_value_hand_checked() {
        let inst = instance_a();
        let table = value_table(&inst).unwrap();
        // waiting 360 s: stage reward 5.6 * 1 * 0.5 = 2.8, terminal -2.5
        let q_wait = q_value(&inst, 0, 36_000, 360, &table).unwrap();
        assert!((q_wait - 0.3).abs() < 1e-9, "got {q_wait}");
        // departing immediately: no match, no wait
        let q_zero = q_value(&inst, 0, 36_000, 0, &table).unwrap();
        assert!(q_zero.abs() < 1e-12, "got {q_zero}");
        // cross-check against the forward evaluation of both plans
        assert!((evaluate_wait_plan(&inst, &[360]).unwrap() - q_wait).abs() < 1e-12);
        assert!((evaluate_wait_plan(&inst, &[0]).unwrap() - q_zero).abs() < 1e-12);
    }

    #[test]
    fn q_value_last_stage_no_match() {
        let inst = one_stage_instance(1000, 600, 300, vec![]);
        let table = value_table(&inst).unwrap();
        assert_eq!(q_value(&inst, 0, 1000, 0, &table).unwrap(), 0.0);
    }

    #[test]
    fn solve_instance_a_waits_for_the_platoon() {
        let result = solve(&instance_a()).unwrap();
        assert_eq!(result.waits, vec![360]);
        assert!((result.value - 0.3).abs() < 1e-9, "value {}", result.value);
        assert_eq!(result.arrivals, vec![36_000, 39_960]);
    }

    #[test]
    fn solve_instance_b_departs_immediately() {
        let result = solve(&instance_b()).unwrap();
        assert_eq!(result.waits, vec![0]);
        assert!(result.value.abs() < 1e-9, "value {}", result.value);
    }

    #[test]
    fn solve_zero_budget_collapses_to_zero_waits() {
        // partner departing exactly at the arrival still matches at w = 0
        let inst = one_stage_instance(
            5000,
            3600,
            0,
            vec![partner(1, 1, 5000), partner(2, 1, 5300)],
        );
        let result = solve(&inst).unwrap();
        assert_eq!(result.waits, vec![0]);
        assert!((result.value - 2.8).abs() < 1e-9);
    }

    #[test]
    fn solve_rejects_infeasible_instances() {
        let mut inst = instance_a();
        inst.deadline = inst.arrival + 100;
        assert!(matches!(solve(&inst), Err(Error::Infeasible(_))));
        inst.stages.clear();
        assert!(matches!(solve(&inst), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn brute_force_matches_on_micro_instances() {
        for inst in [instance_a(), instance_b()] {
            let dp = solve(&inst).unwrap();
            let oracle = brute_force_solve(&inst).unwrap();
            assert_eq!(dp.waits, oracle.waits);
            assert!((dp.value - oracle.value).abs() <= 1e-9);
        }
    }

    #[test]
    fn single_stage_brute_force_is_enumeration_by_construction() {
        let inst = one_stage_instance(
            1000,
            1800,
            900,
            vec![partner(1, 0, 1200), partner(2, 3, 1500), partner(3, 3, 1700)],
        );
        let dp = solve(&inst).unwrap();
        let oracle = brute_force_solve(&inst).unwrap();
        assert_eq!(dp.waits, oracle.waits);
        assert!((dp.value - oracle.value).abs() <= 1e-9);
    }

    #[test]
    fn ties_break_toward_smallest_wait() {
        // zero waiting loss and two same-fleet alignments: both waits earn
        // exactly xi*tau, so the smaller must win in both methods
        let mut inst = one_stage_instance(
            1000,
            3600,
            800,
            vec![partner(1, 0, 1300), partner(2, 0, 1600)],
        );
        inst.waiting_loss_per_hour = 0.0;
        let dp = solve(&inst).unwrap();
        let oracle = brute_force_solve(&inst).unwrap();
        assert_eq!(dp.waits, vec![300]);
        assert_eq!(oracle.waits, vec![300]);
    }

    #[test]
    fn guard_rejects_explosive_instances() {
        let partners: Vec<PartnerPrediction> =
            (0..40).map(|i| partner(i, 1, 2000 + i as Seconds * 7)).collect();
        let stages: Vec<DpStage> = (0..8)
            .map(|_| DpStage {
                edge_travel_time: 60,
                partners: partners.clone(),
            })
            .collect();
        let inst = DpInstance {
            arrival: 1000,
            deadline: 100_000,
            own_fleet: FleetId(0),
            waiting_loss_per_hour: 25.0,
            econ: EconomicParams::default(),
            stages,
        };
        assert!(matches!(
            brute_force_solve_with_guard(&inst, 10_000),
            Err(Error::ResourceLimit(_))
        ));
        // the DP itself has no guard
        solve(&inst).unwrap();
    }

    #[test]
    fn stats_on_partner_free_instance() {
        let stages: Vec<DpStage> = (0..4)
            .map(|_| DpStage {
                edge_travel_time: 600,
                partners: vec![],
            })
            .collect();
        let inst = DpInstance {
            arrival: 0,
            deadline: 10_000,
            own_fleet: FleetId(0),
            waiting_loss_per_hour: 25.0,
            econ: EconomicParams::default(),
            stages,
        };
        let result = solve(&inst).unwrap();
        assert_eq!(result.stats.n_tilde, 1);
        assert_eq!(result.stats.q_evaluations, 4); // one per stage
        assert_eq!(result.stats.state_counts, vec![1, 1, 1, 1, 1]);
    }

    #[test]
    fn q_evaluation_counting_bound() {
        let inst = one_stage_instance(
            1000,
            1800,
            900,
            vec![partner(1, 0, 1300), partner(2, 3, 1500)],
        );
        let result = solve(&inst).unwrap();
        // bound: sum over stages and states of the per-state option count
        let space = generate_state_space(&inst);
        let mut bound = 0u64;
        for m in 0..inst.num_stages() {
            for &t in space.states(m) {
                bound += decision_space(&inst, m, t).len() as u64;
            }
        }
        assert!(result.stats.q_evaluations <= bound);
        assert_eq!(result.stats.decision_option_counts, vec![3]);
    }

    #[test]
    fn fixture_json_round_trip() {
        let inst = instance_a();
        let text = inst.to_json();
        assert!(text.contains("\"arrival_s\""));
        assert!(text.contains("\"tau_s\""));
        assert!(text.contains("\"departure_s\""));
        let back = DpInstance::from_json(&text).unwrap();
        assert_eq!(inst, back);
        let result = solve(&back).unwrap();
        assert_eq!(result.waits, vec![360]);
    }

    #[test]
    fn fixture_defaults_economics_when_missing() {
        let text = r#"{
            "arrival_s": 36000,
            "deadline_s": 40000,
            "own_fleet": 0,
            "epsilon_per_h": 25.0,
            "stages": [{"tau_s": 3600, "partners": [{"truck": 1, "fleet": 1, "departure_s": 36360}]}]
        }"#;
        let inst = DpInstance::from_json(text).unwrap();
        assert_eq!(inst.econ, EconomicParams::default());
        let result = solve(&inst).unwrap();
        assert_eq!(result.waits, vec![360]);
        assert!((result.value - 0.3).abs() < 1e-9);
    }
}
