//! Partner identification and the multi-fleet economic model.
//!
//! A truck that joins a platoon on a road segment increases the platooning
//! profit of its own fleet. The increase depends on how many of the joined
//! trucks belong to the same fleet (their shares are counted twice: once as
//! followers, once through the even profit split) versus a different fleet.
//! Waiting at hubs costs money at a per-hour rate, charged once at the end of
//! the trip over the total accumulated wait.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::network::{FleetId, Seconds, Truck, TruckId};

/// Economic constants of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomicParams {
    /// Monetary platooning benefit per following truck per hour (currency/h).
    #[serde(rename = "xi_per_follower_h")]
    pub platoon_benefit_per_hour: f64,
    /// Fractional fuel reduction of a following truck.
    pub fuel_saving_fraction: f64,
    /// Default waiting loss rate applied to trucks (currency/h).
    #[serde(rename = "epsilon_per_h")]
    pub default_waiting_loss_per_hour: f64,
}

impl Default for EconomicParams {
    fn default() -> Self {
        EconomicParams {
            platoon_benefit_per_hour: 5.6,
            fuel_saving_fraction: 0.10,
            default_waiting_loss_per_hour: 25.0,
        }
    }
}

impl EconomicParams {
    pub fn validate(&self) -> Result<()> {
        if self.platoon_benefit_per_hour < 0.0
            || self.fuel_saving_fraction < 0.0
            || self.default_waiting_loss_per_hour < 0.0
        {
            return Err(Error::InvalidArgument(
                "economic parameters must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One potential partner's predicted departure at the hub a truck shares
/// with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartnerPrediction {
    pub truck: TruckId,
    pub fleet: FleetId,
    #[serde(rename = "departure_s")]
    pub predicted_departure: Seconds,
}

/// Matched partners split by fleet membership relative to the deciding truck.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PartnerCounts {
    pub same_fleet: usize,
    pub other_fleet: usize,
}

impl PartnerCounts {
    pub fn total(&self) -> usize {
        self.same_fleet + self.other_fleet
    }
}

pub(crate) fn hours(seconds: Seconds) -> f64 {
    seconds as f64 / 3600.0
}

/// Trucks other than `truck` whose routes contain `truck`'s `stage`-th road
/// segment (0-based stage: the edge leaving the truck's `stage`-th hub).
pub fn potential_partners(
    truck: &Truck,
    stage: usize,
    all_trucks: &[Truck],
) -> Result<BTreeSet<TruckId>> {
    if stage >= truck.route.num_edges() {
        return Err(Error::InvalidArgument(format!(
            "stage {stage} out of range for a route with {} edges",
            truck.route.num_edges()
        )));
    }
    let edge = truck.route.edge(stage);
    Ok(all_trucks
        .iter()
        .filter(|t| t.id != truck.id && t.route.stage_of_edge(edge).is_some())
        .map(|t| t.id)
        .collect())
}

/// Candidates whose predicted departure equals `arrival + wait` exactly.
pub fn predicted_partners(
    arrival: Seconds,
    wait: Seconds,
    candidates: &[PartnerPrediction],
) -> BTreeSet<TruckId> {
    debug_assert!(wait >= 0);
    let departure = arrival + wait;
    candidates
        .iter()
        .filter(|p| p.predicted_departure == departure)
        .map(|p| p.truck)
        .collect()
}

/// Split `candidates` matched at `arrival + wait` into same-/other-fleet
/// counts relative to `own_fleet`.
pub fn matched_counts(
    arrival: Seconds,
    wait: Seconds,
    candidates: &[PartnerPrediction],
    own_fleet: FleetId,
) -> PartnerCounts {
    let departure = arrival + wait;
    let mut counts = PartnerCounts::default();
    for p in candidates {
        if p.predicted_departure == departure {
            if p.fleet == own_fleet {
                counts.same_fleet += 1;
            } else {
                counts.other_fleet += 1;
            }
        }
    }
    counts
}

fn delta_f_unchecked(counts: PartnerCounts) -> f64 {
    let n = counts.total() as f64;
    1.0 - counts.other_fleet as f64 / ((n + 1.0) * n)
}

/// Dimensionless increase in fleet platooning profit from joining the matched
/// partner set, per unit of `xi * tau`.
///
/// Zero when the matched set is empty. A set of only same-fleet partners
/// yields 1; other-fleet partners dilute the gain because the joined platoon's
/// profit is shared evenly across all members.
pub fn delta_f(counts: PartnerCounts, partner_set_empty: bool) -> Result<f64> {
    if partner_set_empty {
        debug_assert_eq!(counts.total(), 0);
        return Ok(0.0);
    }
    if counts.total() == 0 {
        return Err(Error::Internal(
            "nonempty partner set with zero matched counts".into(),
        ));
    }
    Ok(delta_f_unchecked(counts))
}

/// Increased fleet platooning profit from one waiting decision: the benefit
/// rate times the edge travel time times the fleet-mix factor.
pub fn stage_reward(
    edge_travel_time: Seconds,
    counts: PartnerCounts,
    partner_set_empty: bool,
    econ: &EconomicParams,
) -> f64 {
    if partner_set_empty {
        return 0.0;
    }
    debug_assert!(counts.total() > 0, "nonempty set must have matches");
    debug_assert!(edge_travel_time > 0);
    econ.platoon_benefit_per_hour * hours(edge_travel_time) * delta_f_unchecked(counts)
}

/// Monetary loss from the total wait accumulated over the remaining trip,
/// evaluated at the destination. Always non-positive.
pub fn terminal_reward(
    arrival_at_destination: Seconds,
    arrival_at_current: Seconds,
    remaining_travel: Seconds,
    waiting_loss_per_hour: f64,
) -> Result<f64> {
    let total_wait = arrival_at_destination - arrival_at_current - remaining_travel;
    if total_wait < 0 {
        return Err(Error::Infeasible(format!(
            "destination arrival {arrival_at_destination} precedes the no-wait arrival {}",
            arrival_at_current + remaining_travel
        )));
    }
    Ok(-waiting_loss_per_hour * hours(total_wait))
}

/// Profit earned by each member of an `n`-truck platoon on one edge under the
/// even-sharing rule: `xi * tau * (n - 1) / n`.
pub fn average_platoon_profit(
    platoon_size: usize,
    edge_travel_time: Seconds,
    econ: &EconomicParams,
) -> f64 {
    assert!(platoon_size >= 1);
    let n = platoon_size as f64;
    econ.platoon_benefit_per_hour * hours(edge_travel_time) * (n - 1.0) / n
}
