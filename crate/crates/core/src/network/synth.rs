//! Seeded synthetic generators: network topology, hub-to-hub demand, and
//! mission sampling.
//!
//! Topology is a random geometric graph: hubs uniform in a square whose side
//! scales with the hub count, each hub linked to its nearest neighbors, links
//! symmetrized, and components bridged until the network is connected. Travel
//! times come from straight-line distance at a constant speed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use super::{travel_time_for_distance, Hub, RoadNetwork, RoadSegment};
use crate::error::{Error, Result};

/// Nearest-neighbor links per hub before symmetrization.
const NEAREST_LINKS: usize = 4;

/// Side of the placement square in km, scaled to keep hub density constant.
fn square_side_km(hub_count: usize) -> f64 {
    100.0 * (hub_count as f64).sqrt()
}

/// Generate a connected directed network with `hub_count` hubs. Every link is
/// present in both directions; each direction's travel time is
/// `round(distance / speed * 3600)` seconds.
pub fn build_synthetic_network(
    hub_count: usize,
    seed: u64,
    speed_kmh: f64,
) -> Result<RoadNetwork> {
    if hub_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 hubs, got {hub_count}"
        )));
    }
    if speed_kmh <= 0.0 {
        return Err(Error::InvalidArgument(
            "speed must be positive".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = square_side_km(hub_count);
    let hubs: Vec<Hub> = (0..hub_count)
        .map(|id| Hub {
            id,
            x: rng.gen_range(0.0..side),
            y: rng.gen_range(0.0..side),
        })
        .collect();

    // Undirected link set from k-nearest neighbors.
    let mut links: BTreeSet<(usize, usize)> = BTreeSet::new();
    let k = NEAREST_LINKS.min(hub_count - 1);
    for a in 0..hub_count {
        let mut by_distance: Vec<(f64, usize)> = (0..hub_count)
            .filter(|&b| b != a)
            .map(|b| (hubs[a].distance_km(&hubs[b]), b))
            .collect();
        by_distance.sort_by(|x, y| x.partial_cmp(y).expect("distances are finite"));
        for &(_, b) in by_distance.iter().take(k) {
            links.insert((a.min(b), a.max(b)));
        }
    }

    // Bridge components with the closest cross pair until connected.
    loop {
        let components = undirected_components(hub_count, &links);
        if components.iter().max().copied() == Some(0) {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..hub_count {
            for b in (a + 1)..hub_count {
                if components[a] != components[b] {
                    let candidate = (hubs[a].distance_km(&hubs[b]), a, b);
                    if best.is_none_or(|cur| candidate < cur) {
                        best = Some(candidate);
                    }
                }
            }
        }
        let (_, a, b) = best.expect("disconnected network has a cross pair");
        links.insert((a, b));
    }

    let mut segments = Vec::with_capacity(links.len() * 2);
    for &(a, b) in &links {
        let tau = travel_time_for_distance(hubs[a].distance_km(&hubs[b]), speed_kmh);
        segments.push(RoadSegment {
            from: a,
            to: b,
            travel_time: tau,
        });
        segments.push(RoadSegment {
            from: b,
            to: a,
            travel_time: tau,
        });
    }
    RoadNetwork::new(hubs, segments)
}

/// Component label per hub under the undirected link set, labels normalized
/// so that a fully connected graph is all zeros.
fn undirected_components(n: usize, links: &BTreeSet<(usize, usize)>) -> Vec<usize> {
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = next;
        while let Some(h) = stack.pop() {
            for &(a, b) in links {
                let other = if a == h {
                    b
                } else if b == h {
                    a
                } else {
                    continue;
                };
                if label[other] == usize::MAX {
                    label[other] = next;
                    stack.push(other);
                }
            }
        }
        next += 1;
    }
    label
}

/// Hub-to-hub demand weights. Mission origin/destination pairs are drawn with
/// probability proportional to the entry.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    dim: usize,
    flow: Vec<f64>,
}

impl FlowMatrix {
    pub fn new(dim: usize, flow: Vec<f64>) -> Result<Self> {
        if flow.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "flow matrix for {dim} hubs needs {} entries, got {}",
                dim * dim,
                flow.len()
            )));
        }
        let mut any_positive = false;
        for i in 0..dim {
            for j in 0..dim {
                let f = flow[i * dim + j];
                if !f.is_finite() || f < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "flow({i}, {j}) = {f} is not a non-negative number"
                    )));
                }
                if i == j && f != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "flow diagonal must be zero, found flow({i}, {i}) = {f}"
                    )));
                }
                any_positive |= f > 0.0;
            }
        }
        if !any_positive {
            return Err(Error::InvalidArgument(
                "flow matrix has no positive entry".into(),
            ));
        }
        Ok(FlowMatrix { dim, flow })
    }

    /// Build a matrix from per-pair weights; unmentioned pairs are zero.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut flow = vec![0.0; dim * dim];
        for &(i, j, f) in entries {
            if i >= dim || j >= dim {
                return Err(Error::InvalidArgument(format!(
                    "flow entry ({i}, {j}) outside a {dim}-hub network"
                )));
            }
            flow[i * dim + j] = f;
        }
        FlowMatrix::new(dim, flow)
    }

    /// Gravity-style demand: weight decays with distance relative to the mean
    /// pairwise distance, with seeded multiplicative noise in [0.5, 1.5).
    pub fn gravity(network: &RoadNetwork, seed: u64) -> Result<Self> {
        let n = network.hub_count();
        let hubs = network.hubs();
        let mut total = 0.0;
        let mut pairs = 0usize;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    total += hubs[i].distance_km(&hubs[j]);
                    pairs += 1;
                }
            }
        }
        let mean_distance = total / pairs.max(1) as f64;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut flow = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = hubs[i].distance_km(&hubs[j]);
                let noise: f64 = rng.gen_range(0.5..1.5);
                flow[i * n + j] = noise / (1.0 + d / mean_distance);
            }
        }
        FlowMatrix::new(n, flow)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.flow[from * self.dim + to]
    }

    /// Normalized probability of drawing the pair (from, to).
    pub fn probability(&self, from: usize, to: usize) -> f64 {
        let total: f64 = self.flow.iter().sum();
        self.get(from, to) / total
    }
}

/// Draw `count` (origin, destination) missions independently from the flow
/// distribution. Deterministic under `seed`.
pub fn sample_missions(
    network: &RoadNetwork,
    flow: &FlowMatrix,
    count: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    if flow.dim() != network.hub_count() {
        return Err(Error::InvalidArgument(format!(
            "flow matrix is {}x{} but the network has {} hubs",
            flow.dim(),
            flow.dim(),
            network.hub_count()
        )));
    }
    // Cumulative weights over positive entries, in row-major order.
    let mut cells = Vec::new();
    let mut cumulative = Vec::new();
    let mut total = 0.0;
    for i in 0..flow.dim() {
        for j in 0..flow.dim() {
            let f = flow.get(i, j);
            if f > 0.0 {
                total += f;
                cells.push((i, j));
                cumulative.push(total);
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::InvalidArgument(
            "flow matrix has no positive entry".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut missions = Vec::with_capacity(count);
    for _ in 0..count {
        let u: f64 = rng.gen_range(0.0..total);
        let idx = cumulative.partition_point(|&c| c <= u);
        missions.push(cells[idx.min(cells.len() - 1)]);
    }
    Ok(missions)
}
