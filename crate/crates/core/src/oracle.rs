//! Independent reference computations used to cross-check the simulator.
//!
//! Nothing here shares code with the event-driven channel or the agent: the
//! resolver is a quadratic pairwise scan, and the epoch recomputation
//! re-derives every learning input from raw counters.

use serde::{Deserialize, Serialize};

use crate::channel::{Outcome, TransmissionRecord};
use crate::error::{Error, Result};
use crate::topology::{NodeId, Topology};

/// Unslotted ALOHA throughput `G * exp(-2G)` for total offered load `G`.
pub fn aloha_throughput(total_load: f64) -> f64 {
    total_load * (-2.0 * total_load).exp()
}

/// Decides every transmission of `schedule` by checking it against every
/// other one. Returns outcomes in schedule order.
pub fn brute_force_resolve(schedule: &[TransmissionRecord], topo: &Topology) -> Vec<Outcome> {
    schedule
        .iter()
        .enumerate()
        .map(|(i, tx)| {
            let receiver = tx.receiver;
            let hit = schedule.iter().enumerate().any(|(k, other)| {
                if k == i {
                    return false;
                }
                let overlap = other.start < tx.start + tx.duration && tx.start < other.start + other.duration;
                let audible = other.sender == receiver || topo.neighbors_of(receiver).contains(&other.sender);
                overlap && audible
            });
            if hit {
                Outcome::Collided
            } else {
                Outcome::Delivered
            }
        })
        .collect()
}

/// Raw per-epoch inputs of one node's learning step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub transmitted: Option<u64>,
    pub collided: Option<u64>,
    pub delivered: Option<u64>,
    pub duration: Option<f64>,
    pub neighbor_throughputs: Vec<f64>,
    pub prev_throughput: Option<f64>,
    pub prev_fairness: Option<f64>,
    pub delta_margin: f64,
    pub zero_throughput_penalty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recomputed {
    pub collision_prob: f64,
    pub throughput: f64,
    pub fairness: f64,
    /// `None` when the trace has no previous epoch.
    pub reward: Option<f64>,
}

// (throughput up, fairness up) -> reward
const REWARD_TABLE: [((bool, bool), f64); 4] = [
    ((true, true), 50.0),
    ((true, false), -30.0),
    ((false, true), 10.0),
    ((false, false), -50.0),
];

/// Recomputes collision probability, throughput, fairness and reward from
/// raw counters.
pub fn recompute_epoch(trace: &EpochTrace) -> Result<Recomputed> {
    let missing = |what: &str| Error::Validation(format!("epoch trace is missing `{what}`"));
    let transmitted = trace.transmitted.ok_or_else(|| missing("transmitted"))?;
    let collided = trace.collided.ok_or_else(|| missing("collided"))?;
    let delivered = trace.delivered.ok_or_else(|| missing("delivered"))?;
    let duration = trace.duration.ok_or_else(|| missing("duration"))?;
    if collided + delivered != transmitted {
        return Err(Error::Validation(format!(
            "collided {collided} + delivered {delivered} != transmitted {transmitted}"
        )));
    }
    if trace.neighbor_throughputs.is_empty() {
        return Err(missing("neighbor_throughputs"));
    }

    let collision_prob = if transmitted > 0 {
        collided as f64 / transmitted as f64
    } else {
        0.0
    };
    let throughput = if duration > 0.0 { delivered as f64 / duration } else { 0.0 };
    let mut fairness = 0.0;
    for s in &trace.neighbor_throughputs {
        fairness -= (throughput - s).abs();
    }

    let reward = match (trace.prev_throughput, trace.prev_fairness) {
        (Some(ps), Some(pf)) => {
            let key = (throughput - ps - trace.delta_margin >= 0.0, fairness - pf >= 0.0);
            let base = REWARD_TABLE
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, r)| *r)
                .expect("table covers all sign pairs");
            Some(if delivered == 0 { base - trace.zero_throughput_penalty } else { base })
        }
        _ => None,
    };

    Ok(Recomputed {
        collision_prob,
        throughput,
        fairness,
        reward,
    })
}

/// One analytic-vs-simulated comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub analytic: f64,
    pub simulated: f64,
    pub relative_error: f64,
}

impl OracleReport {
    const FLOOR: f64 = 1e-12;

    pub fn new(quantity: impl Into<String>, analytic: f64, simulated: f64) -> Self {
        Self {
            quantity: quantity.into(),
            analytic,
            simulated,
            relative_error: (simulated - analytic).abs() / analytic.abs().max(Self::FLOOR),
        }
    }
}

/// Per-node unslotted-ALOHA throughput for arbitrary effective loads, under
/// the same receiver-side interference model as the channel (Poisson
/// senders, uniform destinations).
pub fn aloha_node_throughputs(topo: &Topology, effective_loads: &[f64]) -> Vec<f64> {
    topo.nodes()
        .map(|i| {
            let nbrs = topo.neighbors_of(i);
            let share = effective_loads[i] / nbrs.len() as f64;
            nbrs.iter()
                .map(|&j| {
                    let audible: f64 = std::iter::once(j)
                        .chain(topo.neighbors_of(j).iter().copied())
                        .map(|k: NodeId| effective_loads[k])
                        .sum();
                    share * (-2.0 * audible).exp()
                })
                .sum()
        })
        .collect()
}
