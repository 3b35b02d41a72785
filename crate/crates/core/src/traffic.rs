//! Poisson MAC-layer traffic and uniform one-hop destination choice.
//!
//! Time is measured in packet durations, so a load of `g` Erlang means `g`
//! arrivals per packet duration on average.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::NodeId;

pub type NodeRng = ChaCha8Rng;

/// Deterministic per-node random stream. Each node gets its own ChaCha
/// stream under the scenario seed, so adding nodes never shifts the draws of
/// existing ones.
pub fn node_rng(seed: u64, node: NodeId) -> NodeRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64 + 1);
    rng
}

/// Time until the next arrival of a Poisson process with rate `load`.
/// Returns `None` when the load is zero (no arrival ever).
pub fn next_interarrival<R: Rng + ?Sized>(rng: &mut R, load: f64) -> Option<f64> {
    if load <= 0.0 {
        return None;
    }
    let x: f64 = Exp1.sample(rng);
    Some(x / load)
}

/// Picks one of `nbrs` uniformly at random.
pub fn pick_destination<R: Rng + ?Sized>(rng: &mut R, nbrs: &[NodeId]) -> Result<NodeId> {
    match nbrs.len() {
        0 => Err(Error::Config("node has no neighbor to send to".into())),
        1 => Ok(nbrs[0]),
        k => Ok(nbrs[rng.gen_range(0..k)]),
    }
}

/// One step of a piecewise-constant load profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadStep {
    pub at: f64,
    pub load: f64,
}

/// Offered load of one node as a function of simulated time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSource {
    pub node: NodeId,
    steps: Vec<LoadStep>,
}

impl TrafficSource {
    pub fn constant(node: NodeId, load: f64) -> Result<Self> {
        Self::scheduled(node, load, Vec::new())
    }

    /// `initial` applies from time zero; each entry of `changes` switches the
    /// rate at its activation time. Activation times must be positive and
    /// strictly increasing.
    pub fn scheduled(node: NodeId, initial: f64, changes: Vec<LoadStep>) -> Result<Self> {
        let mut steps = Vec::with_capacity(changes.len() + 1);
        steps.push(LoadStep { at: 0.0, load: initial });
        steps.extend(changes);
        for step in &steps {
            if !(step.load >= 0.0 && step.load.is_finite()) {
                return Err(Error::Config(format!(
                    "node {node}: load {} is not a finite non-negative number",
                    step.load
                )));
            }
        }
        for pair in steps.windows(2) {
            if !(pair[1].at > pair[0].at) {
                return Err(Error::Config(format!(
                    "node {node}: schedule times must be strictly increasing ({} then {})",
                    pair[0].at, pair[1].at
                )));
            }
        }
        Ok(Self { node, steps })
    }

    pub fn steps(&self) -> &[LoadStep] {
        &self.steps
    }

    pub fn load_at(&self, time: f64) -> f64 {
        let idx = self.steps.partition_point(|s| s.at <= time);
        self.steps[idx.saturating_sub(1)].load
    }

    /// Load changes strictly after time zero.
    pub fn changes(&self) -> &[LoadStep] {
        &self.steps[1..]
    }

    /// Whether the node ever offers traffic.
    pub fn is_idle(&self) -> bool {
        self.steps.iter().all(|s| s.load == 0.0)
    }
}
