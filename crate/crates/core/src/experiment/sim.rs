//! The per-scenario event loop.
//!
//! Events are MAC arrivals, epoch closes and scheduled load changes, ordered
//! by `(time, kind, node)`. Before each event the channel finalizes every
//! transmission that has ended, so epoch counters and ledgers always see
//! outcomes in time order.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{InfoSource, Mode, ScenarioConfig};
use crate::agent::{ActionId, MacAgent, Observation, QTable, StateId};
use crate::channel::{Channel, EpochCounters, EpochMetrics, Outcome, TransmissionRecord, PACKET_DURATION};
use crate::error::Result;
use crate::info::{PiggybackLedger, PiggybackPayload};
use crate::topology::{NodeId, Topology};
use crate::traffic::{next_interarrival, node_rng, pick_destination, NodeRng};

/// One node's epoch: channel metrics plus the learning step taken at its end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub metrics: EpochMetrics,
    /// Action in force during the epoch.
    pub action: ActionId,
    /// State observed at the end of the epoch.
    pub state: StateId,
    /// Action chosen for the following epoch.
    pub next_action: ActionId,
    pub reward: Option<f64>,
    pub epsilon: f64,
    /// Own throughput as known to the agent (piggybacked or ground truth).
    pub known_throughput: f64,
    pub fairness: f64,
}

/// Snapshot of one ledger entry, taken when its owner closes an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub time: f64,
    pub owner: NodeId,
    pub epoch: u64,
    pub own_throughput: f64,
    pub neighbor: NodeId,
    pub neighbor_throughput: Option<f64>,
    pub heard_at_epoch: Option<u64>,
    /// Rate at which the owner received from `neighbor` last period.
    pub reported_rate: f64,
}

/// Means over the final fraction of each node's epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub fraction: f64,
    pub throughput: Vec<f64>,
    pub collision_prob: Vec<f64>,
    pub effective_load: Vec<f64>,
    pub offered_load: Vec<f64>,
    /// Most frequent action over the window; ties to the lower id.
    pub modal_action: Vec<Option<ActionId>>,
    pub network_throughput: f64,
}

impl Summary {
    pub fn mean_collision_prob(&self) -> f64 {
        mean(&self.collision_prob)
    }

    /// `(max - min) / mean` of per-node throughput.
    pub fn relative_spread(&self) -> f64 {
        let m = mean(&self.throughput);
        if m > 0.0 {
            self.absolute_spread() / m
        } else {
            0.0
        }
    }

    pub fn absolute_spread(&self) -> f64 {
        let max = self.throughput.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.throughput.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub label: String,
    pub seed: u64,
    pub mode: Mode,
    pub node_count: usize,
    /// `epochs[node][t]`.
    pub epochs: Vec<Vec<EpochRecord>>,
    /// `S(t)`: sum over nodes of epoch-`t` throughput.
    pub network_throughput: Vec<f64>,
    pub final_actions: Vec<ActionId>,
    pub q_tables: Vec<QTable>,
    pub summary: Summary,
    pub end_time: f64,
    pub transmissions: Vec<TransmissionRecord>,
    pub ledgers: Vec<LedgerSnapshot>,
}

impl RunResult {
    pub fn epoch_rows(&self) -> usize {
        self.network_throughput.len()
    }

    /// Mean of `S(t)` over rows `range`.
    pub fn mean_network_throughput(&self, range: std::ops::Range<usize>) -> f64 {
        mean(&self.network_throughput[range])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    LoadChange,
    EpochClose,
    Arrival,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
    node: NodeId,
    // arrival generation, or load step index for load changes
    aux: u64,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.node.cmp(&other.node))
            .then(self.aux.cmp(&other.aux))
    }
}

#[derive(Debug)]
struct TxTag {
    epoch: u64,
    payload: Arc<PiggybackPayload>,
}

struct NodeState {
    rng: NodeRng,
    agent: MacAgent,
    ledger: PiggybackLedger,
    load: f64,
    generation: u64,
    arrivals_in_epoch: u64,
    // oldest first; the back entry is the open epoch
    counters: VecDeque<EpochCounters>,
    last_period_close: f64,
    true_throughput: f64,
    records: Vec<EpochRecord>,
    idle: bool,
}

struct Simulation<'a> {
    cfg: &'a ScenarioConfig,
    topology: Arc<Topology>,
    sources: Vec<crate::traffic::TrafficSource>,
    channel: Channel<TxTag>,
    nodes: Vec<NodeState>,
    queue: BinaryHeap<Reverse<Event>>,
    remaining: usize,
    now: f64,
    finished: Vec<(TransmissionRecord, TxTag)>,
    neighbor_buf: Vec<f64>,
    transmissions: Vec<TransmissionRecord>,
    ledgers: Vec<LedgerSnapshot>,
}

/// Runs one scenario to completion: every node with traffic records
/// `cfg.epochs` epochs. Deterministic in `(cfg, cfg.seed)`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunResult> {
    let scenario = cfg.resolve()?;
    let mut sim = Simulation::new(cfg, scenario.topology, scenario.sources);
    sim.run()?;
    Ok(sim.finish())
}

impl<'a> Simulation<'a> {
    fn new(cfg: &'a ScenarioConfig, topology: Arc<Topology>, sources: Vec<crate::traffic::TrafficSource>) -> Self {
        let nodes: Vec<NodeState> = topology
            .nodes()
            .map(|node| {
                let mut rng = node_rng(cfg.seed, node);
                let agent = match cfg.mode {
                    Mode::AlohaBaseline => MacAgent::fixed(ActionId::ALWAYS),
                    Mode::DrliMac => MacAgent::learner(cfg.agent, &mut rng),
                };
                NodeState {
                    rng,
                    agent,
                    ledger: PiggybackLedger::new(node, topology.neighbors_of(node)),
                    load: sources[node].load_at(0.0),
                    generation: 0,
                    arrivals_in_epoch: 0,
                    counters: VecDeque::from([EpochCounters::new(0, 0.0)]),
                    last_period_close: 0.0,
                    true_throughput: 0.0,
                    records: Vec::with_capacity(cfg.epochs as usize),
                    idle: sources[node].is_idle(),
                }
            })
            .collect();
        let remaining = nodes.iter().filter(|n| !n.idle).count();
        let mut sim = Self {
            cfg,
            channel: Channel::new(Arc::clone(&topology)),
            topology,
            sources,
            nodes,
            queue: BinaryHeap::new(),
            remaining,
            now: 0.0,
            finished: Vec::new(),
            neighbor_buf: Vec::new(),
            transmissions: Vec::new(),
            ledgers: Vec::new(),
        };
        for node in 0..sim.nodes.len() {
            for (i, step) in sim.sources[node].changes().iter().enumerate() {
                sim.queue.push(Reverse(Event {
                    time: step.at,
                    kind: EventKind::LoadChange,
                    node,
                    aux: i as u64,
                }));
            }
            sim.schedule_arrival(node, 0.0);
        }
        sim
    }

    fn schedule_arrival(&mut self, node: NodeId, from: f64) {
        let state = &mut self.nodes[node];
        if let Some(gap) = next_interarrival(&mut state.rng, state.load) {
            self.queue.push(Reverse(Event {
                time: from + gap,
                kind: EventKind::Arrival,
                node,
                aux: state.generation,
            }));
        }
    }

    fn run(&mut self) -> Result<()> {
        while self.remaining > 0 {
            let Some(Reverse(ev)) = self.queue.pop() else {
                break;
            };
            self.now = ev.time;
            self.channel.resolve_into(ev.time, &mut self.finished);
            self.apply_outcomes()?;
            match ev.kind {
                EventKind::Arrival => self.on_arrival(ev)?,
                EventKind::EpochClose => self.on_epoch_close(ev.node)?,
                EventKind::LoadChange => self.on_load_change(ev),
            }
        }
        Ok(())
    }

    fn apply_outcomes(&mut self) -> Result<()> {
        let mut finished = std::mem::take(&mut self.finished);
        for (record, tag) in finished.drain(..) {
            let sender = &mut self.nodes[record.sender];
            if let Some(c) = sender.counters.iter_mut().find(|c| c.epoch == tag.epoch) {
                c.record_outcome(record.outcome);
            }
            if record.outcome == Outcome::Delivered {
                let receiver = &mut self.nodes[record.receiver];
                let stamp = receiver.agent.epochs_completed();
                receiver.ledger.record_reception(record.sender)?;
                receiver.ledger.ingest_payload(record.sender, &tag.payload, stamp)?;
            }
            if self.cfg.trace.transmissions {
                self.transmissions.push(record);
            }
        }
        self.finished = finished;
        Ok(())
    }

    fn on_arrival(&mut self, ev: Event) -> Result<()> {
        let node = ev.node;
        let packets_per_epoch = self.cfg.packets_per_epoch;
        let state = &mut self.nodes[node];
        if ev.aux != state.generation {
            return Ok(());
        }
        let open = state.counters.back_mut().expect("an epoch is always open");
        open.generated += 1;
        let p = state.agent.transmit_probability();
        if p >= 1.0 || state.rng.gen::<f64>() < p {
            let dest = pick_destination(&mut state.rng, self.topology.neighbors_of(node))?;
            open.transmitted += 1;
            let tag = TxTag {
                epoch: open.epoch,
                payload: state.ledger.build_payload(),
            };
            self.channel.submit(TransmissionRecord::new(node, dest, ev.time), tag)?;
        }

        state.arrivals_in_epoch += 1;
        if state.arrivals_in_epoch == packets_per_epoch {
            state.arrivals_in_epoch = 0;
            let next = state.counters.back().map_or(0, |c| c.epoch + 1);
            state.counters.push_back(EpochCounters::new(next, ev.time));
            // outcomes of this epoch's last packets are known one duration later
            self.queue.push(Reverse(Event {
                time: ev.time + PACKET_DURATION,
                kind: EventKind::EpochClose,
                node,
                aux: 0,
            }));
        }
        self.schedule_arrival(node, ev.time);
        Ok(())
    }

    fn on_load_change(&mut self, ev: Event) {
        let node = ev.node;
        let load = self.sources[node].changes()[ev.aux as usize].load;
        let state = &mut self.nodes[node];
        state.load = load;
        state.generation += 1;
        self.schedule_arrival(node, ev.time);
    }

    fn on_epoch_close(&mut self, node: NodeId) -> Result<()> {
        let now = self.now;
        let state = &mut self.nodes[node];
        let closing = state.counters.pop_front().expect("closing epoch exists");
        let end = state.counters.front().map_or(now, |c| c.start);
        let metrics = closing.close(node, end)?;
        state.true_throughput = metrics.throughput;
        state.ledger.close_period(now - state.last_period_close);
        state.last_period_close = now;

        let (known_throughput, neighbors) = match self.cfg.info {
            InfoSource::Piggyback => {
                state.ledger.neighbor_throughputs_into(&mut self.neighbor_buf);
                (state.ledger.own_throughput(), &self.neighbor_buf)
            }
            InfoSource::GroundTruth => {
                self.neighbor_buf.clear();
                for &k in self.topology.neighbors_of(node) {
                    self.neighbor_buf.push(self.nodes[k].true_throughput);
                }
                (metrics.throughput, &self.neighbor_buf)
            }
        };
        let state = &mut self.nodes[node];
        let action = state.agent.action();
        let obs = Observation {
            collision_prob: metrics.collision_prob,
            throughput: known_throughput,
            neighbor_throughputs: neighbors,
        };
        let step = state.agent.end_epoch(&obs, &mut state.rng)?;

        if self.cfg.trace.ledgers {
            for &k in state.ledger.neighbors() {
                let heard = state.ledger.neighbor_throughput(k);
                self.ledgers.push(LedgerSnapshot {
                    time: now,
                    owner: node,
                    epoch: metrics.epoch,
                    own_throughput: state.ledger.own_throughput(),
                    neighbor: k,
                    neighbor_throughput: heard.map(|h| h.throughput),
                    heard_at_epoch: heard.map(|h| h.stamp),
                    reported_rate: state.ledger.reported_rate(k).unwrap_or(0.0),
                });
            }
        }

        if (state.records.len() as u64) < self.cfg.epochs {
            state.records.push(EpochRecord {
                metrics,
                action,
                state: step.state,
                next_action: step.action,
                reward: step.reward,
                epsilon: step.epsilon,
                known_throughput,
                fairness: step.fairness,
            });
            if state.records.len() as u64 == self.cfg.epochs && !state.idle {
                self.remaining -= 1;
            }
        }
        Ok(())
    }

    fn finish(self) -> RunResult {
        let n = self.nodes.len();
        let rows = self.nodes.iter().map(|s| s.records.len()).max().unwrap_or(0);
        let network_throughput = (0..rows)
            .map(|t| {
                self.nodes
                    .iter()
                    .filter_map(|s| s.records.get(t))
                    .map(|r| r.metrics.throughput)
                    .sum()
            })
            .collect::<Vec<f64>>();

        let fraction = self.cfg.summary_fraction;
        let tail = |len: usize| {
            let k = ((len as f64 * fraction).ceil() as usize).clamp(1.min(len), len);
            len - k..len
        };
        let mut summary = Summary {
            fraction,
            throughput: Vec::with_capacity(n),
            collision_prob: Vec::with_capacity(n),
            effective_load: Vec::with_capacity(n),
            offered_load: Vec::with_capacity(n),
            modal_action: Vec::with_capacity(n),
            network_throughput: mean(&network_throughput[tail(rows)]),
        };
        for s in &self.nodes {
            let window = &s.records[tail(s.records.len())];
            let avg = |f: &dyn Fn(&EpochRecord) -> f64| {
                if window.is_empty() {
                    0.0
                } else {
                    window.iter().map(f).sum::<f64>() / window.len() as f64
                }
            };
            summary.throughput.push(avg(&|r| r.metrics.throughput));
            summary.collision_prob.push(avg(&|r| r.metrics.collision_prob));
            summary.effective_load.push(avg(&|r| r.metrics.effective_load()));
            summary.offered_load.push(avg(&|r| r.metrics.offered_load()));
            let mut counts = [0usize; crate::agent::ACTION_COUNT + 1];
            for r in window {
                counts[r.action.id()] += 1;
            }
            let modal = (1..counts.len())
                .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
                .filter(|&a| counts[a] > 0)
                .map(|a| ActionId::new(a).expect("valid id"));
            summary.modal_action.push(modal);
        }

        RunResult {
            label: self.cfg.label(),
            seed: self.cfg.seed,
            mode: self.cfg.mode,
            node_count: n,
            final_actions: self.nodes.iter().map(|s| s.agent.action()).collect(),
            q_tables: self.nodes.iter().map(|s| s.agent.q_table().clone()).collect(),
            epochs: self.nodes.into_iter().map(|s| s.records).collect(),
            network_throughput,
            summary,
            end_time: self.now,
            transmissions: self.transmissions,
            ledgers: self.ledgers,
        }
    }
}
