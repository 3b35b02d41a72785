//! Unslotted shared channel with binary interference.
//!
//! A transmission `i -> j` over `[start, start + duration)` is delivered iff
//! no other transmission by a node in `neighbors(j) ∪ {j}` overlaps that
//! interval. Because `j` itself is in the set, a receiver that is
//! transmitting cannot receive (half-duplex). There is no capture effect and
//! no propagation delay.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{NodeId, Topology};

/// All packets last one time unit; time is measured in packet durations.
pub const PACKET_DURATION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pending,
    Delivered,
    Collided,
    /// Generated but not sent: the node's transmit trial failed.
    Withheld,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pending => "pending",
            Outcome::Delivered => "delivered",
            Outcome::Collided => "collided",
            Outcome::Withheld => "withheld",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRecord {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub start: f64,
    pub duration: f64,
    pub outcome: Outcome,
}

impl TransmissionRecord {
    pub fn new(sender: NodeId, receiver: NodeId, start: f64) -> Self {
        Self {
            sender,
            receiver,
            start,
            duration: PACKET_DURATION,
            outcome: Outcome::Pending,
        }
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn overlaps(&self, other: &TransmissionRecord) -> bool {
        self.start < other.end() && other.start < self.end()
    }
}

#[derive(Debug)]
struct InFlight<T> {
    record: TransmissionRecord,
    collided: bool,
    tag: T,
}

/// Event-driven channel state. `T` is an opaque tag carried alongside each
/// transmission (the simulator uses it for the epoch stamp and payload).
#[derive(Debug)]
pub struct Channel<T = ()> {
    topology: Arc<Topology>,
    now: f64,
    // ordered by (start, submission order)
    in_flight: Vec<InFlight<T>>,
    spare: Vec<InFlight<T>>,
}

impl<T> Channel<T> {
    pub fn new(topology: Arc<Topology>) -> Self {
        Self {
            topology,
            now: 0.0,
            in_flight: Vec::new(),
            spare: Vec::new(),
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    /// Puts a transmission on the air. Its outcome is decided once no later
    /// transmission can overlap it, see [`Channel::resolve`].
    pub fn submit(&mut self, tx: TransmissionRecord, tag: T) -> Result<()> {
        if tx.start < self.now {
            return Err(Error::SimulationOrder {
                sender: tx.sender,
                start: tx.start,
                now: self.now,
            });
        }
        if tx.outcome != Outcome::Pending {
            return Err(Error::Validation(format!(
                "only pending transmissions may be submitted, got {:?}",
                tx.outcome
            )));
        }
        if !(tx.duration > 0.0) {
            return Err(Error::Validation("transmission duration must be positive".into()));
        }
        if !self.topology.is_neighbor(tx.sender, tx.receiver) {
            return Err(Error::NotNeighbor {
                node: tx.receiver,
                of: tx.sender,
            });
        }
        self.now = tx.start;

        let mut collided = false;
        for other in self.in_flight.iter_mut() {
            if !other.record.overlaps(&tx) {
                continue;
            }
            if self.topology.hears(other.record.receiver, tx.sender) {
                other.collided = true;
            }
            if self.topology.hears(tx.receiver, other.record.sender) {
                collided = true;
            }
        }
        self.in_flight.push(InFlight {
            record: tx,
            collided,
            tag,
        });
        Ok(())
    }

    /// Finalizes every transmission that ended at or before `up_to`, appending
    /// them to `out` in `(start, sender)` order. The caller promises that no
    /// transmission starting before `up_to` is still to be submitted.
    pub fn resolve_into(&mut self, up_to: f64, out: &mut Vec<(TransmissionRecord, T)>) {
        if up_to > self.now {
            self.now = up_to;
        }
        if !self.in_flight.iter().any(|f| f.record.end() <= up_to) {
            return;
        }
        let first = out.len();
        std::mem::swap(&mut self.in_flight, &mut self.spare);
        for done in self.spare.drain(..) {
            if done.record.end() <= up_to {
                let mut record = done.record;
                record.outcome = if done.collided {
                    Outcome::Collided
                } else {
                    Outcome::Delivered
                };
                out.push((record, done.tag));
            } else {
                self.in_flight.push(done);
            }
        }
        out[first..].sort_by(|a, b| {
            a.0.start
                .total_cmp(&b.0.start)
                .then(a.0.sender.cmp(&b.0.sender))
        });
    }

    pub fn resolve(&mut self, up_to: f64) -> Vec<(TransmissionRecord, T)> {
        let mut out = Vec::new();
        self.resolve_into(up_to, &mut out);
        out
    }

    /// Finalizes everything still in flight.
    pub fn flush(&mut self) -> Vec<(TransmissionRecord, T)> {
        self.resolve(f64::INFINITY)
    }
}

/// Per-node learning-epoch counters and the derived metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub node: NodeId,
    pub epoch: u64,
    pub start: f64,
    pub end: f64,
    pub generated: u64,
    pub transmitted: u64,
    pub collided: u64,
    pub delivered: u64,
    /// Collided over transmitted, zero when nothing was sent.
    pub collision_prob: f64,
    /// Delivered packets per packet duration (Erlang).
    pub throughput: f64,
}

impl EpochMetrics {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn withheld(&self) -> u64 {
        self.generated - self.transmitted
    }

    /// Load actually injected into the channel, in Erlang.
    pub fn effective_load(&self) -> f64 {
        rate(self.transmitted, self.duration())
    }

    pub fn offered_load(&self) -> f64 {
        rate(self.generated, self.duration())
    }
}

fn rate(count: u64, duration: f64) -> f64 {
    if duration > 0.0 {
        count as f64 / duration
    } else {
        0.0
    }
}

/// Collision probability: collisions over transmissions, 0 for an empty epoch.
pub fn collision_probability(collided: u64, transmitted: u64) -> f64 {
    if transmitted == 0 {
        0.0
    } else {
        collided as f64 / transmitted as f64
    }
}

/// Raw counters of one epoch while it is still open or awaiting outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpochCounters {
    pub epoch: u64,
    pub start: f64,
    pub generated: u64,
    pub transmitted: u64,
    pub collided: u64,
    pub delivered: u64,
}

impl EpochCounters {
    pub fn new(epoch: u64, start: f64) -> Self {
        Self {
            epoch,
            start,
            ..Default::default()
        }
    }

    pub fn record_outcome(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Delivered => self.delivered += 1,
            Outcome::Collided => self.collided += 1,
            Outcome::Pending | Outcome::Withheld => {}
        }
    }

    pub fn pending(&self) -> u64 {
        self.transmitted - self.collided - self.delivered
    }

    /// Derives the epoch metrics. Every transmission must be resolved.
    pub fn close(&self, node: NodeId, end: f64) -> Result<EpochMetrics> {
        if self.pending() != 0 {
            return Err(Error::Validation(format!(
                "node {node} epoch {} closed with {} unresolved transmissions",
                self.epoch,
                self.pending()
            )));
        }
        Ok(EpochMetrics {
            node,
            epoch: self.epoch,
            start: self.start,
            end,
            generated: self.generated,
            transmitted: self.transmitted,
            collided: self.collided,
            delivered: self.delivered,
            collision_prob: collision_probability(self.collided, self.transmitted),
            throughput: rate(self.delivered, end - self.start),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcomes(topo: Topology, txs: &[(NodeId, NodeId, f64)]) -> Vec<(NodeId, NodeId, Outcome)> {
        let mut ch: Channel = Channel::new(Arc::new(topo));
        for &(s, r, t) in txs {
            ch.submit(TransmissionRecord::new(s, r, t), ()).unwrap();
        }
        ch.flush()
            .into_iter()
            .map(|(rec, _)| (rec.sender, rec.receiver, rec.outcome))
            .collect()
    }

    #[test]
    fn lone_transmission_is_delivered() {
        let out = outcomes(Topology::line(3).unwrap(), &[(0, 1, 0.0)]);
        assert_eq!(out, vec![(0, 1, Outcome::Delivered)]);
    }

    #[test]
    fn hidden_terminals_collide_at_common_receiver() {
        let out = outcomes(Topology::line(3).unwrap(), &[(0, 1, 0.0), (2, 1, 0.5)]);
        assert_eq!(
            out,
            vec![(0, 1, Outcome::Collided), (2, 1, Outcome::Collided)]
        );
    }

    #[test]
    fn spatial_reuse_on_line4() {
        let out = outcomes(Topology::line(4).unwrap(), &[(0, 1, 0.0), (3, 2, 0.0)]);
        assert_eq!(
            out,
            vec![(0, 1, Outcome::Delivered), (3, 2, Outcome::Delivered)]
        );
    }

    #[test]
    fn half_duplex_receiver() {
        let out = outcomes(Topology::line(3).unwrap(), &[(1, 0, 0.0), (2, 1, 0.2)]);
        assert_eq!(
            out,
            vec![(1, 0, Outcome::Delivered), (2, 1, Outcome::Collided)]
        );
    }

    #[test]
    fn touching_intervals_do_not_overlap() {
        let out = outcomes(Topology::complete(2).unwrap(), &[(0, 1, 0.0), (1, 0, 1.0)]);
        assert!(out.iter().all(|o| o.2 == Outcome::Delivered));
    }

    #[test]
    fn own_overlapping_packets_collide() {
        let out = outcomes(Topology::line(2).unwrap(), &[(0, 1, 0.0), (0, 1, 0.5)]);
        assert!(out.iter().all(|o| o.2 == Outcome::Collided));
    }

    #[test]
    fn resolve_waits_for_end_of_transmission() {
        let mut ch: Channel<u32> = Channel::new(Arc::new(Topology::line(3).unwrap()));
        ch.submit(TransmissionRecord::new(0, 1, 0.0), 7).unwrap();
        assert!(ch.resolve(0.9).is_empty());
        let done = ch.resolve(1.0);
        assert_eq!(done.len(), 1);
        assert_eq!(done[0].1, 7);
        assert_eq!(ch.in_flight(), 0);
    }

    #[test]
    fn rejects_past_and_non_neighbor_submissions() {
        let mut ch: Channel = Channel::new(Arc::new(Topology::line(3).unwrap()));
        ch.submit(TransmissionRecord::new(0, 1, 5.0), ()).unwrap();
        assert!(matches!(
            ch.submit(TransmissionRecord::new(1, 2, 4.0), ()),
            Err(Error::SimulationOrder { .. })
        ));
        assert!(matches!(
            ch.submit(TransmissionRecord::new(0, 2, 6.0), ()),
            Err(Error::NotNeighbor { .. })
        ));
    }

    #[test]
    fn epoch_close_arithmetic() {
        let mut c = EpochCounters::new(3, 100.0);
        c.generated = 1200;
        c.transmitted = 1000;
        c.collided = 400;
        c.delivered = 600;
        let m = c.close(0, 2100.0).unwrap();
        assert_eq!(m.collision_prob, 0.4);
        assert!((m.throughput - 0.3).abs() < 1e-12);
        assert_eq!(m.withheld(), 200);

        let empty = EpochCounters::new(0, 0.0).close(1, 10.0).unwrap();
        assert_eq!(empty.collision_prob, 0.0);
        assert_eq!(empty.throughput, 0.0);

        let mut open = EpochCounters::new(0, 0.0);
        open.transmitted = 2;
        open.record_outcome(Outcome::Delivered);
        assert!(open.close(0, 1.0).is_err());
    }
}
