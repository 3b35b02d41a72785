//! One-hop throughput bookkeeping carried on data packets.
//!
//! A receiver counts the non-collided packets each neighbor addressed to it.
//! At the end of each reporting period it turns those counts into per-sender
//! rates and advertises them back, piggybacked on its own data packets,
//! together with its own total throughput. A node learns its own throughput
//! as the sum of the rates its neighbors report for it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::NodeId;

/// Control fields appended to a data packet. Lost with the packet on a
/// collision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiggybackPayload {
    /// Sender's own throughput estimate.
    pub sender_throughput: f64,
    /// `(neighbor, rate)` pairs: the rate at which the sender received from
    /// each neighbor in its last reporting period. Ascending by neighbor.
    pub reverse_reports: Vec<(NodeId, f64)>,
}

impl PiggybackPayload {
    /// Number of scalar fields the payload occupies on the wire.
    pub fn field_count(&self) -> usize {
        1 + 2 * self.reverse_reports.len()
    }

    pub fn report_for(&self, node: NodeId) -> Option<f64> {
        self.reverse_reports
            .binary_search_by_key(&node, |&(n, _)| n)
            .ok()
            .map(|i| self.reverse_reports[i].1)
    }
}

/// Last throughput value heard from a neighbor and when it was heard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Heard {
    pub throughput: f64,
    pub stamp: u64,
}

#[derive(Debug, Clone)]
pub struct PiggybackLedger {
    owner: NodeId,
    neighbors: Vec<NodeId>,
    delivered_from: Vec<u64>,
    // rates computed at the last period close, advertised in payloads
    reported_rates: Vec<f64>,
    neighbor_throughput: Vec<Option<Heard>>,
    // s_{owner -> k} as last reported by neighbor k
    own_components: Vec<f64>,
    own_throughput: f64,
    payload: Option<Arc<PiggybackPayload>>,
}

impl PiggybackLedger {
    /// `neighbors` must be the owner's one-hop neighborhood.
    pub fn new(owner: NodeId, neighbors: &[NodeId]) -> Self {
        let mut neighbors = neighbors.to_vec();
        neighbors.sort_unstable();
        neighbors.dedup();
        let k = neighbors.len();
        Self {
            owner,
            neighbors,
            delivered_from: vec![0; k],
            reported_rates: vec![0.0; k],
            neighbor_throughput: vec![None; k],
            own_components: vec![0.0; k],
            own_throughput: 0.0,
            payload: None,
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn neighbors(&self) -> &[NodeId] {
        &self.neighbors
    }

    fn slot(&self, node: NodeId) -> Result<usize> {
        self.neighbors
            .binary_search(&node)
            .map_err(|_| Error::NotNeighbor { node, of: self.owner })
    }

    /// Counts one packet from `sender` that reached the owner intact.
    pub fn record_reception(&mut self, sender: NodeId) -> Result<()> {
        let i = self.slot(sender)?;
        self.delivered_from[i] += 1;
        Ok(())
    }

    pub fn delivered_from(&self, sender: NodeId) -> Option<u64> {
        self.slot(sender).ok().map(|i| self.delivered_from[i])
    }

    /// Ends a reporting period of length `duration`: converts reception
    /// counts into rates for the next payloads and resets the counters.
    pub fn close_period(&mut self, duration: f64) {
        for (rate, count) in self.reported_rates.iter_mut().zip(&mut self.delivered_from) {
            *rate = if duration > 0.0 { *count as f64 / duration } else { 0.0 };
            *count = 0;
        }
        self.payload = None;
    }

    pub fn reported_rate(&self, sender: NodeId) -> Option<f64> {
        self.slot(sender).ok().map(|i| self.reported_rates[i])
    }

    pub fn build_payload(&mut self) -> Arc<PiggybackPayload> {
        if let Some(p) = &self.payload {
            return Arc::clone(p);
        }
        let payload = Arc::new(PiggybackPayload {
            sender_throughput: self.own_throughput,
            reverse_reports: self
                .neighbors
                .iter()
                .copied()
                .zip(self.reported_rates.iter().copied())
                .collect(),
        });
        self.payload = Some(Arc::clone(&payload));
        payload
    }

    /// Absorbs a payload carried by a packet from `from` that reached the
    /// owner intact. `stamp` records when (e.g. the owner's epoch count).
    pub fn ingest_payload(&mut self, from: NodeId, payload: &PiggybackPayload, stamp: u64) -> Result<()> {
        let i = self.slot(from)?;
        self.neighbor_throughput[i] = Some(Heard {
            throughput: payload.sender_throughput,
            stamp,
        });
        if let Some(rate) = payload.report_for(self.owner) {
            if self.own_components[i] != rate {
                self.own_components[i] = rate;
                let total = self.own_components.iter().sum();
                if total != self.own_throughput {
                    self.own_throughput = total;
                    self.payload = None;
                }
            }
        }
        Ok(())
    }

    pub fn own_throughput(&self) -> f64 {
        self.own_throughput
    }

    pub fn own_component(&self, via: NodeId) -> Option<f64> {
        self.slot(via).ok().map(|i| self.own_components[i])
    }

    pub fn neighbor_throughput(&self, neighbor: NodeId) -> Option<Heard> {
        self.slot(neighbor).ok().and_then(|i| self.neighbor_throughput[i])
    }

    /// Last heard throughput of each neighbor, ascending by neighbor ID;
    /// zero for neighbors not heard from yet.
    pub fn neighbor_throughputs_into(&self, out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.neighbor_throughput
                .iter()
                .map(|h| h.map_or(0.0, |h| h.throughput)),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reception_counting() {
        let mut l = PiggybackLedger::new(1, &[0, 2]);
        l.record_reception(2).unwrap();
        assert_eq!(l.delivered_from(2), Some(1));
        assert_eq!(l.delivered_from(0), Some(0));
        assert!(matches!(l.record_reception(3), Err(Error::NotNeighbor { node: 3, of: 1 })));
    }

    #[test]
    fn period_close_converts_to_rate() {
        let mut l = PiggybackLedger::new(1, &[0, 2]);
        for _ in 0..40 {
            l.record_reception(2).unwrap();
        }
        l.close_period(500.0);
        assert!((l.reported_rate(2).unwrap() - 0.08).abs() < 1e-12);
        assert_eq!(l.delivered_from(2), Some(0));
        let p = l.build_payload();
        assert_eq!(p.report_for(2), Some(0.08));
        assert_eq!(p.report_for(0), Some(0.0));
    }

    #[test]
    fn cold_start_payload() {
        let mut l = PiggybackLedger::new(1, &[0, 2]);
        let p = l.build_payload();
        assert_eq!(p.sender_throughput, 0.0);
        assert_eq!(p.reverse_reports, vec![(0, 0.0), (2, 0.0)]);
    }

    #[test]
    fn payload_grows_with_degree() {
        for k in 1..=11 {
            let nbrs: Vec<_> = (1..=k).collect();
            let mut l = PiggybackLedger::new(0, &nbrs);
            assert_eq!(l.build_payload().field_count(), 1 + 2 * k);
        }
    }

    #[test]
    fn ingest_updates_neighbor_and_own_throughput() {
        let mut l = PiggybackLedger::new(1, &[0, 2]);
        let from0 = PiggybackPayload { sender_throughput: 0.08, reverse_reports: vec![(1, 0.04)] };
        l.ingest_payload(0, &from0, 3).unwrap();
        assert_eq!(l.neighbor_throughput(0), Some(Heard { throughput: 0.08, stamp: 3 }));
        assert_eq!(l.own_throughput(), 0.04);

        let from2 = PiggybackPayload { sender_throughput: 0.06, reverse_reports: vec![(1, 0.04), (3, 0.1)] };
        l.ingest_payload(2, &from2, 4).unwrap();
        assert!((l.own_throughput() - 0.08).abs() < 1e-12);

        // last writer wins
        let fresher = PiggybackPayload { sender_throughput: 0.05, reverse_reports: vec![(1, 0.01)] };
        l.ingest_payload(0, &fresher, 9).unwrap();
        assert_eq!(l.neighbor_throughput(0), Some(Heard { throughput: 0.05, stamp: 9 }));
        assert!((l.own_throughput() - 0.05).abs() < 1e-12);

        let mut v = Vec::new();
        l.neighbor_throughputs_into(&mut v);
        assert_eq!(v, vec![0.05, 0.06]);
    }

    #[test]
    fn payload_cache_invalidates_on_change() {
        let mut l = PiggybackLedger::new(0, &[1]);
        let a = l.build_payload();
        let b = l.build_payload();
        assert!(Arc::ptr_eq(&a, &b));
        l.ingest_payload(1, &PiggybackPayload { sender_throughput: 0.1, reverse_reports: vec![(0, 0.2)] }, 0)
            .unwrap();
        let c = l.build_payload();
        assert_eq!(c.sender_throughput, 0.2);
    }

    #[test]
    fn ledger_is_local() {
        let mut l = PiggybackLedger::new(0, &[1]);
        let p = PiggybackPayload { sender_throughput: 0.1, reverse_reports: vec![] };
        assert!(l.ingest_payload(5, &p, 0).is_err());
        assert_eq!(l.neighbor_throughput(5), None);
    }
}
