//! Helpers shared by the integration test targets.

use drlimac::channel::{Channel, Outcome, TransmissionRecord};
use drlimac::topology::Topology;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random transmissions sorted by start time, `(sender, receiver, start)`.
pub fn random_schedule(rng: &mut ChaCha8Rng, topo: &Topology, len: usize, horizon: f64) -> Vec<TransmissionRecord> {
    let mut starts: Vec<f64> = (0..len).map(|_| rng.gen::<f64>() * horizon).collect();
    starts.sort_by(f64::total_cmp);
    starts
        .into_iter()
        .map(|s| {
            let sender = rng.gen_range(0..topo.node_count());
            let nbrs = topo.neighbors_of(sender);
            TransmissionRecord::new(sender, nbrs[rng.gen_range(0..nbrs.len())], s)
        })
        .collect()
}

/// Feeds `schedule` to the channel, resolving as time advances, and returns
/// outcomes in schedule order.
pub fn simulate(topo: &Topology, schedule: &[TransmissionRecord]) -> Vec<Outcome> {
    let mut ch: Channel<usize> = Channel::new(topo.clone().into());
    let mut out = vec![Outcome::Pending; schedule.len()];
    let mut done = Vec::new();
    for (i, tx) in schedule.iter().enumerate() {
        ch.resolve_into(tx.start, &mut done);
        ch.submit(*tx, i).unwrap();
    }
    done.extend(ch.flush());
    for (rec, i) in done {
        assert_eq!(rec.sender, schedule[i].sender);
        out[i] = rec.outcome;
    }
    out
}
