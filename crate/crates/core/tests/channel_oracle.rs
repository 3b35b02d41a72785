mod common;

use common::{random_schedule, simulate};
use drlimac::channel::{Outcome, TransmissionRecord};
use drlimac::oracle::brute_force_resolve;
use drlimac::topology::{Preset, Topology, PRESETS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn preset_topologies() -> Vec<Topology> {
    PRESETS.iter().map(Preset::topology).collect()
}

#[test]
fn channel_matches_brute_force_on_ten_thousand_schedules() {
    let topos = preset_topologies();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut collided = 0usize;
    let mut total = 0usize;
    for case in 0..10_000 {
        let topo = &topos[case % topos.len()];
        let len = rng.gen_range(1..40);
        // dense enough that collisions are common
        let horizon = rng.gen_range(1.0..(len as f64 * 1.5 + 1.0));
        let schedule = random_schedule(&mut rng, topo, len, horizon);
        let got = simulate(topo, &schedule);
        let want = brute_force_resolve(&schedule, topo);
        assert_eq!(got, want, "case {case}");
        collided += got.iter().filter(|o| **o == Outcome::Collided).count();
        total += got.len();
    }
    // the comparison is only meaningful when both outcomes occur often
    let frac = collided as f64 / total as f64;
    assert!(frac > 0.2 && frac < 0.9, "collided fraction {frac}");
}

#[test]
fn touching_and_exactly_simultaneous_packets() {
    let topo = Topology::line(3).unwrap();
    let schedule = vec![
        TransmissionRecord::new(0, 1, 0.0),
        TransmissionRecord::new(2, 1, 1.0),
        TransmissionRecord::new(0, 1, 2.0),
        TransmissionRecord::new(2, 1, 2.0),
    ];
    let want = vec![Outcome::Delivered, Outcome::Delivered, Outcome::Collided, Outcome::Collided];
    assert_eq!(brute_force_resolve(&schedule, &topo), want);
    assert_eq!(simulate(&topo, &schedule), want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn channel_matches_brute_force(seed in any::<u64>(), which in 0usize..PRESETS.len(), len in 1usize..30) {
        let topo = PRESETS[which].topology();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schedule = random_schedule(&mut rng, &topo, len, len as f64);
        prop_assert_eq!(simulate(&topo, &schedule), brute_force_resolve(&schedule, &topo));
    }
}
