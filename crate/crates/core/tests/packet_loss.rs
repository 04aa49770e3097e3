//! Loss behaviour of the packet layer under independent packet drops:
//! a unit survives exactly when all of its packets do, so the recovery
//! rate over many trials must match (1 - p)^k.

use gdrm_core::packet::{packetize, ContinuityCounter, Packet, PacketStreamConfig, Reassembler};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

fn run_trials(seed: u64, loss: f64, packets_per_unit: usize, trials: u32) -> u32 {
    let config = PacketStreamConfig::new(16, 0).unwrap();
    let unit: Vec<u8> = (0..packets_per_unit * 16).map(|i| i as u8).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut recovered = 0;
    for trial in 0..trials {
        let mut counter = ContinuityCounter::new();
        let packets = packetize(&unit, &config, &mut counter);
        assert_eq!(packets.len(), packets_per_unit);
        let survivors: Vec<&Packet> =
            packets.iter().filter(|_| !rng.gen_bool(loss)).collect();
        let all_survived = survivors.len() == packets.len();

        let mut reassembler = Reassembler::new(config);
        let mut units = Vec::new();
        for packet in survivors {
            if let Some(unit) = reassembler.push_record(&packet.encode()) {
                units.push(unit);
            }
        }
        reassembler.finish();

        // never a wrong unit, and recovery exactly tracks survival
        if all_survived {
            assert_eq!(units, vec![unit.clone()], "trial {trial}");
            recovered += 1;
        } else {
            assert!(units.is_empty(), "trial {trial} rebuilt a unit from losses");
        }
    }
    recovered
}

#[test]
fn recovery_rate_matches_independent_survival() {
    let cases = [
        (1u64, 0.2f64, 3usize),
        (2, 0.2, 5),
        (3, 0.5, 2),
        (4, 0.05, 7),
    ];
    let trials = 12_000u32;
    for (seed, loss, k) in cases {
        let recovered = run_trials(seed, loss, k, trials);
        let expected = (1.0 - loss).powi(k as i32);
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        let observed = recovered as f64 / trials as f64;
        assert!(
            (observed - expected).abs() <= 3.0 * sigma,
            "loss {loss}, k {k}: observed {observed:.4}, expected {expected:.4} +- {:.4}",
            3.0 * sigma
        );
    }
}
