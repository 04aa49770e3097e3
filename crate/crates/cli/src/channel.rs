//! A deliberately simple broadcast channel: records vanish whole with
//! probability `loss`, surviving records take independent bit flips
//! at `bit_error_rate`. Everything downstream must cope through CRCs
//! and carousel repetition; the simulator itself never reorders and
//! never splits a record.

use crate::container::Container;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("{name} of {value} is not a probability")]
pub struct BadProbability {
    pub name: &'static str,
    pub value: f64,
}

/// Channel model parameters. The seed fixes every draw, so one
/// parameter set replays the same channel on the same input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    loss: f64,
    bit_error_rate: f64,
    pub seed: u64,
}

impl ChannelParams {
    pub fn new(loss: f64, bit_error_rate: f64, seed: u64) -> Result<Self, BadProbability> {
        check_probability("loss", loss)?;
        check_probability("bit error rate", bit_error_rate)?;
        Ok(ChannelParams { loss, bit_error_rate, seed })
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn bit_error_rate(&self) -> f64 {
        self.bit_error_rate
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<(), BadProbability> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(BadProbability { name, value });
    }
    Ok(())
}

/// Plays the container through the channel. Draw order is fixed: one
/// survival draw per record, then one draw per bit of each survivor.
pub fn simulate_channel(container: &Container, params: &ChannelParams) -> Container {
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    let mut out = Container::new(container.packet_length(), container.sidecar.clone())
        .expect("source container was valid");
    for record in container.records() {
        if rng.gen_bool(params.loss) {
            continue;
        }
        if params.bit_error_rate == 0.0 {
            out.push_record(record);
            continue;
        }
        let mut damaged = record.to_vec();
        for byte in &mut damaged {
            for bit in 0..8 {
                if rng.gen_bool(params.bit_error_rate) {
                    *byte ^= 1 << bit;
                }
            }
        }
        out.push_record(&damaged);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled_container(records: usize) -> Container {
        let mut container =
            Container::new(16, crate::container::Sidecar::standalone_data_service(0)).unwrap();
        for index in 0..records {
            let mut record = vec![(index % 251) as u8; 19];
            record[0] = index as u8;
            container.push_record(&record);
        }
        container
    }

    #[test]
    fn probabilities_validated() {
        assert!(ChannelParams::new(0.0, 0.0, 1).is_ok());
        assert!(ChannelParams::new(1.0, 1.0, 1).is_ok());
        assert_eq!(
            ChannelParams::new(-0.1, 0.0, 1).unwrap_err().name,
            "loss"
        );
        assert_eq!(
            ChannelParams::new(0.0, 1.5, 1).unwrap_err().name,
            "bit error rate"
        );
        assert!(ChannelParams::new(f64::NAN, 0.0, 1).is_err());
    }

    #[test]
    fn clean_channel_is_identity() {
        let container = filled_container(50);
        let params = ChannelParams::new(0.0, 0.0, 9).unwrap();
        assert_eq!(simulate_channel(&container, &params), container);
    }

    #[test]
    fn total_loss_empties_the_stream() {
        let container = filled_container(50);
        let params = ChannelParams::new(1.0, 0.0, 9).unwrap();
        assert_eq!(simulate_channel(&container, &params).record_count(), 0);
    }

    #[test]
    fn same_seed_same_channel() {
        let container = filled_container(200);
        let params = ChannelParams::new(0.3, 0.001, 77).unwrap();
        let first = simulate_channel(&container, &params);
        let second = simulate_channel(&container, &params);
        assert_eq!(first, second);
        let other_seed = ChannelParams::new(0.3, 0.001, 78).unwrap();
        assert_ne!(simulate_channel(&container, &other_seed), first);
    }

    #[test]
    fn loss_rate_tracks_the_binomial() {
        let records = 10_000usize;
        let container = filled_container(records);
        let loss = 0.2;
        let params = ChannelParams::new(loss, 0.0, 4242).unwrap();
        let survivors = simulate_channel(&container, &params).record_count() as f64;
        let expected = records as f64 * (1.0 - loss);
        let sigma = (records as f64 * loss * (1.0 - loss)).sqrt();
        assert!(
            (survivors - expected).abs() <= 3.0 * sigma,
            "{survivors} survivors, expected {expected} +- {:.1}",
            3.0 * sigma
        );
    }

    #[test]
    fn bit_errors_damage_surviving_records_in_place() {
        let container = filled_container(100);
        let params = ChannelParams::new(0.0, 0.01, 5).unwrap();
        let damaged = simulate_channel(&container, &params);
        assert_eq!(damaged.record_count(), 100);
        let flipped: u32 = container
            .records()
            .zip(damaged.records())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()))
            .sum();
        // 15200 bit draws at 1% each
        assert!(flipped > 50 && flipped < 300, "{flipped} bits flipped");
    }
}
