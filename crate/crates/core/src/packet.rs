//! Packet mode: splitting data units across fixed-size packets and
//! reassembling them on the receiving side.
//!
//! Every packet in a stream carries the same size data field. A unit
//! that does not fill its final packet is closed by a padded packet
//! whose first data byte gives the count of useful bytes that follow.
//! That one byte prefix is what caps the data field at 255 bytes. The
//! header byte and the data field are protected by a CRC-16, so a
//! corrupted packet is dropped rather than reinterpreted, and the
//! reassembler never guesses across a continuity gap. An eight-step
//! counter cannot prove that exactly eight packets vanished, which is
//! why the data group CRC above this layer stays mandatory.
//!
//! Wire layout of one packet record:
//!
//! ```text
//! byte 0: first(1) last(1) packet_id(2) padded(1) continuity(3)
//! data field, exactly packet_length bytes
//! crc16 big-endian over header byte and data field
//! ```

use crate::crc::crc16;
use thiserror::Error;

/// Largest data field a packet may carry, set by the one byte
/// useful-length prefix in padded packets.
pub const MAX_PACKET_LENGTH: usize = 255;

/// Sub-streams addressable by the two bit packet id.
pub const MAX_SUB_STREAMS: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PacketError {
    #[error("packet length {0} outside 1..={MAX_PACKET_LENGTH}")]
    BadPacketLength(usize),
    #[error("packet id {0} outside 0..=3")]
    BadPacketId(u8),
    #[error("packet CRC mismatch")]
    CrcMismatch,
    #[error("packet record truncated")]
    Truncated,
    #[error("padded packet declares {declared} useful bytes, at most {max} fit")]
    BadPadding { declared: usize, max: usize },
}

/// Per-stream packetization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketStreamConfig {
    packet_length: usize,
    sub_stream_id: u8,
}

impl PacketStreamConfig {
    pub fn new(packet_length: usize, sub_stream_id: u8) -> Result<Self, PacketError> {
        if packet_length == 0 || packet_length > MAX_PACKET_LENGTH {
            return Err(PacketError::BadPacketLength(packet_length));
        }
        if sub_stream_id as usize >= MAX_SUB_STREAMS {
            return Err(PacketError::BadPacketId(sub_stream_id));
        }
        Ok(PacketStreamConfig { packet_length, sub_stream_id })
    }

    pub fn packet_length(&self) -> usize {
        self.packet_length
    }

    pub fn sub_stream_id(&self) -> u8 {
        self.sub_stream_id
    }

    /// Size of one encoded packet record: header, data field, CRC.
    pub fn record_length(&self) -> usize {
        self.packet_length + 3
    }
}

/// One packet, data field already sized to the stream packet length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub first: bool,
    pub last: bool,
    pub packet_id: u8,
    pub padded: bool,
    pub continuity: u8,
    pub data: Vec<u8>,
}

impl Packet {
    fn header_byte(&self) -> u8 {
        (self.first as u8) << 7
            | (self.last as u8) << 6
            | (self.packet_id & 0x03) << 4
            | (self.padded as u8) << 3
            | (self.continuity & 0x07)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() + 3);
        out.push(self.header_byte());
        out.extend_from_slice(&self.data);
        let crc = crc16(&out);
        out.extend_from_slice(&crc.to_be_bytes());
        out
    }

    pub fn decode(record: &[u8], packet_length: usize) -> Result<Self, PacketError> {
        if record.len() != packet_length + 3 {
            return Err(PacketError::Truncated);
        }
        let stored = u16::from_be_bytes([record[record.len() - 2], record[record.len() - 1]]);
        if crc16(&record[..record.len() - 2]) != stored {
            return Err(PacketError::CrcMismatch);
        }
        let header = record[0];
        Ok(Packet {
            first: header & 0x80 != 0,
            last: header & 0x40 != 0,
            packet_id: (header >> 4) & 0x03,
            padded: header & 0x08 != 0,
            continuity: header & 0x07,
            data: record[1..record.len() - 2].to_vec(),
        })
    }

    /// Bytes of the carried unit inside this packet.
    pub fn useful_data(&self) -> Result<&[u8], PacketError> {
        if !self.padded {
            return Ok(&self.data);
        }
        let declared = self.data.first().copied().unwrap_or(0) as usize;
        if self.data.is_empty() || declared > self.data.len() - 1 {
            return Err(PacketError::BadPadding { declared, max: self.data.len().saturating_sub(1) });
        }
        Ok(&self.data[1..1 + declared])
    }
}

/// Mod-8 continuity counter for one packet stream.
#[derive(Debug, Default, Clone)]
pub struct ContinuityCounter(u8);

impl ContinuityCounter {
    pub fn new() -> Self {
        ContinuityCounter(0)
    }

    /// A counter whose next packet carries `value`, for appending to a
    /// stream whose tail is known.
    pub fn starting_at(value: u8) -> Self {
        ContinuityCounter(value & 0x07)
    }

    fn advance(&mut self) -> u8 {
        let value = self.0;
        self.0 = (self.0 + 1) & 0x07;
        value
    }
}

/// Splits one data unit into packets, consuming continuity values from
/// `counter`. An empty unit still produces one padded packet so the
/// receiving side sees the unit boundary.
pub fn packetize(unit: &[u8], config: &PacketStreamConfig, counter: &mut ContinuityCounter) -> Vec<Packet> {
    let length = config.packet_length;
    let mut packets = Vec::with_capacity(unit.len() / length + 1);
    let mut offset = 0;
    loop {
        let remaining = unit.len() - offset;
        let first = offset == 0;
        if remaining >= length {
            packets.push(Packet {
                first,
                last: remaining == length,
                packet_id: config.sub_stream_id,
                padded: false,
                continuity: counter.advance(),
                data: unit[offset..offset + length].to_vec(),
            });
            offset += length;
            if offset == unit.len() {
                break;
            }
        } else {
            let mut data = Vec::with_capacity(length);
            data.push(remaining as u8);
            data.extend_from_slice(&unit[offset..]);
            data.resize(length, 0);
            packets.push(Packet {
                first,
                last: true,
                packet_id: config.sub_stream_id,
                padded: true,
                continuity: counter.advance(),
                data,
            });
            break;
        }
    }
    packets
}

/// Counters kept by the reassembler while it consumes a packet stream.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ReassemblyStats {
    pub packets_accepted: u64,
    pub foreign_packets: u64,
    pub crc_errors: u64,
    pub continuity_gaps: u64,
    pub malformed_packets: u64,
    pub orphan_packets: u64,
    pub units_completed: u64,
    pub units_lost: u64,
}

/// Rebuilds data units from one sub-stream of packets.
///
/// Packets that fail their CRC are counted and otherwise treated as
/// never received. A continuity gap or an unexpected unit start drops
/// the unit under construction; nothing is ever spliced across a gap.
#[derive(Debug)]
pub struct Reassembler {
    config: PacketStreamConfig,
    expected_continuity: Option<u8>,
    in_progress: Option<Vec<u8>>,
    stats: ReassemblyStats,
}

impl Reassembler {
    pub fn new(config: PacketStreamConfig) -> Self {
        Reassembler {
            config,
            expected_continuity: None,
            in_progress: None,
            stats: ReassemblyStats::default(),
        }
    }

    pub fn stats(&self) -> &ReassemblyStats {
        &self.stats
    }

    /// Decodes one wire record and feeds it in. A CRC failure is
    /// recorded and the record is dropped; the loss surfaces later as
    /// a continuity gap.
    pub fn push_record(&mut self, record: &[u8]) -> Option<Vec<u8>> {
        match Packet::decode(record, self.config.packet_length) {
            Ok(packet) => self.push(packet),
            Err(PacketError::CrcMismatch) => {
                self.stats.crc_errors += 1;
                None
            }
            Err(_) => {
                self.stats.malformed_packets += 1;
                None
            }
        }
    }

    pub fn push(&mut self, packet: Packet) -> Option<Vec<u8>> {
        if packet.packet_id != self.config.sub_stream_id {
            self.stats.foreign_packets += 1;
            return None;
        }
        self.stats.packets_accepted += 1;
        if let Some(expected) = self.expected_continuity {
            if packet.continuity != expected {
                self.stats.continuity_gaps += 1;
                self.abandon_unit();
            }
        }
        self.expected_continuity = Some((packet.continuity + 1) & 0x07);

        let useful = match packet.useful_data() {
            Ok(bytes) => bytes,
            Err(_) => {
                self.stats.malformed_packets += 1;
                self.abandon_unit();
                return None;
            }
        };

        if packet.first {
            self.abandon_unit();
            self.in_progress = Some(Vec::new());
        } else if self.in_progress.is_none() {
            self.stats.orphan_packets += 1;
            return None;
        }
        self.in_progress.as_mut().unwrap().extend_from_slice(useful);

        if packet.last {
            let unit = self.in_progress.take().unwrap();
            self.stats.units_completed += 1;
            return Some(unit);
        }
        None
    }

    /// Ends the stream, dropping any unit still under construction.
    pub fn finish(&mut self) {
        self.abandon_unit();
    }

    fn abandon_unit(&mut self) {
        if self.in_progress.take().is_some() {
            self.stats.units_lost += 1;
        }
    }
}

/// Reassembles a whole record stream in one call.
pub fn reassemble_records(
    records: impl IntoIterator<Item = impl AsRef<[u8]>>,
    config: PacketStreamConfig,
) -> (Vec<Vec<u8>>, ReassemblyStats) {
    let mut reassembler = Reassembler::new(config);
    let mut units = Vec::new();
    for record in records {
        if let Some(unit) = reassembler.push_record(record.as_ref()) {
            units.push(unit);
        }
    }
    reassembler.finish();
    (units, reassembler.stats.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn config(length: usize) -> PacketStreamConfig {
        PacketStreamConfig::new(length, 0).unwrap()
    }

    fn packetize_units(units: &[Vec<u8>], cfg: &PacketStreamConfig) -> Vec<Packet> {
        let mut counter = ContinuityCounter::new();
        units.iter().flat_map(|unit| packetize(unit, cfg, &mut counter)).collect()
    }

    #[test]
    fn exact_fit_is_one_unpadded_packet() {
        let cfg = config(40);
        let unit = vec![7u8; 40];
        let packets = packetize(&unit, &cfg, &mut ContinuityCounter::new());
        assert_eq!(packets.len(), 1);
        assert!(packets[0].first && packets[0].last && !packets[0].padded);
        assert_eq!(packets[0].useful_data().unwrap(), &unit[..]);
    }

    #[test]
    fn one_extra_byte_spills_into_padded_packet() {
        let cfg = config(40);
        let unit = vec![7u8; 41];
        let packets = packetize(&unit, &cfg, &mut ContinuityCounter::new());
        assert_eq!(packets.len(), 2);
        assert!(packets[0].first && !packets[0].last && !packets[0].padded);
        assert!(!packets[1].first && packets[1].last && packets[1].padded);
        assert_eq!(packets[1].data[0], 1);
        assert!(packets[1].data[2..].iter().all(|&b| b == 0));
    }

    #[test]
    fn short_unit_pads_the_rest_of_the_field() {
        let cfg = config(40);
        let unit: Vec<u8> = (1..=9).collect();
        let packets = packetize(&unit, &cfg, &mut ContinuityCounter::new());
        assert_eq!(packets.len(), 1);
        let packet = &packets[0];
        assert!(packet.padded);
        assert_eq!(packet.data.len(), 40);
        assert_eq!(packet.data[0], 9);
        assert_eq!(packet.useful_data().unwrap(), &unit[..]);
        // 31 bytes of the field are not unit bytes: the length prefix and 30 zeros
        assert!(packet.data[10..].iter().all(|&b| b == 0));
    }

    #[test]
    fn continuity_increments_mod_8_across_units() {
        let cfg = config(4);
        let units: Vec<Vec<u8>> = (0..5).map(|i| vec![i as u8; 9]).collect();
        let packets = packetize_units(&units, &cfg);
        for (i, packet) in packets.iter().enumerate() {
            assert_eq!(packet.continuity as usize, i % 8);
        }
    }

    #[test]
    fn record_roundtrip_and_crc() {
        let cfg = config(16);
        let packets = packetize(&[1, 2, 3], &cfg, &mut ContinuityCounter::new());
        let record = packets[0].encode();
        assert_eq!(record.len(), cfg.record_length());
        assert_eq!(Packet::decode(&record, 16).unwrap(), packets[0]);
        let mut corrupted = record.clone();
        corrupted[5] ^= 0x80;
        assert_eq!(Packet::decode(&corrupted, 16), Err(PacketError::CrcMismatch));
        assert_eq!(Packet::decode(&record[..10], 16), Err(PacketError::Truncated));
    }

    #[test]
    fn dropped_middle_packet_loses_the_unit() {
        let cfg = config(8);
        let unit: Vec<u8> = (0..24).collect();
        let mut packets = packetize(&unit, &cfg, &mut ContinuityCounter::new());
        assert_eq!(packets.len(), 3);
        packets.remove(1);
        let records: Vec<Vec<u8>> = packets.iter().map(Packet::encode).collect();
        let (units, stats) = reassemble_records(records, cfg);
        assert!(units.is_empty());
        assert_eq!(stats.continuity_gaps, 1);
        assert_eq!(stats.units_lost, 1);
        assert_eq!(stats.units_completed, 0);
    }

    #[test]
    fn loss_of_one_unit_does_not_touch_the_next() {
        let cfg = config(8);
        let unit_a: Vec<u8> = (0..24).collect();
        let unit_b: Vec<u8> = (100..120).collect();
        let mut packets = packetize_units(&[unit_a, unit_b.clone()], &cfg);
        // drop the last packet of the first unit
        packets.remove(2);
        let records: Vec<Vec<u8>> = packets.iter().map(Packet::encode).collect();
        let (units, stats) = reassemble_records(records, cfg);
        assert_eq!(units, vec![unit_b]);
        assert_eq!(stats.units_lost, 1);
        assert_eq!(stats.units_completed, 1);
    }

    #[test]
    fn corrupted_record_counts_and_drops() {
        let cfg = config(8);
        let unit: Vec<u8> = (0..16).collect();
        let packets = packetize(&unit, &cfg, &mut ContinuityCounter::new());
        let mut records: Vec<Vec<u8>> = packets.iter().map(Packet::encode).collect();
        records[1][3] ^= 0x01;
        let (units, stats) = reassemble_records(records, cfg);
        assert!(units.is_empty());
        assert_eq!(stats.crc_errors, 1);
        assert_eq!(stats.units_lost, 1);
    }

    #[test]
    fn unfinished_unit_dropped_at_finish() {
        let cfg = config(8);
        let unit: Vec<u8> = (0..20).collect();
        let packets = packetize(&unit, &cfg, &mut ContinuityCounter::new());
        let records: Vec<Vec<u8>> = packets[..2].iter().map(Packet::encode).collect();
        let (units, stats) = reassemble_records(records, cfg);
        assert!(units.is_empty());
        assert_eq!(stats.units_lost, 1);
    }

    #[test]
    fn foreign_sub_stream_ignored() {
        let other = PacketStreamConfig::new(8, 2).unwrap();
        let packets = packetize(&[1, 2, 3], &other, &mut ContinuityCounter::new());
        let mut reassembler = Reassembler::new(config(8));
        assert!(reassembler.push(packets[0].clone()).is_none());
        assert_eq!(reassembler.stats().foreign_packets, 1);
        assert_eq!(reassembler.stats().packets_accepted, 0);
    }

    #[test]
    fn config_bounds() {
        assert!(PacketStreamConfig::new(0, 0).is_err());
        assert!(PacketStreamConfig::new(256, 0).is_err());
        assert!(PacketStreamConfig::new(255, 3).is_ok());
        assert_eq!(
            PacketStreamConfig::new(10, 4),
            Err(PacketError::BadPacketId(4))
        );
    }

    proptest! {
        #[test]
        fn units_roundtrip_losslessly(
            units in proptest::collection::vec(
                proptest::collection::vec(any::<u8>(), 0..600),
                1..6,
            ),
            length in prop_oneof![Just(1usize), Just(16), Just(40), Just(200), Just(255)],
        ) {
            let cfg = config(length);
            let packets = packetize_units(&units, &cfg);
            for packet in &packets {
                prop_assert_eq!(packet.data.len(), length);
            }
            let records: Vec<Vec<u8>> = packets.iter().map(Packet::encode).collect();
            let (rebuilt, stats) = reassemble_records(records, cfg);
            prop_assert_eq!(rebuilt, units);
            prop_assert_eq!(stats.units_lost, 0);
            prop_assert_eq!(stats.continuity_gaps, 0);
        }
    }
}
