//! The .gdrm container: a packet stream captured to a file, with a
//! JSON sidecar describing the multiplex it would occupy on air.
//!
//! Layout, integers big-endian:
//!
//! ```text
//! magic            "GDRM"
//! version          u8, currently 1
//! packet_length    u16
//! sidecar_length   u32
//! sidecar          JSON, sidecar_length bytes
//! packet records   k times (packet_length + 3) bytes
//! ```
//!
//! The record region is an exact multiple of the record size; the
//! channel simulator may only delete whole records or flip bits in
//! place, so alignment survives any simulated channel.

use gdrm_core::packet::{PacketError, PacketStreamConfig};
use gdrm_core::signaling::{
    app_signaling_for, AppSignaling, DataRef, MultiplexConfig, ServiceDesc, ServiceKind,
    StreamDesc, StreamKind,
};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"GDRM";
pub const VERSION: u8 = 1;

const HEADER_LEN: usize = 11;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("not a gdrm container")]
    BadMagic,
    #[error("container version {0} is not supported")]
    UnsupportedVersion(u8),
    #[error("container truncated")]
    Truncated,
    #[error("container sidecar invalid: {0}")]
    BadSidecar(#[from] serde_json::Error),
    #[error("record region leaves {extra} stray bytes")]
    MisalignedRecords { extra: usize },
    #[error(transparent)]
    BadStream(#[from] PacketError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Multiplex description travelling alongside the packets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub multiplex: MultiplexConfig,
    pub app_signaling: AppSignaling,
    /// Which sub-stream of the data stream the records belong to.
    pub sub_stream_id: u8,
    /// Room for robustness mode and occupancy once a modulator needs
    /// them; carried verbatim when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fac_channel_parameters: Option<serde_json::Value>,
}

impl Sidecar {
    /// The one-service shape this tool emits: a standalone data
    /// service on one data stream, the application on `sub_stream_id`.
    pub fn standalone_data_service(sub_stream_id: u8) -> Self {
        Sidecar {
            multiplex: MultiplexConfig {
                streams: vec![StreamDesc { id: 0, kind: StreamKind::Data }],
                services: vec![ServiceDesc {
                    label: "ginga".into(),
                    kind: ServiceKind::Data,
                    audio_stream: None,
                    data_refs: vec![DataRef { stream: 0, sub_stream: sub_stream_id }],
                }],
            },
            app_signaling: app_signaling_for(ServiceKind::Data, true)
                .expect("a data service carries the application"),
            sub_stream_id,
            fac_channel_parameters: None,
        }
    }
}

/// One captured packet stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    packet_length: usize,
    pub sidecar: Sidecar,
    records: Vec<u8>,
}

impl Container {
    pub fn new(packet_length: usize, sidecar: Sidecar) -> Result<Self, ContainerError> {
        // validates the length range; the config itself is rebuilt on use
        PacketStreamConfig::new(packet_length, sidecar.sub_stream_id)?;
        Ok(Container { packet_length, sidecar, records: Vec::new() })
    }

    pub fn packet_length(&self) -> usize {
        self.packet_length
    }

    /// Bytes of one record: data field plus header and CRC.
    pub fn record_length(&self) -> usize {
        self.packet_length + 3
    }

    pub fn record_count(&self) -> usize {
        self.records.len() / self.record_length()
    }

    pub fn records(&self) -> impl Iterator<Item = &[u8]> {
        self.records.chunks_exact(self.record_length())
    }

    pub fn push_record(&mut self, record: &[u8]) {
        debug_assert_eq!(record.len(), self.record_length());
        self.records.extend_from_slice(record);
    }

    pub fn stream_config(&self) -> PacketStreamConfig {
        PacketStreamConfig::new(self.packet_length, self.sidecar.sub_stream_id)
            .expect("validated on construction")
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, ContainerError> {
        let sidecar = serde_json::to_vec(&self.sidecar)?;
        let mut out = Vec::with_capacity(HEADER_LEN + sidecar.len() + self.records.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.packet_length as u16).to_be_bytes());
        out.extend_from_slice(&(sidecar.len() as u32).to_be_bytes());
        out.extend_from_slice(&sidecar);
        out.extend_from_slice(&self.records);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContainerError> {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        if bytes.len() >= 5 && bytes[4] != VERSION {
            return Err(ContainerError::UnsupportedVersion(bytes[4]));
        }
        if bytes.len() < HEADER_LEN {
            return Err(ContainerError::Truncated);
        }
        let packet_length = u16::from_be_bytes([bytes[5], bytes[6]]) as usize;
        let sidecar_length = u32::from_be_bytes(bytes[7..11].try_into().unwrap()) as usize;
        let sidecar_end = HEADER_LEN.checked_add(sidecar_length).ok_or(ContainerError::Truncated)?;
        let sidecar_bytes = bytes.get(HEADER_LEN..sidecar_end).ok_or(ContainerError::Truncated)?;
        let sidecar: Sidecar = serde_json::from_slice(sidecar_bytes)?;

        let mut container = Container::new(packet_length, sidecar)?;
        let records = &bytes[sidecar_end..];
        let extra = records.len() % container.record_length();
        if extra != 0 {
            return Err(ContainerError::MisalignedRecords { extra });
        }
        container.records = records.to_vec();
        Ok(container)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), ContainerError> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, ContainerError> {
        Container::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_container() -> Container {
        let mut container =
            Container::new(16, Sidecar::standalone_data_service(0)).unwrap();
        container.push_record(&[0xAA; 19]);
        container.push_record(&[0xBB; 19]);
        container
    }

    #[test]
    fn header_layout() {
        let bytes = test_container().to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"GDRM");
        assert_eq!(bytes[4], 1);
        assert_eq!(u16::from_be_bytes([bytes[5], bytes[6]]), 16);
        let sidecar_length = u32::from_be_bytes(bytes[7..11].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), 11 + sidecar_length + 2 * 19);
        serde_json::from_slice::<Sidecar>(&bytes[11..11 + sidecar_length]).unwrap();
    }

    #[test]
    fn roundtrip() {
        let container = test_container();
        let decoded = Container::from_bytes(&container.to_bytes().unwrap()).unwrap();
        assert_eq!(decoded, container);
        assert_eq!(decoded.record_count(), 2);
        assert_eq!(decoded.records().count(), 2);
    }

    #[test]
    fn every_truncation_fails_cleanly_or_shortens_the_stream() {
        let container = test_container();
        let bytes = container.to_bytes().unwrap();
        let records_start = bytes.len() - 2 * 19;
        for length in 0..bytes.len() {
            match Container::from_bytes(&bytes[..length]) {
                // cutting at a record boundary just loses tail records
                Ok(shorter) => {
                    assert!(length >= records_start, "length {length}");
                    assert_eq!((length - records_start) % 19, 0, "length {length}");
                    assert_eq!(shorter.record_count(), (length - records_start) / 19);
                }
                Err(
                    ContainerError::Truncated
                    | ContainerError::BadSidecar(_)
                    | ContainerError::MisalignedRecords { .. },
                ) => {}
                Err(other) => panic!("length {length}: {other}"),
            }
        }
    }

    #[test]
    fn foreign_files_rejected() {
        assert!(matches!(
            Container::from_bytes(b"MP3\x00data"),
            Err(ContainerError::BadMagic)
        ));
        let mut bytes = test_container().to_bytes().unwrap();
        bytes[4] = 9;
        assert!(matches!(
            Container::from_bytes(&bytes),
            Err(ContainerError::UnsupportedVersion(9))
        ));
    }

    #[test]
    fn bad_packet_length_rejected() {
        let mut bytes = test_container().to_bytes().unwrap();
        bytes[5] = 0x01;
        bytes[6] = 0x00;
        assert!(matches!(
            Container::from_bytes(&bytes),
            Err(ContainerError::BadStream(PacketError::BadPacketLength(256)))
        ));
        assert!(Container::new(0, Sidecar::standalone_data_service(0)).is_err());
        assert!(Container::new(100, Sidecar::standalone_data_service(5)).is_err());
    }

    #[test]
    fn garbage_sidecar_rejected() {
        let mut container_bytes = Vec::new();
        container_bytes.extend_from_slice(&MAGIC);
        container_bytes.push(VERSION);
        container_bytes.extend_from_slice(&16u16.to_be_bytes());
        container_bytes.extend_from_slice(&5u32.to_be_bytes());
        container_bytes.extend_from_slice(b"{oops");
        assert!(matches!(
            Container::from_bytes(&container_bytes),
            Err(ContainerError::BadSidecar(_))
        ));
    }
}
