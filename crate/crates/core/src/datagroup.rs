//! MSC data group framing, the common layer between the packet stream
//! and both the MOT carousel and the auxiliary data messages.
//!
//! Two header configurations are in use here. Auxiliary messages travel
//! without a session header; MOT segments carry one holding the segment
//! number and the transport id. The CRC is mandatory in both cases and
//! this decoder accepts only those two shapes. The extension field and
//! other user access layouts are rejected as unsupported rather than
//! guessed at.
//!
//! Wire layout, all fields MSB first:
//!
//! ```text
//! byte 0: extension(1) crc(1) segment(1) user_access(1) type(4)
//! byte 1: continuity(4) repetition(4)
//! session header when present:
//!   last(1) segment_number(15)
//!   rfa(3) transport_id_flag(1) length_indicator(4)   = 0x12
//!   transport_id(16)
//! payload
//! crc16 big-endian when present
//! ```

use crate::crc::crc16;
use thiserror::Error;

/// Largest payload a single data group may carry.
pub const MAX_PAYLOAD: usize = 8191;

/// Data group types carried by this chain.
pub mod group_type {
    pub const MOT_HEADER: u8 = 3;
    pub const MOT_BODY: u8 = 4;
    pub const MOT_DIRECTORY: u8 = 6;
    pub const MOT_DIRECTORY_COMPRESSED: u8 = 7;
    pub const ADM_TIME_BASE: u8 = 10;
    pub const ADM_EDITING_COMMAND: u8 = 11;
    pub const ADM_SIGN_LANGUAGE: u8 = 12;
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DataGroupError {
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD} byte data group limit")]
    PayloadTooLarge(usize),
    #[error("{field} value {value} does not fit its field")]
    FieldOutOfRange { field: &'static str, value: u32 },
    #[error("data group CRC mismatch")]
    CrcMismatch,
    #[error("data group truncated")]
    Truncated,
    #[error("unsupported data group header configuration")]
    UnsupportedHeader,
}

/// Session header used by segmented (MOT) groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionHeader {
    pub last_segment: bool,
    pub segment_number: u16,
    pub transport_id: u16,
}

/// One MSC data group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataGroup {
    pub group_type: u8,
    pub continuity_index: u8,
    pub repetition_index: u8,
    pub session: Option<SessionHeader>,
    pub payload: Vec<u8>,
    pub crc_present: bool,
}

impl DataGroup {
    /// Builds a CRC-protected group without a session header.
    pub fn sessionless(group_type: u8, payload: Vec<u8>) -> Self {
        DataGroup {
            group_type,
            continuity_index: 0,
            repetition_index: 0,
            session: None,
            payload,
            crc_present: true,
        }
    }

    /// Builds a CRC-protected segmented group.
    pub fn segmented(group_type: u8, session: SessionHeader, payload: Vec<u8>) -> Self {
        DataGroup {
            group_type,
            continuity_index: 0,
            repetition_index: 0,
            session: Some(session),
            payload,
            crc_present: true,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, DataGroupError> {
        if self.payload.len() > MAX_PAYLOAD {
            return Err(DataGroupError::PayloadTooLarge(self.payload.len()));
        }
        check_field("group type", self.group_type as u32, 15)?;
        check_field("continuity index", self.continuity_index as u32, 15)?;
        check_field("repetition index", self.repetition_index as u32, 15)?;
        if let Some(session) = &self.session {
            check_field("segment number", session.segment_number as u32, 0x7FFF)?;
        }

        let mut out = Vec::with_capacity(4 + 5 + self.payload.len());
        let mut byte0 = self.group_type & 0x0F;
        if self.crc_present {
            byte0 |= 1 << 6;
        }
        if self.session.is_some() {
            byte0 |= 1 << 5 | 1 << 4;
        }
        out.push(byte0);
        out.push(self.continuity_index << 4 | self.repetition_index);
        if let Some(session) = &self.session {
            let seg = (session.last_segment as u16) << 15 | session.segment_number;
            out.extend_from_slice(&seg.to_be_bytes());
            out.push(0x12);
            out.extend_from_slice(&session.transport_id.to_be_bytes());
        }
        out.extend_from_slice(&self.payload);
        if self.crc_present {
            let crc = crc16(&out);
            out.extend_from_slice(&crc.to_be_bytes());
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DataGroupError> {
        if bytes.len() < 2 {
            return Err(DataGroupError::Truncated);
        }
        let byte0 = bytes[0];
        if byte0 & 0x80 != 0 {
            return Err(DataGroupError::UnsupportedHeader);
        }
        let crc_present = byte0 & 0x40 != 0;
        let segment_flag = byte0 & 0x20 != 0;
        let user_access_flag = byte0 & 0x10 != 0;
        if segment_flag != user_access_flag {
            return Err(DataGroupError::UnsupportedHeader);
        }
        let group_type = byte0 & 0x0F;
        let continuity_index = bytes[1] >> 4;
        let repetition_index = bytes[1] & 0x0F;

        let mut offset = 2;
        let session = if segment_flag {
            if bytes.len() < offset + 5 {
                return Err(DataGroupError::Truncated);
            }
            let seg = u16::from_be_bytes([bytes[offset], bytes[offset + 1]]);
            if bytes[offset + 2] != 0x12 {
                return Err(DataGroupError::UnsupportedHeader);
            }
            let transport_id = u16::from_be_bytes([bytes[offset + 3], bytes[offset + 4]]);
            offset += 5;
            Some(SessionHeader {
                last_segment: seg & 0x8000 != 0,
                segment_number: seg & 0x7FFF,
                transport_id,
            })
        } else {
            None
        };

        let crc_len = if crc_present { 2 } else { 0 };
        if bytes.len() < offset + crc_len {
            return Err(DataGroupError::Truncated);
        }
        let payload_end = bytes.len() - crc_len;
        if crc_present {
            let stored = u16::from_be_bytes([bytes[payload_end], bytes[payload_end + 1]]);
            if crc16(&bytes[..payload_end]) != stored {
                return Err(DataGroupError::CrcMismatch);
            }
        }
        let payload = bytes[offset..payload_end].to_vec();
        if payload.len() > MAX_PAYLOAD {
            return Err(DataGroupError::PayloadTooLarge(payload.len()));
        }
        Ok(DataGroup {
            group_type,
            continuity_index,
            repetition_index,
            session,
            payload,
            crc_present,
        })
    }
}

fn check_field(field: &'static str, value: u32, max: u32) -> Result<(), DataGroupError> {
    if value > max {
        return Err(DataGroupError::FieldOutOfRange { field, value });
    }
    Ok(())
}
