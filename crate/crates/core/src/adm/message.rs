//! The three auxiliary message types and their data group codec.
//!
//! Auxiliary messages ride in sessionless, CRC-protected data groups.
//! Field layouts, MSB first:
//!
//! ```text
//! time base (5 bytes):
//!   status(1) discontinuity(1) rfu(5) tbv(33)
//! editing command (8 bytes, then the command payload):
//!   event_id(16) do_it_now(1) rfu(6) tbv(33) command_tag(8)
//! sign language (10 bytes, then private data):
//!   event_id(16) reserved(31) event_tbv(33)
//! ```

use super::tbv::Tbv;
use crate::datagroup::{group_type, DataGroup, DataGroupError};
use thiserror::Error;

/// Largest auxiliary message, framing headroom already subtracted
/// from the data group payload limit.
pub const MAX_ADM_PAYLOAD: usize = 8187;

const TIME_BASE_LEN: usize = 5;
const EDITING_FIXED_LEN: usize = 8;
const SIGN_FIXED_LEN: usize = 10;

/// Private data content type announcing a Libras video stream, which
/// this profile forbids; sign language travels as a video plane of the
/// main service instead.
const SIGN_CONTENT_LIBRAS_VIDEO: u8 = 0x01;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdmError {
    #[error("group type {0} is not an auxiliary message")]
    WrongGroupType(u8),
    #[error("auxiliary messages do not carry a session header")]
    UnexpectedSession,
    #[error("auxiliary message without CRC protection")]
    MissingCrc,
    #[error("auxiliary message of {0} bytes exceeds {MAX_ADM_PAYLOAD}")]
    TooLarge(usize),
    #[error("auxiliary message payload of {got} bytes, {expected} needed")]
    BadLength { expected: usize, got: usize },
    #[error("{0} value does not fit its field")]
    FieldOutOfRange(&'static str),
    #[error("sign language private data announces a Libras video stream")]
    LibrasVideoForbidden,
    #[error(transparent)]
    DataGroup(#[from] DataGroupError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeBaseStatus {
    Running,
    Paused,
}

/// Periodic time base beacon, one per super frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeBaseMessage {
    pub status: TimeBaseStatus,
    pub discontinuity: bool,
    pub rfu: u8,
    pub tbv: Tbv,
}

impl TimeBaseMessage {
    pub fn new(status: TimeBaseStatus, discontinuity: bool, tbv: Tbv) -> Self {
        TimeBaseMessage { status, discontinuity, rfu: 0, tbv }
    }
}

/// A command for the presentation engine, immediate or scheduled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditingCommandMessage {
    pub event_id: u16,
    pub do_it_now: bool,
    pub rfu: u8,
    pub tbv: Tbv,
    pub command_tag: u8,
    pub payload: Vec<u8>,
}

impl EditingCommandMessage {
    pub fn new(event_id: u16, do_it_now: bool, tbv: Tbv, command_tag: u8, payload: Vec<u8>) -> Self {
        EditingCommandMessage { event_id, do_it_now, rfu: 0, tbv, command_tag, payload }
    }
}

/// Sign language window event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignLanguageMessage {
    pub event_id: u16,
    pub reserved: u32,
    pub event_tbv: Tbv,
    pub private_data: Vec<u8>,
}

impl SignLanguageMessage {
    pub fn new(event_id: u16, event_tbv: Tbv, private_data: Vec<u8>) -> Self {
        SignLanguageMessage { event_id, reserved: 0, event_tbv, private_data }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdmMessage {
    TimeBase(TimeBaseMessage),
    EditingCommand(EditingCommandMessage),
    SignLanguage(SignLanguageMessage),
}

impl AdmMessage {
    pub fn group_type(&self) -> u8 {
        match self {
            AdmMessage::TimeBase(_) => group_type::ADM_TIME_BASE,
            AdmMessage::EditingCommand(_) => group_type::ADM_EDITING_COMMAND,
            AdmMessage::SignLanguage(_) => group_type::ADM_SIGN_LANGUAGE,
        }
    }

    /// Packs the message into a sessionless, CRC-protected data group.
    pub fn to_data_group(&self) -> Result<DataGroup, AdmError> {
        let payload = match self {
            AdmMessage::TimeBase(m) => encode_time_base(m)?,
            AdmMessage::EditingCommand(m) => encode_editing_command(m)?,
            AdmMessage::SignLanguage(m) => encode_sign_language(m)?,
        };
        if payload.len() > MAX_ADM_PAYLOAD {
            return Err(AdmError::TooLarge(payload.len()));
        }
        Ok(DataGroup::sessionless(self.group_type(), payload))
    }
}

/// Unpacks an auxiliary message, insisting on the exact frame shape:
/// a known group type, no session header and a verified CRC.
pub fn decode_adm(group: &DataGroup) -> Result<AdmMessage, AdmError> {
    match group.group_type {
        group_type::ADM_TIME_BASE
        | group_type::ADM_EDITING_COMMAND
        | group_type::ADM_SIGN_LANGUAGE => {}
        other => return Err(AdmError::WrongGroupType(other)),
    }
    if group.session.is_some() {
        return Err(AdmError::UnexpectedSession);
    }
    if !group.crc_present {
        return Err(AdmError::MissingCrc);
    }
    if group.payload.len() > MAX_ADM_PAYLOAD {
        return Err(AdmError::TooLarge(group.payload.len()));
    }
    match group.group_type {
        group_type::ADM_TIME_BASE => decode_time_base(&group.payload).map(AdmMessage::TimeBase),
        group_type::ADM_EDITING_COMMAND => {
            decode_editing_command(&group.payload).map(AdmMessage::EditingCommand)
        }
        _ => decode_sign_language(&group.payload).map(AdmMessage::SignLanguage),
    }
}

fn encode_time_base(m: &TimeBaseMessage) -> Result<Vec<u8>, AdmError> {
    if m.rfu > 0x1F {
        return Err(AdmError::FieldOutOfRange("rfu"));
    }
    let tbv = m.tbv.value();
    let mut out = Vec::with_capacity(TIME_BASE_LEN);
    out.push(
        (matches!(m.status, TimeBaseStatus::Paused) as u8) << 7
            | (m.discontinuity as u8) << 6
            | m.rfu << 1
            | (tbv >> 32) as u8,
    );
    out.extend_from_slice(&(tbv as u32).to_be_bytes());
    Ok(out)
}

fn decode_time_base(payload: &[u8]) -> Result<TimeBaseMessage, AdmError> {
    if payload.len() != TIME_BASE_LEN {
        return Err(AdmError::BadLength { expected: TIME_BASE_LEN, got: payload.len() });
    }
    let low = u32::from_be_bytes(payload[1..5].try_into().unwrap());
    Ok(TimeBaseMessage {
        status: if payload[0] & 0x80 != 0 { TimeBaseStatus::Paused } else { TimeBaseStatus::Running },
        discontinuity: payload[0] & 0x40 != 0,
        rfu: (payload[0] >> 1) & 0x1F,
        tbv: Tbv::new(((payload[0] & 1) as u64) << 32 | low as u64).unwrap(),
    })
}

fn encode_editing_command(m: &EditingCommandMessage) -> Result<Vec<u8>, AdmError> {
    if m.rfu > 0x3F {
        return Err(AdmError::FieldOutOfRange("rfu"));
    }
    let tbv = m.tbv.value();
    let mut out = Vec::with_capacity(EDITING_FIXED_LEN + m.payload.len());
    out.extend_from_slice(&m.event_id.to_be_bytes());
    out.push((m.do_it_now as u8) << 7 | m.rfu << 1 | (tbv >> 32) as u8);
    out.extend_from_slice(&(tbv as u32).to_be_bytes());
    out.push(m.command_tag);
    out.extend_from_slice(&m.payload);
    Ok(out)
}

fn decode_editing_command(payload: &[u8]) -> Result<EditingCommandMessage, AdmError> {
    if payload.len() < EDITING_FIXED_LEN {
        return Err(AdmError::BadLength { expected: EDITING_FIXED_LEN, got: payload.len() });
    }
    let low = u32::from_be_bytes(payload[3..7].try_into().unwrap());
    Ok(EditingCommandMessage {
        event_id: u16::from_be_bytes(payload[0..2].try_into().unwrap()),
        do_it_now: payload[2] & 0x80 != 0,
        rfu: (payload[2] >> 1) & 0x3F,
        tbv: Tbv::new(((payload[2] & 1) as u64) << 32 | low as u64).unwrap(),
        command_tag: payload[7],
        payload: payload[EDITING_FIXED_LEN..].to_vec(),
    })
}

fn encode_sign_language(m: &SignLanguageMessage) -> Result<Vec<u8>, AdmError> {
    if m.reserved > 0x7FFF_FFFF {
        return Err(AdmError::FieldOutOfRange("reserved"));
    }
    if m.private_data.first() == Some(&SIGN_CONTENT_LIBRAS_VIDEO) {
        return Err(AdmError::LibrasVideoForbidden);
    }
    let mut out = Vec::with_capacity(SIGN_FIXED_LEN + m.private_data.len());
    out.extend_from_slice(&m.event_id.to_be_bytes());
    let packed = (m.reserved as u64) << 33 | m.event_tbv.value();
    out.extend_from_slice(&packed.to_be_bytes());
    out.extend_from_slice(&m.private_data);
    Ok(out)
}

fn decode_sign_language(payload: &[u8]) -> Result<SignLanguageMessage, AdmError> {
    if payload.len() < SIGN_FIXED_LEN {
        return Err(AdmError::BadLength { expected: SIGN_FIXED_LEN, got: payload.len() });
    }
    let private_data = payload[SIGN_FIXED_LEN..].to_vec();
    if private_data.first() == Some(&SIGN_CONTENT_LIBRAS_VIDEO) {
        return Err(AdmError::LibrasVideoForbidden);
    }
    let packed = u64::from_be_bytes(payload[2..10].try_into().unwrap());
    Ok(SignLanguageMessage {
        event_id: u16::from_be_bytes(payload[0..2].try_into().unwrap()),
        reserved: (packed >> 33) as u32,
        event_tbv: Tbv::new(packed & (super::tbv::TBV_MODULUS - 1)).unwrap(),
        private_data,
    })
}
