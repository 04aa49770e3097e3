//! Multiplex topology and the fixed signaling values that announce a
//! Ginga data service to receivers.
//!
//! The multiplex carries up to four streams; packet mode divides a
//! data stream into up to four sub-streams addressed by packet id. An
//! audio service may attach data as programme-associated data, or the
//! data may stand alone as its own service. Either way the application
//! signaling values are the same, except that only a standalone data
//! service announces an application identifier in the fast access
//! channel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// FAC application identifier announcing a Ginga data service.
pub const FAC_APPLICATION_ID_GINGA: u8 = 4;
/// SDC: data unit based packet mode.
pub const PACKET_MODE_INDICATOR: u8 = 1;
pub const DATA_UNIT_INDICATOR: u8 = 1;
/// SDC application information: domain 0 selects the generic one
/// described by the user application identifier.
pub const APPLICATION_DOMAIN: u8 = 0;
/// User application: NCL-based middleware.
pub const USER_APPLICATION_ID_NCL: u16 = 0x0001;

/// Most streams one multiplex may carry.
pub const MAX_STREAMS: usize = 4;
/// Most sub-streams one packet mode stream may carry.
pub const MAX_SUB_STREAMS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    Audio,
    Data,
}

/// One stream slot of the multiplex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamDesc {
    pub id: u8,
    pub kind: StreamKind,
}

/// Reference from a service to a packet mode sub-stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataRef {
    pub stream: u8,
    pub sub_stream: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceKind {
    Audio,
    Data,
}

/// One announced service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceDesc {
    pub label: String,
    pub kind: ServiceKind,
    /// Stream id of the audio programme, for audio services.
    pub audio_stream: Option<u8>,
    /// Attached data sub-streams: programme-associated for an audio
    /// service, the payload itself for a data service.
    pub data_refs: Vec<DataRef>,
}

/// The whole multiplex description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplexConfig {
    pub streams: Vec<StreamDesc>,
    pub services: Vec<ServiceDesc>,
}

/// Signaling values attached to one Ginga application stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppSignaling {
    /// Present only for a standalone data service; programme
    /// associated data is reached through its audio service instead.
    pub fac_application_id: Option<u8>,
    pub packet_mode_indicator: u8,
    pub data_unit_indicator: u8,
    pub application_domain: u8,
    pub user_application_id: u16,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("service does not carry a Ginga application")]
pub struct NotAGingaService;

/// Signaling values for a service carrying the Ginga chain.
pub fn app_signaling_for(kind: ServiceKind, carries_ginga: bool) -> Result<AppSignaling, NotAGingaService> {
    if !carries_ginga {
        return Err(NotAGingaService);
    }
    Ok(AppSignaling {
        fac_application_id: match kind {
            ServiceKind::Data => Some(FAC_APPLICATION_ID_GINGA),
            ServiceKind::Audio => None,
        },
        packet_mode_indicator: PACKET_MODE_INDICATOR,
        data_unit_indicator: DATA_UNIT_INDICATOR,
        application_domain: APPLICATION_DOMAIN,
        user_application_id: USER_APPLICATION_ID_NCL,
    })
}

/// One topology rule breach.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigViolation {
    pub rule: &'static str,
    pub detail: String,
}

impl ConfigViolation {
    fn new(rule: &'static str, detail: String) -> Self {
        ConfigViolation { rule, detail }
    }
}

/// Checks the multiplex against the topology rules. Violations come
/// back in input order; permuting streams or services permutes the
/// list but never changes its contents.
pub fn validate_multiplex(config: &MultiplexConfig) -> Vec<ConfigViolation> {
    let mut violations = Vec::new();
    if config.streams.is_empty() || config.streams.len() > MAX_STREAMS {
        violations.push(ConfigViolation::new(
            "stream-count",
            format!("{} streams, 1..=4 allowed", config.streams.len()),
        ));
    }
    let mut seen_ids = std::collections::HashSet::new();
    for stream in &config.streams {
        if !seen_ids.insert(stream.id) {
            violations.push(ConfigViolation::new(
                "duplicate-stream-id",
                format!("stream id {} declared twice", stream.id),
            ));
        }
    }
    let stream_kind = |id: u8| config.streams.iter().find(|s| s.id == id).map(|s| s.kind);

    for service in &config.services {
        let label = &service.label;
        match service.kind {
            ServiceKind::Audio => match service.audio_stream {
                None => violations.push(ConfigViolation::new(
                    "audio-service-stream",
                    format!("audio service {label:?} references no audio stream"),
                )),
                Some(id) => match stream_kind(id) {
                    Some(StreamKind::Audio) => {}
                    Some(StreamKind::Data) => violations.push(ConfigViolation::new(
                        "audio-service-stream",
                        format!("audio service {label:?} points at data stream {id}"),
                    )),
                    None => violations.push(ConfigViolation::new(
                        "audio-service-stream",
                        format!("audio service {label:?} points at missing stream {id}"),
                    )),
                },
            },
            ServiceKind::Data => {
                if service.audio_stream.is_some() {
                    violations.push(ConfigViolation::new(
                        "data-service-stream",
                        format!("data service {label:?} references an audio stream"),
                    ));
                }
                if service.data_refs.is_empty() {
                    violations.push(ConfigViolation::new(
                        "data-service-stream",
                        format!("data service {label:?} references no data stream"),
                    ));
                }
            }
        }
        for data_ref in &service.data_refs {
            if data_ref.sub_stream as usize >= MAX_SUB_STREAMS {
                violations.push(ConfigViolation::new(
                    "sub-stream-range",
                    format!(
                        "service {label:?} uses sub-stream {} of stream {}, 0..=3 allowed",
                        data_ref.sub_stream, data_ref.stream
                    ),
                ));
            }
            match stream_kind(data_ref.stream) {
                Some(StreamKind::Data) => {}
                Some(StreamKind::Audio) => violations.push(ConfigViolation::new(
                    "data-ref-stream",
                    format!(
                        "service {label:?} attaches data to audio stream {}",
                        data_ref.stream
                    ),
                )),
                None => violations.push(ConfigViolation::new(
                    "data-ref-stream",
                    format!(
                        "service {label:?} attaches data to missing stream {}",
                        data_ref.stream
                    ),
                )),
            }
        }
    }
    violations
}
