//! Carrying Ginga applications over a Digital Radio Mondiale data
//! channel: a MOT directory-mode carousel on MSC data groups on packet
//! mode, auxiliary data messages for the shared time base, editing
//! commands and sign language events, the multiplex signaling that
//! announces the service, and a static validator for the Digital
//! Radio NCL profile.
//!
//! Layering, bottom up: [`packet`] moves opaque data units across a
//! lossy stream; [`datagroup`] frames carousel segments and auxiliary
//! messages as units; [`carousel`] turns file trees into repeating
//! cycles and back; [`adm`] keeps receiver time and schedules
//! commands; [`ingest`] and [`signaling`] describe the application
//! and its multiplex; [`validator`] checks documents before they are
//! broadcast.

pub mod adm;
pub mod carousel;
pub mod crc;
pub mod datagroup;
pub mod gzip;
pub mod ingest;
pub mod packet;
pub mod signaling;
pub mod validator;

pub use adm::{
    decode_adm, AdmMessage, CommandScheduler, EditingCommandMessage, SignLanguageMessage, Tbv,
    TimeBaseMessage, TimeBaseState, TimeBaseStatus,
};
pub use carousel::{
    build_carousel, CarouselOptions, CarouselReceiver, FeedOutcome, MotDirectory, MotObject,
};
pub use datagroup::{DataGroup, SessionHeader};
pub use ingest::{scan_application, EntryPoint, ProfileId, ScanOptions};
pub use packet::{packetize, ContinuityCounter, Packet, PacketStreamConfig, Reassembler};
pub use signaling::{AppSignaling, MultiplexConfig};
pub use validator::{validate_ncl, Violation};
