//! Auxiliary data messages: the time base, editing commands scheduled
//! against it, and sign language window signaling.

mod message;
mod scheduler;
mod tbv;
mod timebase;

pub use message::{
    decode_adm, AdmError, AdmMessage, EditingCommandMessage, SignLanguageMessage,
    TimeBaseMessage, TimeBaseStatus, MAX_ADM_PAYLOAD,
};
pub use scheduler::CommandScheduler;
pub use tbv::{parse_tbv_literal, Tbv, TbvError, TBV_MODULUS};
pub use timebase::{
    ApplyOutcome, TickOutcome, TimeBaseConfig, TimeBaseState, TICKS_PER_SUPER_FRAME,
};
