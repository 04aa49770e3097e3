//! Receiver time base: tracks the broadcast tick counter, absorbing
//! small drift elastically and jumping on announced discontinuities.
//!
//! One super frame advances the time base by 1000 ticks. The received
//! beacon is authoritative; when it disagrees with the local counter
//! by no more than the elastic window, the difference is amortized a
//! few ticks per frame instead of stepping the clock, so scheduled
//! moments are never skipped over or visited twice. Larger forward
//! disagreements jump; backward ones without an announcement are held
//! and reported, since a silent rewind would fire past events again.

use super::message::{TimeBaseMessage, TimeBaseStatus};
use super::tbv::Tbv;
use thiserror::Error;

/// Ticks one super frame advances the time base.
pub const TICKS_PER_SUPER_FRAME: u64 = 1000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimeBaseConfigError {
    #[error("elastic window of 0 disables drift tracking")]
    ZeroWindow,
    #[error("per-tick adjustment {0} outside 1..=999")]
    BadAdjustment(u64),
}

/// Drift handling knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeBaseConfig {
    /// Largest beacon disagreement absorbed elastically, in ticks.
    pub elastic_window: u64,
    /// Largest correction folded into one tick. Capped under 1000 so
    /// the effective increment stays in 1..=1999 and never rewinds.
    pub max_adjust_per_tick: u64,
}

impl Default for TimeBaseConfig {
    fn default() -> Self {
        TimeBaseConfig { elastic_window: 3000, max_adjust_per_tick: 250 }
    }
}

impl TimeBaseConfig {
    pub fn new(elastic_window: u64, max_adjust_per_tick: u64) -> Result<Self, TimeBaseConfigError> {
        if elastic_window == 0 {
            return Err(TimeBaseConfigError::ZeroWindow);
        }
        if max_adjust_per_tick == 0 || max_adjust_per_tick >= TICKS_PER_SUPER_FRAME {
            return Err(TimeBaseConfigError::BadAdjustment(max_adjust_per_tick));
        }
        Ok(TimeBaseConfig { elastic_window, max_adjust_per_tick })
    }

    /// Frames needed to amortize a full-window disagreement.
    pub fn amortization_horizon(&self) -> u64 {
        self.elastic_window.div_ceil(self.max_adjust_per_tick)
    }
}

/// How one beacon was absorbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyOutcome {
    /// First beacon; the counter starts here.
    Initialized,
    /// Announced discontinuity; the counter jumped and events are
    /// suppressed until the next tick completes the frame.
    Discontinuity,
    /// Disagreement within the window, to be amortized. Carries the
    /// signed drift in ticks.
    Elastic(i64),
    /// Unannounced forward leap beyond the window; jumped.
    ForwardJump,
    /// Unannounced backward leap beyond the window; held in place.
    DriftViolation,
}

/// What one tick did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickOutcome {
    pub increment: u64,
    pub wrapped: bool,
}

/// The tracked time base.
#[derive(Debug, Clone)]
pub struct TimeBaseState {
    config: TimeBaseConfig,
    current: Tbv,
    initialized: bool,
    running: bool,
    suppress_events: bool,
    pending_drift: i64,
}

impl Default for TimeBaseState {
    fn default() -> Self {
        TimeBaseState::new(TimeBaseConfig::default())
    }
}

impl TimeBaseState {
    pub fn new(config: TimeBaseConfig) -> Self {
        TimeBaseState {
            config,
            current: Tbv::default(),
            initialized: false,
            running: false,
            suppress_events: false,
            pending_drift: 0,
        }
    }

    pub fn current(&self) -> Tbv {
        self.current
    }

    pub fn initialized(&self) -> bool {
        self.initialized
    }

    pub fn running(&self) -> bool {
        self.running
    }

    /// True between a discontinuity beacon and the tick that closes
    /// that super frame; event polls in this span must stay silent.
    pub fn suppress_events(&self) -> bool {
        self.suppress_events
    }

    /// Drift not yet folded into ticks, in signed ticks.
    pub fn pending_drift(&self) -> i64 {
        self.pending_drift
    }

    /// Absorbs one beacon.
    pub fn apply(&mut self, message: &TimeBaseMessage) -> ApplyOutcome {
        self.running = message.status == TimeBaseStatus::Running;
        if !self.initialized {
            self.initialized = true;
            self.current = message.tbv;
            self.pending_drift = 0;
            if message.discontinuity {
                self.suppress_events = true;
            }
            return ApplyOutcome::Initialized;
        }
        if message.discontinuity {
            self.current = message.tbv;
            self.pending_drift = 0;
            self.suppress_events = true;
            return ApplyOutcome::Discontinuity;
        }
        let drift = self.current.signed_distance_to(message.tbv);
        if drift.unsigned_abs() <= self.config.elastic_window {
            self.pending_drift = drift;
            ApplyOutcome::Elastic(drift)
        } else if drift > 0 {
            self.current = message.tbv;
            self.pending_drift = 0;
            ApplyOutcome::ForwardJump
        } else {
            ApplyOutcome::DriftViolation
        }
    }

    /// Closes one super frame: advances the counter when running and
    /// lifts event suppression either way. Before initialization this
    /// is a no-op.
    pub fn tick(&mut self) -> TickOutcome {
        if !self.initialized {
            return TickOutcome { increment: 0, wrapped: false };
        }
        self.suppress_events = false;
        if !self.running {
            return TickOutcome { increment: 0, wrapped: false };
        }
        let cap = self.config.max_adjust_per_tick as i64;
        let adjustment = self.pending_drift.clamp(-cap, cap);
        self.pending_drift -= adjustment;
        let increment = (TICKS_PER_SUPER_FRAME as i64 + adjustment) as u64;
        let (next, wrapped) = self.current.wrapping_add(increment);
        self.current = next;
        TickOutcome { increment, wrapped }
    }
}
