//! Editing command scheduler: queues commands against the time base
//! and releases each exactly once when its moment arrives.

use super::message::EditingCommandMessage;
use super::tbv::Tbv;
use std::collections::{HashSet, VecDeque};

/// Pending editing commands, ordered by arrival.
///
/// A command is due when polled with `do_it_now` set or once the time
/// base has reached its tbv. Event ids deduplicate repeats while the
/// original is still pending; after release the id may be reused.
/// Polls during event suppression release nothing and drop nothing,
/// so commands deferred across a discontinuity still fire.
#[derive(Debug, Default)]
pub struct CommandScheduler {
    pending: VecDeque<EditingCommandMessage>,
    pending_ids: HashSet<u16>,
}

impl CommandScheduler {
    pub fn new() -> Self {
        CommandScheduler::default()
    }

    /// Queues a command. Returns false when a command with the same
    /// event id is already waiting and the repeat is ignored.
    pub fn offer(&mut self, command: EditingCommandMessage) -> bool {
        if !self.pending_ids.insert(command.event_id) {
            return false;
        }
        self.pending.push_back(command);
        true
    }

    /// Releases every command due at `now`, in arrival order. `None`
    /// means the time base is not initialized yet, which releases
    /// only immediate commands.
    pub fn poll(&mut self, now: Option<Tbv>, suppress_events: bool) -> Vec<EditingCommandMessage> {
        if suppress_events {
            return Vec::new();
        }
        let mut due = Vec::new();
        let mut kept = VecDeque::with_capacity(self.pending.len());
        for command in self.pending.drain(..) {
            let ready = command.do_it_now
                || now.is_some_and(|t| t.value() >= command.tbv.value());
            if ready {
                self.pending_ids.remove(&command.event_id);
                due.push(command);
            } else {
                kept.push_back(command);
            }
        }
        self.pending = kept;
        due
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }
}
