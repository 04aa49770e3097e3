//! Receiving side of the carousel: collects segments in any order,
//! resolves completed bodies against the directory and hands back
//! whole objects exactly once.
//!
//! Segments arrive CRC-checked but possibly with gaps, duplicates and
//! interleaving across objects and cycles. Bodies that complete before
//! the directory is known are parked until an entry describes them. A
//! new directory evicts state for transport ids it no longer lists.
//! Anything inconsistent is dropped and counted; the next repetition
//! of the carousel gets another chance.

use super::directory::{decode_directory_body, MotDirectory};
use super::object::{validate_content_name, MotObject};
use super::params::param_id;
use crate::datagroup::{group_type, DataGroup};
use crate::gzip;
use std::collections::{BTreeMap, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeedError {
    #[error("group type {0} is not carried by this chain")]
    UnknownGroupType(u8),
    #[error("carousel group without CRC protection")]
    MissingCrc,
    #[error("group type {0} requires a session header")]
    MissingSession(u8),
}

/// What one fed group did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeedOutcome {
    /// The group belongs to the auxiliary message layer; the carousel
    /// does not consume it.
    Adm,
    /// The group was consumed by the carousel.
    Carousel {
        completed: Vec<MotObject>,
        directory_ready: bool,
    },
}

/// Event counters kept while feeding.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ReceiverDiagnostics {
    pub groups_accepted: u64,
    pub header_groups_ignored: u64,
    pub duplicate_segments: u64,
    pub segment_conflicts: u64,
    pub type_conflicts: u64,
    pub gzip_failures: u64,
    pub bad_directories: u64,
    pub size_mismatches: u64,
    pub entries_without_name: u64,
    pub bad_content_names: u64,
    pub stale_evicted: u64,
}

#[derive(Debug)]
struct SegmentBuffer {
    group_type: u8,
    segments: BTreeMap<u16, Vec<u8>>,
    last_segment: Option<u16>,
}

impl SegmentBuffer {
    fn new(group_type: u8) -> Self {
        SegmentBuffer { group_type, segments: BTreeMap::new(), last_segment: None }
    }

    fn complete(&self) -> bool {
        match self.last_segment {
            Some(last) => self.segments.len() == last as usize + 1,
            None => false,
        }
    }

    fn assemble(self) -> Vec<u8> {
        let mut out = Vec::new();
        for (_, segment) in self.segments {
            out.extend_from_slice(&segment);
        }
        out
    }
}

/// The carousel reassembly cache.
#[derive(Debug, Default)]
pub struct CarouselReceiver {
    directory: Option<MotDirectory>,
    buffers: HashMap<u16, SegmentBuffer>,
    held_bodies: HashMap<u16, Vec<u8>>,
    completed: HashSet<u16>,
    diagnostics: ReceiverDiagnostics,
}

impl CarouselReceiver {
    pub fn new() -> Self {
        CarouselReceiver::default()
    }

    pub fn directory(&self) -> Option<&MotDirectory> {
        self.directory.is_some().then(|| self.directory.as_ref().unwrap())
    }

    pub fn diagnostics(&self) -> &ReceiverDiagnostics {
        &self.diagnostics
    }

    /// True once the directory is known and every listed object has
    /// been handed back.
    pub fn is_complete(&self) -> bool {
        match &self.directory {
            Some(dir) => dir.entries.iter().all(|e| self.completed.contains(&e.transport_id)),
            None => false,
        }
    }

    /// Listed objects not yet recovered, with names where known.
    pub fn missing(&self) -> Vec<(u16, Option<String>)> {
        match &self.directory {
            Some(dir) => dir
                .entries
                .iter()
                .filter(|e| !self.completed.contains(&e.transport_id))
                .map(|e| (e.transport_id, e.content_name()))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Consumes one CRC-valid data group.
    pub fn feed(&mut self, group: &DataGroup) -> Result<FeedOutcome, FeedError> {
        match group.group_type {
            group_type::ADM_TIME_BASE
            | group_type::ADM_EDITING_COMMAND
            | group_type::ADM_SIGN_LANGUAGE => return Ok(FeedOutcome::Adm),
            group_type::MOT_HEADER => {
                // header mode is not part of this chain; directory mode
                // repeats the same information in one table
                self.diagnostics.header_groups_ignored += 1;
                return Ok(self.consumed(Vec::new()));
            }
            group_type::MOT_BODY
            | group_type::MOT_DIRECTORY
            | group_type::MOT_DIRECTORY_COMPRESSED => {}
            other => return Err(FeedError::UnknownGroupType(other)),
        }
        if !group.crc_present {
            return Err(FeedError::MissingCrc);
        }
        let session = group.session.ok_or(FeedError::MissingSession(group.group_type))?;
        self.diagnostics.groups_accepted += 1;

        let transport_id = session.transport_id;
        if group.group_type == group_type::MOT_BODY && self.completed.contains(&transport_id) {
            self.diagnostics.duplicate_segments += 1;
            return Ok(self.consumed(Vec::new()));
        }

        let buffer = self
            .buffers
            .entry(transport_id)
            .or_insert_with(|| SegmentBuffer::new(group.group_type));
        if buffer.group_type != group.group_type {
            self.diagnostics.type_conflicts += 1;
            *buffer = SegmentBuffer::new(group.group_type);
        }

        let segment_number = session.segment_number;
        if let Some(last) = buffer.last_segment {
            if segment_number > last {
                self.diagnostics.segment_conflicts += 1;
                return Ok(self.consumed(Vec::new()));
            }
        }
        if session.last_segment {
            match buffer.last_segment {
                None => {
                    buffer.last_segment = Some(segment_number);
                    let beyond: Vec<u16> = buffer
                        .segments
                        .range(segment_number + 1..)
                        .map(|(&k, _)| k)
                        .collect();
                    for key in beyond {
                        buffer.segments.remove(&key);
                        self.diagnostics.segment_conflicts += 1;
                    }
                }
                Some(last) if last != segment_number => {
                    self.diagnostics.segment_conflicts += 1;
                    return Ok(self.consumed(Vec::new()));
                }
                Some(_) => {}
            }
        }
        match buffer.segments.get(&segment_number) {
            None => {
                buffer.segments.insert(segment_number, group.payload.clone());
            }
            Some(existing) if *existing == group.payload => {
                self.diagnostics.duplicate_segments += 1;
            }
            Some(_) => {
                self.diagnostics.segment_conflicts += 1;
            }
        }

        if !buffer.complete() {
            return Ok(self.consumed(Vec::new()));
        }
        let buffer = self.buffers.remove(&transport_id).unwrap();
        let gtype = buffer.group_type;
        let raw = buffer.assemble();
        match gtype {
            group_type::MOT_BODY => {
                let completed = self.resolve_body(transport_id, raw);
                Ok(self.consumed(completed.into_iter().collect()))
            }
            _ => {
                let completed = self.install_directory_bytes(gtype, raw);
                Ok(self.consumed(completed))
            }
        }
    }

    fn consumed(&self, completed: Vec<MotObject>) -> FeedOutcome {
        FeedOutcome::Carousel { completed, directory_ready: self.directory.is_some() }
    }

    fn resolve_body(&mut self, transport_id: u16, raw: Vec<u8>) -> Option<MotObject> {
        let entry_known = self
            .directory
            .as_ref()
            .is_some_and(|d| d.entry(transport_id).is_some());
        if entry_known {
            self.finalize(transport_id, raw)
        } else {
            self.held_bodies.insert(transport_id, raw);
            None
        }
    }

    fn install_directory_bytes(&mut self, gtype: u8, raw: Vec<u8>) -> Vec<MotObject> {
        let compressed = gtype == group_type::MOT_DIRECTORY_COMPRESSED;
        let body = if compressed {
            match gzip::decompress(&raw) {
                Ok(body) => body,
                Err(_) => {
                    self.diagnostics.gzip_failures += 1;
                    return Vec::new();
                }
            }
        } else {
            raw
        };
        let mut directory = match decode_directory_body(&body) {
            Ok(directory) => directory,
            Err(_) => {
                self.diagnostics.bad_directories += 1;
                return Vec::new();
            }
        };
        directory.compressed_directory = compressed;

        let live: HashSet<u16> = directory.entries.iter().map(|e| e.transport_id).collect();
        let before = self.buffers.len() + self.held_bodies.len() + self.completed.len();
        self.buffers
            .retain(|tid, buf| buf.group_type != group_type::MOT_BODY || live.contains(tid));
        self.held_bodies.retain(|tid, _| live.contains(tid));
        self.completed.retain(|tid| live.contains(tid));
        let after = self.buffers.len() + self.held_bodies.len() + self.completed.len();
        self.diagnostics.stale_evicted += (before - after) as u64;
        self.directory = Some(directory);

        let waiting: Vec<u16> = self.held_bodies.keys().copied().collect();
        let mut completed = Vec::new();
        for transport_id in waiting {
            let raw = self.held_bodies.remove(&transport_id).unwrap();
            if let Some(object) = self.finalize(transport_id, raw) {
                completed.push(object);
            }
        }
        completed.sort_by_key(|o| o.transport_id);
        completed
    }

    /// Turns a complete raw body into an object, or counts why not.
    /// A discarded body is gone until the carousel repeats it.
    fn finalize(&mut self, transport_id: u16, raw: Vec<u8>) -> Option<MotObject> {
        let directory = self.directory.as_ref().expect("caller checked the directory");
        let entry = directory.entry(transport_id).expect("caller checked the entry");
        if entry.body_size as usize != raw.len() {
            self.diagnostics.size_mismatches += 1;
            return None;
        }
        let compressed = entry.is_gzip();
        let body = if compressed {
            match gzip::decompress(&raw) {
                Ok(body) => body,
                Err(_) => {
                    self.diagnostics.gzip_failures += 1;
                    return None;
                }
            }
        } else {
            raw
        };
        let Some(content_name) = entry.content_name() else {
            self.diagnostics.entries_without_name += 1;
            return None;
        };
        if validate_content_name(&content_name).is_err() {
            self.diagnostics.bad_content_names += 1;
            return None;
        }
        let extra_params = entry
            .params
            .iter()
            .filter(|p| p.id != param_id::CONTENT_NAME && p.id != param_id::COMPRESSION_TYPE)
            .cloned()
            .collect();
        self.completed.insert(transport_id);
        Some(MotObject {
            transport_id,
            content_name,
            body,
            compressed,
            content_type: entry.content_type,
            content_sub_type: entry.content_sub_type,
            extra_params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carousel::{build_carousel, CarouselOptions, HeaderParameter, MotObject};
    use crate::datagroup::SessionHeader;

    fn extensions() -> Vec<HeaderParameter> {
        vec![HeaderParameter::new(param_id::DIRECTORY_INDEX, b"\x01main.ncl".to_vec())]
    }

    fn objects() -> Vec<MotObject> {
        vec![
            MotObject::new(1, "main.ncl", b"<ncl/>".to_vec()).unwrap(),
            MotObject::new(2, "media/clip.bin", (0..=255u8).cycle().take(2300).collect()).unwrap(),
        ]
    }

    fn cycle(objects: &[MotObject], options: &CarouselOptions) -> Vec<DataGroup> {
        build_carousel(objects, &extensions(), options).unwrap()
    }

    fn feed_all(receiver: &mut CarouselReceiver, groups: &[DataGroup]) -> Vec<MotObject> {
        let mut out = Vec::new();
        for group in groups {
            match receiver.feed(group).unwrap() {
                FeedOutcome::Carousel { completed, .. } => out.extend(completed),
                FeedOutcome::Adm => panic!("unexpected routing"),
            }
        }
        out
    }

    #[test]
    fn clean_cycle_recovers_everything_once() {
        let objects = objects();
        let options = CarouselOptions { segment_size: 500, ..CarouselOptions::default() };
        let groups = cycle(&objects, &options);
        let mut receiver = CarouselReceiver::new();
        let recovered = feed_all(&mut receiver, &groups);
        assert_eq!(recovered, objects);
        assert!(receiver.is_complete());
        assert!(receiver.missing().is_empty());

        // the next cycle repeats everything; nothing comes back twice
        let recovered = feed_all(&mut receiver, &groups);
        assert!(recovered.is_empty());
        assert!(receiver.diagnostics().duplicate_segments > 0);
    }

    #[test]
    fn bodies_before_directory_are_parked() {
        let objects = objects();
        let options = CarouselOptions { segment_size: 500, ..CarouselOptions::default() };
        let groups = cycle(&objects, &options);
        let mut receiver = CarouselReceiver::new();
        let directory_groups: Vec<_> =
            groups.iter().filter(|g| g.group_type != group_type::MOT_BODY).cloned().collect();
        let body_groups: Vec<_> =
            groups.iter().filter(|g| g.group_type == group_type::MOT_BODY).cloned().collect();

        let early = feed_all(&mut receiver, &body_groups);
        assert!(early.is_empty());
        assert!(!receiver.is_complete());
        let late = feed_all(&mut receiver, &directory_groups);
        assert_eq!(late, objects);
        assert!(receiver.is_complete());
    }

    #[test]
    fn gap_in_one_cycle_heals_in_the_next() {
        let objects = objects();
        let options = CarouselOptions { segment_size: 500, ..CarouselOptions::default() };
        let groups = cycle(&objects, &options);
        let mut receiver = CarouselReceiver::new();
        let mut lossy = groups.clone();
        lossy.remove(3);
        feed_all(&mut receiver, &lossy);
        assert!(!receiver.is_complete());
        assert_eq!(receiver.missing().len(), 1);
        let healed = feed_all(&mut receiver, &groups);
        assert_eq!(healed.len(), 1);
        assert!(receiver.is_complete());
    }

    #[test]
    fn segments_out_of_order_within_an_object() {
        let objects = objects();
        let options = CarouselOptions { segment_size: 500, ..CarouselOptions::default() };
        let mut groups = cycle(&objects, &options);
        groups[1..].reverse();
        let mut receiver = CarouselReceiver::new();
        let mut recovered = feed_all(&mut receiver, &groups);
        recovered.sort_by_key(|o| o.transport_id);
        assert_eq!(recovered, objects);
    }

    #[test]
    fn compressed_bodies_and_directory() {
        let mut objects = objects();
        objects[1].compressed = true;
        let options = CarouselOptions {
            segment_size: 500,
            compress_directory: true,
            ..CarouselOptions::default()
        };
        let groups = build_carousel(&objects, &extensions(), &options).unwrap();
        let mut receiver = CarouselReceiver::new();
        let recovered = feed_all(&mut receiver, &groups);
        assert_eq!(recovered, objects);
        assert!(receiver.directory().unwrap().compressed_directory);
    }

    #[test]
    fn new_directory_evicts_stale_state() {
        let first = objects();
        let second = vec![MotObject::new(7, "other.ncl", b"x".to_vec()).unwrap()];
        let options = CarouselOptions { segment_size: 500, ..CarouselOptions::default() };
        let mut receiver = CarouselReceiver::new();
        feed_all(&mut receiver, &cycle(&first, &options));
        assert!(receiver.is_complete());
        let recovered = feed_all(&mut receiver, &cycle(&second, &options));
        assert_eq!(recovered, second);
        assert!(receiver.is_complete());
        assert!(receiver.diagnostics().stale_evicted >= 2);

        // the old ids are gone, so the old cycle delivers them again
        let replayed = feed_all(&mut receiver, &cycle(&first, &options));
        assert_eq!(replayed.len(), 2);
    }

    #[test]
    fn size_mismatch_discards_the_body() {
        let objects = objects();
        let options = CarouselOptions { segment_size: 5000, ..CarouselOptions::default() };
        let mut groups = cycle(&objects, &options);
        // shrink the only segment of object 1
        let body_index = groups
            .iter()
            .position(|g| {
                g.group_type == group_type::MOT_BODY && g.session.unwrap().transport_id == 1
            })
            .unwrap();
        groups[body_index].payload.pop();
        let mut receiver = CarouselReceiver::new();
        let recovered = feed_all(&mut receiver, &groups);
        assert_eq!(recovered.len(), 1);
        assert_eq!(receiver.diagnostics().size_mismatches, 1);
        assert!(!receiver.is_complete());
    }

    #[test]
    fn routing_and_shape_errors() {
        let mut receiver = CarouselReceiver::new();
        let adm = DataGroup::sessionless(group_type::ADM_TIME_BASE, vec![0; 5]);
        assert_eq!(receiver.feed(&adm), Ok(FeedOutcome::Adm));

        let unknown = DataGroup::sessionless(9, vec![]);
        assert_eq!(receiver.feed(&unknown), Err(FeedError::UnknownGroupType(9)));

        let sessionless_body = DataGroup::sessionless(group_type::MOT_BODY, vec![]);
        assert_eq!(
            receiver.feed(&sessionless_body),
            Err(FeedError::MissingSession(group_type::MOT_BODY))
        );

        let mut unprotected = DataGroup::segmented(
            group_type::MOT_BODY,
            SessionHeader { last_segment: true, segment_number: 0, transport_id: 1 },
            vec![],
        );
        unprotected.crc_present = false;
        assert_eq!(receiver.feed(&unprotected), Err(FeedError::MissingCrc));

        let header_group = DataGroup::segmented(
            group_type::MOT_HEADER,
            SessionHeader { last_segment: true, segment_number: 0, transport_id: 1 },
            vec![],
        );
        assert!(matches!(
            receiver.feed(&header_group),
            Ok(FeedOutcome::Carousel { .. })
        ));
        assert_eq!(receiver.diagnostics().header_groups_ignored, 1);
    }
}
