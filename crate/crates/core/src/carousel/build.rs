//! Building one carousel cycle: directory first, then every object
//! body, segmented into MSC data groups.

use super::directory::{
    encode_directory_body, DirectoryEntry, DirectoryError, MotDirectory, MAX_BODY_SIZE,
};
use super::object::{validate_content_name, ContentNameError, MotObject};
use super::params::{param_id, HeaderParameter};
use crate::datagroup::{group_type, DataGroup, DataGroupError, SessionHeader, MAX_PAYLOAD};
use crate::gzip;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CarouselBuildError {
    #[error("a carousel needs at least one object")]
    EmptyFileSet,
    #[error("segment size {0} outside 1..={MAX_PAYLOAD}")]
    SegmentSizeOutOfRange(usize),
    #[error(transparent)]
    InvalidContentName(#[from] ContentNameError),
    #[error("transport id {0} used more than once")]
    DuplicateTransportId(u16),
    #[error("content name {0:?} used more than once")]
    DuplicateContentName(String),
    #[error("no DirectoryIndex extension names an entry point")]
    MissingDirectoryIndex,
    #[error("DirectoryIndex for profile {0} given more than once")]
    DuplicateDirectoryIndexProfile(u8),
    #[error("DirectoryIndex extension carries no profile byte")]
    EmptyDirectoryIndex,
    #[error("object {name:?} body of {size} bytes exceeds the directory size field")]
    BodyTooLarge { name: String, size: usize },
    #[error(transparent)]
    Directory(#[from] DirectoryError),
    #[error(transparent)]
    DataGroup(#[from] DataGroupError),
}

/// Knobs for one cycle.
#[derive(Debug, Clone)]
pub struct CarouselOptions {
    /// Segment payload size for directory and body groups.
    pub segment_size: usize,
    /// Send the directory GZip compressed (group type 7).
    pub compress_directory: bool,
    /// Round-robin body segments across objects instead of sending
    /// each object contiguously.
    pub interleave: bool,
    /// Transport id given to the directory itself.
    pub directory_transport_id: u16,
}

impl Default for CarouselOptions {
    fn default() -> Self {
        CarouselOptions {
            segment_size: MAX_PAYLOAD,
            compress_directory: false,
            interleave: false,
            directory_transport_id: 0,
        }
    }
}

/// Emits one full cycle as data groups: all directory segments, then
/// the object bodies. The directory leads so a receiver tuning in at a
/// cycle boundary can place every body that follows. Output is
/// deterministic for a given input.
pub fn build_carousel(
    objects: &[MotObject],
    extensions: &[HeaderParameter],
    options: &CarouselOptions,
) -> Result<Vec<DataGroup>, CarouselBuildError> {
    if objects.is_empty() {
        return Err(CarouselBuildError::EmptyFileSet);
    }
    if options.segment_size == 0 || options.segment_size > MAX_PAYLOAD {
        return Err(CarouselBuildError::SegmentSizeOutOfRange(options.segment_size));
    }
    validate_directory_indexes(extensions)?;

    let mut transport_ids = HashSet::new();
    transport_ids.insert(options.directory_transport_id);
    let mut names = HashSet::new();
    for object in objects {
        validate_content_name(&object.content_name)?;
        if !transport_ids.insert(object.transport_id) {
            return Err(CarouselBuildError::DuplicateTransportId(object.transport_id));
        }
        if !names.insert(object.content_name.as_str()) {
            return Err(CarouselBuildError::DuplicateContentName(object.content_name.clone()));
        }
    }

    // transmitted bodies, compressed where the object asks for it
    let mut bodies = Vec::with_capacity(objects.len());
    let mut entries = Vec::with_capacity(objects.len());
    for object in objects {
        let body = if object.compressed {
            gzip::compress(&object.body)
        } else {
            object.body.clone()
        };
        if body.len() > MAX_BODY_SIZE {
            return Err(CarouselBuildError::BodyTooLarge {
                name: object.content_name.clone(),
                size: body.len(),
            });
        }
        let mut params = vec![HeaderParameter::content_name(&object.content_name)];
        if object.compressed {
            params.push(HeaderParameter::compression_gzip());
        }
        params.extend(object.extra_params.iter().cloned());
        entries.push(DirectoryEntry {
            transport_id: object.transport_id,
            body_size: body.len() as u32,
            content_type: 0,
            content_sub_type: 0,
            params,
        });
        bodies.push(body);
    }

    let directory = MotDirectory {
        entries,
        extensions: extensions.to_vec(),
        compressed_directory: options.compress_directory,
    };
    let mut directory_body = encode_directory_body(&directory)?;
    let directory_type = if options.compress_directory {
        directory_body = gzip::compress(&directory_body);
        group_type::MOT_DIRECTORY_COMPRESSED
    } else {
        group_type::MOT_DIRECTORY
    };

    let mut continuity = TypeContinuity::default();
    let mut groups = Vec::new();
    emit_segments(
        &mut groups,
        &mut continuity,
        directory_type,
        options.directory_transport_id,
        &directory_body,
        options.segment_size,
    );

    if options.interleave {
        let mut sequences: Vec<std::collections::VecDeque<DataGroup>> = objects
            .iter()
            .zip(&bodies)
            .map(|(object, body)| {
                let mut seq = Vec::new();
                emit_segments(
                    &mut seq,
                    &mut continuity,
                    group_type::MOT_BODY,
                    object.transport_id,
                    body,
                    options.segment_size,
                );
                seq.into()
            })
            .collect();
        while sequences.iter().any(|seq| !seq.is_empty()) {
            for seq in &mut sequences {
                if let Some(group) = seq.pop_front() {
                    groups.push(group);
                }
            }
        }
    } else {
        for (object, body) in objects.iter().zip(&bodies) {
            emit_segments(
                &mut groups,
                &mut continuity,
                group_type::MOT_BODY,
                object.transport_id,
                body,
                options.segment_size,
            );
        }
    }
    Ok(groups)
}

fn validate_directory_indexes(extensions: &[HeaderParameter]) -> Result<(), CarouselBuildError> {
    let mut profiles = HashSet::new();
    let mut seen = false;
    for param in extensions.iter().filter(|p| p.id == param_id::DIRECTORY_INDEX) {
        seen = true;
        let profile = *param.data.first().ok_or(CarouselBuildError::EmptyDirectoryIndex)?;
        if !profiles.insert(profile) {
            return Err(CarouselBuildError::DuplicateDirectoryIndexProfile(profile));
        }
    }
    if !seen {
        return Err(CarouselBuildError::MissingDirectoryIndex);
    }
    Ok(())
}

/// Splits `data` and appends one group per segment. An empty body
/// still emits one empty closing segment so the receiver can complete
/// the transfer.
fn emit_segments(
    groups: &mut Vec<DataGroup>,
    continuity: &mut TypeContinuity,
    gtype: u8,
    transport_id: u16,
    data: &[u8],
    segment_size: usize,
) {
    let segment_count = data.len().div_ceil(segment_size).max(1);
    for index in 0..segment_count {
        let start = index * segment_size;
        let end = (start + segment_size).min(data.len());
        let mut group = DataGroup::segmented(
            gtype,
            SessionHeader {
                last_segment: index + 1 == segment_count,
                segment_number: index as u16,
                transport_id,
            },
            data[start..end].to_vec(),
        );
        group.continuity_index = continuity.advance(gtype);
        groups.push(group);
    }
}

/// Mod-16 continuity indexes, tracked per group type.
#[derive(Default)]
struct TypeContinuity {
    counters: [u8; 16],
}

impl TypeContinuity {
    fn advance(&mut self, gtype: u8) -> u8 {
        let counter = &mut self.counters[(gtype & 0x0F) as usize];
        let value = *counter;
        *counter = (*counter + 1) & 0x0F;
        value
    }
}
