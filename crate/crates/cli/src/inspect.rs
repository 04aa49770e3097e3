//! Human-readable dump of a container: the stream header, the
//! sidecar, every recovered data group and what it carries.

use std::io::{self, Write};

use gdrm_core::adm::{decode_adm, AdmMessage};
use gdrm_core::carousel::{decode_directory_body, param_id};
use gdrm_core::datagroup::{group_type, DataGroup};
use gdrm_core::gzip;
use gdrm_core::ingest::decode_directory_index;
use gdrm_core::packet::Reassembler;

use crate::container::Container;

fn type_name(group_type: u8) -> &'static str {
    match group_type {
        group_type::MOT_HEADER => "MOT header",
        group_type::MOT_BODY => "MOT body",
        group_type::MOT_DIRECTORY => "MOT directory",
        group_type::MOT_DIRECTORY_COMPRESSED => "MOT directory (gzip)",
        group_type::ADM_TIME_BASE => "time base",
        group_type::ADM_EDITING_COMMAND => "editing command",
        group_type::ADM_SIGN_LANGUAGE => "sign language",
        _ => "unknown",
    }
}

fn describe_group(out: &mut impl Write, index: usize, group: &DataGroup) -> io::Result<()> {
    write!(
        out,
        "group {index:>4}: type {:>2} ({}), continuity {:>2}, {} payload bytes",
        group.group_type,
        type_name(group.group_type),
        group.continuity_index,
        group.payload.len(),
    )?;
    if let Some(session) = &group.session {
        write!(
            out,
            ", transport id {}, segment {}{}",
            session.transport_id,
            session.segment_number,
            if session.last_segment { " (last)" } else { "" },
        )?;
    }
    if !group.crc_present {
        write!(out, ", no crc")?;
    }
    writeln!(out)?;

    match group.group_type {
        group_type::ADM_TIME_BASE
        | group_type::ADM_EDITING_COMMAND
        | group_type::ADM_SIGN_LANGUAGE => match decode_adm(group) {
            Ok(AdmMessage::TimeBase(m)) => writeln!(
                out,
                "             tbv {}, {}{}",
                m.tbv,
                if m.discontinuity { "discontinuity, " } else { "" },
                match m.status {
                    gdrm_core::adm::TimeBaseStatus::Running => "running",
                    gdrm_core::adm::TimeBaseStatus::Paused => "paused",
                },
            ),
            Ok(AdmMessage::EditingCommand(m)) => writeln!(
                out,
                "             event {}, tag {}, {}, {} payload bytes",
                m.event_id,
                m.command_tag,
                if m.do_it_now { "immediate".into() } else { format!("at {}", m.tbv) },
                m.payload.len(),
            ),
            Ok(AdmMessage::SignLanguage(m)) => writeln!(
                out,
                "             event {}, window at {}, {} private bytes",
                m.event_id,
                m.event_tbv,
                m.private_data.len(),
            ),
            Err(error) => writeln!(out, "             undecodable: {error}"),
        },
        _ => Ok(()),
    }
}

fn describe_directory(out: &mut impl Write, body: &[u8], compressed: bool) -> io::Result<()> {
    let plain;
    let body = if compressed {
        match gzip::decompress(body) {
            Ok(data) => {
                plain = data;
                &plain[..]
            }
            Err(error) => return writeln!(out, "directory does not decompress: {error}"),
        }
    } else {
        body
    };
    let directory = match decode_directory_body(body) {
        Ok(directory) => directory,
        Err(error) => return writeln!(out, "directory does not decode: {error}"),
    };
    writeln!(out, "directory: {} objects", directory.entries.len())?;
    for param in &directory.extensions {
        if param.id == param_id::DIRECTORY_INDEX {
            match decode_directory_index(&param.data) {
                Ok((profile, entry)) => {
                    writeln!(out, "  entry point, profile {profile}: {entry}")?
                }
                Err(error) => writeln!(out, "  bad DirectoryIndex: {error}")?,
            }
        } else {
            writeln!(out, "  extension 0x{:02X}, {} bytes", param.id, param.data.len())?;
        }
    }
    for entry in &directory.entries {
        writeln!(
            out,
            "  object {:>5}: {:>8} bytes{}  {}",
            entry.transport_id,
            entry.body_size,
            if entry.is_gzip() { " (gzip)" } else { "       " },
            entry.content_name().unwrap_or_else(|| "(unnamed)".into()),
        )?;
    }
    Ok(())
}

/// Dumps everything recoverable from a container.
pub fn inspect(container: &Container, out: &mut impl Write) -> io::Result<()> {
    writeln!(
        out,
        "packet length {}, record length {}, {} records",
        container.packet_length(),
        container.record_length(),
        container.record_count(),
    )?;
    let sidecar = serde_json::to_string_pretty(&container.sidecar)
        .unwrap_or_else(|error| format!("(sidecar does not serialize: {error})"));
    writeln!(out, "sidecar:\n{sidecar}")?;

    let mut reassembler = Reassembler::new(container.stream_config());
    let mut units = Vec::new();
    for record in container.records() {
        if let Some(unit) = reassembler.push_record(record) {
            units.push(unit);
        }
    }
    reassembler.finish();
    let stats = reassembler.stats();
    writeln!(
        out,
        "packets: {} accepted, {} crc errors, {} continuity gaps, {} units, {} lost",
        stats.packets_accepted,
        stats.crc_errors,
        stats.continuity_gaps,
        stats.units_completed,
        stats.units_lost,
    )?;

    // directory segments, reassembled so entries can be listed
    let mut directory_segments: Vec<(u16, Vec<u8>)> = Vec::new();
    let mut directory_compressed = false;
    let mut directory_last: Option<u16> = None;

    for (index, unit) in units.iter().enumerate() {
        let group = match DataGroup::decode(unit) {
            Ok(group) => group,
            Err(error) => {
                writeln!(out, "group {index:>4}: undecodable unit, {error}")?;
                continue;
            }
        };
        describe_group(out, index, &group)?;
        if matches!(
            group.group_type,
            group_type::MOT_DIRECTORY | group_type::MOT_DIRECTORY_COMPRESSED
        ) {
            if let Some(session) = &group.session {
                directory_compressed =
                    group.group_type == group_type::MOT_DIRECTORY_COMPRESSED;
                if session.last_segment {
                    directory_last = Some(session.segment_number);
                }
                if !directory_segments.iter().any(|(n, _)| *n == session.segment_number) {
                    directory_segments.push((session.segment_number, group.payload.clone()));
                }
            }
        }
    }

    if let Some(last) = directory_last {
        directory_segments.sort_by_key(|(n, _)| *n);
        let numbers: Vec<u16> = directory_segments.iter().map(|(n, _)| *n).collect();
        if numbers == (0..=last).collect::<Vec<_>>() {
            let body: Vec<u8> =
                directory_segments.into_iter().flat_map(|(_, data)| data).collect();
            describe_directory(out, &body, directory_compressed)?;
        } else {
            writeln!(out, "directory incomplete: have segments {numbers:?}")?;
        }
    } else if !directory_segments.is_empty() {
        writeln!(out, "directory incomplete: last segment never seen")?;
    }
    Ok(())
}
