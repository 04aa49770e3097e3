//! Directory tree to container and back: the whole transmit chain
//! (scan, carousel, data groups, packets) and the matching receive
//! chain (reassemble, decode, carousel receiver, auxiliary message
//! engine) behind two functions, `run_pack` and `run_unpack`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Component, Path, PathBuf};

use gdrm_core::adm::{
    decode_adm, AdmError, AdmMessage, CommandScheduler, Tbv, TimeBaseMessage, TimeBaseState,
    TimeBaseStatus, TICKS_PER_SUPER_FRAME,
};
use gdrm_core::carousel::{
    build_carousel, CarouselBuildError, CarouselOptions, CarouselReceiver, FeedOutcome,
    ReceiverDiagnostics,
};
use gdrm_core::datagroup::{group_type, DataGroup, DataGroupError};
use gdrm_core::ingest::{
    decode_directory_index, directory_index_param, scan_application, DirectoryIndexError,
    EntryPoint, IngestError, ProfileId, ScanOptions, GINGA_FULL_PROFILE,
};
use gdrm_core::packet::{packetize, ContinuityCounter, Reassembler, ReassemblyStats};
use serde::Serialize;
use thiserror::Error;

use crate::container::{Container, ContainerError, Sidecar};

#[derive(Debug, Error)]
pub enum PackError {
    #[error("zero carousel repetitions requested")]
    ZeroRepetitions,
    #[error("a time base beacon every zero groups is not a schedule")]
    ZeroBeaconInterval,
    #[error("entry point {0:?} names no file in the application")]
    EntryFileMissing(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    DirectoryIndex(#[from] DirectoryIndexError),
    #[error(transparent)]
    Build(#[from] CarouselBuildError),
    #[error(transparent)]
    DataGroup(#[from] DataGroupError),
    #[error(transparent)]
    Adm(#[from] AdmError),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

/// Transmit-side knobs.
#[derive(Debug, Clone)]
pub struct PackOptions {
    /// Full carousel cycles to emit.
    pub repetitions: usize,
    /// Segment payload size for carousel groups.
    pub segment_size: usize,
    /// Packet data field length, 1 to 255.
    pub packet_length: usize,
    /// Sub-stream the packets claim, 0 to 3.
    pub sub_stream_id: u8,
    /// GZip object bodies when that shrinks them.
    pub compress: bool,
    /// GZip the directory itself.
    pub compress_directory: bool,
    /// Round-robin body segments across objects.
    pub interleave: bool,
    /// Carry dot-prefixed files too.
    pub include_hidden: bool,
    /// Insert a time base beacon before the stream and after every
    /// this many carousel groups, one super frame apart.
    pub timebase_every: Option<usize>,
}

impl Default for PackOptions {
    fn default() -> Self {
        PackOptions {
            repetitions: 1,
            segment_size: 1000,
            packet_length: 100,
            sub_stream_id: 0,
            compress: false,
            compress_directory: false,
            interleave: false,
            include_hidden: false,
            timebase_every: None,
        }
    }
}

/// Reads an application tree and captures it as a container: scan,
/// one carousel cycle repeated, optional time base beacons woven in,
/// everything packetized on a single continuity counter.
pub fn run_pack(
    app_dir: &Path,
    entries: &[(ProfileId, EntryPoint)],
    options: &PackOptions,
) -> Result<Container, PackError> {
    if options.repetitions == 0 {
        return Err(PackError::ZeroRepetitions);
    }
    if options.timebase_every == Some(0) {
        return Err(PackError::ZeroBeaconInterval);
    }

    let scan = ScanOptions { compress: options.compress, include_hidden: options.include_hidden };
    let objects = scan_application(app_dir, &scan)?;
    for (_, entry) in entries {
        if !objects.iter().any(|object| object.content_name == entry.file) {
            return Err(PackError::EntryFileMissing(entry.render()));
        }
    }
    let mut extensions = Vec::with_capacity(entries.len());
    for (profile, entry) in entries {
        extensions.push(directory_index_param(*profile, entry)?);
    }

    let cycle = build_carousel(
        &objects,
        &extensions,
        &CarouselOptions {
            segment_size: options.segment_size,
            compress_directory: options.compress_directory,
            interleave: options.interleave,
            directory_transport_id: 0,
        },
    )?;

    let mut groups: Vec<DataGroup> = Vec::new();
    let mut beacons = 0u64;
    let beacon = |groups: &mut Vec<DataGroup>, n: u64| -> Result<(), PackError> {
        let message = TimeBaseMessage::new(
            TimeBaseStatus::Running,
            false,
            Tbv::wrapping(n * TICKS_PER_SUPER_FRAME),
        );
        groups.push(AdmMessage::TimeBase(message).to_data_group()?);
        Ok(())
    };
    match options.timebase_every {
        Some(every) => {
            beacon(&mut groups, beacons)?;
            beacons += 1;
            let mut since = 0;
            for _ in 0..options.repetitions {
                for group in &cycle {
                    if since == every {
                        beacon(&mut groups, beacons)?;
                        beacons += 1;
                        since = 0;
                    }
                    groups.push(group.clone());
                    since += 1;
                }
            }
        }
        None => {
            for _ in 0..options.repetitions {
                groups.extend(cycle.iter().cloned());
            }
        }
    }

    let sidecar = Sidecar::standalone_data_service(options.sub_stream_id);
    let mut container = Container::new(options.packet_length, sidecar)?;
    let config = container.stream_config();
    let mut counter = ContinuityCounter::new();
    for group in &groups {
        let unit = group.encode()?;
        for packet in packetize(&unit, &config, &mut counter) {
            container.push_record(&packet.encode());
        }
    }
    Ok(container)
}

/// Everything the receive chain observed, in stream order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    /// A time base beacon was absorbed.
    TimeBase {
        tbv: u64,
        running: bool,
        discontinuity: bool,
    },
    /// The frame tick that follows a beacon.
    Tick { tbv: u64, increment: u64, wrapped: bool },
    /// An editing command entered the schedule.
    CommandQueued { event_id: u16, do_it_now: bool, tbv: u64 },
    /// An editing command became due and was released.
    CommandReleased { event_id: u16, command_tag: u8, at: Option<u64> },
    /// A sign language window event.
    SignLanguage { event_id: u16, event_tbv: u64, private_len: usize },
    /// An auxiliary group that would not decode.
    AdmRejected { group_type: u8, reason: String },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::TimeBase { tbv, running, discontinuity } => {
                write!(f, "time base {tbv}")?;
                if !running {
                    write!(f, " paused")?;
                }
                if *discontinuity {
                    write!(f, " discontinuity")?;
                }
                Ok(())
            }
            TraceEvent::Tick { tbv, increment, wrapped } => {
                write!(f, "tick +{increment} -> {tbv}")?;
                if *wrapped {
                    write!(f, " (wrapped)")?;
                }
                Ok(())
            }
            TraceEvent::CommandQueued { event_id, do_it_now, tbv } => {
                if *do_it_now {
                    write!(f, "command {event_id} queued, immediate")
                } else {
                    write!(f, "command {event_id} queued for {tbv}")
                }
            }
            TraceEvent::CommandReleased { event_id, command_tag, at } => match at {
                Some(at) => write!(f, "command {event_id} tag {command_tag} released at {at}"),
                None => write!(f, "command {event_id} tag {command_tag} released, no clock"),
            },
            TraceEvent::SignLanguage { event_id, event_tbv, private_len } => {
                write!(f, "sign language event {event_id} at {event_tbv}, {private_len} private bytes")
            }
            TraceEvent::AdmRejected { group_type, reason } => {
                write!(f, "rejected auxiliary group type {group_type}: {reason}")
            }
        }
    }
}

/// The receiver-side auxiliary message engine: the tracked time base
/// plus the command schedule, emitting a trace of what it did.
///
/// Every beacon stands for one super frame: the beacon value is
/// applied, due commands are polled, then the frame's tick runs. The
/// poll sits between apply and tick so a discontinuity suppresses
/// exactly the polls of its own frame.
#[derive(Debug, Default)]
pub struct AdmEngine {
    timebase: TimeBaseState,
    scheduler: CommandScheduler,
    pub trace: Vec<TraceEvent>,
    pub rejected: u64,
}

impl AdmEngine {
    pub fn new() -> Self {
        AdmEngine::default()
    }

    fn now(&self) -> Option<Tbv> {
        self.timebase.initialized().then(|| self.timebase.current())
    }

    fn poll(&mut self) {
        let now = self.now();
        let suppress = self.timebase.suppress_events();
        for command in self.scheduler.poll(now, suppress) {
            self.trace.push(TraceEvent::CommandReleased {
                event_id: command.event_id,
                command_tag: command.command_tag,
                at: now.map(Tbv::value),
            });
        }
    }

    /// Consumes one auxiliary data group.
    pub fn handle(&mut self, group: &DataGroup) {
        let message = match decode_adm(group) {
            Ok(message) => message,
            Err(error) => {
                self.rejected += 1;
                self.trace.push(TraceEvent::AdmRejected {
                    group_type: group.group_type,
                    reason: error.to_string(),
                });
                return;
            }
        };
        match message {
            AdmMessage::TimeBase(beacon) => {
                self.timebase.apply(&beacon);
                self.trace.push(TraceEvent::TimeBase {
                    tbv: beacon.tbv.value(),
                    running: beacon.status == TimeBaseStatus::Running,
                    discontinuity: beacon.discontinuity,
                });
                self.poll();
                if self.timebase.running() {
                    let tick = self.timebase.tick();
                    self.trace.push(TraceEvent::Tick {
                        tbv: self.timebase.current().value(),
                        increment: tick.increment,
                        wrapped: tick.wrapped,
                    });
                }
            }
            AdmMessage::EditingCommand(command) => {
                if self.scheduler.offer(command.clone()) {
                    self.trace.push(TraceEvent::CommandQueued {
                        event_id: command.event_id,
                        do_it_now: command.do_it_now,
                        tbv: command.tbv.value(),
                    });
                }
                self.poll();
            }
            AdmMessage::SignLanguage(event) => {
                self.trace.push(TraceEvent::SignLanguage {
                    event_id: event.event_id,
                    event_tbv: event.event_tbv.value(),
                    private_len: event.private_data.len(),
                });
            }
        }
    }

    /// End of stream: one last poll so commands due at the final
    /// counter value are not stranded.
    pub fn finish(&mut self) {
        self.poll();
    }

    pub fn pending_commands(&self) -> usize {
        self.scheduler.pending_len()
    }
}

/// Receive-side knobs.
#[derive(Debug, Clone)]
pub struct UnpackOptions {
    /// Profile whose DirectoryIndex picks the entry point.
    pub receiver_profile: ProfileId,
}

impl Default for UnpackOptions {
    fn default() -> Self {
        UnpackOptions { receiver_profile: GINGA_FULL_PROFILE }
    }
}

/// Counters from every stage of the receive chain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct UnpackDiagnostics {
    pub units_recovered: u64,
    pub groups_rejected: u64,
    pub adm_rejected: u64,
    #[serde(flatten)]
    pub reassembly: ReassemblyStatsView,
    #[serde(flatten)]
    pub receiver: ReceiverDiagnosticsView,
}

/// Serializable mirror of the reassembler counters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReassemblyStatsView {
    pub packets_accepted: u64,
    pub packet_crc_errors: u64,
    pub continuity_gaps: u64,
    pub units_lost: u64,
}

impl From<&ReassemblyStats> for ReassemblyStatsView {
    fn from(stats: &ReassemblyStats) -> Self {
        ReassemblyStatsView {
            packets_accepted: stats.packets_accepted,
            packet_crc_errors: stats.crc_errors,
            continuity_gaps: stats.continuity_gaps,
            units_lost: stats.units_lost,
        }
    }
}

/// Serializable mirror of the carousel receiver counters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReceiverDiagnosticsView {
    pub groups_accepted: u64,
    pub duplicate_segments: u64,
    pub size_mismatches: u64,
    pub gzip_failures: u64,
    pub stale_evicted: u64,
}

impl From<&ReceiverDiagnostics> for ReceiverDiagnosticsView {
    fn from(diagnostics: &ReceiverDiagnostics) -> Self {
        ReceiverDiagnosticsView {
            groups_accepted: diagnostics.groups_accepted,
            duplicate_segments: diagnostics.duplicate_segments,
            size_mismatches: diagnostics.size_mismatches,
            gzip_failures: diagnostics.gzip_failures,
            stale_evicted: diagnostics.stale_evicted,
        }
    }
}

/// One recovered file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecoveredFile {
    pub name: String,
    pub transport_id: u16,
    pub size: usize,
    #[serde(skip)]
    pub body: Vec<u8>,
}

/// What `run_unpack` got back out of a container.
#[derive(Debug, Default, Serialize)]
pub struct UnpackReport {
    pub complete: bool,
    pub files: Vec<RecoveredFile>,
    /// Objects the directory lists but the stream never completed.
    pub missing: Vec<String>,
    /// Entry points announced per profile.
    pub entry_points: BTreeMap<u8, String>,
    /// Profiles announced that this receiver does not know.
    pub unknown_profiles: Vec<u8>,
    /// Entry point selected for the receiver profile.
    pub selected_entry: Option<String>,
    pub diagnostics: UnpackDiagnostics,
    pub trace: Vec<TraceEvent>,
}

/// Runs the whole receive chain over a container.
pub fn run_unpack(container: &Container, options: &UnpackOptions) -> UnpackReport {
    let mut report = UnpackReport::default();
    let mut reassembler = Reassembler::new(container.stream_config());
    let mut receiver = CarouselReceiver::new();
    let mut engine = AdmEngine::new();
    let mut files: BTreeMap<u16, RecoveredFile> = BTreeMap::new();

    let mut units = Vec::new();
    for record in container.records() {
        if let Some(unit) = reassembler.push_record(record) {
            units.push(unit);
        }
    }
    reassembler.finish();
    report.diagnostics.units_recovered = units.len() as u64;

    for unit in &units {
        let group = match DataGroup::decode(unit) {
            Ok(group) => group,
            Err(_) => {
                report.diagnostics.groups_rejected += 1;
                continue;
            }
        };
        match group.group_type {
            group_type::ADM_TIME_BASE
            | group_type::ADM_EDITING_COMMAND
            | group_type::ADM_SIGN_LANGUAGE => engine.handle(&group),
            _ => match receiver.feed(&group) {
                Ok(FeedOutcome::Carousel { completed, .. }) => {
                    for object in completed {
                        files.entry(object.transport_id).or_insert(RecoveredFile {
                            name: object.content_name,
                            transport_id: object.transport_id,
                            size: object.body.len(),
                            body: object.body,
                        });
                    }
                }
                Ok(FeedOutcome::Adm) => unreachable!("adm types matched above"),
                Err(_) => report.diagnostics.groups_rejected += 1,
            },
        }
    }
    engine.finish();

    if let Some(directory) = receiver.directory() {
        for param in directory.directory_indexes() {
            match decode_directory_index(&param.data) {
                Ok((profile, entry)) => {
                    report.entry_points.insert(profile.0, entry.render());
                    if !profile.is_known() {
                        report.unknown_profiles.push(profile.0);
                    }
                }
                Err(_) => report.diagnostics.groups_rejected += 1,
            }
        }
        report.selected_entry = report.entry_points.get(&options.receiver_profile.0).cloned();
    }

    report.complete = receiver.is_complete();
    report.missing = receiver
        .missing()
        .into_iter()
        .map(|(tid, name)| name.unwrap_or_else(|| format!("transport id {tid}")))
        .collect();
    report.diagnostics.adm_rejected = engine.rejected;
    report.diagnostics.reassembly = ReassemblyStatsView::from(reassembler.stats());
    report.diagnostics.receiver = ReceiverDiagnosticsView::from(receiver.diagnostics());
    report.trace = engine.trace;
    report.files = files.into_values().collect();
    report
}

#[derive(Debug, Error)]
pub enum WriteFilesError {
    #[error("recovered name {0:?} escapes the output directory")]
    UnsafeName(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes recovered files under `out_dir`, refusing names that would
/// land outside it. Carousel names are validated on the way in, but a
/// hand-built container is not trusted.
pub fn write_files(files: &[RecoveredFile], out_dir: &Path) -> Result<Vec<PathBuf>, WriteFilesError> {
    let mut written = Vec::with_capacity(files.len());
    for file in files {
        let relative = Path::new(&file.name);
        let safe = relative
            .components()
            .all(|part| matches!(part, Component::Normal(_)));
        if !safe || relative.is_absolute() {
            return Err(WriteFilesError::UnsafeName(file.name.clone()));
        }
        let target = out_dir.join(relative);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&target, &file.body)?;
        written.push(target);
    }
    Ok(written)
}
