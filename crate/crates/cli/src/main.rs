//! `gdrm`: pack an application tree into a broadcast capture, push it
//! through a simulated channel, and recover it on the other side.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use gdrm_cli::channel::{simulate_channel, ChannelParams};
use gdrm_cli::container::{Container, Sidecar};
use gdrm_cli::pipeline::{run_pack, run_unpack, write_files, PackOptions, UnpackOptions};

use gdrm_core::adm::{
    parse_tbv_literal, AdmMessage, EditingCommandMessage, SignLanguageMessage, Tbv,
    TimeBaseMessage, TimeBaseStatus,
};
use gdrm_core::ingest::{parse_entry_point, EntryPoint, ProfileId, GINGA_FULL_PROFILE};
use gdrm_core::packet::{packetize, ContinuityCounter, Packet};
use gdrm_core::validator::{validate_ncl, Severity};

#[derive(Parser)]
#[command(name = "gdrm", version, about = "Ginga data chain tools for DRM packet mode")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pack an application directory into a container
    Pack(PackArgs),
    /// Recover an application from a container
    Unpack(UnpackArgs),
    /// Describe a container's stream and carousel
    Inspect {
        /// Container file
        container: PathBuf,
    },
    /// Run a container through a lossy channel
    Simulate(SimulateArgs),
    /// Append auxiliary data messages to a container
    #[command(subcommand)]
    Adm(AdmCommand),
    /// Check NCL documents against the Digital Radio profile
    ValidateNcl {
        /// Documents or directories to check
        paths: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct PackArgs {
    /// Application directory
    app_dir: PathBuf,
    /// Output container file
    #[arg(short, long)]
    output: PathBuf,
    /// Entry point, `[profile:]file[#port]`, repeatable
    #[arg(long = "entry")]
    entries: Vec<String>,
    /// Carousel cycles to emit
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    /// Segment payload size in bytes
    #[arg(long, default_value_t = 1000)]
    segment_size: usize,
    /// Packet data field length in bytes, 1 to 255
    #[arg(long, default_value_t = 100)]
    packet_length: usize,
    /// Sub-stream id, 0 to 3
    #[arg(long, default_value_t = 0)]
    sub_stream: u8,
    /// GZip object bodies when that shrinks them
    #[arg(long)]
    compress: bool,
    /// GZip the directory
    #[arg(long)]
    compress_directory: bool,
    /// Round-robin body segments across objects
    #[arg(long)]
    interleave: bool,
    /// Carry dot-prefixed files too
    #[arg(long)]
    include_hidden: bool,
    /// Insert a time base beacon every this many carousel groups
    #[arg(long, value_name = "GROUPS")]
    timebase_every: Option<usize>,
}

#[derive(Args)]
struct UnpackArgs {
    /// Container file
    container: PathBuf,
    /// Directory to write recovered files into
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Receiver profile for entry point selection
    #[arg(long, default_value_t = 1)]
    profile: u8,
    /// Print the full report as JSON
    #[arg(long)]
    json: bool,
    /// Print the auxiliary message trace
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Container file
    container: PathBuf,
    /// Output container file
    #[arg(short, long)]
    output: PathBuf,
    /// Probability a record is lost, 0 to 1
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    /// Per-bit flip probability on surviving records, 0 to 1
    #[arg(long, default_value_t = 0.0)]
    ber: f64,
    /// Channel seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AdmTarget {
    /// Write a fresh container here
    #[arg(short, long, conflicts_with = "append")]
    output: Option<PathBuf>,
    /// Append to this existing container
    #[arg(long, conflicts_with = "output")]
    append: Option<PathBuf>,
    /// Packet data field length for a fresh container
    #[arg(long, default_value_t = 100)]
    packet_length: usize,
    /// Sub-stream id for a fresh container
    #[arg(long, default_value_t = 0)]
    sub_stream: u8,
}

#[derive(Subcommand)]
enum AdmCommand {
    /// A time base beacon
    Timebase {
        /// Time base value, digits or `<digits>tbv`
        #[arg(long)]
        tbv: String,
        /// Mark the time base paused
        #[arg(long)]
        paused: bool,
        /// Announce a discontinuity
        #[arg(long)]
        discontinuity: bool,
        #[command(flatten)]
        target: AdmTarget,
    },
    /// An editing command
    Edit {
        #[arg(long)]
        event_id: u16,
        /// Execute when the time base reaches this value
        #[arg(long, conflicts_with = "now")]
        at: Option<String>,
        /// Execute immediately
        #[arg(long)]
        now: bool,
        /// Command tag byte
        #[arg(long, default_value_t = 0)]
        tag: u8,
        /// Command payload as hex digits
        #[arg(long, default_value = "")]
        payload_hex: String,
        #[command(flatten)]
        target: AdmTarget,
    },
    /// A sign language window event
    Sign {
        #[arg(long)]
        event_id: u16,
        /// Window moment on the time base
        #[arg(long)]
        at: String,
        /// Private data as hex digits
        #[arg(long, default_value = "")]
        private_hex: String,
        #[command(flatten)]
        target: AdmTarget,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(error) => {
            // a reader hanging up mid-print is not our failure
            let broken_pipe = error.chain().any(|cause| {
                cause
                    .downcast_ref::<std::io::Error>()
                    .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            });
            if broken_pipe {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {error:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Pack(args) => cmd_pack(args),
        Command::Unpack(args) => cmd_unpack(args),
        Command::Inspect { container } => {
            let container = read_container(&container)?;
            let stdout = std::io::stdout();
            gdrm_cli::inspect::inspect(&container, &mut stdout.lock())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate(args) => cmd_simulate(args),
        Command::Adm(command) => cmd_adm(command),
        Command::ValidateNcl { paths } => cmd_validate(paths),
    }
}

fn read_container(path: &Path) -> anyhow::Result<Container> {
    Container::read_file(path).with_context(|| format!("reading {}", path.display()))
}

/// `[profile:]file[#port]`, the profile being decimal digits. A colon
/// after anything non-numeric belongs to the entry text itself.
fn parse_entry_argument(text: &str) -> anyhow::Result<(ProfileId, EntryPoint)> {
    let (profile, rest) = match text.split_once(':') {
        Some((digits, rest))
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) =>
        {
            let value: u8 = digits
                .parse()
                .map_err(|_| anyhow::anyhow!("profile {digits:?} does not fit a byte"))?;
            (ProfileId(value), rest)
        }
        _ => (GINGA_FULL_PROFILE, text),
    };
    let entry = parse_entry_point(rest).with_context(|| format!("entry point {rest:?}"))?;
    Ok((profile, entry))
}

fn cmd_pack(args: PackArgs) -> anyhow::Result<ExitCode> {
    let mut entries = Vec::with_capacity(args.entries.len());
    for text in &args.entries {
        entries.push(parse_entry_argument(text)?);
    }
    let options = PackOptions {
        repetitions: args.repetitions,
        segment_size: args.segment_size,
        packet_length: args.packet_length,
        sub_stream_id: args.sub_stream,
        compress: args.compress,
        compress_directory: args.compress_directory,
        interleave: args.interleave,
        include_hidden: args.include_hidden,
        timebase_every: args.timebase_every,
    };
    let container = run_pack(&args.app_dir, &entries, &options)
        .with_context(|| format!("packing {}", args.app_dir.display()))?;
    container
        .write_file(&args.output)
        .with_context(|| format!("writing {}", args.output.display()))?;
    println!(
        "packed {} records ({} bytes each) into {}",
        container.record_count(),
        container.record_length(),
        args.output.display(),
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_unpack(args: UnpackArgs) -> anyhow::Result<ExitCode> {
    let container = read_container(&args.container)?;
    let options = UnpackOptions { receiver_profile: ProfileId(args.profile) };
    let report = run_unpack(&container, &options);

    if let Some(out_dir) = &args.output {
        let written = write_files(&report.files, out_dir)?;
        if !args.json {
            for path in &written {
                println!("wrote {}", path.display());
            }
        }
    }

    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        if args.trace {
            for event in &report.trace {
                println!("trace: {event}");
            }
        }
        for (profile, entry) in &report.entry_points {
            println!("entry point, profile {profile}: {entry}");
        }
        if let Some(entry) = &report.selected_entry {
            println!("selected entry point: {entry}");
        }
        println!(
            "{} files recovered, {} groups rejected, {} auxiliary messages rejected",
            report.files.len(),
            report.diagnostics.groups_rejected,
            report.diagnostics.adm_rejected,
        );
        if !report.complete {
            match report.missing.len() {
                0 => println!("incomplete: no directory recovered"),
                n => println!("incomplete: {n} objects missing: {}", report.missing.join(", ")),
            }
        }
    }
    Ok(if report.complete { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<ExitCode> {
    let params = ChannelParams::new(args.loss, args.ber, args.seed)?;
    let container = read_container(&args.container)?;
    let after = simulate_channel(&container, &params);
    after
        .write_file(&args.output)
        .with_context(|| format!("writing {}", args.output.display()))?;
    println!(
        "channel kept {} of {} records (loss {}, ber {}, seed {})",
        after.record_count(),
        container.record_count(),
        args.loss,
        args.ber,
        args.seed,
    );
    Ok(ExitCode::SUCCESS)
}

/// Digits or a `<digits>tbv` literal.
fn parse_tbv_argument(text: &str) -> anyhow::Result<Tbv> {
    let result = if text.ends_with("tbv") {
        parse_tbv_literal(text)
    } else {
        parse_tbv_literal(&format!("{text}tbv"))
    };
    result.map_err(|error| anyhow::anyhow!("{error}"))
}

fn parse_hex_argument(text: &str) -> anyhow::Result<Vec<u8>> {
    let compact: String = text.chars().filter(|c| !c.is_ascii_whitespace()).collect();
    if compact.len() % 2 != 0 {
        bail!("hex data has an odd number of digits");
    }
    (0..compact.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&compact[i..i + 2], 16)
                .map_err(|_| anyhow::anyhow!("bad hex byte {:?}", &compact[i..i + 2]))
        })
        .collect()
}

fn cmd_adm(command: AdmCommand) -> anyhow::Result<ExitCode> {
    let (message, target) = match command {
        AdmCommand::Timebase { tbv, paused, discontinuity, target } => {
            let status = if paused { TimeBaseStatus::Paused } else { TimeBaseStatus::Running };
            let message =
                TimeBaseMessage::new(status, discontinuity, parse_tbv_argument(&tbv)?);
            (AdmMessage::TimeBase(message), target)
        }
        AdmCommand::Edit { event_id, at, now, tag, payload_hex, target } => {
            let tbv = match (&at, now) {
                (Some(at), false) => parse_tbv_argument(at)?,
                (None, true) => Tbv::default(),
                _ => bail!("an editing command runs either --now or --at <tbv>"),
            };
            let payload = parse_hex_argument(&payload_hex)?;
            let message = EditingCommandMessage::new(event_id, now, tbv, tag, payload);
            (AdmMessage::EditingCommand(message), target)
        }
        AdmCommand::Sign { event_id, at, private_hex, target } => {
            let private = parse_hex_argument(&private_hex)?;
            let message =
                SignLanguageMessage::new(event_id, parse_tbv_argument(&at)?, private);
            (AdmMessage::SignLanguage(message), target)
        }
    };

    let (mut container, mut counter, path) = match (&target.output, &target.append) {
        (Some(path), None) => {
            let sidecar = Sidecar::standalone_data_service(target.sub_stream);
            (Container::new(target.packet_length, sidecar)?, ContinuityCounter::new(), path)
        }
        (None, Some(path)) => {
            let container = read_container(path)?;
            let counter = match container.records().last() {
                Some(record) => {
                    let packet = Packet::decode(record, container.packet_length())
                        .context("container tail record is corrupt")?;
                    ContinuityCounter::starting_at((packet.continuity + 1) & 0x07)
                }
                None => ContinuityCounter::new(),
            };
            (container, counter, path)
        }
        _ => bail!("pick a target: --output for a fresh container or --append"),
    };

    let group = message.to_data_group()?;
    let unit = group.encode()?;
    let config = container.stream_config();
    let mut records = 0;
    for packet in packetize(&unit, &config, &mut counter) {
        container.push_record(&packet.encode());
        records += 1;
    }
    container.write_file(path).with_context(|| format!("writing {}", path.display()))?;
    println!("appended {records} records to {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn ncl_documents(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut documents = Vec::new();
    for path in paths {
        if path.is_dir() {
            for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
                let entry = entry?;
                if entry.file_type().is_file()
                    && entry.path().extension().is_some_and(|ext| ext == "ncl")
                {
                    documents.push(entry.path().to_owned());
                }
            }
        } else {
            documents.push(path.clone());
        }
    }
    if documents.is_empty() {
        bail!("no documents to check");
    }
    Ok(documents)
}

fn cmd_validate(paths: Vec<PathBuf>) -> anyhow::Result<ExitCode> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut errors = 0u64;
    let mut warnings = 0u64;
    for path in ncl_documents(&paths)? {
        let source = fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        let violations = validate_ncl(&source)
            .map_err(|error| anyhow::anyhow!("{}: {error}", path.display()))?;
        for violation in violations {
            writeln!(out, "{}:{violation}", path.display())?;
            match violation.severity {
                Severity::Error => errors += 1,
                Severity::Warning => warnings += 1,
            }
        }
    }
    writeln!(out, "{errors} errors, {warnings} warnings")?;
    Ok(if errors + warnings > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
