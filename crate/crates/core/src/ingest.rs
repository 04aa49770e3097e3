//! Taking an application off disk: scanning the file tree into MOT
//! objects and describing its entry points for receiver profiles.

use crate::carousel::{param_id, validate_content_name, ContentNameError, HeaderParameter, MotObject};
use crate::gzip;
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Receiver profile identifier announced in a DirectoryIndex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProfileId(pub u8);

/// The one profile this chain targets: full Ginga receivers.
pub const GINGA_FULL_PROFILE: ProfileId = ProfileId(1);

impl ProfileId {
    pub fn is_known(self) -> bool {
        self == GINGA_FULL_PROFILE
    }
}

impl fmt::Display for ProfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Ncl,
    Html,
}

/// Launch point of the application: a document in the tree, plus a
/// connector port for NCL documents that expose one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryPoint {
    pub file: String,
    pub kind: EntryKind,
    pub port: Option<String>,
}

impl EntryPoint {
    pub fn render(&self) -> String {
        match &self.port {
            Some(port) => format!("{}#{}", self.file, port),
            None => self.file.clone(),
        }
    }
}

impl fmt::Display for EntryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EntryPointError {
    #[error("entry point must be a relative path inside the application")]
    AbsolutePath,
    #[error("entry point {0:?} is neither an .ncl nor an .html document")]
    BadExtension(String),
    #[error("only NCL entry points may name a connector port")]
    PortOnHtml,
    #[error("entry point names more than one port")]
    MultipleHashes,
    #[error("entry point port is empty")]
    EmptyPort,
    #[error(transparent)]
    BadFileName(#[from] ContentNameError),
}

/// Parses `file[#port]`.
pub fn parse_entry_point(text: &str) -> Result<EntryPoint, EntryPointError> {
    let mut parts = text.split('#');
    let file = parts.next().unwrap_or_default();
    let port = parts.next();
    if parts.next().is_some() {
        return Err(EntryPointError::MultipleHashes);
    }
    if file.starts_with('/') {
        return Err(EntryPointError::AbsolutePath);
    }
    validate_content_name(file)?;
    let extension = file.rsplit_once('.').map(|(_, ext)| ext).unwrap_or_default();
    let kind = if extension.eq_ignore_ascii_case("ncl") {
        EntryKind::Ncl
    } else if extension.eq_ignore_ascii_case("html") {
        EntryKind::Html
    } else {
        return Err(EntryPointError::BadExtension(file.to_owned()));
    };
    if let Some(port) = port {
        if port.is_empty() {
            return Err(EntryPointError::EmptyPort);
        }
        if kind == EntryKind::Html {
            return Err(EntryPointError::PortOnHtml);
        }
    }
    Ok(EntryPoint { file: file.to_owned(), kind, port: port.map(str::to_owned) })
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DirectoryIndexError {
    #[error("DirectoryIndex data is empty")]
    Empty,
    #[error("DirectoryIndex of {0} bytes exceeds the 127 byte parameter field")]
    TooLong(usize),
    #[error("DirectoryIndex entry point is not UTF-8")]
    InvalidUtf8,
    #[error(transparent)]
    EntryPoint(#[from] EntryPointError),
}

/// Packs a profile id and its entry point into DirectoryIndex data.
pub fn encode_directory_index(
    profile: ProfileId,
    entry: &EntryPoint,
) -> Result<Vec<u8>, DirectoryIndexError> {
    let rendered = entry.render();
    let mut data = Vec::with_capacity(rendered.len() + 1);
    data.push(profile.0);
    data.extend_from_slice(rendered.as_bytes());
    if data.len() > 127 {
        return Err(DirectoryIndexError::TooLong(data.len()));
    }
    Ok(data)
}

pub fn decode_directory_index(data: &[u8]) -> Result<(ProfileId, EntryPoint), DirectoryIndexError> {
    let (&profile, rest) = data.split_first().ok_or(DirectoryIndexError::Empty)?;
    let text = std::str::from_utf8(rest).map_err(|_| DirectoryIndexError::InvalidUtf8)?;
    Ok((ProfileId(profile), parse_entry_point(text)?))
}

/// The DirectoryIndex extension parameter for one profile.
pub fn directory_index_param(
    profile: ProfileId,
    entry: &EntryPoint,
) -> Result<HeaderParameter, DirectoryIndexError> {
    Ok(HeaderParameter::new(param_id::DIRECTORY_INDEX, encode_directory_index(profile, entry)?))
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("application root {0:?} holds no files")]
    EmptyApplication(PathBuf),
    #[error("application holds {0} files, at most 65534 travel in one carousel")]
    TooManyFiles(usize),
    #[error("file name {0:?} is not UTF-8")]
    NonUtf8Name(PathBuf),
    #[error("symlink {0:?} is not carried; the carousel sends plain files")]
    SymlinkRejected(PathBuf),
    #[error(transparent)]
    BadName(#[from] ContentNameError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Walk(#[from] walkdir::Error),
}

/// Scan knobs.
#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    /// Mark objects for GZip transit when that actually shrinks them.
    pub compress: bool,
    /// Carry dot-prefixed files and directories too.
    pub include_hidden: bool,
}

/// Reads an application tree into carousel objects. Files are named
/// by their slash separated path relative to `root` and numbered
/// lexicographically from transport id 1, so the same tree always
/// scans to the same objects.
pub fn scan_application(root: &Path, options: &ScanOptions) -> Result<Vec<MotObject>, IngestError> {
    let mut found = Vec::new();
    for entry in walkdir::WalkDir::new(root).min_depth(1).follow_links(false).sort_by_file_name() {
        let entry = entry?;
        if entry.file_type().is_symlink() {
            return Err(IngestError::SymlinkRejected(entry.path().to_owned()));
        }
        if !entry.file_type().is_file() {
            continue;
        }
        let relative = entry.path().strip_prefix(root).expect("walk stays under root");
        let mut components = Vec::new();
        for component in relative.components() {
            let name = component
                .as_os_str()
                .to_str()
                .ok_or_else(|| IngestError::NonUtf8Name(entry.path().to_owned()))?;
            components.push(name);
        }
        if !options.include_hidden && components.iter().any(|c| c.starts_with('.')) {
            continue;
        }
        let content_name = components.join("/");
        validate_content_name(&content_name)?;
        let body = std::fs::read(entry.path())?;
        found.push((content_name, body));
    }
    if found.is_empty() {
        return Err(IngestError::EmptyApplication(root.to_owned()));
    }
    if found.len() > u16::MAX as usize - 1 {
        return Err(IngestError::TooManyFiles(found.len()));
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));

    let mut objects = Vec::with_capacity(found.len());
    for (index, (content_name, body)) in found.into_iter().enumerate() {
        let compressed = options.compress && gzip::compress(&body).len() < body.len();
        let mut object = MotObject::new(index as u16 + 1, &content_name, body)?;
        object.compressed = compressed;
        objects.push(object);
    }
    Ok(objects)
}
