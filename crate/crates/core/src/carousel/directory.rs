//! The carousel directory: one table describing every object in the
//! current cycle, itself segmented and sent like any other body.
//!
//! Body layout, all integers big-endian:
//!
//! ```text
//! entry_count        u16
//! extension_length   u16
//! extension parameter run
//! per entry:
//!   transport_id     u16
//!   core             7 bytes: body_size(28) header_size(13)
//!                             content_type(6) content_sub_type(9)
//!   parameter run, header_size - 7 bytes
//! ```
//!
//! The header size field counts the core plus the entry's parameter
//! run, so a reader can skip entries it does not understand.

use super::params::{
    decode_parameters, encode_parameter, param_id, HeaderParameter, ParamError, COMPRESSION_GZIP,
};
use thiserror::Error;

/// Largest body size the 28 bit field can describe.
pub const MAX_BODY_SIZE: usize = (1 << 28) - 1;

const CORE_LEN: usize = 7;
const MAX_HEADER_SIZE: usize = (1 << 13) - 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DirectoryError {
    #[error("directory of {0} entries exceeds the u16 entry count")]
    TooManyEntries(usize),
    #[error("extension run of {0} bytes exceeds the u16 length field")]
    ExtensionsTooLong(usize),
    #[error("{field} value {value} does not fit its field")]
    FieldOutOfRange { field: &'static str, value: u64 },
    #[error("entry header size {0} is shorter than the core")]
    BadHeaderSize(u16),
    #[error("directory truncated")]
    Truncated,
    #[error("{0} trailing bytes after the last entry")]
    TrailingBytes(usize),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// One directory entry describing an object in the cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectoryEntry {
    pub transport_id: u16,
    pub body_size: u32,
    pub content_type: u8,
    pub content_sub_type: u16,
    pub params: Vec<HeaderParameter>,
}

impl DirectoryEntry {
    pub fn content_name(&self) -> Option<String> {
        self.params.iter().find_map(HeaderParameter::as_content_name)
    }

    /// CompressionType value, when the entry carries one.
    pub fn compression(&self) -> Option<u8> {
        self.params
            .iter()
            .find(|p| p.id == param_id::COMPRESSION_TYPE)
            .and_then(|p| p.data.first().copied())
    }

    pub fn is_gzip(&self) -> bool {
        self.compression() == Some(COMPRESSION_GZIP)
    }
}

/// The decoded directory.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MotDirectory {
    pub entries: Vec<DirectoryEntry>,
    pub extensions: Vec<HeaderParameter>,
    /// Whether the directory itself travelled GZip compressed.
    pub compressed_directory: bool,
}

impl MotDirectory {
    pub fn entry(&self, transport_id: u16) -> Option<&DirectoryEntry> {
        self.entries.iter().find(|e| e.transport_id == transport_id)
    }

    /// DirectoryIndex extension payloads, one per announced profile.
    pub fn directory_indexes(&self) -> impl Iterator<Item = &HeaderParameter> {
        self.extensions.iter().filter(|p| p.id == param_id::DIRECTORY_INDEX)
    }
}

pub fn encode_directory_body(directory: &MotDirectory) -> Result<Vec<u8>, DirectoryError> {
    if directory.entries.len() > u16::MAX as usize {
        return Err(DirectoryError::TooManyEntries(directory.entries.len()));
    }
    let mut extensions = Vec::new();
    for param in &directory.extensions {
        extensions.extend(encode_parameter(param)?);
    }
    if extensions.len() > u16::MAX as usize {
        return Err(DirectoryError::ExtensionsTooLong(extensions.len()));
    }

    let mut out = Vec::new();
    out.extend_from_slice(&(directory.entries.len() as u16).to_be_bytes());
    out.extend_from_slice(&(extensions.len() as u16).to_be_bytes());
    out.extend_from_slice(&extensions);
    for entry in &directory.entries {
        let mut params = Vec::new();
        for param in &entry.params {
            params.extend(encode_parameter(param)?);
        }
        let header_size = CORE_LEN + params.len();
        if header_size > MAX_HEADER_SIZE {
            return Err(DirectoryError::FieldOutOfRange {
                field: "header size",
                value: header_size as u64,
            });
        }
        out.extend_from_slice(&entry.transport_id.to_be_bytes());
        out.extend_from_slice(&encode_core(entry, header_size as u16)?);
        out.extend_from_slice(&params);
    }
    Ok(out)
}

pub fn decode_directory_body(bytes: &[u8]) -> Result<MotDirectory, DirectoryError> {
    let mut cursor = Cursor { bytes, offset: 0 };
    let entry_count = cursor.u16()?;
    let extension_length = cursor.u16()? as usize;
    let extensions = decode_parameters(cursor.slice(extension_length)?)?;

    let mut entries = Vec::with_capacity(entry_count as usize);
    for _ in 0..entry_count {
        let transport_id = cursor.u16()?;
        let core = cursor.slice(CORE_LEN)?;
        let (body_size, header_size, content_type, content_sub_type) = decode_core(core);
        if (header_size as usize) < CORE_LEN {
            return Err(DirectoryError::BadHeaderSize(header_size));
        }
        let params = decode_parameters(cursor.slice(header_size as usize - CORE_LEN)?)?;
        entries.push(DirectoryEntry {
            transport_id,
            body_size,
            content_type,
            content_sub_type,
            params,
        });
    }
    let leftover = bytes.len() - cursor.offset;
    if leftover != 0 {
        return Err(DirectoryError::TrailingBytes(leftover));
    }
    Ok(MotDirectory { entries, extensions, compressed_directory: false })
}

fn encode_core(entry: &DirectoryEntry, header_size: u16) -> Result<[u8; CORE_LEN], DirectoryError> {
    check_field("body size", entry.body_size as u64, MAX_BODY_SIZE as u64)?;
    check_field("content type", entry.content_type as u64, 0x3F)?;
    check_field("content sub type", entry.content_sub_type as u64, 0x1FF)?;
    let packed: u64 = (entry.body_size as u64) << 28
        | (header_size as u64) << 15
        | (entry.content_type as u64) << 9
        | entry.content_sub_type as u64;
    let bytes = packed.to_be_bytes();
    Ok(bytes[1..].try_into().unwrap())
}

fn decode_core(core: &[u8]) -> (u32, u16, u8, u16) {
    let mut bytes = [0u8; 8];
    bytes[1..].copy_from_slice(core);
    let packed = u64::from_be_bytes(bytes);
    (
        (packed >> 28) as u32,
        (packed >> 15) as u16 & 0x1FFF,
        (packed >> 9) as u8 & 0x3F,
        packed as u16 & 0x1FF,
    )
}

fn check_field(field: &'static str, value: u64, max: u64) -> Result<(), DirectoryError> {
    if value > max {
        return Err(DirectoryError::FieldOutOfRange { field, value });
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn slice(&mut self, len: usize) -> Result<&'a [u8], DirectoryError> {
        let end = self.offset.checked_add(len).ok_or(DirectoryError::Truncated)?;
        let slice = self.bytes.get(self.offset..end).ok_or(DirectoryError::Truncated)?;
        self.offset = end;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16, DirectoryError> {
        let slice = self.slice(2)?;
        Ok(u16::from_be_bytes([slice[0], slice[1]]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_directory() -> MotDirectory {
        MotDirectory {
            entries: vec![
                DirectoryEntry {
                    transport_id: 1,
                    body_size: 1234,
                    content_type: 0,
                    content_sub_type: 0,
                    params: vec![HeaderParameter::content_name("main.ncl")],
                },
                DirectoryEntry {
                    transport_id: 2,
                    body_size: 9,
                    content_type: 0,
                    content_sub_type: 0,
                    params: vec![
                        HeaderParameter::content_name("media/pic.jpg"),
                        HeaderParameter::compression_gzip(),
                    ],
                },
            ],
            extensions: vec![HeaderParameter::new(
                param_id::DIRECTORY_INDEX,
                b"\x01main.ncl".to_vec(),
            )],
            compressed_directory: false,
        }
    }

    #[test]
    fn roundtrip() {
        let directory = sample_directory();
        let body = encode_directory_body(&directory).unwrap();
        assert_eq!(decode_directory_body(&body).unwrap(), directory);
    }

    #[test]
    fn empty_directory_is_four_bytes() {
        let body = encode_directory_body(&MotDirectory::default()).unwrap();
        assert_eq!(body, [0, 0, 0, 0]);
        assert_eq!(decode_directory_body(&body).unwrap(), MotDirectory::default());
    }

    #[test]
    fn entry_lookup_helpers() {
        let directory = sample_directory();
        let entry = directory.entry(2).unwrap();
        assert_eq!(entry.content_name().unwrap(), "media/pic.jpg");
        assert!(entry.is_gzip());
        assert!(!directory.entry(1).unwrap().is_gzip());
        assert!(directory.entry(9).is_none());
        assert_eq!(directory.directory_indexes().count(), 1);
    }

    #[test]
    fn body_size_limit() {
        let mut directory = sample_directory();
        directory.entries[0].body_size = (MAX_BODY_SIZE + 1) as u32;
        assert!(matches!(
            encode_directory_body(&directory),
            Err(DirectoryError::FieldOutOfRange { field: "body size", .. })
        ));
    }

    #[test]
    fn truncation_detected_at_every_length() {
        let body = encode_directory_body(&sample_directory()).unwrap();
        for len in 0..body.len() {
            assert!(
                decode_directory_body(&body[..len]).is_err(),
                "length {len} should not parse"
            );
        }
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut body = encode_directory_body(&sample_directory()).unwrap();
        body.push(0);
        assert_eq!(decode_directory_body(&body), Err(DirectoryError::TrailingBytes(1)));
    }

    #[test]
    fn bad_header_size_rejected() {
        // one entry whose header size claims fewer bytes than the core
        let mut body = vec![0, 1, 0, 0, 0, 0];
        let packed: u64 = 5 << 28 | 3 << 15;
        body.extend_from_slice(&packed.to_be_bytes()[1..]);
        assert_eq!(decode_directory_body(&body), Err(DirectoryError::BadHeaderSize(3)));
    }

    fn arbitrary_entry() -> impl Strategy<Value = DirectoryEntry> {
        (
            any::<u16>(),
            0u32..=MAX_BODY_SIZE as u32,
            0u8..=0x3F,
            0u16..=0x1FF,
            proptest::collection::vec(
                (0u8..=0x3F, proptest::collection::vec(any::<u8>(), 0..20)),
                0..4,
            ),
        )
            .prop_map(|(tid, body_size, ct, cst, params)| DirectoryEntry {
                transport_id: tid,
                body_size,
                content_type: ct,
                content_sub_type: cst,
                params: params
                    .into_iter()
                    .map(|(id, data)| HeaderParameter::new(id, data))
                    .collect(),
            })
    }

    proptest! {
        #[test]
        fn roundtrip_property(
            entries in proptest::collection::vec(arbitrary_entry(), 0..8),
            extensions in proptest::collection::vec(
                (0u8..=0x3F, proptest::collection::vec(any::<u8>(), 0..20)),
                0..3,
            ),
        ) {
            let directory = MotDirectory {
                entries,
                extensions: extensions
                    .into_iter()
                    .map(|(id, data)| HeaderParameter::new(id, data))
                    .collect(),
                compressed_directory: false,
            };
            let body = encode_directory_body(&directory).unwrap();
            prop_assert_eq!(decode_directory_body(&body).unwrap(), directory);
        }
    }
}
