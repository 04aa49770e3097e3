//! MOT header parameters and their length-indicator encoding.
//!
//! A parameter starts with one byte holding a two bit length indicator
//! and a six bit id. The indicator selects a 0, 1 or 4 byte data field,
//! or a variable field introduced by one length byte. Only the short
//! form of that length byte is produced or accepted here, which caps a
//! variable field at 127 bytes. Encoding always picks the shortest
//! form that fits, so a value either has one canonical encoding or is
//! rejected.

use thiserror::Error;

/// Parameter ids used by this chain. Ids overlap between the directory
/// extension scope and the object header scope; both sets are listed.
pub mod param_id {
    // directory extension scope
    pub const SORTED_HEADER_INFORMATION: u8 = 0x00;
    pub const DEFAULT_PERMIT_OUTDATED_VERSIONS: u8 = 0x01;
    pub const DEFAULT_EXPIRATION: u8 = 0x09;
    pub const DIRECTORY_INDEX: u8 = 0x22;
    // object header scope
    pub const PERMIT_OUTDATED_VERSIONS: u8 = 0x01;
    pub const EXPIRATION: u8 = 0x04;
    pub const TRIGGER_TIME: u8 = 0x05;
    pub const CONTENT_NAME: u8 = 0x0C;
    pub const COMPRESSION_TYPE: u8 = 0x11;
}

/// Character set byte carried ahead of a ContentName value.
pub const CONTENT_NAME_CHARSET: u8 = 0xF0;

/// CompressionType value selecting GZip.
pub const COMPRESSION_GZIP: u8 = 0x01;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("parameter id {0} does not fit six bits")]
    InvalidId(u8),
    #[error("parameter data of {0} bytes exceeds the 127 byte variable field")]
    DataTooLong(usize),
    #[error("parameter truncated")]
    Truncated,
    #[error("extended length form is not supported")]
    UnsupportedLengthForm,
}

/// One header parameter, data kept opaque.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderParameter {
    pub id: u8,
    pub data: Vec<u8>,
}

impl HeaderParameter {
    pub fn new(id: u8, data: Vec<u8>) -> Self {
        HeaderParameter { id, data }
    }

    /// ContentName with the charset byte prepended.
    pub fn content_name(name: &str) -> Self {
        let mut data = Vec::with_capacity(name.len() + 1);
        data.push(CONTENT_NAME_CHARSET);
        data.extend_from_slice(name.as_bytes());
        HeaderParameter { id: param_id::CONTENT_NAME, data }
    }

    /// CompressionType selecting GZip.
    pub fn compression_gzip() -> Self {
        HeaderParameter { id: param_id::COMPRESSION_TYPE, data: vec![COMPRESSION_GZIP] }
    }

    /// ContentName value with the charset byte stripped.
    pub fn as_content_name(&self) -> Option<String> {
        if self.id != param_id::CONTENT_NAME || self.data.is_empty() {
            return None;
        }
        String::from_utf8(self.data[1..].to_vec()).ok()
    }
}

pub fn encode_parameter(param: &HeaderParameter) -> Result<Vec<u8>, ParamError> {
    if param.id > 0x3F {
        return Err(ParamError::InvalidId(param.id));
    }
    let mut out = Vec::with_capacity(param.data.len() + 2);
    match param.data.len() {
        0 => out.push(param.id),
        1 => {
            out.push(0x40 | param.id);
            out.push(param.data[0]);
        }
        4 => {
            out.push(0x80 | param.id);
            out.extend_from_slice(&param.data);
        }
        n if n <= 127 => {
            out.push(0xC0 | param.id);
            out.push(n as u8);
            out.extend_from_slice(&param.data);
        }
        n => return Err(ParamError::DataTooLong(n)),
    }
    Ok(out)
}

/// Decodes one parameter, returning it with the number of bytes read.
pub fn decode_parameter(bytes: &[u8]) -> Result<(HeaderParameter, usize), ParamError> {
    let first = *bytes.first().ok_or(ParamError::Truncated)?;
    let id = first & 0x3F;
    let (data, consumed) = match first >> 6 {
        0 => (Vec::new(), 1),
        1 => {
            let data = bytes.get(1..2).ok_or(ParamError::Truncated)?;
            (data.to_vec(), 2)
        }
        2 => {
            let data = bytes.get(1..5).ok_or(ParamError::Truncated)?;
            (data.to_vec(), 5)
        }
        _ => {
            let length = *bytes.get(1).ok_or(ParamError::Truncated)?;
            if length & 0x80 != 0 {
                return Err(ParamError::UnsupportedLengthForm);
            }
            let end = 2 + length as usize;
            let data = bytes.get(2..end).ok_or(ParamError::Truncated)?;
            (data.to_vec(), end)
        }
    };
    Ok((HeaderParameter { id, data }, consumed))
}

/// Decodes a packed run of parameters filling `bytes` exactly.
pub fn decode_parameters(mut bytes: &[u8]) -> Result<Vec<HeaderParameter>, ParamError> {
    let mut params = Vec::new();
    while !bytes.is_empty() {
        let (param, consumed) = decode_parameter(bytes)?;
        params.push(param);
        bytes = &bytes[consumed..];
    }
    Ok(params)
}
