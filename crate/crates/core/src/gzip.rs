//! GZip helpers shared by the carousel builder and receiver.
//!
//! Compression output is deterministic: fixed level, no name, no
//! timestamp in the member header. Decompression is capped at the
//! largest body the directory entry size field can describe, so a
//! hostile stream cannot balloon memory.

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use std::io::{Read, Write};
use thiserror::Error;

/// Decompressed size cap, matching the 28 bit body size field.
pub const MAX_DECOMPRESSED: usize = 1 << 28;

#[derive(Debug, Error)]
pub enum GzipError {
    #[error("gzip stream invalid: {0}")]
    Invalid(#[from] std::io::Error),
    #[error("decompressed data exceeds {MAX_DECOMPRESSED} bytes")]
    TooLarge,
}

pub fn compress(data: &[u8]) -> Vec<u8> {
    let mut encoder = GzEncoder::new(Vec::new(), Compression::new(6));
    encoder.write_all(data).expect("writing to a Vec cannot fail");
    encoder.finish().expect("writing to a Vec cannot fail")
}

pub fn decompress(data: &[u8]) -> Result<Vec<u8>, GzipError> {
    let mut decoder = GzDecoder::new(data).take(MAX_DECOMPRESSED as u64 + 1);
    let mut out = Vec::new();
    decoder.read_to_end(&mut out)?;
    if out.len() > MAX_DECOMPRESSED {
        return Err(GzipError::TooLarge);
    }
    Ok(out)
}
