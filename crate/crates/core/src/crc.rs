//! CRC-16 shared by every framing layer in this crate.
//!
//! Parameters are the X.25 family: polynomial x^16 + x^12 + x^5 + 1
//! processed in reflected form (0x8408), initial value 0xFFFF, final
//! complement. The check value over the ASCII digits "123456789" is
//! 0x906E and the empty input yields 0x0000. Frames store the value
//! big-endian after the protected bytes.

const POLY_REFLECTED: u16 = 0x8408;

const TABLE: [u16; 256] = build_table();

const fn build_table() -> [u16; 256] {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u16;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 { (crc >> 1) ^ POLY_REFLECTED } else { crc >> 1 };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

/// Computes the 16-bit check value over `data`.
pub fn crc16(data: &[u8]) -> u16 {
    let mut crc = 0xFFFFu16;
    for &byte in data {
        crc = (crc >> 8) ^ TABLE[((crc ^ byte as u16) & 0xFF) as usize];
    }
    crc ^ 0xFFFF
}
