//! Time base values: 33 bit tick counts and the `<digits>tbv` literal
//! grammar used by documents that address moments on the time base.

use std::fmt;
use thiserror::Error;

/// The time base counts modulo 2^33.
pub const TBV_MODULUS: u64 = 1 << 33;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TbvError {
    #[error("time base value {0} does not fit 33 bits")]
    OutOfRange(String),
    #[error("bad tbv literal {0:?}")]
    BadLiteral(String),
}

/// One 33 bit time base value.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tbv(u64);

impl Tbv {
    pub fn new(value: u64) -> Result<Self, TbvError> {
        if value >= TBV_MODULUS {
            return Err(TbvError::OutOfRange(value.to_string()));
        }
        Ok(Tbv(value))
    }

    /// Reduces any count into range.
    pub fn wrapping(value: u64) -> Self {
        Tbv(value % TBV_MODULUS)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Adds `delta` ticks, reporting whether the counter wrapped.
    pub fn wrapping_add(self, delta: u64) -> (Tbv, bool) {
        let sum = self.0 + delta % TBV_MODULUS;
        (Tbv(sum % TBV_MODULUS), sum >= TBV_MODULUS)
    }

    /// Shortest signed tick count from `self` to `other` on the
    /// circular scale, in [-2^32, 2^32).
    pub fn signed_distance_to(self, other: Tbv) -> i64 {
        let forward = (other.0 + TBV_MODULUS - self.0) % TBV_MODULUS;
        if forward < TBV_MODULUS / 2 {
            forward as i64
        } else {
            forward as i64 - TBV_MODULUS as i64
        }
    }

    pub fn to_literal(self) -> String {
        format!("{}tbv", self.0)
    }
}

impl fmt::Display for Tbv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parses a `<digits>tbv` literal: decimal digits only, no sign, no
/// whitespace, value under 2^33.
pub fn parse_tbv_literal(text: &str) -> Result<Tbv, TbvError> {
    let bad = || TbvError::BadLiteral(text.to_owned());
    let digits = text.strip_suffix("tbv").ok_or_else(bad)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let value: u64 = digits.parse().map_err(|_| TbvError::OutOfRange(digits.to_owned()))?;
    Tbv::new(value).map_err(|_| TbvError::OutOfRange(digits.to_owned()))
}
