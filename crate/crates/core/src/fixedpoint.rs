//! Signed two's-complement fixed-point values.
//!
//! A [`QFormat`] `Qm.n` has one sign bit, `m` integer bits and `n` fraction
//! bits. Every real-to-code conversion rounds half away from zero and
//! saturates at the format extremes; everything else in the datapath is
//! integer-exact.

use std::fmt;

use crate::error::{Error, Result};

/// Widest supported word, sign included.
pub const MAX_WIDTH: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QFormat {
    int_bits: u32,
    frac_bits: u32,
}

impl QFormat {
    pub fn new(int_bits: u32, frac_bits: u32) -> Result<Self> {
        if frac_bits == 0 {
            return Err(Error::param("fixed-point format needs at least one fraction bit"));
        }
        if 1 + int_bits + frac_bits > MAX_WIDTH {
            return Err(Error::param(format!("Q{int_bits}.{frac_bits} is wider than {MAX_WIDTH} bits")));
        }
        Ok(QFormat { int_bits, frac_bits })
    }

    pub fn int_bits(&self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    /// Total word width including the sign bit.
    pub fn width(&self) -> u32 {
        1 + self.int_bits + self.frac_bits
    }

    pub fn max_raw(&self) -> i32 {
        ((1i64 << (self.width() - 1)) - 1) as i32
    }

    pub fn min_raw(&self) -> i32 {
        (-(1i64 << (self.width() - 1))) as i32
    }

    /// Weight of one code step.
    pub fn lsb(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn clamp_raw(&self, raw: i64) -> i32 {
        raw.clamp(self.min_raw() as i64, self.max_raw() as i64) as i32
    }

    pub fn from_raw(&self, raw: i64) -> FxpValue {
        FxpValue { raw: self.clamp_raw(raw), format: *self }
    }

    pub fn max_value(&self) -> FxpValue {
        FxpValue { raw: self.max_raw(), format: *self }
    }

    pub fn zero(&self) -> FxpValue {
        FxpValue { raw: 0, format: *self }
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits, self.frac_bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxpValue {
    raw: i32,
    format: QFormat,
}

impl FxpValue {
    pub fn raw(&self) -> i32 {
        self.raw
    }

    pub fn format(&self) -> QFormat {
        self.format
    }

    pub fn to_real(&self) -> f64 {
        to_real(*self)
    }

    /// Two's-complement negation; the most negative code saturates.
    pub fn neg_saturating(&self) -> FxpValue {
        self.format.from_raw(-(self.raw as i64))
    }

    pub fn abs_saturating(&self) -> FxpValue {
        if self.raw < 0 {
            self.neg_saturating()
        } else {
            *self
        }
    }
}

pub fn quantize(x: f64, fmt: QFormat) -> FxpValue {
    let scaled = (x * (fmt.frac_bits as f64).exp2()).round();
    let raw = if scaled.is_nan() {
        0
    } else if scaled >= fmt.max_raw() as f64 {
        fmt.max_raw()
    } else if scaled <= fmt.min_raw() as f64 {
        fmt.min_raw()
    } else {
        scaled as i32
    };
    FxpValue { raw, format: fmt }
}

pub fn to_real(v: FxpValue) -> f64 {
    v.raw as f64 * v.format.lsb()
}

/// Re-expresses `v` in `fmt` by dropping low fraction bits (floor toward
/// negative infinity), then clamps into `fmt`. When `fmt` has more fraction
/// bits than `v` the conversion is an exact left shift.
pub fn truncate_to(v: FxpValue, fmt: QFormat) -> FxpValue {
    let from = v.format.frac_bits as i32;
    let to = fmt.frac_bits as i32;
    let raw = v.raw as i64;
    let shifted = if from >= to { raw >> (from - to) } else { raw << (to - from) };
    fmt.from_raw(shifted)
}
