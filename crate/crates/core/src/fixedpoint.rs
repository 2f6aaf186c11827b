//! Q-format fixed-point arithmetic.
//!
//! Values are two's-complement mantissas with an explicit [`QFormat`]. Every
//! operation rounds to nearest, ties to even, and saturates to the format
//! range. Operations that can clamp return the result together with an
//! overflow flag so callers can keep a sticky flag per run.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Word layout: `int_bits` (sign included) + `frac_bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QFormat {
    int_bits: u32,
    frac_bits: u32,
}

impl QFormat {
    /// 16-bit datapath default.
    pub const Q2_14: QFormat = QFormat {
        int_bits: 2,
        frac_bits: 14,
    };

    pub fn new(int_bits: u32, frac_bits: u32) -> Result<Self> {
        if int_bits < 1 || int_bits + frac_bits > 64 {
            return Err(Error::InvalidFormat {
                int_bits,
                frac_bits,
            });
        }
        Ok(QFormat {
            int_bits,
            frac_bits,
        })
    }

    pub fn int_bits(self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    pub fn total_bits(self) -> u32 {
        self.int_bits + self.frac_bits
    }

    pub fn max_raw(self) -> i64 {
        ((1i128 << (self.total_bits() - 1)) - 1) as i64
    }

    pub fn min_raw(self) -> i64 {
        (-(1i128 << (self.total_bits() - 1))) as i64
    }

    /// Weight of one LSB, `2^-frac_bits`.
    pub fn step(self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn max_value(self) -> f64 {
        self.max_raw() as f64 * self.step()
    }

    pub fn min_value(self) -> f64 {
        self.min_raw() as f64 * self.step()
    }

    /// Clamp a wide mantissa into range. The flag is set when clamping occurred.
    pub(crate) fn saturate(self, v: i128) -> (i64, bool) {
        let (lo, hi) = (self.min_raw() as i128, self.max_raw() as i128);
        if v > hi {
            (hi as i64, true)
        } else if v < lo {
            (lo as i64, true)
        } else {
            (v as i64, false)
        }
    }
}

impl Default for QFormat {
    fn default() -> Self {
        QFormat::Q2_14
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits, self.frac_bits)
    }
}

/// Parses `"2.14"` or `"Q2.14"`.
impl FromStr for QFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches(['Q', 'q']);
        let (i, f) = body
            .split_once('.')
            .ok_or_else(|| Error::Parse(format!("expected <int>.<frac>, got {s:?}")))?;
        let int_bits = i
            .parse()
            .map_err(|_| Error::Parse(format!("bad integer bit count in {s:?}")))?;
        let frac_bits = f
            .parse()
            .map_err(|_| Error::Parse(format!("bad fraction bit count in {s:?}")))?;
        QFormat::new(int_bits, frac_bits)
    }
}

/// Arithmetic shift right by `shift` bits, rounding to nearest with ties to even.
pub(crate) fn round_shift(v: i128, shift: u32) -> i128 {
    if shift == 0 {
        return v;
    }
    let q = v >> shift;
    let rem = v - (q << shift);
    let half = 1i128 << (shift - 1);
    if rem > half || (rem == half && q & 1 == 1) {
        q + 1
    } else {
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QValue {
    raw: i64,
    fmt: QFormat,
}

impl QValue {
    pub fn from_raw(raw: i64, fmt: QFormat) -> Result<Self> {
        if raw < fmt.min_raw() || raw > fmt.max_raw() {
            return Err(Error::InvalidArgument(format!(
                "mantissa {raw} does not fit {fmt}"
            )));
        }
        Ok(QValue { raw, fmt })
    }

    pub fn zero(fmt: QFormat) -> Self {
        QValue { raw: 0, fmt }
    }

    pub fn raw(self) -> i64 {
        self.raw
    }

    pub fn fmt(self) -> QFormat {
        self.fmt
    }

    pub fn to_real(self) -> f64 {
        self.raw as f64 * self.fmt.step()
    }

    /// Saturating negation.
    pub fn saturating_neg(self) -> (QValue, bool) {
        let (raw, ovf) = self.fmt.saturate(-(self.raw as i128));
        (QValue { raw, fmt: self.fmt }, ovf)
    }
}

impl fmt::Display for QValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_real())
    }
}

/// Round `x·2^frac_bits` to nearest-even and saturate. NaN maps to zero with
/// the overflow flag raised.
pub fn quantize(x: f64, fmt: QFormat) -> (QValue, bool) {
    if x.is_nan() {
        return (QValue::zero(fmt), true);
    }
    let scaled = (x * (fmt.frac_bits as f64).exp2()).round_ties_even();
    let (raw, ovf) = if scaled >= fmt.max_raw() as f64 {
        (fmt.max_raw(), scaled > fmt.max_raw() as f64)
    } else if scaled <= fmt.min_raw() as f64 {
        (fmt.min_raw(), scaled < fmt.min_raw() as f64)
    } else {
        (scaled as i64, false)
    };
    (QValue { raw, fmt }, ovf)
}

fn same_fmt(a: QFormat, b: QFormat) -> Result<QFormat> {
    if a == b {
        Ok(a)
    } else {
        Err(Error::FormatMismatch)
    }
}

/// Exact mantissa sum, saturated.
pub fn q_add(a: QValue, b: QValue) -> Result<(QValue, bool)> {
    let fmt = same_fmt(a.fmt, b.fmt)?;
    let (raw, ovf) = fmt.saturate(a.raw as i128 + b.raw as i128);
    Ok((QValue { raw, fmt }, ovf))
}

pub fn q_sub(a: QValue, b: QValue) -> Result<(QValue, bool)> {
    let fmt = same_fmt(a.fmt, b.fmt)?;
    let (raw, ovf) = fmt.saturate(a.raw as i128 - b.raw as i128);
    Ok((QValue { raw, fmt }, ovf))
}

/// Full-width product rounded once back to the operand format.
pub fn q_mul(a: QValue, b: QValue) -> Result<(QValue, bool)> {
    let fmt = same_fmt(a.fmt, b.fmt)?;
    let wide = round_shift(a.raw as i128 * b.raw as i128, fmt.frac_bits);
    let (raw, ovf) = fmt.saturate(wide);
    Ok((QValue { raw, fmt }, ovf))
}

/// Complex sample; both parts share one format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QComplex {
    re: QValue,
    im: QValue,
}

impl QComplex {
    pub fn new(re: QValue, im: QValue) -> Result<Self> {
        same_fmt(re.fmt, im.fmt)?;
        Ok(QComplex { re, im })
    }

    pub fn zero(fmt: QFormat) -> Self {
        QComplex {
            re: QValue::zero(fmt),
            im: QValue::zero(fmt),
        }
    }

    pub fn from_raw(re: i64, im: i64, fmt: QFormat) -> Result<Self> {
        Ok(QComplex {
            re: QValue::from_raw(re, fmt)?,
            im: QValue::from_raw(im, fmt)?,
        })
    }

    /// Quantize both components; the flag reports saturation of either.
    pub fn quantize(z: Complex64, fmt: QFormat) -> (QComplex, bool) {
        let (re, o1) = quantize(z.re, fmt);
        let (im, o2) = quantize(z.im, fmt);
        (QComplex { re, im }, o1 | o2)
    }

    pub fn re(self) -> QValue {
        self.re
    }

    pub fn im(self) -> QValue {
        self.im
    }

    pub fn fmt(self) -> QFormat {
        self.re.fmt
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.to_real(), self.im.to_real())
    }

    pub(crate) fn from_wide(re: i128, im: i128, fmt: QFormat) -> (QComplex, bool) {
        let (r, o1) = fmt.saturate(re);
        let (i, o2) = fmt.saturate(im);
        (
            QComplex {
                re: QValue { raw: r, fmt },
                im: QValue { raw: i, fmt },
            },
            o1 | o2,
        )
    }

    /// `(a + b) >> shift`, rounded once.
    pub fn add_shift(a: QComplex, b: QComplex, shift: u32) -> Result<(QComplex, bool)> {
        let fmt = same_fmt(a.fmt(), b.fmt())?;
        let re = a.re.raw as i128 + b.re.raw as i128;
        let im = a.im.raw as i128 + b.im.raw as i128;
        Ok(Self::from_wide(
            round_shift(re, shift),
            round_shift(im, shift),
            fmt,
        ))
    }

    /// `(a - b) >> shift`, rounded once.
    pub fn sub_shift(a: QComplex, b: QComplex, shift: u32) -> Result<(QComplex, bool)> {
        let fmt = same_fmt(a.fmt(), b.fmt())?;
        let re = a.re.raw as i128 - b.re.raw as i128;
        let im = a.im.raw as i128 - b.im.raw as i128;
        Ok(Self::from_wide(
            round_shift(re, shift),
            round_shift(im, shift),
            fmt,
        ))
    }

    /// Saturating multiplication by `-i`: `(re, im) -> (im, -re)`.
    pub fn mul_neg_i(self) -> (QComplex, bool) {
        let fmt = self.fmt();
        Self::from_wide(self.im.raw as i128, -(self.re.raw as i128), fmt)
    }
}

/// Complex product with full-precision partial products and a single rounding
/// per component, as in a DSP-slice multiply-accumulate.
pub fn cmul(a: QComplex, b: QComplex) -> Result<(QComplex, bool)> {
    cmul_shift(a, b, 0)
}

/// `cmul` followed by an extra right shift folded into the same rounding.
pub fn cmul_shift(a: QComplex, b: QComplex, extra_shift: u32) -> Result<(QComplex, bool)> {
    let fmt = same_fmt(a.fmt(), b.fmt())?;
    let (ar, ai) = (a.re.raw as i128, a.im.raw as i128);
    let (br, bi) = (b.re.raw as i128, b.im.raw as i128);
    // Operands are at most 64 bits, so each partial fits; the sum may not.
    let re = (ar * br).saturating_sub(ai * bi);
    let im = (ar * bi).saturating_add(ai * br);
    let shift = fmt.frac_bits + extra_shift;
    Ok(QComplex::from_wide(
        round_shift(re, shift),
        round_shift(im, shift),
        fmt,
    ))
}
