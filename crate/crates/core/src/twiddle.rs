//! Twiddle-factor ROM.
//!
//! Only the upper half circle `W_N^m = exp(-2πi·m/N)`, `m < N/2`, is stored;
//! the lower half follows from `W_N^(m + N/2) = -W_N^m`. Entries are built
//! from the first octant so the quarter points are exact.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::fixedpoint::{QComplex, QFormat};
use crate::{is_pow2, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TwiddleTable {
    n: usize,
    entries: Vec<Complex64>,
    quantized: Option<Vec<QComplex>>,
    saturated: bool,
}

/// `exp(-2πi·m/n)` for `m < n/2`, with octant folding.
fn unit_root(m: usize, n: usize) -> Complex64 {
    if 4 * m > n {
        // W^(m) = -i · W^(m - n/4)
        let w = unit_root(m - n / 4, n);
        return Complex64::new(w.im, -w.re);
    }
    if 8 * m > n {
        // reflect about π/4: cos(θ) = sin(π/2 - θ)
        let theta = 2.0 * PI * (n / 4 - m) as f64 / n as f64;
        return Complex64::new(theta.sin(), -theta.cos());
    }
    if m == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let theta = 2.0 * PI * m as f64 / n as f64;
    Complex64::new(theta.cos(), -theta.sin())
}

impl TwiddleTable {
    /// Builds the table for an `n`-point transform; `fmt` adds a quantized mirror.
    pub fn new(n: usize, fmt: Option<QFormat>) -> Result<Self> {
        if n < 2 || !is_pow2(n) {
            return Err(Error::NotPowerOfTwo(n));
        }
        let entries: Vec<Complex64> = (0..n / 2).map(|m| unit_root(m, n)).collect();
        let mut saturated = false;
        let quantized = fmt.map(|f| {
            entries
                .iter()
                .map(|&w| {
                    let (q, ovf) = QComplex::quantize(w, f);
                    saturated |= ovf;
                    q
                })
                .collect()
        });
        Ok(TwiddleTable {
            n,
            entries,
            quantized,
            saturated,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn quantized(&self) -> Option<&[QComplex]> {
        self.quantized.as_deref()
    }

    pub fn format(&self) -> Option<QFormat> {
        self.quantized.as_ref().and_then(|q| q.first()).map(|q| q.fmt())
    }

    /// Whether any quantized entry clamped (e.g. 1.0 in a Q1.x format).
    pub fn saturated(&self) -> bool {
        self.saturated
    }

    /// Stored entry `W_N^m`, `m < n/2`.
    pub fn twiddle(&self, m: usize) -> Result<Complex64> {
        self.entries.get(m).copied().ok_or(Error::IndexOutOfRange {
            index: m,
            limit: self.n / 2,
        })
    }

    /// Quantized entry `W_N^m`, `m < n/2`. Fails when the table has no quantized mirror.
    pub fn twiddle_q(&self, m: usize) -> Result<QComplex> {
        let q = self
            .quantized
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("table has no quantized mirror".into()))?;
        q.get(m).copied().ok_or(Error::IndexOutOfRange {
            index: m,
            limit: self.n / 2,
        })
    }

    /// `W_N^k` for any `k`, derived from the half table.
    pub fn twiddle_full(&self, k: usize) -> Complex64 {
        let k = k % self.n;
        let half = self.n / 2;
        if k < half {
            self.entries[k]
        } else {
            -self.entries[k - half]
        }
    }

    /// Overwrite one entry. Used to inject faults for self-test.
    pub fn corrupt(&mut self, m: usize, value: Complex64) {
        if let Some(e) = self.entries.get_mut(m) {
            *e = value;
        }
        if let Some(q) = self.quantized.as_mut() {
            let fmt = q[0].fmt();
            if let Some(e) = q.get_mut(m) {
                *e = QComplex::quantize(value, fmt).0;
            }
        }
    }
}
