//! Radix-2 single-path delay-feedback (SDF) FFT.
//!
//! The cascade has `log2(n)` stages. Stage `s` owns a delay buffer of depth
//! `n / 2^(s+1)` and consumes one sample per cycle. For the first half of each
//! `2·depth` period the stage fills its buffer and drains the lower butterfly
//! outputs of the previous period; in the second half it pairs the buffered
//! sample with the incoming one, emits `a + b` and feeds `(a - b)·w` back into
//! the buffer. The final stage (depth 1) only ever sees `w = 1`.
//!
//! The stream is decimation-in-frequency: natural order in, bit-reversed order
//! out. [`fft_block`] runs the same butterflies as an in-place array network
//! and is used as the batch reference the stream must match bit for bit.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fixedpoint::{round_shift, QComplex, QFormat};
use crate::twiddle::TwiddleTable;
use crate::{is_pow2, Error, Result};

/// Overflow control for the fixed-point datapath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scaling {
    /// No scaling; the caller guarantees headroom.
    None,
    /// Multiply the input by `1/n` before the first stage.
    InputPrescale,
    /// Halve both butterfly outputs in every stage (total `1/n`). Cannot
    /// overflow for `|x| ≤ 1`.
    PerStage,
    /// Halve in every stage except the middle one (total `2/n`). One more
    /// bit of output signal than [`Scaling::PerStage`]; saturation needs
    /// about `sqrt(n)` full-scale samples in phase, and sets the overflow
    /// flag when it happens.
    Headroom,
}

/// The stage left unscaled by [`Scaling::Headroom`] in an `n`-point cascade.
pub fn headroom_stage(n: usize) -> usize {
    n.trailing_zeros() as usize / 2
}

/// Output order of the streaming transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ordering {
    BitReversed,
    Natural,
}

/// Twiddle selected for one butterfly. `One` and `NegI` need no multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwiddleSel {
    One,
    NegI,
    Rom(usize),
}

impl TwiddleSel {
    fn for_index(m: usize, n: usize) -> Self {
        if m == 0 {
            TwiddleSel::One
        } else if n >= 4 && m == n / 4 {
            TwiddleSel::NegI
        } else {
            TwiddleSel::Rom(m)
        }
    }
}

/// Arithmetic used by the butterflies.
pub trait Datapath: Clone + Debug {
    type Sample: Copy + PartialEq + Debug;

    /// Converts an input sample, applying any input scaling for an `n`-point frame.
    fn load(&self, z: Complex64, n: usize, overflow: &mut bool) -> Self::Sample;

    fn store(&self, s: Self::Sample) -> Complex64;

    /// Decimation-in-frequency butterfly of stage `stage`: `(a + b, (a - b)·w)`,
    /// with any per-stage scaling folded into the rounding.
    fn dif(
        &self,
        stage: usize,
        a: Self::Sample,
        b: Self::Sample,
        w: TwiddleSel,
        table: &TwiddleTable,
        overflow: &mut bool,
    ) -> (Self::Sample, Self::Sample);

    /// Factor by which the datapath output is scaled relative to the DFT.
    fn output_scale(&self, n: usize) -> f64;

    /// Twiddle table format this datapath expects.
    fn table_format(&self) -> Option<QFormat>;
}

/// Double-precision datapath.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FloatPath;

impl Datapath for FloatPath {
    type Sample = Complex64;

    fn load(&self, z: Complex64, _n: usize, _overflow: &mut bool) -> Complex64 {
        z
    }

    fn store(&self, s: Complex64) -> Complex64 {
        s
    }

    fn dif(
        &self,
        _stage: usize,
        a: Complex64,
        b: Complex64,
        w: TwiddleSel,
        table: &TwiddleTable,
        _overflow: &mut bool,
    ) -> (Complex64, Complex64) {
        let d = a - b;
        let lower = match w {
            TwiddleSel::One => d,
            TwiddleSel::NegI => Complex64::new(d.im, -d.re),
            TwiddleSel::Rom(m) => d * table.entries()[m],
        };
        (a + b, lower)
    }

    fn output_scale(&self, _n: usize) -> f64 {
        1.0
    }

    fn table_format(&self) -> Option<QFormat> {
        None
    }
}

/// Fixed-point datapath: one word format for data and twiddles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPath {
    pub fmt: QFormat,
    pub scaling: Scaling,
}

impl FixedPath {
    pub fn new(fmt: QFormat) -> Self {
        FixedPath {
            fmt,
            scaling: Scaling::Headroom,
        }
    }

    pub fn with_scaling(fmt: QFormat, scaling: Scaling) -> Self {
        FixedPath { fmt, scaling }
    }

    fn stage_shift(&self, stage: usize, n: usize) -> u32 {
        match self.scaling {
            Scaling::PerStage => 1,
            Scaling::Headroom if stage != headroom_stage(n) => 1,
            _ => 0,
        }
    }
}

impl Datapath for FixedPath {
    type Sample = QComplex;

    fn load(&self, z: Complex64, n: usize, overflow: &mut bool) -> QComplex {
        let z = match self.scaling {
            Scaling::InputPrescale => z / n as f64,
            _ => z,
        };
        let (q, ovf) = QComplex::quantize(z, self.fmt);
        *overflow |= ovf;
        q
    }

    fn store(&self, s: QComplex) -> Complex64 {
        s.to_complex()
    }

    fn dif(
        &self,
        stage: usize,
        a: QComplex,
        b: QComplex,
        w: TwiddleSel,
        table: &TwiddleTable,
        overflow: &mut bool,
    ) -> (QComplex, QComplex) {
        let shift = self.stage_shift(stage, table.n());
        let (ar, ai) = (a.re().raw() as i128, a.im().raw() as i128);
        let (br, bi) = (b.re().raw() as i128, b.im().raw() as i128);
        let (upper, o1) = QComplex::from_wide(
            round_shift(ar + br, shift),
            round_shift(ai + bi, shift),
            self.fmt,
        );
        // The difference stays full width until the single final rounding.
        let (dr, di) = (ar - br, ai - bi);
        let (lr, li) = match w {
            TwiddleSel::One => (round_shift(dr, shift), round_shift(di, shift)),
            TwiddleSel::NegI => (round_shift(di, shift), round_shift(-dr, shift)),
            TwiddleSel::Rom(m) => {
                let q = table.quantized().expect("fixed datapath needs a quantized table")[m];
                let (wr, wi) = (q.re().raw() as i128, q.im().raw() as i128);
                let s = self.fmt.frac_bits() + shift;
                (
                    round_shift(dr * wr - di * wi, s),
                    round_shift(dr * wi + di * wr, s),
                )
            }
        };
        let (lower, o2) = QComplex::from_wide(lr, li, self.fmt);
        *overflow |= o1 | o2;
        (upper, lower)
    }

    fn output_scale(&self, n: usize) -> f64 {
        match self.scaling {
            Scaling::None => 1.0,
            Scaling::InputPrescale | Scaling::PerStage => 1.0 / n as f64,
            Scaling::Headroom => 2.0 / n as f64,
        }
    }

    fn table_format(&self) -> Option<QFormat> {
        Some(self.fmt)
    }
}

/// Decimation-in-time butterfly: `(a + w·b, a - w·b)`.
pub fn butterfly(a: Complex64, b: Complex64, w: Complex64) -> (Complex64, Complex64) {
    let t = w * b;
    (a + t, a - t)
}

/// Decimation-in-frequency butterfly: `(a + b, (a - b)·w)`.
pub fn dif_butterfly(a: Complex64, b: Complex64, w: Complex64) -> (Complex64, Complex64) {
    (a + b, (a - b) * w)
}

/// Fixed-point [`butterfly`]: `w·b` is kept at full precision and each output
/// is rounded once.
pub fn butterfly_q(a: QComplex, b: QComplex, w: QComplex) -> Result<((QComplex, QComplex), bool)> {
    let fmt = a.fmt();
    if b.fmt() != fmt || w.fmt() != fmt {
        return Err(Error::FormatMismatch);
    }
    let f = fmt.frac_bits();
    let (ar, ai) = ((a.re().raw() as i128) << f, (a.im().raw() as i128) << f);
    let (br, bi) = (b.re().raw() as i128, b.im().raw() as i128);
    let (wr, wi) = (w.re().raw() as i128, w.im().raw() as i128);
    let (tr, ti) = (wr * br - wi * bi, wr * bi + wi * br);
    let (u, o1) = QComplex::from_wide(round_shift(ar + tr, f), round_shift(ai + ti, f), fmt);
    let (l, o2) = QComplex::from_wide(round_shift(ar - tr, f), round_shift(ai - ti, f), fmt);
    Ok(((u, l), o1 | o2))
}

/// Fixed-point [`dif_butterfly`] without scaling.
pub fn dif_butterfly_q(
    a: QComplex,
    b: QComplex,
    w: QComplex,
) -> Result<((QComplex, QComplex), bool)> {
    let fmt = a.fmt();
    if b.fmt() != fmt || w.fmt() != fmt {
        return Err(Error::FormatMismatch);
    }
    let (u, o1) = QComplex::add_shift(a, b, 0)?;
    let (dr, di) = (
        a.re().raw() as i128 - b.re().raw() as i128,
        a.im().raw() as i128 - b.im().raw() as i128,
    );
    let (wr, wi) = (w.re().raw() as i128, w.im().raw() as i128);
    let f = fmt.frac_bits();
    let (l, o2) = QComplex::from_wide(
        round_shift(dr * wr - di * wi, f),
        round_shift(dr * wi + di * wr, f),
        fmt,
    );
    Ok(((u, l), o1 | o2))
}

fn log2(n: usize) -> u32 {
    n.trailing_zeros()
}

/// Reverse the low `bits` bits of `k`.
pub fn bit_reverse(k: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        k.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Moves element `k` to index `bit_reverse(k, log2 n)`.
pub fn bit_reverse_permute<T: Clone>(v: &[T]) -> Result<Vec<T>> {
    let n = v.len();
    if !is_pow2(n) {
        return Err(Error::NotPowerOfTwo(n));
    }
    let bits = log2(n);
    let mut out = v.to_vec();
    for (k, x) in v.iter().enumerate() {
        out[bit_reverse(k, bits)] = x.clone();
    }
    Ok(out)
}

/// Cycle of the first valid output for an `n`-point cascade with
/// `regs_per_stage` pipeline registers after every stage.
pub fn latency(n: usize, regs_per_stage: usize) -> u64 {
    (n as u64 - 1) + regs_per_stage as u64 * log2(n) as u64
}

/// Fixed-depth FIFO between a butterfly's output and its next input.
#[derive(Debug, Clone)]
pub struct DelayBuffer<T> {
    depth: usize,
    slots: VecDeque<T>,
}

impl<T> DelayBuffer<T> {
    pub fn new(depth: usize) -> Self {
        DelayBuffer {
            depth,
            slots: VecDeque::with_capacity(depth),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn occupancy(&self) -> usize {
        self.slots.len()
    }

    pub fn is_full(&self) -> bool {
        self.slots.len() == self.depth
    }

    pub fn push(&mut self, x: T) -> Result<()> {
        if self.is_full() {
            return Err(Error::InvalidArgument("delay buffer overrun".into()));
        }
        self.slots.push_back(x);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<T> {
        self.slots.pop_front()
    }

    pub fn clear(&mut self) {
        self.slots.clear();
    }
}

/// One butterfly stage of the cascade.
#[derive(Debug, Clone)]
pub struct SdfStage<D: Datapath> {
    index: usize,
    n: usize,
    path: D,
    table: Arc<TwiddleTable>,
    buffer: DelayBuffer<Option<D::Sample>>,
    regs: VecDeque<Option<D::Sample>>,
    regs_per_stage: usize,
    phase: usize,
    started: bool,
    period_valid: bool,
    overflow: bool,
}

impl<D: Datapath> SdfStage<D> {
    pub fn new(index: usize, path: D, table: Arc<TwiddleTable>, regs_per_stage: usize) -> Result<Self> {
        let n = table.n();
        if index >= log2(n) as usize {
            return Err(Error::IndexOutOfRange {
                index,
                limit: log2(n) as usize,
            });
        }
        if path.table_format().is_some() && table.format() != path.table_format() {
            return Err(Error::FormatMismatch);
        }
        let depth = n >> (index + 1);
        Ok(SdfStage {
            index,
            n,
            path,
            table,
            buffer: DelayBuffer::new(depth),
            regs: std::iter::repeat_n(None, regs_per_stage).collect(),
            regs_per_stage,
            phase: 0,
            started: false,
            period_valid: false,
            overflow: false,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn depth(&self) -> usize {
        self.buffer.depth()
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    pub fn buffer(&self) -> &DelayBuffer<Option<D::Sample>> {
        &self.buffer
    }

    /// The last stage: depth 1 and only the trivial twiddle.
    pub fn is_final(&self) -> bool {
        self.depth() == 1
    }

    pub fn overflow(&self) -> bool {
        self.overflow
    }

    pub fn reset(&mut self) {
        self.buffer.clear();
        self.regs = std::iter::repeat_n(None, self.regs_per_stage).collect();
        self.phase = 0;
        self.started = false;
        self.period_valid = false;
        self.overflow = false;
    }

    fn twiddle_for(&self, k: usize) -> TwiddleSel {
        if self.is_final() {
            return TwiddleSel::One;
        }
        TwiddleSel::for_index(k << self.index, self.n)
    }

    fn register(&mut self, x: Option<D::Sample>) -> Option<D::Sample> {
        if self.regs_per_stage == 0 {
            return x;
        }
        self.regs.push_back(x);
        self.regs.pop_front().flatten()
    }

    /// Advances one clock. `None` is a bubble. Validity may only change at the
    /// start of a `2·depth` period.
    pub fn step(&mut self, input: Option<D::Sample>) -> Result<Option<D::Sample>> {
        if !self.started {
            if input.is_none() {
                return Ok(self.register(None));
            }
            self.started = true;
            self.phase = 0;
        }
        if self.phase == 0 {
            self.period_valid = input.is_some();
        } else if input.is_some() != self.period_valid {
            return Err(Error::FrameMisaligned { phase: self.phase });
        }
        let depth = self.depth();
        let out = if self.phase < depth {
            let head = if self.buffer.is_full() {
                self.buffer.pop().flatten()
            } else {
                None
            };
            self.buffer.push(input)?;
            head
        } else {
            let a = self.buffer.pop().flatten();
            match (a, input) {
                (Some(a), Some(b)) => {
                    let w = self.twiddle_for(self.phase - depth);
                    let (upper, lower) = self.path.dif(self.index, a, b, w, &self.table, &mut self.overflow);
                    self.buffer.push(Some(lower))?;
                    Some(upper)
                }
                _ => {
                    self.buffer.push(None)?;
                    None
                }
            }
        };
        self.phase = (self.phase + 1) % (2 * depth);
        Ok(self.register(out))
    }
}

/// Output of one [`SdfPipeline::fft_stream`] call.
#[derive(Debug, Clone)]
pub struct StreamOutput<S> {
    /// `frames·n` samples, each frame in the pipeline's output order.
    pub samples: Vec<S>,
    /// Cycle offsets, relative to the first input sample of the call, at
    /// which each output sample appeared.
    pub output_cycles: Vec<u64>,
    pub overflow: bool,
}

/// The full cascade.
#[derive(Debug, Clone)]
pub struct SdfPipeline<D: Datapath> {
    n: usize,
    path: D,
    stages: Vec<SdfStage<D>>,
    cycle: u64,
    origin: Option<u64>,
    ordering: Ordering,
    regs_per_stage: usize,
    overflow: bool,
}

impl<D: Datapath> SdfPipeline<D> {
    /// Builds an `n`-point cascade; `regs_per_stage` pipeline registers follow
    /// each stage.
    pub fn new(n: usize, path: D, regs_per_stage: usize) -> Result<Self> {
        let table = Arc::new(TwiddleTable::new(n, path.table_format())?);
        Self::with_table(table, path, regs_per_stage)
    }

    /// Shares an existing twiddle ROM.
    pub fn with_table(table: Arc<TwiddleTable>, path: D, regs_per_stage: usize) -> Result<Self> {
        let n = table.n();
        let stages = (0..log2(n) as usize)
            .map(|s| SdfStage::new(s, path.clone(), Arc::clone(&table), regs_per_stage))
            .collect::<Result<Vec<_>>>()?;
        Ok(SdfPipeline {
            n,
            path,
            stages,
            cycle: 0,
            origin: None,
            ordering: Ordering::BitReversed,
            regs_per_stage,
            overflow: false,
        })
    }

    pub fn with_ordering(mut self, ordering: Ordering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn path(&self) -> &D {
        &self.path
    }

    pub fn stages(&self) -> &[SdfStage<D>] {
        &self.stages
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn set_ordering(&mut self, ordering: Ordering) {
        self.ordering = ordering;
    }

    /// Sticky: set once any butterfly or input conversion saturated.
    pub fn overflow(&self) -> bool {
        self.overflow || self.stages.iter().any(|s| s.overflow())
    }

    pub fn latency(&self) -> u64 {
        latency(self.n, self.regs_per_stage)
    }

    pub fn reset(&mut self) {
        self.stages.iter_mut().for_each(SdfStage::reset);
        self.cycle = 0;
        self.origin = None;
        self.overflow = false;
    }

    /// Advances the whole cascade one clock.
    pub fn clock(&mut self, input: Option<Complex64>) -> Result<Option<D::Sample>> {
        let mut x = input.map(|z| self.path.load(z, self.n, &mut self.overflow));
        for stage in &mut self.stages {
            x = stage.step(x)?;
        }
        if input.is_some() && self.origin.is_none() {
            self.origin = Some(self.cycle);
        }
        self.cycle += 1;
        Ok(x)
    }

    /// Streams whole frames through the cascade and drains it. Afterwards the
    /// pipeline idles until the next frame boundary so it can be reused.
    pub fn fft_stream(&mut self, samples: &[Complex64]) -> Result<StreamOutput<D::Sample>> {
        let n = self.n;
        if !samples.len().is_multiple_of(n) {
            return Err(Error::PartialFrame {
                len: samples.len(),
                n,
            });
        }
        let start = self.cycle;
        let expected = samples.len();
        let mut out = Vec::with_capacity(expected);
        let mut cycles = Vec::with_capacity(expected);
        for &z in samples {
            let c = self.cycle;
            if let Some(y) = self.clock(Some(z))? {
                out.push(y);
                cycles.push(c - start);
            }
        }
        while out.len() < expected {
            let c = self.cycle;
            if let Some(y) = self.clock(None)? {
                out.push(y);
                cycles.push(c - start);
            }
        }
        if let Some(origin) = self.origin {
            while !(self.cycle - origin).is_multiple_of(n as u64) {
                self.clock(None)?;
            }
        }
        if self.ordering == Ordering::Natural {
            out = out
                .chunks(n)
                .map(bit_reverse_permute)
                .collect::<Result<Vec<_>>>()?
                .concat();
        }
        Ok(StreamOutput {
            samples: out,
            output_cycles: cycles,
            overflow: self.overflow(),
        })
    }
}

/// In-place DIF network over one frame; output in bit-reversed order.
pub fn dif_network<D: Datapath>(
    path: &D,
    table: &TwiddleTable,
    data: &mut [D::Sample],
    overflow: &mut bool,
) {
    let n = data.len();
    let mut half = n / 2;
    let mut stride = 1;
    let mut stage = 0;
    while half >= 1 {
        for block in (0..n).step_by(2 * half) {
            for k in 0..half {
                let w = if half == 1 {
                    TwiddleSel::One
                } else {
                    TwiddleSel::for_index(k * stride, n)
                };
                let (u, l) = path.dif(stage, data[block + k], data[block + k + half], w, table, overflow);
                data[block + k] = u;
                data[block + k + half] = l;
            }
        }
        half /= 2;
        stride *= 2;
        stage += 1;
    }
}

/// Batch transform result.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFft {
    /// Natural-order spectrum, multiplied by `scale`.
    pub spectrum: Vec<Complex64>,
    /// `1` in float mode, otherwise [`Datapath::output_scale`] of the fixed path.
    pub scale: f64,
    pub overflow: bool,
}

impl BlockFft {
    /// Spectrum with the datapath scaling undone.
    pub fn unscaled(&self) -> Vec<Complex64> {
        self.spectrum.iter().map(|z| z / self.scale).collect()
    }
}

/// Raw samples of a batch transform in bit-reversed order, for bit-exact
/// comparison with the stream.
pub fn fft_block_raw<D: Datapath>(
    path: &D,
    table: &TwiddleTable,
    x: &[Complex64],
) -> Result<(Vec<D::Sample>, bool)> {
    let n = x.len();
    if n != table.n() {
        return Err(Error::Dimension(format!(
            "frame of {n} samples for a {}-point table",
            table.n()
        )));
    }
    let mut overflow = false;
    let mut data: Vec<D::Sample> = x.iter().map(|&z| path.load(z, n, &mut overflow)).collect();
    dif_network(path, table, &mut data, &mut overflow);
    Ok((data, overflow))
}

/// Batch transform on an explicit table.
pub fn fft_block_with<D: Datapath>(path: &D, table: &TwiddleTable, x: &[Complex64]) -> Result<BlockFft> {
    let (data, overflow) = fft_block_raw(path, table, x)?;
    let spectrum = bit_reverse_permute(&data)?
        .into_iter()
        .map(|s| path.store(s))
        .collect();
    Ok(BlockFft {
        spectrum,
        scale: path.output_scale(x.len()),
        overflow,
    })
}

/// Natural-order FFT. With `fmt` the fixed-point datapath runs with
/// [`Scaling::Headroom`], so the output carries a factor `2/n` (reported in
/// [`BlockFft::scale`]).
pub fn fft_block(x: &[Complex64], fmt: Option<QFormat>) -> Result<BlockFft> {
    let n = x.len();
    if !is_pow2(n) {
        return Err(Error::NotPowerOfTwo(n));
    }
    if n == 1 {
        let (z, overflow) = match fmt {
            Some(f) => {
                let (q, o) = QComplex::quantize(x[0], f);
                (q.to_complex(), o)
            }
            None => (x[0], false),
        };
        return Ok(BlockFft {
            spectrum: vec![z],
            scale: 1.0,
            overflow,
        });
    }
    match fmt {
        None => fft_block_with(&FloatPath, &TwiddleTable::new(n, None)?, x),
        Some(f) => fft_block_with(&FixedPath::new(f), &TwiddleTable::new(n, Some(f))?, x),
    }
}

/// Float-mode FFT on the spectrum directly; shorthand for the common case.
pub fn fft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(fft_block(x, None)?.spectrum)
}

/// Inverse via conjugation: `conj(fft(conj(X))) / n`.
pub fn ifft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = x.len() as f64;
    let conj: Vec<Complex64> = x.iter().map(|z| z.conj()).collect();
    Ok(fft(&conj)?.into_iter().map(|z| z.conj() / n).collect())
}
