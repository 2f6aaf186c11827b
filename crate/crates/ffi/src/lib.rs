//! C ABI over `fftsvd`.
//!
//! Every entry point returns an [`FftsvdStatus`]; on failure a message is kept
//! per thread and can be copied out with [`fftsvd_last_error`]. Objects with
//! state (streaming pipelines, SVD results) are opaque handles released by
//! their `_free` function. Complex data crosses the boundary as separate real
//! and imaginary `double` arrays; matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use fftsvd::cordic::{cordic_rotate, cordic_vector};
use fftsvd::fixedpoint::QFormat;
use fftsvd::oracle::dft_naive;
use fftsvd::sdf::{fft_block, FixedPath, FloatPath, Ordering, SdfPipeline};
use fftsvd::svd::{svd, SvdArithmetic, SvdConfig, SvdFactors};
use fftsvd::watermark::{embed, embed_quantized, extract, Image, WatermarkBits, WatermarkKey};
use fftsvd::{Complex64, Error, MatrixF};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FftsvdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    /// Fixed-point saturation was requested to be an error.
    Overflow = 4,
    /// The SVD stopped at its sweep limit; partial factors are still returned.
    NoConvergence = 5,
    Capacity = 6,
    Internal = 7,
}

/// Q-format descriptor; `int_bits` includes the sign bit.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FftsvdQFormat {
    pub int_bits: u32,
    pub frac_bits: u32,
}

/// Watermark key. Start from [`fftsvd_watermark_key_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FftsvdWatermarkKey {
    pub seed: u64,
    pub block_row: usize,
    pub block_col: usize,
    pub block_size: usize,
    pub alpha: f64,
}

enum Stream {
    Float(SdfPipeline<FloatPath>),
    Fixed(SdfPipeline<FixedPath>),
}

/// Streaming FFT cascade.
pub struct FftsvdPipeline {
    inner: Stream,
}

/// SVD result.
pub struct FftsvdSvd {
    factors: SvdFactors,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FftsvdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NotPowerOfTwo(_)
            | Error::Dimension(_)
            | Error::PartialFrame { .. }
            | Error::FrameMisaligned { .. }
            | Error::IndexOutOfRange { .. }
            | Error::EmptyInput => FftsvdStatus::Dimension,
            Error::NoConvergence { .. } => FftsvdStatus::NoConvergence,
            Error::Capacity { .. } => FftsvdStatus::Capacity,
            _ => FftsvdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FftsvdStatus::NullPointer, format!("{what} is null"))
}

fn set_error(msg: Option<String>) {
    let msg = msg.map(|m| CString::new(m.replace('\0', " ")).expect("no interior nul"));
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FftsvdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(None);
            FftsvdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(Some(msg));
            status
        }
        Err(_) => {
            set_error(Some("internal panic".into()));
            FftsvdStatus::Internal
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn complex_input(re: *const f64, im: *const f64, n: usize) -> Result<Vec<Complex64>, Failure> {
    let (re, im) = (input(re, n, "re")?, input(im, n, "im")?);
    Ok(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
}

unsafe fn complex_output(z: &[Complex64], re: *mut f64, im: *mut f64) -> Result<(), Failure> {
    let (re, im) = (output(re, z.len(), "out_re")?, output(im, z.len(), "out_im")?);
    for (k, v) in z.iter().enumerate() {
        re[k] = v.re;
        im[k] = v.im;
    }
    Ok(())
}

unsafe fn qformat(fmt: *const FftsvdQFormat) -> Result<Option<QFormat>, Failure> {
    match fmt.as_ref() {
        None => Ok(None),
        Some(f) => Ok(Some(QFormat::new(f.int_bits, f.frac_bits)?)),
    }
}

unsafe fn store<T>(p: *mut T, v: T) {
    if let Some(slot) = p.as_mut() {
        *slot = v;
    }
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `cap` bytes, and returns the full message length (0 if the
/// last call succeeded). Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |m| m.as_bytes());
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Batch FFT of `n` samples in natural order. With a non-null `fmt` the
/// fixed-point datapath is used and `*out_scale` receives the factor by which
/// the output is scaled (1 in float mode). With `strict`, saturation returns
/// [`FftsvdStatus::Overflow`]; the output is written either way.
///
/// # Safety
/// Arrays must hold `n` elements; `out_scale` and `out_overflow` may be null.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_fft(
    re: *const f64,
    im: *const f64,
    n: usize,
    fmt: *const FftsvdQFormat,
    strict: bool,
    out_re: *mut f64,
    out_im: *mut f64,
    out_scale: *mut f64,
    out_overflow: *mut bool,
) -> FftsvdStatus {
    guard(|| {
        let x = complex_input(re, im, n)?;
        let b = fft_block(&x, qformat(fmt)?)?;
        complex_output(&b.spectrum, out_re, out_im)?;
        store(out_scale, b.scale);
        store(out_overflow, b.overflow);
        if strict && b.overflow {
            return Err(Failure(FftsvdStatus::Overflow, "fixed-point overflow".into()));
        }
        Ok(())
    })
}

/// Direct `O(n²)` DFT, any `n ≥ 1`.
///
/// # Safety
/// Arrays must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_dft_naive(
    re: *const f64,
    im: *const f64,
    n: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> FftsvdStatus {
    guard(|| {
        let y = dft_naive(&complex_input(re, im, n)?)?;
        complex_output(&y, out_re, out_im)
    })
}

/// Creates an `n`-point streaming cascade with one pipeline register per
/// stage. A null `fmt` selects double precision.
///
/// # Safety
/// `out` must be a valid pointer; the handle is released with
/// [`fftsvd_pipeline_free`].
#[no_mangle]
pub unsafe extern "C" fn fftsvd_pipeline_new(
    n: usize,
    fmt: *const FftsvdQFormat,
    natural_order: bool,
    out: *mut *mut FftsvdPipeline,
) -> FftsvdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let ordering = if natural_order { Ordering::Natural } else { Ordering::BitReversed };
        let inner = match qformat(fmt)? {
            None => Stream::Float(SdfPipeline::new(n, FloatPath, 1)?.with_ordering(ordering)),
            Some(f) => Stream::Fixed(SdfPipeline::new(n, FixedPath::new(f), 1)?.with_ordering(ordering)),
        };
        *out = Box::into_raw(Box::new(FftsvdPipeline { inner }));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from [`fftsvd_pipeline_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_pipeline_free(p: *mut FftsvdPipeline) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Streams `len` samples (a whole number of frames) through the cascade and
/// flushes it, writing `len` output samples and, if `out_cycles` is non-null,
/// the cycle at which each appeared.
///
/// # Safety
/// `p` must be a live handle; arrays must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_pipeline_run(
    p: *mut FftsvdPipeline,
    re: *const f64,
    im: *const f64,
    len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    out_cycles: *mut u64,
    out_overflow: *mut bool,
) -> FftsvdStatus {
    guard(|| {
        let p = p.as_mut().ok_or_else(|| null("pipeline"))?;
        let x = complex_input(re, im, len)?;
        let (y, cycles, overflow) = match &mut p.inner {
            Stream::Float(s) => {
                let o = s.fft_stream(&x)?;
                (o.samples, o.output_cycles, o.overflow)
            }
            Stream::Fixed(s) => {
                let o = s.fft_stream(&x)?;
                let path = *s.path();
                let y = o.samples.iter().map(|&q| fftsvd::sdf::Datapath::store(&path, q)).collect();
                (y, o.output_cycles, o.overflow)
            }
        };
        complex_output(&y, out_re, out_im)?;
        if !out_cycles.is_null() {
            output(out_cycles, len, "out_cycles")?.copy_from_slice(&cycles);
        }
        store(out_overflow, overflow);
        Ok(())
    })
}

/// Cycles from the first input sample to the first output sample.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_pipeline_latency(p: *const FftsvdPipeline, out: *mut u64) -> FftsvdStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("pipeline"))?;
        store(
            out,
            match &p.inner {
                Stream::Float(s) => s.latency(),
                Stream::Fixed(s) => s.latency(),
            },
        );
        Ok(())
    })
}

/// Clears buffers, the cycle counter and the overflow flag.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_pipeline_reset(p: *mut FftsvdPipeline) -> FftsvdStatus {
    guard(|| {
        match &mut p.as_mut().ok_or_else(|| null("pipeline"))?.inner {
            Stream::Float(s) => s.reset(),
            Stream::Fixed(s) => s.reset(),
        }
        Ok(())
    })
}

/// Factors the row-major `rows x cols` matrix `a`. `tol <= 0` and
/// `max_sweeps == 0` select the defaults; a null `fmt` selects double
/// precision. On [`FftsvdStatus::NoConvergence`] `*out` still receives the
/// partial factors.
///
/// # Safety
/// `a` must hold `rows·cols` elements; `out` must be valid. Release the handle
/// with [`fftsvd_svd_free`].
#[no_mangle]
pub unsafe extern "C" fn fftsvd_svd(
    a: *const f64,
    rows: usize,
    cols: usize,
    tol: f64,
    max_sweeps: usize,
    fmt: *const FftsvdQFormat,
    out: *mut *mut FftsvdSvd,
) -> FftsvdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(FftsvdStatus::Dimension, "matrix too large".into()))?;
        let m = MatrixF::from_vec(rows, cols, input(a, len, "a")?.to_vec())?;
        let mut cfg = SvdConfig::default();
        if tol > 0.0 {
            cfg.tol = tol;
        }
        if max_sweeps > 0 {
            cfg.max_sweeps = max_sweeps;
        }
        if let Some(f) = qformat(fmt)? {
            cfg.arithmetic = SvdArithmetic::Fixed(f);
        }
        match svd(&m, &cfg) {
            Ok(factors) => {
                *out = Box::into_raw(Box::new(FftsvdSvd { factors }));
                Ok(())
            }
            Err(Error::NoConvergence {
                residual,
                sweeps,
                partial,
            }) => {
                *out = Box::into_raw(Box::new(FftsvdSvd { factors: *partial }));
                Err(Failure(
                    FftsvdStatus::NoConvergence,
                    format!("SVD did not converge: residual {residual:e} after {sweeps} sweeps"),
                ))
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// # Safety
/// `s` must be null or a handle from [`fftsvd_svd`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_svd_free(s: *mut FftsvdSvd) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Shape of the factorization: `U` is `m x m`, `V` is `n x n` and there are
/// `min(m, n)` singular values.
///
/// # Safety
/// `s` must be a live handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_svd_shape(
    s: *const FftsvdSvd,
    m: *mut usize,
    n: *mut usize,
    sweeps: *mut usize,
    residual: *mut f64,
) -> FftsvdStatus {
    guard(|| {
        let f = &s.as_ref().ok_or_else(|| null("svd"))?.factors;
        store(m, f.u.rows());
        store(n, f.v.rows());
        store(sweeps, f.sweeps_used);
        store(residual, f.residual);
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize) -> Result<(), Failure> {
    if len != src.len() {
        return Err(Failure(
            FftsvdStatus::Dimension,
            format!("buffer of {len} for {} values", src.len()),
        ));
    }
    output(dst, len, "out")?.copy_from_slice(src);
    Ok(())
}

/// Copies the singular values, descending; `len` must be `min(m, n)`.
///
/// # Safety
/// `s` must be a live handle and `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_svd_sigma(s: *const FftsvdSvd, out: *mut f64, len: usize) -> FftsvdStatus {
    guard(|| copy_out(&s.as_ref().ok_or_else(|| null("svd"))?.factors.sigma, out, len))
}

/// Copies `U` row-major; `len` must be `m·m`.
///
/// # Safety
/// `s` must be a live handle and `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_svd_u(s: *const FftsvdSvd, out: *mut f64, len: usize) -> FftsvdStatus {
    guard(|| copy_out(s.as_ref().ok_or_else(|| null("svd"))?.factors.u.data(), out, len))
}

/// Copies `V` row-major; `len` must be `n·n`.
///
/// # Safety
/// `s` must be a live handle and `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_svd_v(s: *const FftsvdSvd, out: *mut f64, len: usize) -> FftsvdStatus {
    guard(|| copy_out(s.as_ref().ok_or_else(|| null("svd"))?.factors.v.data(), out, len))
}

/// Gain-compensated CORDIC rotation of `(x, y)` by `angle` radians.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_cordic_rotate(
    x: f64,
    y: f64,
    angle: f64,
    iters: usize,
    out_x: *mut f64,
    out_y: *mut f64,
) -> FftsvdStatus {
    guard(|| {
        if out_x.is_null() || out_y.is_null() {
            return Err(null("output"));
        }
        let (rx, ry) = cordic_rotate(x, y, angle, iters)?;
        store(out_x, rx);
        store(out_y, ry);
        Ok(())
    })
}

/// CORDIC vectoring: magnitude and angle of `(x, y)`.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_cordic_vector(
    x: f64,
    y: f64,
    iters: usize,
    out_magnitude: *mut f64,
    out_angle: *mut f64,
) -> FftsvdStatus {
    guard(|| {
        if out_magnitude.is_null() || out_angle.is_null() {
            return Err(null("output"));
        }
        let (r, t) = cordic_vector(x, y, iters)?;
        store(out_magnitude, r);
        store(out_angle, t);
        Ok(())
    })
}

/// Fills `key` with the default key for `seed`.
///
/// # Safety
/// `key` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_watermark_key_default(seed: u64, key: *mut FftsvdWatermarkKey) -> FftsvdStatus {
    guard(|| {
        let k = WatermarkKey::with_seed(seed);
        *key.as_mut().ok_or_else(|| null("key"))? = FftsvdWatermarkKey {
            seed: k.seed,
            block_row: k.block_origin.0,
            block_col: k.block_origin.1,
            block_size: k.block_size,
            alpha: k.alpha,
        };
        Ok(())
    })
}

unsafe fn key_from(key: *const FftsvdWatermarkKey) -> Result<WatermarkKey, Failure> {
    let k = key.as_ref().ok_or_else(|| null("key"))?;
    Ok(WatermarkKey {
        seed: k.seed,
        block_origin: (k.block_row, k.block_col),
        block_size: k.block_size,
        alpha: k.alpha,
    })
}

unsafe fn image(pixels: *const f64, width: usize, height: usize, what: &str) -> Result<Image, Failure> {
    let len = width
        .checked_mul(height)
        .ok_or_else(|| Failure(FftsvdStatus::Dimension, "image too large".into()))?;
    Ok(Image::new(width, height, input(pixels, len, what)?.to_vec())?)
}

type Embedder = fn(&Image, &WatermarkBits, &WatermarkKey) -> fftsvd::Result<Image>;

#[allow(clippy::too_many_arguments)]
unsafe fn embed_with(
    f: Embedder,
    host: *const f64,
    width: usize,
    height: usize,
    bits: *const u8,
    nbits: usize,
    key: *const FftsvdWatermarkKey,
    out: *mut f64,
) -> FftsvdStatus {
    guard(|| {
        let host = image(host, width, height, "host")?;
        let raw = input(bits, nbits, "bits")?;
        if let Some(b) = raw.iter().find(|&&b| b > 1) {
            return Err(Failure(FftsvdStatus::InvalidArgument, format!("bit value {b}")));
        }
        let wm = WatermarkBits::new(raw.iter().map(|&b| b == 1).collect())?;
        let marked = f(&host, &wm, &key_from(key)?)?;
        output(out, width * height, "out")?.copy_from_slice(marked.pixels());
        Ok(())
    })
}

/// Embeds `nbits` bits (each byte 0 or 1) into a row-major grayscale image
/// with pixels in `[0, 1]`, writing `width·height` pixels to `out`.
///
/// # Safety
/// Buffers must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_watermark_embed(
    host: *const f64,
    width: usize,
    height: usize,
    bits: *const u8,
    nbits: usize,
    key: *const FftsvdWatermarkKey,
    out: *mut f64,
) -> FftsvdStatus {
    embed_with(embed, host, width, height, bits, nbits, key, out)
}

/// Like `fftsvd_watermark_embed`, but every output pixel is a multiple of
/// 1/255 chosen so the payload survives storage as 8-bit grey levels.
///
/// # Safety
/// Buffers must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_watermark_embed_8bit(
    host: *const f64,
    width: usize,
    height: usize,
    bits: *const u8,
    nbits: usize,
    key: *const FftsvdWatermarkKey,
    out: *mut f64,
) -> FftsvdStatus {
    embed_with(embed_quantized, host, width, height, bits, nbits, key, out)
}

/// Recovers `nbits` bits from `marked` given the unmarked `original`. Each
/// output byte is 0, 1, or 2 for an undecidable bit.
///
/// # Safety
/// Images must hold `width·height` pixels and `out_bits` `nbits` bytes.
#[no_mangle]
pub unsafe extern "C" fn fftsvd_watermark_extract(
    marked: *const f64,
    original: *const f64,
    width: usize,
    height: usize,
    key: *const FftsvdWatermarkKey,
    nbits: usize,
    out_bits: *mut u8,
) -> FftsvdStatus {
    guard(|| {
        let marked = image(marked, width, height, "marked")?;
        let original = image(original, width, height, "original")?;
        let got = extract(&marked, &original, &key_from(key)?, nbits)?;
        let out = output(out_bits, nbits, "out_bits")?;
        for (o, b) in out.iter_mut().zip(got.bits()) {
            *o = match b {
                Some(false) => 0,
                Some(true) => 1,
                None => 2,
            };
        }
        Ok(())
    })
}
