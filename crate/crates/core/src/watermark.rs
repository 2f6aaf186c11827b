//! Frequency-domain watermarking through the singular values of a spectral
//! magnitude block.
//!
//! Embedding: take the 2D spectrum of the host, factor the magnitude block at
//! the key's origin, scale selected singular values by `1 ± alpha`, put the
//! original phases back, restore conjugate symmetry and invert. Extraction is
//! non-blind: the marked spectrum is measured along the original phases and
//! projected onto the original singular vectors, so the recovered values stay
//! paired with the right index even when modulation reorders them.
//!
//! Positions are drawn by a keyed permutation of `1..block_size`: SplitMix64
//! seeded with the key, then a descending Fisher-Yates shuffle using
//! `next_u64() % (i + 1)`. The first `nbits` entries carry the payload in
//! order. Index 0 (the largest singular value) is never modified.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::matrix::MatrixF;
use crate::sdf::fft;
use crate::svd::{svd, SvdConfig, SvdFactors};
use crate::{is_pow2, Error, Result};

/// Largest tolerated imaginary part after inversion.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-9;

/// Relative change below which an extracted position counts as erased.
const ERASURE_EPS: f64 = 1e-9;

/// Grayscale image, row-major, luminance in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!("pixel value {p} outside [0, 1]")));
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Each pixel rounded to the nearest multiple of 1/255.
    pub fn quantized(&self) -> Image {
        Image {
            pixels: self.pixels.iter().map(|p| (p * 255.0).round() / 255.0).collect(),
            ..*self
        }
    }

    fn check_pow2(&self) -> Result<()> {
        for d in [self.width, self.height] {
            if !is_pow2(d) {
                return Err(Error::NotPowerOfTwo(d));
            }
        }
        Ok(())
    }
}

/// Test image in the spirit of a photograph: a gradient plus band-limited
/// texture with a `1/f` spectrum (pixel std 0.15) and faint white noise.
pub fn synthetic_host(width: usize, height: usize, seed: u64) -> Image {
    const CUTOFF: i64 = 48;
    const TEXTURE_STD: f64 = 0.15;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gx = rng.gen_range(-0.15..0.15);
    let gy = rng.gen_range(-0.15..0.15);
    // 1/f spectrum over the upper half plane, summed one axis at a time
    let rows: Vec<Vec<Complex64>> = (0..=CUTOFF)
        .map(|fy| {
            let amps: Vec<(f64, Complex64)> = (-CUTOFF..=CUTOFF)
                .map(|fx| {
                    let f = ((fx * fx + fy * fy) as f64).sqrt();
                    let a = if f == 0.0 || (fy == 0 && fx < 0) { 0.0 } else { 1.0 / f };
                    let z = Complex64::from_polar(a * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU));
                    (fx as f64, z)
                })
                .collect();
            (0..width)
                .map(|c| {
                    amps.iter()
                        .map(|&(fx, z)| z * Complex64::from_polar(1.0, TAU * fx * c as f64 / width as f64))
                        .sum()
                })
                .collect()
        })
        .collect();
    let mut texture = Vec::with_capacity(width * height);
    for r in 0..height {
        let turn: Vec<Complex64> = (0..rows.len())
            .map(|fy| Complex64::from_polar(1.0, TAU * (fy * r) as f64 / height as f64))
            .collect();
        for c in 0..width {
            texture.push(rows.iter().zip(&turn).map(|(row, t)| (row[c] * t).re).sum::<f64>());
        }
    }
    let count = texture.len().max(1) as f64;
    let mean = texture.iter().sum::<f64>() / count;
    let std = (texture.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / count).sqrt();
    let gain = if std > 0.0 { TEXTURE_STD / std } else { 0.0 };
    let mut pixels = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let (x, y) = (c as f64 / width as f64, r as f64 / height as f64);
            let p = 0.5 + gx * (x - 0.5) + gy * (y - 0.5) + gain * (texture[r * width + c] - mean);
            pixels.push((p + rng.gen_range(-0.01..0.01)).clamp(0.0, 1.0));
        }
    }
    Image {
        width,
        height,
        pixels,
    }
}

/// Row-major complex 2D spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

impl Spectrum {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    fn set(&mut self, row: usize, col: usize, z: Complex64) {
        self.data[row * self.width + col] = z;
    }

    /// Index of the conjugate partner of `(row, col)`.
    fn mirror(&self, row: usize, col: usize) -> (usize, usize) {
        ((self.height - row) % self.height, (self.width - col) % self.width)
    }

    /// Replace every bin by the average of itself and its mirror's conjugate.
    pub fn enforce_conjugate_symmetry(&mut self) {
        let src = self.clone();
        for r in 0..self.height {
            for c in 0..self.width {
                let (mr, mc) = src.mirror(r, c);
                self.set(r, c, (src.get(r, c) + src.get(mr, mc).conj()) / 2.0);
            }
        }
    }

    /// Real parts as an image, clamped to `[0, 1]`, plus the largest
    /// imaginary magnitude.
    pub fn to_image(&self) -> (Image, f64) {
        let residue = self.data.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
        let pixels = self.data.iter().map(|z| z.re.clamp(0.0, 1.0)).collect();
        (
            Image {
                width: self.width,
                height: self.height,
                pixels,
            },
            residue,
        )
    }
}

fn transform_rows_cols(width: usize, height: usize, data: &mut [Complex64]) -> Result<()> {
    for row in data.chunks_mut(width) {
        let out = fft(row)?;
        row.copy_from_slice(&out);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); height];
    for c in 0..width {
        for r in 0..height {
            col[r] = data[r * width + c];
        }
        for (r, z) in fft(&col)?.into_iter().enumerate() {
            data[r * width + c] = z;
        }
    }
    Ok(())
}

/// Unnormalized 2D DFT by rows then columns.
pub fn fft2d(img: &Image) -> Result<Spectrum> {
    img.check_pow2()?;
    let mut data: Vec<Complex64> = img.pixels.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    transform_rows_cols(img.width, img.height, &mut data)?;
    Ok(Spectrum {
        width: img.width,
        height: img.height,
        data,
    })
}

/// Inverse of [`fft2d`], by conjugation.
pub fn ifft2d(s: &Spectrum) -> Result<Spectrum> {
    for d in [s.width, s.height] {
        if !is_pow2(d) {
            return Err(Error::NotPowerOfTwo(d));
        }
    }
    if s.data.len() != s.width * s.height {
        return Err(Error::Dimension("spectrum size does not match its shape".into()));
    }
    let mut data: Vec<Complex64> = s.data.iter().map(|z| z.conj()).collect();
    transform_rows_cols(s.width, s.height, &mut data)?;
    let n = (s.width * s.height) as f64;
    Ok(Spectrum {
        width: s.width,
        height: s.height,
        data: data.into_iter().map(|z| z.conj() / n).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WatermarkKey {
    pub seed: u64,
    /// `(row, col)` of the top-left bin of the block.
    pub block_origin: (usize, usize),
    pub block_size: usize,
    pub alpha: f64,
}

impl Default for WatermarkKey {
    fn default() -> Self {
        WatermarkKey {
            seed: 0,
            block_origin: (1, 1),
            block_size: 32,
            alpha: 0.05,
        }
    }
}

impl WatermarkKey {
    pub fn with_seed(seed: u64) -> Self {
        WatermarkKey {
            seed,
            ..Default::default()
        }
    }

    /// Number of singular values available for payload bits.
    pub fn capacity(&self) -> usize {
        self.block_size.saturating_sub(1)
    }

    /// The block must avoid row 0 (which holds DC) and lie strictly above
    /// the middle row, so that it never meets its own conjugate mirror.
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if !is_pow2(self.block_size) || self.block_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "block size {} is not a power of two >= 2",
                self.block_size
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} outside [0, 1)", self.alpha)));
        }
        let (r0, c0) = self.block_origin;
        if r0 == 0 || r0 + self.block_size > height / 2 || c0 + self.block_size > width {
            return Err(Error::Dimension(format!(
                "{0}x{0} block at ({r0}, {c0}) does not fit the half spectrum of a {width}x{height} image",
                self.block_size
            )));
        }
        Ok(())
    }

    /// Singular-value indices carrying bits `0..nbits`.
    pub fn positions(&self, nbits: usize) -> Result<Vec<usize>> {
        if nbits > self.capacity() {
            return Err(Error::Capacity {
                requested: nbits,
                capacity: self.capacity(),
            });
        }
        Ok(keyed_permutation(self.seed, self.block_size)[..nbits].to_vec())
    }
}

/// Permutation of `1..len`.
pub fn keyed_permutation(seed: u64, len: usize) -> Vec<usize> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut idx: Vec<usize> = (1..len).collect();
    for i in (1..idx.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        idx.swap(i, j);
    }
    idx
}

/// Payload bits. Extracted sequences may contain erasures.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WatermarkBits {
    bits: Vec<Option<bool>>,
}

impl WatermarkBits {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(WatermarkBits {
            bits: bits.into_iter().map(Some).collect(),
        })
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Result<Self> {
        Self::new((0..n).map(|_| rng.gen()).collect())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[Option<bool>] {
        &self.bits
    }

    pub fn erasures(&self) -> usize {
        self.bits.iter().filter(|b| b.is_none()).count()
    }

    pub fn complement(&self) -> Self {
        WatermarkBits {
            bits: self.bits.iter().map(|b| b.map(|v| !v)).collect(),
        }
    }

    fn signs(&self) -> impl Iterator<Item = f64> + '_ {
        self.bits.iter().map(|b| match b {
            Some(true) => 1.0,
            Some(false) => -1.0,
            None => 0.0,
        })
    }
}

/// `0`, `1`, and `x` for an erasure.
impl fmt::Display for WatermarkBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(match b {
                Some(true) => "1",
                Some(false) => "0",
                None => "x",
            })?;
        }
        Ok(())
    }
}

impl FromStr for WatermarkBits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '1' => Ok(Some(true)),
                '0' => Ok(Some(false)),
                'x' | 'X' => Ok(None),
                _ => Err(Error::Parse(format!("bad bit character {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(WatermarkBits { bits })
    }
}

/// Normalized correlation of the `±1` images of two bit strings, with
/// erasures mapped to 0.
pub fn similarity(a: &WatermarkBits, b: &WatermarkBits) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} bits against {}", a.len(), b.len())));
    }
    let dot: f64 = a.signs().zip(b.signs()).map(|(x, y)| x * y).sum();
    Ok(dot / a.len() as f64)
}

/// `10·log10(1 / MSE)` for unit peak; infinite for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::Dimension("image sizes differ".into()));
    }
    let mse = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.pixels.len() as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    })
}

/// Magnitudes and phases of the key block.
fn block_of(spec: &Spectrum, key: &WatermarkKey) -> (MatrixF, Vec<Complex64>) {
    let b = key.block_size;
    let (r0, c0) = key.block_origin;
    let mut mag = MatrixF::zeros(b, b);
    let mut phase = Vec::with_capacity(b * b);
    for i in 0..b {
        for j in 0..b {
            let z = spec.get(r0 + i, c0 + j);
            let m = z.norm();
            mag[(i, j)] = m;
            phase.push(if m > 0.0 { z / m } else { Complex64::new(1.0, 0.0) });
        }
    }
    (mag, phase)
}

fn factor(block: &MatrixF) -> Result<SvdFactors> {
    match svd(block, &SvdConfig::default()) {
        Ok(f) => Ok(f),
        // the singular vectors stay exactly orthogonal; a residual off-diagonal
        // does not affect the projection
        Err(Error::NoConvergence { partial, .. }) => Ok(*partial),
        Err(e) => Err(e),
    }
}

/// `uᵢᵀ·M·vᵢ`.
fn project(f: &SvdFactors, m: &MatrixF, i: usize) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for r in 0..n {
        let ur = f.u[(r, i)];
        if ur == 0.0 {
            continue;
        }
        for c in 0..n {
            s += ur * m[(r, c)] * f.v[(c, i)];
        }
    }
    s
}

/// Embedded image plus the largest imaginary residue seen before clamping.
pub fn embed_with_residue(host: &Image, wm: &WatermarkBits, key: &WatermarkKey) -> Result<(Image, f64)> {
    host.check_pow2()?;
    key.validate(host.width, host.height)?;
    if wm.erasures() > 0 {
        return Err(Error::InvalidArgument("payload contains erasures".into()));
    }
    let positions = key.positions(wm.len())?;

    let mut spec = fft2d(host)?;
    let (mag, phase) = block_of(&spec, key);
    let f = factor(&mag)?;

    let b = key.block_size;
    let mut marked = mag.clone();
    for (&p, s) in positions.iter().zip(wm.signs()) {
        let delta = key.alpha * s * f.sigma[p];
        for i in 0..b {
            for j in 0..b {
                marked[(i, j)] += delta * f.u[(i, p)] * f.v[(j, p)];
            }
        }
    }

    let (r0, c0) = key.block_origin;
    for i in 0..b {
        for j in 0..b {
            let z = phase[i * b + j] * marked[(i, j)];
            spec.set(r0 + i, c0 + j, z);
            let (mr, mc) = spec.mirror(r0 + i, c0 + j);
            spec.set(mr, mc, z.conj());
        }
    }
    spec.enforce_conjugate_symmetry();
    let (img, residue) = ifft2d(&spec)?.to_image();
    if residue >= IMAG_RESIDUE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "imaginary residue {residue:e} after inversion"
        )));
    }
    Ok((img, residue))
}

pub fn embed(host: &Image, wm: &WatermarkBits, key: &WatermarkKey) -> Result<Image> {
    embed_with_residue(host, wm, key).map(|(img, _)| img)
}

/// Per-position measurement used by extraction: `uᵢᵀ·M·vᵢ − σᵢ`, where `M`
/// is the block of a candidate image read along the original phases.
struct Detector {
    key: WatermarkKey,
    f: SvdFactors,
    phase: Vec<Complex64>,
    positions: Vec<usize>,
    sigma: Vec<f64>,
    top: f64,
}

impl Detector {
    fn new(original: &Image, key: &WatermarkKey, nbits: usize) -> Result<Self> {
        if nbits == 0 {
            return Err(Error::EmptyInput);
        }
        original.check_pow2()?;
        key.validate(original.width, original.height)?;
        let positions = key.positions(nbits)?;
        let (mag, phase) = block_of(&fft2d(original)?, key);
        let f = factor(&mag)?;
        let sigma = positions.iter().map(|&p| project(&f, &mag, p)).collect();
        Ok(Detector {
            key: *key,
            top: f.sigma[0],
            f,
            phase,
            positions,
            sigma,
        })
    }

    fn changes(&self, img: &Image) -> Result<Vec<f64>> {
        let spec = fft2d(img)?;
        let b = self.key.block_size;
        let (r0, c0) = self.key.block_origin;
        let mut measured = MatrixF::zeros(b, b);
        for i in 0..b {
            for j in 0..b {
                measured[(i, j)] = (spec.get(r0 + i, c0 + j) * self.phase[i * b + j].conj()).re;
            }
        }
        Ok(self
            .positions
            .iter()
            .zip(&self.sigma)
            .map(|(&p, s)| project(&self.f, &measured, p) - s)
            .collect())
    }

    fn erased(&self, k: usize, change: f64) -> bool {
        let floor = ERASURE_EPS * self.top;
        self.sigma[k] <= floor || change.abs() <= floor
    }

    /// Pixel weights `g` with `changes(img)[k] = Σ g·img − σₖ`.
    fn weights(&self, k: usize, width: usize, height: usize) -> Result<Vec<f64>> {
        let b = self.key.block_size;
        let (r0, c0) = self.key.block_origin;
        let p = self.positions[k];
        let mut s = Spectrum {
            width,
            height,
            data: vec![Complex64::new(0.0, 0.0); width * height],
        };
        for i in 0..b {
            for j in 0..b {
                let w = self.phase[i * b + j] * (self.f.u[(i, p)] * self.f.v[(j, p)]);
                let z = s.get(r0 + i, c0 + j);
                s.set(r0 + i, c0 + j, z + w);
            }
        }
        let n = (width * height) as f64;
        Ok(ifft2d(&s)?.data.iter().map(|z| z.re * n).collect())
    }
}

/// Recover `nbits` payload bits from `marked` using the unmarked original.
pub fn extract(marked: &Image, original: &Image, key: &WatermarkKey, nbits: usize) -> Result<WatermarkBits> {
    if (marked.width, marked.height) != (original.width, original.height) {
        return Err(Error::Dimension(format!(
            "{}x{} image against a {}x{} original",
            marked.width, marked.height, original.width, original.height
        )));
    }
    let det = Detector::new(original, key, nbits)?;
    let bits = det
        .changes(marked)?
        .into_iter()
        .enumerate()
        .map(|(k, c)| (!det.erased(k, c)).then_some(c > 0.0))
        .collect();
    Ok(WatermarkBits { bits })
}

const REQUANTIZE_ROUNDS: usize = 64;

/// [`embed`] followed by rounding to 8-bit grey levels.
///
/// Every pixel lands less than one level away from the float embedding. Where
/// plain rounding would flip or erase a payload bit, the rounding direction
/// of each pixel is steered along that bit's detector weights until the bit
/// reads back correctly. Gives up after a fixed number of rounds and returns
/// the best attempt.
pub fn embed_quantized(host: &Image, wm: &WatermarkBits, key: &WatermarkKey) -> Result<Image> {
    let marked = embed(host, wm, key)?;
    let plain = marked.quantized();
    if key.alpha == 0.0 {
        return Ok(plain);
    }
    let det = Detector::new(host, key, wm.len())?;
    let want: Vec<f64> = wm.signs().collect();
    let weak = |img: &Image| -> Result<Vec<usize>> {
        let c = det.changes(img)?;
        Ok((0..c.len())
            .filter(|&k| det.erased(k, c[k]) || c[k] * want[k] <= 0.0)
            .collect())
    };

    let mut cur = plain;
    let mut bad = weak(&cur)?;
    let levels: Vec<f64> = marked.pixels.iter().map(|p| p * 255.0).collect();
    let mut push = vec![0.0; levels.len()];
    let mut best = (bad.len(), cur.clone());
    for _ in 0..REQUANTIZE_ROUNDS {
        if bad.is_empty() {
            return Ok(cur);
        }
        for &k in &bad {
            let g = det.weights(k, marked.width, marked.height)?;
            let peak = g.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            for (d, x) in push.iter_mut().zip(&g) {
                *d += 0.25 * want[k] * x / peak;
            }
        }
        let pixels = levels
            .iter()
            .zip(&push)
            .map(|(&v, &d)| {
                let lo = (v.ceil() - 1.0).max(0.0);
                let hi = (v.floor() + 1.0).min(255.0);
                (v + d).round().clamp(lo, hi) / 255.0
            })
            .collect();
        cur = Image { pixels, ..marked };
        bad = weak(&cur)?;
        if bad.len() < best.0 {
            best = (bad.len(), cur.clone());
        }
    }
    Ok(if bad.is_empty() { cur } else { best.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn constant(w: usize, h: usize, v: f64) -> Image {
        Image::new(w, h, vec![v; w * h]).unwrap()
    }

    #[test]
    fn fft2d_examples() {
        let s = fft2d(&constant(4, 4, 0.25)).unwrap();
        assert!((s.get(0, 0) - Complex64::new(4.0, 0.0)).norm() < 1e-12);
        assert!(s.data[1..].iter().all(|z| z.norm() < 1e-12));

        let mut px = vec![0.0; 64];
        px[0] = 1.0;
        let s = fft2d(&Image::new(8, 8, px).unwrap()).unwrap();
        assert!(s.data.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-12));

        let img = synthetic_host(16, 8, 3);
        let (back, residue) = ifft2d(&fft2d(&img).unwrap()).unwrap().to_image();
        assert!(residue < 1e-12);
        assert!(back.pixels.iter().zip(&img.pixels).all(|(a, b)| (a - b).abs() < 1e-9));

        assert!(matches!(fft2d(&constant(6, 4, 0.5)), Err(Error::NotPowerOfTwo(6))));
    }

    #[test]
    fn image_validation() {
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(1, 1, vec![1.5]).is_err());
        assert!(Image::new(1, 1, vec![f64::NAN]).is_err());
        let h = synthetic_host(64, 64, 1);
        assert!(h.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(h, synthetic_host(64, 64, 1));
        assert_ne!(h, synthetic_host(64, 64, 2));
    }

    #[test]
    fn permutation_is_pinned() {
        let p = keyed_permutation(42, 8);
        let mut sorted = p.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (1..8).collect::<Vec<_>>());
        assert_eq!(p, keyed_permutation(42, 8));
        assert_ne!(keyed_permutation(42, 32), keyed_permutation(43, 32));
        // computed by an independent implementation of the documented algorithm
        assert_eq!(keyed_permutation(42, 16), [12, 9, 4, 8, 15, 10, 7, 5, 2, 13, 3, 1, 11, 6, 14]);
        assert_eq!(
            keyed_permutation(0, 32),
            [27, 4, 10, 26, 15, 6, 11, 22, 25, 2, 9, 13, 28, 24, 30, 12, 8, 16, 18, 29, 20, 19, 3, 21, 14, 31, 23, 5, 7, 1, 17]
        );
        // SplitMix64 reference output for seed 0
        let mut rng = SplitMix64::seed_from_u64(0);
        assert_eq!(rng.next_u64(), 0xe220_a839_7b1d_cdaf);
    }

    #[test]
    fn key_validation() {
        let k = WatermarkKey::default();
        assert!(k.validate(256, 256).is_ok());
        assert!(k.validate(64, 64).is_err());
        let dc = WatermarkKey {
            block_origin: (0, 1),
            ..k
        };
        assert!(dc.validate(256, 256).is_err());
        let odd = WatermarkKey { block_size: 24, ..k };
        assert!(odd.validate(256, 256).is_err());
        assert!(matches!(
            k.positions(32),
            Err(Error::Capacity {
                requested: 32,
                capacity: 31
            })
        ));
        assert!(!k.positions(31).unwrap().contains(&0));
    }

    #[test]
    fn bits_text_and_similarity() {
        let w: WatermarkBits = "10110".parse().unwrap();
        assert_eq!(w.to_string(), "10110");
        assert_eq!(similarity(&w, &w).unwrap(), 1.0);
        assert_eq!(similarity(&w, &w.complement()).unwrap(), -1.0);
        let e: WatermarkBits = "xxxxx".parse().unwrap();
        assert_eq!(similarity(&w, &e).unwrap(), 0.0);
        assert!(similarity(&w, &"1".parse().unwrap()).is_err());
        assert!("10a".parse::<WatermarkBits>().is_err());
        assert!("".parse::<WatermarkBits>().is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut within = 0;
        for _ in 0..200 {
            let a = WatermarkBits::random(1024, &mut rng).unwrap();
            let b = WatermarkBits::random(1024, &mut rng).unwrap();
            if similarity(&a, &b).unwrap().abs() < 0.1 {
                within += 1;
            }
        }
        assert!(within >= 198);
    }

    #[test]
    fn round_trip_and_zero_strength() {
        let host = synthetic_host(128, 128, 11);
        let key = WatermarkKey {
            seed: 5,
            block_size: 16,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = WatermarkBits::random(15, &mut rng).unwrap();
        let (marked, residue) = embed_with_residue(&host, &w, &key).unwrap();
        assert!(residue < IMAG_RESIDUE_LIMIT);
        assert_eq!(extract(&marked, &host, &key, 15).unwrap(), w);
        assert!(psnr(&host, &marked).unwrap() > 35.0);

        let unmarked = extract(&host, &host, &key, 15).unwrap();
        assert_eq!(unmarked.erasures(), 15);

        let flat = WatermarkKey { alpha: 0.0, ..key };
        let same = embed(&host, &w, &flat).unwrap();
        assert!(same.pixels.iter().zip(&host.pixels).all(|(a, b)| (a - b).abs() < 0.5 / 255.0));
        assert_eq!(same.quantized(), host.quantized());
    }

    #[test]
    fn errors() {
        let host = synthetic_host(64, 64, 1);
        let key = WatermarkKey {
            block_size: 8,
            ..Default::default()
        };
        let w = WatermarkBits::new(vec![true; 8]).unwrap();
        assert!(matches!(embed(&host, &w, &key), Err(Error::Capacity { .. })));
        let other = synthetic_host(32, 64, 1);
        assert!(matches!(extract(&other, &host, &key, 3), Err(Error::Dimension(_))));
        let bad = Image::new(48, 64, vec![0.5; 48 * 64]).unwrap();
        assert!(embed(&bad, &w, &key).is_err());
        assert!(WatermarkBits::new(vec![]).is_err());
    }

    #[test]
    fn survives_mild_noise() {
        let host = synthetic_host(256, 256, 4);
        let key = WatermarkKey::with_seed(9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let w = WatermarkBits::random(31, &mut rng).unwrap();
        let marked = embed(&host, &w, &key).unwrap();
        let noise = Normal::new(0.0, 1.0 / 255.0).unwrap();
        let noisy = Image::new(
            256,
            256,
            marked
                .pixels()
                .iter()
                .map(|p| (p + noise.sample(&mut rng)).clamp(0.0, 1.0))
                .collect(),
        )
        .unwrap();
        let got = extract(&noisy, &host, &key, 31).unwrap();
        assert!(similarity(&got, &w).unwrap() >= 0.8, "{}", similarity(&got, &w).unwrap());
    }

    #[test]
    fn eight_bit_output_keeps_the_payload() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for seed in 0..6 {
            let host = synthetic_host(64, 64, seed).quantized();
            let key = WatermarkKey {
                seed: rng.gen(),
                block_size: 16,
                alpha: 0.02,
                ..Default::default()
            };
            let w = WatermarkBits::random(15, &mut rng).unwrap();
            let float = embed(&host, &w, &key).unwrap();
            let q = embed_quantized(&host, &w, &key).unwrap();
            for (a, b) in q.pixels.iter().zip(&float.pixels) {
                assert_eq!(a * 255.0, (a * 255.0).round());
                assert!((a - b).abs() * 255.0 < 1.0);
            }
            assert_eq!(extract(&q, &host, &key, 15).unwrap(), w, "host {seed}");
        }

        let host = synthetic_host(64, 64, 0).quantized();
        let flat = WatermarkKey {
            alpha: 0.0,
            block_size: 16,
            ..Default::default()
        };
        let w = WatermarkBits::new(vec![true; 4]).unwrap();
        assert_eq!(embed_quantized(&host, &w, &flat).unwrap(), host);
    }
}
