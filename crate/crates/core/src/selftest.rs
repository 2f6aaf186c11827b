//! Built-in invariant suite behind `fftsvd selftest`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cordic::{cordic_gain, Cordic};
use crate::fixedpoint::QFormat;
use crate::matrix::MatrixF;
use crate::oracle::{dft_naive, svd_oracle};
use crate::sdf::{fft_block, fft_block_raw, fft_block_with, latency, FixedPath, FloatPath, Ordering, SdfPipeline};
use crate::svd::svd_default;
use crate::twiddle::TwiddleTable;
use crate::watermark::{embed, extract, synthetic_host, WatermarkBits, WatermarkKey};
use crate::{Error, Result};

/// Fault injected before the suite runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Overwrite one entry of the float twiddle ROM used by the FFT checks.
    CorruptTwiddle,
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Fault::None),
            "corrupt-twiddle" => Ok(Fault::CorruptTwiddle),
            _ => Err(Error::Parse(format!("unknown fault {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<28} {}", self.name, self.detail)
    }
}

const N: usize = 64;

fn frame(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)))
        .collect()
}

fn max_rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, z| m.max(z.norm())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).norm())) / scale
}

fn energy(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs every check; the suite passes iff all entries pass.
pub fn run_selftest(fault: Fault) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    let mut table = TwiddleTable::new(N, None).expect("valid size");
    if fault == Fault::CorruptTwiddle {
        table.corrupt(3, Complex64::new(0.5, 0.5));
    }
    let table = table;
    let x = frame(&mut rng, N, 1.0);
    let y = frame(&mut rng, N, 1.0);
    let fft = |v: &[Complex64]| fft_block_with(&FloatPath, &table, v).map(|b| b.spectrum);

    let mut out = vec![
        check("fft_oracle_equivalence", || {
            let e = max_rel_err(&fft(&x)?, &dft_naive(&x)?);
            Ok((e <= 1e-9, format!("max rel err {e:.2e}")))
        }),
        check("parseval", || {
            let lhs = energy(&x);
            let rhs = energy(&fft(&x)?) / N as f64;
            let e = (lhs - rhs).abs() / lhs;
            Ok((e <= 1e-9, format!("rel err {e:.2e}")))
        }),
        check("linearity", || {
            let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5));
            let mix: Vec<Complex64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let expect: Vec<Complex64> = fft(&x)?.iter().zip(fft(&y)?).map(|(p, q)| a * p + b * q).collect();
            let e = max_rel_err(&fft(&mix)?, &expect);
            Ok((e <= 1e-9, format!("max rel err {e:.2e}")))
        }),
        check("inverse_round_trip", || {
            let back = crate::sdf::ifft(&fft(&x)?)?;
            let e = max_rel_err(&back, &x);
            Ok((e <= 1e-9, format!("max rel err {e:.2e}")))
        }),
    ];

    out.push(check("stream_matches_block", || {
        let fmt = QFormat::Q2_14;
        let v = frame(&mut rng, N, 0.9);
        let path = FixedPath::new(fmt);
        let qtable = TwiddleTable::new(N, Some(fmt))?;
        let mut pipe = SdfPipeline::new(N, path, 1)?.with_ordering(Ordering::BitReversed);
        let streamed = pipe.fft_stream(&v)?.samples;
        let (block, _) = fft_block_raw(&path, &qtable, &v)?;
        Ok((streamed == block, format!("{N} samples compared bit for bit")))
    }));
    out.push(check("latency_law", || {
        let mut bad = Vec::new();
        for bits in 3..=10 {
            let n = 1 << bits;
            let mut pipe = SdfPipeline::new(n, FloatPath, 1)?;
            let first = pipe.fft_stream(&vec![Complex64::new(1.0, 0.0); n])?.output_cycles[0];
            if first != latency(n, 1) || first != (n as u64 - 1) + bits {
                bad.push(n);
            }
        }
        Ok((bad.is_empty(), format!("n = 8..1024, mismatches {bad:?}")))
    }));
    out.push(check("fixed_point_snr", || {
        let v = frame(&mut rng, 256, 0.7);
        let b = fft_block(&v, Some(QFormat::Q2_14))?;
        let exact = dft_naive(&v)?;
        let noise: f64 = b.unscaled().iter().zip(&exact).map(|(p, q)| (p - q).norm_sqr()).sum();
        let snr = 10.0 * (energy(&exact) / noise).log10();
        Ok((snr >= 60.0 && !b.overflow, format!("{snr:.1} dB at n = 256, Q2.14")))
    }));
    out.push(check("cordic_gain", || {
        let c = Cordic::new(32)?;
        let k: f64 = (0..32).map(|i| (1.0 + 4f64.powi(-i)).sqrt()).product();
        let e = (cordic_gain(32) - k).abs();
        let s = c.rotate_raw(1.0, 0.0, 0.0);
        let raw = s.x.hypot(s.y);
        Ok((e <= 1e-12 && (raw - k).abs() <= 1e-8, format!("K = {k:.15}")))
    }));
    out.push(check("cordic_rotation_bound", || {
        let c = Cordic::new(24)?;
        let mut worst = 0.0_f64;
        for _ in 0..200 {
            let (vx, vy, t) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-3.1..3.1));
            let (x, y) = c.rotate(vx, vy, t);
            let (s, co) = f64::sin_cos(t);
            let err = (x - (vx * co - vy * s)).hypot(y - (vx * s + vy * co));
            worst = worst.max(err / f64::hypot(vx, vy) / 2f64.powi(-23));
        }
        Ok((worst <= 1.0, format!("worst error {worst:.3} of bound")))
    }));
    out.push(check("svd_oracle_equivalence", || {
        let a = MatrixF::from_vec(6, 5, (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let (f, o) = (svd_default(&a)?, svd_oracle(&a, 1e-14)?);
        let e = f
            .sigma
            .iter()
            .zip(&o.sigma)
            .fold(0.0_f64, |m, (p, q)| m.max((p - q).abs() / q));
        Ok((e <= 1e-6, format!("max rel err {e:.2e}")))
    }));
    out.push(check("svd_reconstruction", || {
        let a = MatrixF::from_vec(8, 8, (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let f = svd_default(&a)?;
        let (r, ou, ov) = (f.reconstruction_error(&a), f.u.orthogonality_error(), f.v.orthogonality_error());
        Ok((
            r <= 1e-6 && ou <= 1e-6 && ov <= 1e-6,
            format!("recon {r:.2e}, orth U {ou:.2e}, orth V {ov:.2e}"),
        ))
    }));
    out.push(check("svd_known_value", || {
        let f = svd_default(&MatrixF::from_rows(&[&[3.0, 0.0], &[4.0, 5.0]])?)?;
        let e = (f.sigma[0] - 45f64.sqrt()).abs().max((f.sigma[1] - 5f64.sqrt()).abs());
        Ok((e <= 1e-9, format!("sigma = ({:.9}, {:.9})", f.sigma[0], f.sigma[1])))
    }));
    out.push(check("watermark_round_trip", || {
        let host = synthetic_host(128, 128, 3);
        let key = WatermarkKey {
            seed: 17,
            block_size: 16,
            ..Default::default()
        };
        let w = WatermarkBits::random(15, &mut rng)?;
        let got = extract(&embed(&host, &w, &key)?, &host, &key, 15)?;
        Ok((got == w, format!("{} of 15 bits recovered", got.bits().iter().zip(w.bits()).filter(|(a, b)| a == b).count())))
    }));
    out
}
