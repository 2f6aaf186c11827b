//! Wall-clock comparison of the accelerated paths with the naive oracles,
//! reported in the eight-row accelerator-vs-software table layout.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::fixedpoint::QFormat;
use crate::matrix::MatrixF;
use crate::oracle::{dft_naive, svd_oracle};
use crate::sdf::{fft_block, latency};
use crate::svd::{svd, SvdArithmetic, SvdConfig};
use crate::{is_pow2, Error, Result};

pub const CSV_HEADER: &str = "metric,accelerated,naive,ratio";

/// Row labels in table order.
pub const METRICS: [&str; 8] = [
    "Calculation Speed (us)",
    "Latency (us)",
    "Throughput (ops/sec)",
    "Efficiency (ops/Watt)",
    "Resource Usage (LUTs)",
    "Resource Usage (FFs)",
    "Resource Usage (DSPs)",
    "Power Consumption (Watts)",
];

const RAPL_ENERGY: &str = "/sys/class/powercap/intel-rapl:0/energy_uj";

/// A measurement that may be unavailable; serialized as a number or `"N/A"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metric(pub Option<f64>);

impl Metric {
    pub const NA: Metric = Metric(None);
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("N/A"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("N/A"),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Metric(Some(v))),
            Raw::Text(t) if t == "N/A" => Ok(Metric::NA),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or N/A, got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BenchMode {
    Float,
    Fixed(QFormat),
}

impl FromStr for BenchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" => Ok(BenchMode::Float),
            "fixed" => Ok(BenchMode::Fixed(QFormat::Q2_14)),
            other => other
                .strip_prefix("fixed:")
                .ok_or_else(|| Error::Parse(format!("unknown mode {other:?}")))?
                .parse()
                .map(BenchMode::Fixed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub matrix_dims: Vec<usize>,
    pub repetitions: usize,
    pub warmup: usize,
    pub mode: BenchMode,
    /// Run each size on its own thread.
    pub threaded: bool,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![64, 256, 1024],
            matrix_dims: vec![8],
            repetitions: 10,
            warmup: 2,
            mode: BenchMode::Float,
            threaded: false,
            seed: 1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 3 {
            return Err(Error::InvalidArgument(format!(
                "{} repetitions, at least 3 required",
                self.repetitions
            )));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| !is_pow2(n)) {
            return Err(Error::NotPowerOfTwo(n));
        }
        if self.matrix_dims.contains(&0) {
            return Err(Error::InvalidArgument("zero matrix dimension".into()));
        }
        Ok(())
    }
}

/// One side (accelerated or naive) of a benchmarked operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpRecord {
    /// Mean wall time per operation.
    pub calc_speed_us: f64,
    /// Median single-operation time.
    pub latency_us: f64,
    pub throughput_ops_per_sec: f64,
    pub efficiency_ops_per_watt: Metric,
    pub resource_luts: Metric,
    pub resource_ffs: Metric,
    pub resource_dsps: Metric,
    pub power_watts: Metric,
}

impl OpRecord {
    fn values(&self) -> [Metric; 8] {
        [
            Metric(Some(self.calc_speed_us)),
            Metric(Some(self.latency_us)),
            Metric(Some(self.throughput_ops_per_sec)),
            self.efficiency_ops_per_watt,
            self.resource_luts,
            self.resource_ffs,
            self.resource_dsps,
            self.power_watts,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSection {
    /// `fft n=1024`, `svd 8x8`.
    pub operation: String,
    pub accelerated: OpRecord,
    pub naive: OpRecord,
    /// `naive / accelerated` mean time.
    pub speedup: f64,
    /// Pipeline fill latency in clock cycles, for FFT sections.
    pub latency_cycles: Option<u64>,
    /// Timer resolution above 10% of a measured mean.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchReport {
    pub sections: Vec<BenchSection>,
}

impl BenchReport {
    pub fn section(&self, operation: &str) -> Option<&BenchSection> {
        self.sections.iter().find(|s| s.operation == operation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Parse(format!("unknown report format {s:?}"))),
        }
    }
}

/// Smallest observable step of the monotonic clock.
pub fn timer_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..200 {
        let t0 = Instant::now();
        let mut t1 = Instant::now();
        while t1 == t0 {
            t1 = Instant::now();
        }
        best = best.min(t1 - t0);
    }
    best
}

fn read_energy_uj() -> Option<u64> {
    std::fs::read_to_string(RAPL_ENERGY).ok()?.trim().parse().ok()
}

struct Timing {
    mean_us: f64,
    median_us: f64,
    watts: Option<f64>,
}

fn time_op(warmup: usize, reps: usize, mut op: impl FnMut()) -> Timing {
    for _ in 0..warmup {
        op();
    }
    let e0 = read_energy_uj();
    let start = Instant::now();
    let mut samples: Vec<f64> = (0..reps)
        .map(|_| {
            let t = Instant::now();
            op();
            t.elapsed().as_secs_f64() * 1e6
        })
        .collect();
    let total = start.elapsed().as_secs_f64();
    let watts = match (e0, read_energy_uj()) {
        (Some(a), Some(b)) if b > a && total > 0.0 => Some((b - a) as f64 * 1e-6 / total),
        _ => None,
    };
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    let median_us = if samples.len().is_multiple_of(2) {
        (samples[mid - 1] + samples[mid]) / 2.0
    } else {
        samples[mid]
    };
    Timing {
        mean_us: samples.iter().sum::<f64>() / samples.len() as f64,
        median_us,
        watts,
    }
}

fn record(t: &Timing) -> OpRecord {
    let throughput = 1e6 / t.mean_us.max(f64::MIN_POSITIVE);
    OpRecord {
        calc_speed_us: t.mean_us,
        latency_us: t.median_us,
        throughput_ops_per_sec: throughput,
        efficiency_ops_per_watt: Metric(t.watts.map(|w| throughput / w)),
        resource_luts: Metric::NA,
        resource_ffs: Metric::NA,
        resource_dsps: Metric::NA,
        power_watts: Metric(t.watts),
    }
}

fn section(operation: String, fast: Timing, slow: Timing, cycles: Option<u64>, resolution_us: f64) -> BenchSection {
    BenchSection {
        operation,
        speedup: slow.mean_us / fast.mean_us.max(f64::MIN_POSITIVE),
        low_confidence: resolution_us > 0.1 * fast.mean_us.min(slow.mean_us),
        accelerated: record(&fast),
        naive: record(&slow),
        latency_cycles: cycles,
    }
}

fn bench_fft(cfg: &BenchConfig, n: usize, resolution_us: f64) -> Result<BenchSection> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ n as u64);
    let x: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
        .collect();
    let fmt = match cfg.mode {
        BenchMode::Float => None,
        BenchMode::Fixed(f) => Some(f),
    };
    fft_block(&x, fmt)?;
    let fast = time_op(cfg.warmup, cfg.repetitions, || {
        std::hint::black_box(fft_block(std::hint::black_box(&x), fmt).ok());
    });
    let slow = time_op(cfg.warmup, cfg.repetitions, || {
        std::hint::black_box(dft_naive(std::hint::black_box(&x)).ok());
    });
    Ok(section(format!("fft n={n}"), fast, slow, Some(latency(n, 1)), resolution_us))
}

fn bench_svd(cfg: &BenchConfig, dim: usize, resolution_us: f64) -> Result<BenchSection> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (dim as u64) << 32);
    let a = MatrixF::from_vec(dim, dim, (0..dim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let svd_cfg = SvdConfig {
        arithmetic: match cfg.mode {
            BenchMode::Float => SvdArithmetic::Float,
            BenchMode::Fixed(f) => SvdArithmetic::Fixed(f),
        },
        ..Default::default()
    };
    let fast = time_op(cfg.warmup, cfg.repetitions, || {
        std::hint::black_box(svd(std::hint::black_box(&a), &svd_cfg).ok());
    });
    let slow = time_op(cfg.warmup, cfg.repetitions, || {
        std::hint::black_box(svd_oracle(std::hint::black_box(&a), 1e-12).ok());
    });
    Ok(section(format!("svd {dim}x{dim}"), fast, slow, None, resolution_us))
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let resolution_us = timer_resolution().as_secs_f64() * 1e6;
    let mut sections = Vec::new();
    if cfg.threaded {
        std::thread::scope(|scope| -> Result<()> {
            let ffts: Vec<_> = cfg
                .sizes
                .iter()
                .map(|&n| scope.spawn(move || bench_fft(cfg, n, resolution_us)))
                .collect();
            let svds: Vec<_> = cfg
                .matrix_dims
                .iter()
                .map(|&d| scope.spawn(move || bench_svd(cfg, d, resolution_us)))
                .collect();
            for h in ffts.into_iter().chain(svds) {
                sections.push(h.join().expect("bench thread panicked")?);
            }
            Ok(())
        })?;
    } else {
        for &n in &cfg.sizes {
            sections.push(bench_fft(cfg, n, resolution_us)?);
        }
        for &d in &cfg.matrix_dims {
            sections.push(bench_svd(cfg, d, resolution_us)?);
        }
    }
    Ok(BenchReport { sections })
}

/// CSV with one row per metric and section, or pretty JSON.
pub fn report_emit(r: &BenchReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(r).expect("report serializes");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => {
            let mut out = format!("{CSV_HEADER}\n");
            for s in &r.sections {
                let (acc, naive) = (s.accelerated.values(), s.naive.values());
                for ((name, a), n) in METRICS.iter().zip(acc).zip(naive) {
                    let ratio = match (a.0, n.0) {
                        (Some(x), Some(y)) if y != 0.0 => Metric(Some(x / y)),
                        _ => Metric::NA,
                    };
                    out.push_str(&format!("{}: {name},{a},{n},{ratio}\n", s.operation));
                }
            }
            out.into_bytes()
        }
    }
}

pub fn parse_json_report(bytes: &[u8]) -> Result<BenchReport> {
    serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))
}
