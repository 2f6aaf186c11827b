//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | self-test failure |
//! | 2 | parse error, bad flags, unreadable input |
//! | 3 | dimension error (non power of two, shape mismatch) |
//! | 4 | fixed-point overflow with `--strict` |
//! | 5 | SVD did not converge (`.partial` files written) |
//! | 6 | watermark longer than the key's capacity |

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{report_emit, run_bench, BenchConfig, BenchMode, ReportFormat};
use crate::fixedpoint::QFormat;
use crate::oracle::{dft_naive, idft_naive};
use crate::pgm::{read_pgm, write_pgm_p2, write_pgm_p5};
use crate::sdf::{bit_reverse_permute, fft_block, latency};
use crate::selftest::{run_selftest, Fault};
use crate::svd::{svd, SvdArithmetic, SvdConfig, SvdFactors};
use crate::textio::{parse_complex_vector, parse_matrix, write_complex_vector, write_matrix, write_real_vector};
use crate::watermark::{embed_quantized, extract, similarity, WatermarkBits, WatermarkKey};
use crate::{is_pow2, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIMENSION: i32 = 3;
pub const EXIT_OVERFLOW: i32 = 4;
pub const EXIT_NO_CONVERGENCE: i32 = 5;
pub const EXIT_CAPACITY: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "fftsvd", version, about = "Pipelined FFT / CORDIC-SVD accelerator model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Order {
    Natural,
    Bitrev,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transform a complex vector file.
    Fft {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Fixed-point datapath, e.g. `2.14`.
        #[arg(long)]
        fixed: Option<QFormat>,
        #[arg(long, value_enum, default_value = "natural")]
        order: Order,
        /// Use the direct DFT; accepts any length.
        #[arg(long)]
        oracle: bool,
        /// Inverse transform (requires --oracle).
        #[arg(long, requires = "oracle")]
        inverse: bool,
        /// Fail with exit 4 on saturation.
        #[arg(long)]
        strict: bool,
        /// Only validate the length and report the pipeline shape.
        #[arg(long)]
        size_check: bool,
    },
    /// Factor a matrix file into U, S and V files.
    Svd {
        input: PathBuf,
        /// Output prefix; files are PREFIX_U.txt, PREFIX_S.txt, PREFIX_V.txt.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 30)]
        max_sweeps: usize,
        /// CORDIC iterations.
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        fixed: Option<QFormat>,
    },
    /// Embed a bit string into a PGM image.
    Embed {
        host: PathBuf,
        /// File holding the payload as `0`/`1` characters.
        #[arg(long)]
        bits: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        key: KeyArgs,
        /// Write plain (P2) PGM.
        #[arg(long)]
        plain: bool,
    },
    /// Recover bits from a marked image using the original.
    Extract {
        marked: PathBuf,
        original: PathBuf,
        #[arg(long)]
        nbits: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Reference payload; prints the similarity.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[command(flatten)]
        key: KeyArgs,
    },
    /// Time accelerated paths against the naive oracles.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "64,256,1024")]
        sizes: Vec<usize>,
        /// Square SVD sizes; none by default.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 2)]
        warmup: usize,
        /// `float`, `fixed` (Q2.14) or `fixed:<int.frac>`.
        #[arg(long, default_value = "float")]
        mode: BenchMode,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// One thread per size.
        #[arg(long)]
        threads: bool,
    },
    /// Run the built-in invariant suite.
    Selftest {
        /// Fault to inject: `none` or `corrupt-twiddle`.
        #[arg(long, default_value = "none")]
        fault: Fault,
    },
}

#[derive(Debug, clap::Args)]
struct KeyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 32)]
    block: usize,
    /// Block origin as `row,col`.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1, 1])]
    origin: Vec<usize>,
}

impl KeyArgs {
    fn key(&self) -> WatermarkKey {
        WatermarkKey {
            seed: self.seed,
            block_origin: (self.origin[0], self.origin[1]),
            block_size: self.block,
            alpha: self.alpha,
        }
    }
}

/// A failed command: exit code and message.
struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Dimension(_)
            | Error::NotPowerOfTwo(_)
            | Error::PartialFrame { .. }
            | Error::IndexOutOfRange { .. }
            | Error::FormatMismatch
            | Error::EmptyInput => EXIT_DIMENSION,
            Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
            Error::Capacity { .. } => EXIT_CAPACITY,
            _ => EXIT_USAGE,
        };
        Failure(code, e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Failure>;

fn read_text(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, data: &[u8]) -> std::result::Result<(), Failure> {
    fs::write(path, data).map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, data: &[u8], stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match out {
        Some(p) => write_file(p, data),
        None => stdout
            .write_all(data)
            .map_err(|e| Failure(EXIT_USAGE, format!("stdout: {e}"))),
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Fft {
            input,
            out,
            fixed,
            order,
            oracle,
            inverse,
            strict,
            size_check,
        } => cmd_fft(&input, &out, fixed, order, oracle, inverse, strict, size_check, stdout, stderr),
        Command::Svd {
            input,
            out,
            tol,
            max_sweeps,
            iters,
            fixed,
        } => {
            let cfg = SvdConfig {
                tol,
                max_sweeps,
                iters,
                arithmetic: fixed.map_or(SvdArithmetic::Float, SvdArithmetic::Fixed),
            };
            let prefix = out.unwrap_or_else(|| input.with_extension(""));
            cmd_svd(&input, &prefix, &cfg, stderr)
        }
        Command::Embed {
            host,
            bits,
            out,
            key,
            plain,
        } => {
            let host = read_pgm(&fs::read(&host).map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", host.display())))?)?;
            let wm: WatermarkBits = read_text(&bits)?.parse()?;
            let marked = embed_quantized(&host, &wm, &key.key())?;
            if plain {
                write_file(&out, write_pgm_p2(&marked).as_bytes())?;
            } else {
                write_file(&out, &write_pgm_p5(&marked))?;
            }
            let _ = writeln!(stderr, "embedded {} bits", wm.len());
            Ok(EXIT_OK)
        }
        Command::Extract {
            marked,
            original,
            nbits,
            out,
            compare,
            key,
        } => {
            let load = |p: &Path| -> std::result::Result<_, Failure> {
                Ok(read_pgm(&fs::read(p).map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", p.display())))?)?)
            };
            let got = extract(&load(&marked)?, &load(&original)?, &key.key(), nbits)?;
            emit(&out, format!("{got}\n").as_bytes(), stdout)?;
            if let Some(c) = compare {
                let reference: WatermarkBits = read_text(&c)?.parse()?;
                let rho = similarity(&got, &reference)?;
                let _ = writeln!(stderr, "similarity {rho}");
            }
            Ok(EXIT_OK)
        }
        Command::Bench {
            sizes,
            dims,
            reps,
            warmup,
            mode,
            out,
            format,
            threads,
        } => {
            let cfg = BenchConfig {
                sizes,
                matrix_dims: dims,
                repetitions: reps,
                warmup,
                mode,
                threaded: threads,
                ..Default::default()
            };
            let report = run_bench(&cfg)?;
            for s in report.sections.iter().filter(|s| s.low_confidence) {
                let _ = writeln!(stderr, "warning: {} timings are near the timer resolution", s.operation);
            }
            let fmt = match format {
                Format::Csv => ReportFormat::Csv,
                Format::Json => ReportFormat::Json,
            };
            emit(&out, &report_emit(&report, fmt), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Selftest { fault } => {
            let checks = run_selftest(fault);
            for c in &checks {
                let _ = writeln!(stdout, "{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            let _ = writeln!(stdout, "{} checks, {failed} failed", checks.len());
            Ok(if failed == 0 { EXIT_OK } else { EXIT_SELFTEST })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_fft(
    input: &Path,
    out: &Option<PathBuf>,
    fixed: Option<QFormat>,
    order: Order,
    oracle: bool,
    inverse: bool,
    strict: bool,
    size_check: bool,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let x = parse_complex_vector(&read_text(input)?)?;
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput.into());
    }
    if size_check {
        if !is_pow2(n) {
            return Err(Error::NotPowerOfTwo(n).into());
        }
        let stages = n.trailing_zeros();
        let _ = writeln!(stdout, "n={n} stages={stages} latency_cycles={}", latency(n, 1));
        return Ok(EXIT_OK);
    }
    let spectrum = if oracle {
        if inverse {
            idft_naive(&x)?
        } else {
            dft_naive(&x)?
        }
    } else {
        let b = fft_block(&x, fixed)?;
        if fixed.is_some() {
            let _ = writeln!(stderr, "scale {}", b.scale);
        }
        if b.overflow {
            let _ = writeln!(stderr, "warning: fixed-point saturation");
            if strict {
                return Err(Failure(EXIT_OVERFLOW, "overflow in fixed-point datapath".into()));
            }
        }
        b.spectrum
    };
    let spectrum = match order {
        Order::Natural => spectrum,
        Order::Bitrev => bit_reverse_permute(&spectrum)?,
    };
    emit(out, write_complex_vector(&spectrum).as_bytes(), stdout)?;
    Ok(EXIT_OK)
}

fn factor_files(prefix: &Path, suffix: &str) -> [PathBuf; 3] {
    ["U", "S", "V"].map(|t| {
        let mut name = prefix.as_os_str().to_owned();
        name.push(format!("_{t}.txt{suffix}"));
        PathBuf::from(name)
    })
}

fn write_factors(f: &SvdFactors, prefix: &Path, suffix: &str) -> std::result::Result<(), Failure> {
    let [u, s, v] = factor_files(prefix, suffix);
    write_file(&u, write_matrix(&f.u).as_bytes())?;
    write_file(&s, write_real_vector(&f.sigma).as_bytes())?;
    write_file(&v, write_matrix(&f.v).as_bytes())
}

fn cmd_svd(input: &Path, prefix: &Path, cfg: &SvdConfig, stderr: &mut dyn Write) -> CmdResult {
    let a = parse_matrix(&read_text(input)?)?;
    match svd(&a, cfg) {
        Ok(f) => {
            write_factors(&f, prefix, "")?;
            let _ = writeln!(stderr, "sweeps_used {} residual {:e}", f.sweeps_used, f.residual);
            Ok(EXIT_OK)
        }
        Err(Error::NoConvergence {
            residual,
            sweeps,
            partial,
        }) => {
            write_factors(&partial, prefix, ".partial")?;
            Err(Failure(
                EXIT_NO_CONVERGENCE,
                format!("no convergence after {sweeps} sweeps, residual {residual:e}; partial factors written"),
            ))
        }
        Err(e) => Err(e.into()),
    }
}
