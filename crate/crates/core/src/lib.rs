//! Bit-accurate software model of an FFT/SVD accelerator.
//!
//! The crate models the datapaths of a streaming FPGA design:
//!
//! * [`fixedpoint`]: Q-format scalar/complex arithmetic with round-to-nearest-even
//!   and saturation.
//! * [`twiddle`]: half-circle twiddle ROMs, real and quantized.
//! * [`sdf`]: a radix-2 single-path delay-feedback FFT cascade, one sample per
//!   cycle, plus the batch transform it must agree with.
//! * [`cordic`]: circular CORDIC in rotation and vectoring modes.
//! * [`svd`]: two-sided Jacobi SVD whose rotations are computed and applied by
//!   CORDIC.
//! * [`oracle`]: brute-force double precision references (naive DFT, classical
//!   Jacobi SVD).
//! * [`watermark`]: FFT+SVD watermark embedding/extraction on grayscale images.
//! * [`pgm`]: binary and plain PGM images.
//! * [`bench`]: accelerated-vs-naive timing report.
//!
//! Everything is deterministic; randomness in tests and benchmarks comes from
//! seeded generators.

pub mod bench;
pub mod cli;
pub mod cordic;
mod error;
pub mod fixedpoint;
pub mod matrix;
pub mod oracle;
pub mod pgm;
pub mod sdf;
pub mod selftest;
pub mod svd;
pub mod textio;
pub mod twiddle;
pub mod watermark;

pub use error::{Error, Result};
pub use matrix::MatrixF;
pub use num_complex::Complex64;

pub(crate) fn is_pow2(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}
