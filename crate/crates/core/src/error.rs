use crate::svd::SvdFactors;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid Q format Q{int_bits}.{frac_bits}")]
    InvalidFormat { int_bits: u32, frac_bits: u32 },
    #[error("operand formats differ")]
    FormatMismatch,
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("stream length {len} is not a multiple of frame size {n}")]
    PartialFrame { len: usize, n: usize },
    #[error("input validity changed in the middle of a frame (phase {phase})")]
    FrameMisaligned { phase: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("SVD did not converge: residual {residual:e} after {sweeps} sweeps")]
    NoConvergence {
        residual: f64,
        sweeps: usize,
        partial: Box<SvdFactors>,
    },
    #[error("watermark of {requested} bits exceeds capacity {capacity}")]
    Capacity { requested: usize, capacity: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
