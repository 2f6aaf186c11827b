//! Two-sided Jacobi SVD driven by CORDIC.
//!
//! For each pair `(p, q)` the 2x2 block `[[a, b], [c, d]]` goes through a
//! sum/difference stage producing `(d - a, c + b)` and `(d + a, c - b)`.
//! Vectoring CORDIC turns those into `φ_sum` and `φ_diff`; the left and right
//! rotation angles are their half difference and half sum. Rotation CORDIC
//! then applies the angles to rows and columns of the working matrix and to
//! the accumulated `U` and `V`.
//!
//! Each CORDIC rotation is an exact rotation by the angle its direction bits
//! encode, so `U` and `V` stay orthogonal to working precision and
//! `A = U·M·Vᵀ` holds throughout. The angle resolution only limits how close
//! to zero the off-diagonal can be driven; the convergence threshold accounts
//! for it.

use serde::{Deserialize, Serialize};

use crate::cordic::{Cordic, CordicFixed, DEFAULT_ITERS};
use crate::fixedpoint::QFormat;
use crate::matrix::MatrixF;
use crate::{Error, Result};

/// Vectoring inputs below this magnitude are treated as zero.
const DEGENERATE: f64 = 1e-300;

/// `A = U·diag(sigma)·Vᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdFactors {
    /// `m x m`.
    pub u: MatrixF,
    /// Descending, non-negative, length `min(m, n)`.
    pub sigma: Vec<f64>,
    /// `n x n`.
    pub v: MatrixF,
    pub sweeps_used: usize,
    /// Final off-diagonal norm relative to `‖A‖_F`.
    pub residual: f64,
    /// Off-diagonal norm of the working block before the first sweep and
    /// after each sweep.
    pub sweep_residuals: Vec<f64>,
}

impl SvdFactors {
    /// `U·Σ·Vᵀ` with `Σ` shaped `m x n`.
    pub fn reconstruct(&self) -> MatrixF {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut us = MatrixF::zeros(m, n);
        for i in 0..m {
            for (k, &s) in self.sigma.iter().enumerate() {
                us[(i, k)] = self.u[(i, k)] * s;
            }
        }
        us.matmul(&self.v.transpose()).expect("conforming factors")
    }

    /// `‖A - UΣVᵀ‖_F / max(‖A‖_F, ε)`.
    pub fn reconstruction_error(&self, a: &MatrixF) -> f64 {
        let diff = a.sub(&self.reconstruct()).expect("same shape");
        diff.frobenius() / a.frobenius().max(f64::MIN_POSITIVE)
    }
}

/// Arithmetic of the rotation engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SvdArithmetic {
    Float,
    /// Fixed-point CORDIC; the matrix is normalized into range first.
    Fixed(QFormat),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvdConfig {
    /// Off-diagonal target relative to `‖A‖_F`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// CORDIC microrotations. `None` selects 32 in float mode and
    /// `frac_bits + 2` in fixed mode.
    pub iters: Option<usize>,
    pub arithmetic: SvdArithmetic,
}

impl Default for SvdConfig {
    fn default() -> Self {
        SvdConfig {
            tol: 1e-10,
            max_sweeps: 30,
            iters: None,
            arithmetic: SvdArithmetic::Float,
        }
    }
}

impl SvdConfig {
    pub fn fixed(fmt: QFormat) -> Self {
        SvdConfig {
            arithmetic: SvdArithmetic::Fixed(fmt),
            ..Default::default()
        }
    }
}

/// `√(Σ_{i≠j} m[i,j]²)`.
pub fn off_diagonal_norm(m: &MatrixF) -> f64 {
    let mut s = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// The CORDIC unit as seen by the Jacobi sweep.
#[derive(Debug, Clone)]
enum Engine {
    Float(Cordic),
    Fixed(CordicFixed),
}

impl Engine {
    fn new(cfg: &SvdConfig) -> Result<Self> {
        Ok(match cfg.arithmetic {
            SvdArithmetic::Float => Engine::Float(Cordic::new(cfg.iters.unwrap_or(DEFAULT_ITERS))?),
            SvdArithmetic::Fixed(fmt) => Engine::Fixed(CordicFixed::new(fmt, cfg.iters)?),
        })
    }

    /// Angle of `(x, y)`; zero for a (numerically) zero vector.
    fn angle(&self, x: f64, y: f64) -> f64 {
        if (x.abs() < DEGENERATE && y.abs() < DEGENERATE) || (y == 0.0 && x > 0.0) {
            return 0.0;
        }
        match self {
            Engine::Float(c) => c.vector(x, y).map_or(0.0, |(_, a)| a),
            Engine::Fixed(c) => c.vector(x, y).map_or(0.0, |(_, a, _)| a),
        }
    }

    fn rotate(&self, x: f64, y: f64, angle: f64) -> (f64, f64) {
        if angle == 0.0 {
            return (x, y);
        }
        match self {
            Engine::Float(c) => c.rotate(x, y, angle),
            Engine::Fixed(c) => c.rotate(x, y, angle).0,
        }
    }

    /// Residual floor of the off-diagonal norm relative to `‖A‖_F` for an
    /// `n x n` working block: the angle resolution in float mode, the storage
    /// quantum in fixed mode.
    fn floor(&self, n: usize) -> f64 {
        match self {
            Engine::Float(c) => n as f64 * (-(c.iters() as f64) + 2.0).exp2(),
            Engine::Fixed(c) => 4.0 * (n as f64).sqrt() * c.fmt().step(),
        }
    }

    fn angles_2x2(&self, a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
        // butterfly pre-stage, halved so its outputs stay in the input range
        let phi_sum = self.angle((d - a) / 2.0, (c + b) / 2.0);
        let phi_diff = self.angle((d + a) / 2.0, (c - b) / 2.0);
        ((phi_sum - phi_diff) / 2.0, (phi_sum + phi_diff) / 2.0)
    }

    #[allow(clippy::too_many_arguments)]
    fn apply(
        &self,
        m: &mut MatrixF,
        p: usize,
        q: usize,
        theta_left: f64,
        theta_right: f64,
        u: &mut MatrixF,
        v: &mut MatrixF,
    ) {
        for j in 0..m.cols() {
            let (x, y) = self.rotate(m[(p, j)], m[(q, j)], theta_left);
            m[(p, j)] = x;
            m[(q, j)] = y;
        }
        for i in 0..m.rows() {
            let (x, y) = self.rotate(m[(i, p)], m[(i, q)], theta_right);
            m[(i, p)] = x;
            m[(i, q)] = y;
        }
        for i in 0..u.rows() {
            let (x, y) = self.rotate(u[(i, p)], u[(i, q)], theta_left);
            u[(i, p)] = x;
            u[(i, q)] = y;
        }
        for i in 0..v.rows() {
            let (x, y) = self.rotate(v[(i, p)], v[(i, q)], theta_right);
            v[(i, p)] = x;
            v[(i, q)] = y;
        }
    }
}

/// Left and right rotation angles that diagonalize `[[a, b], [c, d]]`:
/// `Rot(θl)ᵀ·M·Rot(θr)` is diagonal for `Rot(θ) = [[cos θ, sin θ], [-sin θ, cos θ]]`.
pub fn jacobi_angles_2x2(a: f64, b: f64, c: f64, d: f64, iters: usize) -> Result<(f64, f64)> {
    Ok(Engine::Float(Cordic::new(iters)?).angles_2x2(a, b, c, d))
}

/// Applies the rotation pair to rows/columns `p`, `q` of `m` and accumulates
/// it into `u` (rows of `u` are indexed like rows of `m`) and `v`.
#[allow(clippy::too_many_arguments)]
pub fn apply_two_sided_rotation(
    m: &mut MatrixF,
    p: usize,
    q: usize,
    theta_left: f64,
    theta_right: f64,
    u: &mut MatrixF,
    v: &mut MatrixF,
    iters: usize,
) -> Result<()> {
    let n = m.rows().min(m.cols());
    if p >= q || q >= n {
        return Err(Error::IndexOutOfRange { index: q.max(p), limit: n });
    }
    if u.cols() != m.rows() || v.cols() != m.cols() {
        return Err(Error::Dimension("accumulators do not match the working block".into()));
    }
    Engine::Float(Cordic::new(iters)?).apply(m, p, q, theta_left, theta_right, u, v);
    Ok(())
}

/// Modified Gram-Schmidt QR of a tall matrix with re-orthogonalization:
/// `A = Q·R`, `Q` with orthonormal columns (`m x n`), `R` upper triangular.
/// Rank-deficient columns get a completion vector and a zero diagonal.
fn mgs_qr(a: &MatrixF) -> (Vec<Vec<f64>>, MatrixF) {
    let (m, n) = (a.rows(), a.cols());
    let scale = a.frobenius().max(f64::MIN_POSITIVE);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r = MatrixF::zeros(n, n);
    for j in 0..n {
        let mut w = a.col(j);
        for _ in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let dot: f64 = qk.iter().zip(&w).map(|(x, y)| x * y).sum();
                r[(k, j)] += dot;
                w.iter_mut().zip(qk).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-14 * scale {
            r[(j, j)] = norm;
            q.push(w.into_iter().map(|x| x / norm).collect());
        } else {
            q.push(completion_vector(&q, m));
        }
    }
    (q, r)
}

/// A unit vector orthogonal to `basis`, taken from the standard basis.
fn completion_vector(basis: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..m {
        let mut w = vec![0.0; m];
        w[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let dot: f64 = b.iter().zip(&w).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
            best = Some((norm, w));
        }
        if norm > 0.5 {
            break;
        }
    }
    let (norm, w) = best.expect("m >= 1");
    w.into_iter().map(|x| x / norm).collect()
}

/// Cyclic sweeps over the square working block. Returns the number of
/// sweeps and the per-sweep off-diagonal history; fails past `max_sweeps`.
fn sweep_loop(
    engine: &Engine,
    m: &mut MatrixF,
    u: &mut MatrixF,
    v: &mut MatrixF,
    threshold: f64,
    max_sweeps: usize,
) -> (usize, Vec<f64>, bool) {
    let n = m.rows();
    let mut history = vec![off_diagonal_norm(m)];
    let mut sweeps = 0;
    while *history.last().expect("non-empty") > threshold {
        if sweeps == max_sweeps {
            return (sweeps, history, false);
        }
        for p in 0..n {
            for q in p + 1..n {
                let (b, c) = (m[(p, q)], m[(q, p)]);
                if b == 0.0 && c == 0.0 {
                    continue;
                }
                let (tl, tr) = engine.angles_2x2(m[(p, p)], b, c, m[(q, q)]);
                engine.apply(m, p, q, tl, tr, u, v);
            }
        }
        sweeps += 1;
        history.push(off_diagonal_norm(m));
    }
    (sweeps, history, true)
}

/// Factor `a`. Tall inputs are reduced to a square block by a Gram-Schmidt
/// pass; wide inputs are transposed.
pub fn svd(a: &MatrixF, cfg: &SvdConfig) -> Result<SvdFactors> {
    if a.rows() < a.cols() {
        return match svd(&a.transpose(), cfg) {
            Ok(f) => Ok(swap_sides(f)),
            Err(Error::NoConvergence {
                residual,
                sweeps,
                partial,
            }) => Err(Error::NoConvergence {
                residual,
                sweeps,
                partial: Box::new(swap_sides(*partial)),
            }),
            Err(e) => Err(e),
        };
    }
    let engine = Engine::new(cfg)?;
    let (rows, n) = (a.rows(), a.cols());
    let norm = a.frobenius();

    // Fixed mode works on a copy whose spectral norm is at most 1, which
    // leaves headroom for the CORDIC gain inside Q2.x registers.
    let (a_work, unscale) = match cfg.arithmetic {
        SvdArithmetic::Fixed(fmt) if norm > 0.0 => {
            let s = 1.0 / spectral_estimate(a).min(norm_bound(a)).min(norm);
            let q = a.scale(s);
            let q = MatrixF::from_vec(
                q.rows(),
                q.cols(),
                q.data()
                    .iter()
                    .map(|&x| crate::fixedpoint::quantize(x, fmt).0.to_real())
                    .collect(),
            )?;
            (q, 1.0 / s)
        }
        _ => (a.clone(), 1.0),
    };

    let (qcols, mut work) = if rows == n {
        (None, a_work.clone())
    } else {
        let (q, r) = mgs_qr(&a_work);
        (Some(q), r)
    };
    let mut ur = MatrixF::identity(n);
    let mut v = MatrixF::identity(n);
    let work_norm = a_work.frobenius();
    let threshold = cfg.tol.max(engine.floor(n)) * work_norm;
    let (sweeps, history, converged) = if work_norm > 0.0 {
        sweep_loop(&engine, &mut work, &mut ur, &mut v, threshold, cfg.max_sweeps)
    } else {
        (0, vec![0.0], true)
    };

    // sign fix and descending order
    let mut sigma: Vec<f64> = (0..n).map(|i| work[(i, i)]).collect();
    for (i, s) in sigma.iter_mut().enumerate() {
        if *s < 0.0 {
            *s = -*s;
            for k in 0..n {
                ur[(k, i)] = -ur[(k, i)];
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));
    let mut ur_sorted = MatrixF::zeros(n, n);
    let mut v_sorted = MatrixF::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            ur_sorted[(k, dst)] = ur[(k, src)];
            v_sorted[(k, dst)] = v[(k, src)];
        }
    }
    let sigma: Vec<f64> = order.iter().map(|&i| sigma[i] * unscale).collect();

    let u = match qcols {
        None => ur_sorted,
        Some(q) => {
            // U = [Q·U_R | completion]
            let mut basis: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    (0..rows)
                        .map(|i| (0..n).map(|k| q[k][i] * ur_sorted[(k, j)]).sum())
                        .collect()
                })
                .collect();
            while basis.len() < rows {
                let e = completion_vector(&basis, rows);
                basis.push(e);
            }
            let mut u = MatrixF::zeros(rows, rows);
            for (j, col) in basis.iter().enumerate() {
                for (i, &x) in col.iter().enumerate() {
                    u[(i, j)] = x;
                }
            }
            u
        }
    };

    let residual = if work_norm > 0.0 {
        history.last().copied().unwrap_or(0.0) / work_norm
    } else {
        0.0
    };
    let factors = SvdFactors {
        u,
        sigma,
        v: v_sorted,
        sweeps_used: sweeps,
        residual,
        sweep_residuals: history.iter().map(|h| h * unscale).collect(),
    };
    if converged {
        Ok(factors)
    } else {
        Err(Error::NoConvergence {
            residual,
            sweeps,
            partial: Box::new(factors),
        })
    }
}

/// Power-iteration estimate of the largest singular value with a 5% margin.
/// An underestimate within the CORDIC headroom (`2/K ≈ 1.21`) is harmless.
fn spectral_estimate(a: &MatrixF) -> f64 {
    let n = a.cols();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.618_034).fract()).collect();
    let mut est = 0.0;
    for _ in 0..40 {
        let av: Vec<f64> = (0..a.rows())
            .map(|i| (0..n).map(|j| a[(i, j)] * v[j]).sum())
            .collect();
        let w: Vec<f64> = (0..n)
            .map(|j| (0..a.rows()).map(|i| a[(i, j)] * av[i]).sum())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        est = norm.sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    1.05 * est
}

/// `√(‖A‖₁·‖A‖∞)`, an upper bound on the largest singular value.
fn norm_bound(a: &MatrixF) -> f64 {
    let col = (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let row = (0..a.rows())
        .map(|i| (0..a.cols()).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    (col * row).sqrt()
}

fn swap_sides(f: SvdFactors) -> SvdFactors {
    SvdFactors {
        u: f.v,
        v: f.u,
        ..f
    }
}

/// Float-mode SVD with default settings.
pub fn svd_default(a: &MatrixF) -> Result<SvdFactors> {
    svd(a, &SvdConfig::default())
}
