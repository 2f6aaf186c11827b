//! Brute-force double-precision references.
//!
//! Nothing here is clever on purpose: the DFT is a direct O(N²) sum and the
//! SVD is a textbook Householder QR followed by cyclic two-sided Jacobi with
//! closed-form 2x2 rotations. These are the ground truth for the accelerated
//! paths.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::matrix::MatrixF;
use crate::svd::SvdFactors;
use crate::{Error, Result};

const ORACLE_MAX_SWEEPS: usize = 60;

fn roots(n: usize, sign: f64) -> Vec<Complex64> {
    (0..n)
        .map(|j| {
            let theta = sign * 2.0 * PI * j as f64 / n as f64;
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect()
}

/// `X[k] = Σ x[n]·exp(-2πi·kn/N)` by direct summation, any length.
pub fn dft_naive(x: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let w = roots(n, -1.0);
    Ok((0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, &xj)| xj * w[(k * j) % n])
                .sum()
        })
        .collect())
}

/// `x[n] = (1/N)·Σ X[k]·exp(+2πi·kn/N)`.
pub fn idft_naive(x: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let w = roots(n, 1.0);
    let scale = 1.0 / n as f64;
    Ok((0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, &xj)| xj * w[(k * j) % n])
                .sum::<Complex64>()
                * scale
        })
        .collect())
}

/// Householder QR of a tall matrix: returns full `Q` (m×m) and the top `n×n`
/// block of `R`.
fn householder_qr(a: &MatrixF) -> (MatrixF, MatrixF) {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut q = MatrixF::identity(m);
    for k in 0..n.min(m - 1) {
        let norm = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vnorm);
        for j in 0..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
            for i in k..m {
                r[(i, j)] -= 2.0 * v[i - k] * dot;
            }
        }
        for i in 0..m {
            let dot: f64 = (k..m).map(|j| q[(i, j)] * v[j - k]).sum();
            for j in k..m {
                q[(i, j)] -= 2.0 * dot * v[j - k];
            }
        }
    }
    (q, r.block(n, n))
}

fn off_norm(m: &MatrixF) -> f64 {
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

/// Closed-form 2x2 SVD rotations: returns `(left, right)` as `[c, s]` pairs
/// for `L = [[c, s], [-s, c]]`, with `L·B·R` diagonal.
fn closed_form_2x2(a: f64, b: f64, c: f64, d: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    // symmetrize: rows rotated by phi, with tan(phi) = (b - c)/(a + d)
    let phi = (b - c).atan2(a + d);
    let (sp, cp) = phi.sin_cos();
    let sym = [[cp, -sp], [sp, cp]];
    let p = cp * a - sp * c;
    let r = cp * b - sp * d;
    let q = sp * b + cp * d;
    // symmetric Jacobi on [[p, r], [r, q]]
    let (cs, sn) = if r == 0.0 {
        (1.0, 0.0)
    } else {
        let zeta = (q - p) / (2.0 * r);
        let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
        let cs = 1.0 / (1.0 + t * t).sqrt();
        (cs, t * cs)
    };
    let j = [[cs, sn], [-sn, cs]];
    // left = Jᵀ·sym
    let left = [
        [j[0][0] * sym[0][0] + j[1][0] * sym[1][0], j[0][0] * sym[0][1] + j[1][0] * sym[1][1]],
        [j[0][1] * sym[0][0] + j[1][1] * sym[1][0], j[0][1] * sym[0][1] + j[1][1] * sym[1][1]],
    ];
    (left, j)
}

/// Classical two-sided Jacobi SVD. `tol` bounds the final off-diagonal norm
/// relative to `‖A‖_F`.
pub fn svd_oracle(a: &MatrixF, tol: f64) -> Result<SvdFactors> {
    if a.rows() < a.cols() {
        let t = svd_oracle(&a.transpose(), tol)?;
        return Ok(SvdFactors {
            u: t.v,
            v: t.u,
            ..t
        });
    }
    let (m, n) = (a.rows(), a.cols());
    let (q, mut r) = householder_qr(a);
    let scale = a.frobenius();
    let mut ur = MatrixF::identity(n);
    let mut v = MatrixF::identity(n);
    let mut history = vec![off_norm(&r)];
    let mut sweeps = 0;
    while off_norm(&r) > tol * scale && scale > 0.0 {
        if sweeps == ORACLE_MAX_SWEEPS {
            let residual = off_norm(&r) / scale;
            return Err(Error::NoConvergence {
                residual,
                sweeps,
                partial: Box::new(SvdFactors {
                    u: q,
                    sigma: (0..n).map(|i| r[(i, i)]).collect(),
                    v,
                    sweeps_used: sweeps,
                    residual,
                    sweep_residuals: history,
                }),
            });
        }
        for p in 0..n {
            for qq in p + 1..n {
                let (b, c) = (r[(p, qq)], r[(qq, p)]);
                if b == 0.0 && c == 0.0 {
                    continue;
                }
                let (left, right) = closed_form_2x2(r[(p, p)], b, c, r[(qq, qq)]);
                for j in 0..n {
                    let (x, y) = (r[(p, j)], r[(qq, j)]);
                    r[(p, j)] = left[0][0] * x + left[0][1] * y;
                    r[(qq, j)] = left[1][0] * x + left[1][1] * y;
                }
                for i in 0..n {
                    let (x, y) = (r[(i, p)], r[(i, qq)]);
                    r[(i, p)] = x * right[0][0] + y * right[1][0];
                    r[(i, qq)] = x * right[0][1] + y * right[1][1];
                    let (x, y) = (v[(i, p)], v[(i, qq)]);
                    v[(i, p)] = x * right[0][0] + y * right[1][0];
                    v[(i, qq)] = x * right[0][1] + y * right[1][1];
                    // U ← U·leftᵀ
                    let (x, y) = (ur[(i, p)], ur[(i, qq)]);
                    ur[(i, p)] = x * left[0][0] + y * left[0][1];
                    ur[(i, qq)] = x * left[1][0] + y * left[1][1];
                }
            }
        }
        sweeps += 1;
        history.push(off_norm(&r));
    }
    let mut sigma: Vec<f64> = (0..n).map(|i| r[(i, i)]).collect();
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
    let mut u_full = MatrixF::identity(m);
    let mut v_sorted = MatrixF::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            u_full[(k, dst)] = ur[(k, src)];
            v_sorted[(k, dst)] = v[(k, src)];
        }
    }
    let u = q.matmul(&u_full)?;
    let residual = if scale > 0.0 { off_norm(&r) / scale } else { 0.0 };
    Ok(SvdFactors {
        u,
        sigma: order.iter().map(|&i| sigma[i]).collect(),
        v: v_sorted,
        sweeps_used: sweeps,
        residual,
        sweep_residuals: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> MatrixF {
        MatrixF::from_vec(m, n, (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn dft_examples() {
        assert_eq!(dft_naive(&[c(1., 0.)]).unwrap(), vec![c(1., 0.)]);
        assert!(close(&dft_naive(&[c(1., 0.), c(1., 0.)]).unwrap(), &[c(2., 0.), c(0., 0.)], 1e-15));
        let x = [c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)];
        assert!(close(&dft_naive(&x).unwrap(), &[c(1., 0.), c(0., -1.), c(-1., 0.), c(0., 1.)], 1e-15));
        assert!(matches!(dft_naive(&[]), Err(Error::EmptyInput)));
        // non power of two: N = 3 constant
        let y = dft_naive(&[c(1., 0.); 3]).unwrap();
        assert!(close(&y, &[c(3., 0.), c(0., 0.), c(0., 0.)], 1e-15));
    }

    #[test]
    fn idft_examples() {
        assert_eq!(idft_naive(&[c(2., 0.), c(0., 0.)]).unwrap(), vec![c(1., 0.), c(1., 0.)]);
        let y = idft_naive(&[c(1., 0.); 4]).unwrap();
        assert!(close(&y, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)], 1e-15));
        assert!(idft_naive(&[]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<_> = (0..128).map(|_| c(rng.gen(), rng.gen())).collect();
        assert!(close(&idft_naive(&dft_naive(&x).unwrap()).unwrap(), &x, 1e-12));
    }

    #[test]
    fn svd_examples() {
        let f = svd_oracle(&MatrixF::diag(&[3.0, 2.0]), 1e-14).unwrap();
        assert_eq!(f.sigma, vec![3.0, 2.0]);
        for i in 0..2 {
            assert!((f.u[(i, i)].abs() - 1.0).abs() < 1e-15);
            assert!((f.v[(i, i)].abs() - 1.0).abs() < 1e-15);
        }
        let f = svd_oracle(&MatrixF::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap(), 1e-14).unwrap();
        assert!((f.sigma[0] - 1.0).abs() < 1e-15 && (f.sigma[1] - 1.0).abs() < 1e-15);
        let a = MatrixF::from_rows(&[&[3.0, 0.0], &[4.0, 5.0]]).unwrap();
        let f = svd_oracle(&a, 1e-14).unwrap();
        assert!((f.sigma[0] - 45f64.sqrt()).abs() < 1e-12);
        assert!((f.sigma[1] - 5f64.sqrt()).abs() < 1e-12);
        assert!(f.reconstruction_error(&a) < 1e-14);
    }

    #[test]
    fn svd_random_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(m, n) in &[(1, 1), (5, 3), (3, 5), (8, 8), (64, 64), (7, 1), (1, 6)] {
            let a = random_matrix(&mut rng, m, n);
            let f = svd_oracle(&a, 1e-14).unwrap();
            assert_eq!((f.u.rows(), f.u.cols(), f.v.rows()), (m, m, n));
            assert_eq!(f.sigma.len(), m.min(n));
            assert!(f.reconstruction_error(&a) <= 1e-12, "{m}x{n}");
            assert!(f.u.orthogonality_error() < 1e-12);
            assert!(f.v.orthogonality_error() < 1e-12);
            assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
            assert!(f.sigma.iter().all(|&s| s >= 0.0));
        }
    }

    #[test]
    fn orthogonal_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 10, 10);
        let q = svd_oracle(&random_matrix(&mut rng, 10, 10), 1e-14).unwrap().u;
        let s1 = svd_oracle(&a, 1e-14).unwrap().sigma;
        let s2 = svd_oracle(&q.matmul(&a).unwrap(), 1e-14).unwrap().sigma;
        for (x, y) in s1.iter().zip(&s2) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_and_rank_deficient() {
        let f = svd_oracle(&MatrixF::zeros(3, 3), 1e-14).unwrap();
        assert_eq!(f.sigma, vec![0.0; 3]);
        let a = MatrixF::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]).unwrap();
        let f = svd_oracle(&a, 1e-14).unwrap();
        assert!((f.sigma[0] - 70f64.sqrt()).abs() < 1e-12);
        assert!(f.sigma[1].abs() < 1e-12);
        assert!(f.reconstruction_error(&a) < 1e-14);
    }
}
