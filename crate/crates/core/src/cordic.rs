//! Circular CORDIC.
//!
//! Microrotation `i` with direction `d = ±1`:
//!
//! ```text
//! x' = x - d·y·2^-i
//! y' = y + d·x·2^-i
//! z' = z - d·atan(2^-i)
//! ```
//!
//! Rotation mode picks `d = sign(z)` (sign(0) = +1) and drives `z → 0`;
//! vectoring mode picks `d = -sign(y)` and drives `y → 0`. Every
//! microrotation stretches the vector by `√(1 + 2^-2i)`; the aggregate gain
//! `K` is divided out once at the end.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::fixedpoint::{quantize, round_shift, QFormat};
use crate::{Error, Result};

pub const MAX_ITERS: usize = 64;
pub const DEFAULT_ITERS: usize = 32;

/// `atan(2^-i)` for `i < iters`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleTable {
    angles: Vec<f64>,
}

impl AngleTable {
    pub fn new(iters: usize) -> Result<Self> {
        if !(1..=MAX_ITERS).contains(&iters) {
            return Err(Error::InvalidArgument(format!(
                "CORDIC iteration count {iters} outside 1..={MAX_ITERS}"
            )));
        }
        Ok(AngleTable {
            angles: (0..iters).map(|i| (-(i as f64)).exp2().atan()).collect(),
        })
    }

    pub fn iters(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Largest angle the bare iteration can reach.
    pub fn range(&self) -> f64 {
        self.angles.iter().sum()
    }
}

/// Microrotation direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Pos,
    Neg,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Pos => 1.0,
            Direction::Neg => -1.0,
        }
    }

    /// `+1` for non-negative values.
    pub fn of(v: f64) -> Self {
        if v >= 0.0 {
            Direction::Pos
        } else {
            Direction::Neg
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Direction::Pos => Direction::Neg,
            Direction::Neg => Direction::Pos,
        }
    }
}

/// `(x, y, z)` registers plus the iteration index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CordicState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub i: usize,
}

impl CordicState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        CordicState { x, y, z, i: 0 }
    }
}

/// One microrotation.
pub fn cordic_iterate(s: CordicState, d: Direction, table: &AngleTable) -> Result<CordicState> {
    let alpha = *table.angles().get(s.i).ok_or(Error::IndexOutOfRange {
        index: s.i,
        limit: table.iters(),
    })?;
    let d = d.sign();
    let k = (-(s.i as f64)).exp2();
    Ok(CordicState {
        x: s.x - d * s.y * k,
        y: s.y + d * s.x * k,
        z: s.z - d * alpha,
        i: s.i + 1,
    })
}

/// `K = Π √(1 + 2^-2i)`.
pub fn cordic_gain(iters: usize) -> f64 {
    (0..iters).map(|i| (1.0 + (-2.0 * i as f64).exp2()).sqrt()).product()
}

/// Exact pre-rotation by a multiple of π/2 that leaves `|angle| ≤ π/4`.
/// Returns the rotated vector and the remaining angle.
fn fold_rotation(x: f64, y: f64, angle: f64) -> (f64, f64, f64) {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    let quarter = (a / FRAC_PI_2).round();
    let rest = a - quarter * FRAC_PI_2;
    let (x, y) = match quarter as i64 {
        0 => (x, y),
        1 => (-y, x),
        -1 => (y, -x),
        _ => (-x, -y),
    };
    (x, y, rest.clamp(-FRAC_PI_4, FRAC_PI_4))
}

/// Exact pre-rotation for vectoring: returns `(x, y, offset)` with `x ≥ |y|`
/// and `atan2(y0, x0) = offset + atan2(y, x)`.
fn fold_vector(x: f64, y: f64) -> (f64, f64, f64) {
    if x >= y.abs() {
        (x, y, 0.0)
    } else if y > x.abs() {
        (y, -x, FRAC_PI_2)
    } else if -y > x.abs() {
        (-y, x, -FRAC_PI_2)
    } else if y >= 0.0 {
        (-x, -y, PI)
    } else {
        (-x, -y, -PI)
    }
}

/// Keeps a vectoring result in the half plane of the input `y`, so residual
/// error near the negative real axis does not wrap around.
fn settle(angle: f64, y: f64) -> f64 {
    if y >= 0.0 {
        angle.clamp(0.0, PI)
    } else {
        angle.clamp(-PI, 0.0)
    }
}

/// Double-precision CORDIC engine with a shared angle table.
#[derive(Debug, Clone)]
pub struct Cordic {
    table: AngleTable,
    inv_gain: f64,
}

impl Cordic {
    pub fn new(iters: usize) -> Result<Self> {
        Ok(Cordic {
            table: AngleTable::new(iters)?,
            inv_gain: 1.0 / cordic_gain(iters),
        })
    }

    pub fn iters(&self) -> usize {
        self.table.iters()
    }

    pub fn table(&self) -> &AngleTable {
        &self.table
    }

    /// Rotation-mode iterations without gain compensation and without folding.
    pub fn rotate_raw(&self, x: f64, y: f64, angle: f64) -> CordicState {
        let mut s = CordicState::new(x, y, angle);
        for _ in 0..self.iters() {
            s = cordic_iterate(s, Direction::of(s.z), &self.table).expect("i < iters");
        }
        s
    }

    /// Directions chosen by rotation mode for `angle` (after folding).
    pub fn rotation_directions(&self, angle: f64) -> Vec<Direction> {
        let (_, _, mut z) = fold_rotation(1.0, 0.0, angle);
        self.table
            .angles()
            .iter()
            .map(|a| {
                let d = Direction::of(z);
                z -= d.sign() * a;
                d
            })
            .collect()
    }

    /// Rotates `(x, y)` by `angle`, gain compensated.
    pub fn rotate(&self, x: f64, y: f64, angle: f64) -> (f64, f64) {
        let (x, y, rest) = fold_rotation(x, y, angle);
        let s = self.rotate_raw(x, y, rest);
        (s.x * self.inv_gain, s.y * self.inv_gain)
    }

    /// Magnitude and `atan2(y, x)` of a non-zero vector.
    pub fn vector(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        if x == 0.0 && y == 0.0 {
            return Err(Error::InvalidArgument("vectoring a zero vector".into()));
        }
        let (fx, fy, offset) = fold_vector(x, y);
        if fy == 0.0 {
            return Ok((fx, offset));
        }
        let mut s = CordicState::new(fx, fy, 0.0);
        for _ in 0..self.iters() {
            s = cordic_iterate(s, Direction::of(s.y).flip(), &self.table)?;
        }
        Ok((s.x * self.inv_gain, settle(offset + s.z, y)))
    }
}

/// Rotate `(x, y)` by `angle` radians with `iters` microrotations.
pub fn cordic_rotate(x: f64, y: f64, angle: f64, iters: usize) -> Result<(f64, f64)> {
    Ok(Cordic::new(iters)?.rotate(x, y, angle))
}

/// `(|v|, atan2(y, x))` with `iters` microrotations.
pub fn cordic_vector(x: f64, y: f64, iters: usize) -> Result<(f64, f64)> {
    Cordic::new(iters)?.vector(x, y)
}

/// Fixed-point CORDIC. Inputs and outputs are in the data format; the
/// `x`, `y` registers carry `guard` extra fraction bits and `z` uses an angle
/// format with three integer bits and the same extended fraction. Shifts
/// truncate like hardware wiring, registers saturate, and results are rounded
/// back to the data format once.
#[derive(Debug, Clone)]
pub struct CordicFixed {
    fmt: QFormat,
    work: QFormat,
    angle_fmt: QFormat,
    angles: Vec<i64>,
    inv_gain: i64,
}

/// Registers of the fixed-point engine, in the working format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CordicStateQ {
    pub x: i64,
    pub y: i64,
    pub z: i64,
    pub i: usize,
}

impl CordicFixed {
    /// `iters = None` selects `frac_bits + 2`. Guard bits default to the bit
    /// length of the iteration count.
    pub fn new(fmt: QFormat, iters: Option<usize>) -> Result<Self> {
        let iters = iters.unwrap_or(fmt.frac_bits() as usize + 2);
        Self::with_guard(fmt, Some(iters), usize::BITS - iters.leading_zeros())
    }

    pub fn with_guard(fmt: QFormat, iters: Option<usize>, guard: u32) -> Result<Self> {
        if fmt.int_bits() < 2 {
            return Err(Error::InvalidArgument(format!(
                "{fmt} has no headroom for the CORDIC gain"
            )));
        }
        let iters = iters.unwrap_or(fmt.frac_bits() as usize + 2);
        let table = AngleTable::new(iters)?;
        let frac = (fmt.frac_bits() + guard).min(60 - fmt.int_bits().min(60));
        let work = QFormat::new(fmt.int_bits(), frac)?;
        let angle_fmt = QFormat::new(3, frac.min(60))?;
        let angles = table
            .angles()
            .iter()
            .map(|&a| quantize(a, angle_fmt).0.raw())
            .collect();
        Ok(CordicFixed {
            fmt,
            work,
            angle_fmt,
            angles,
            inv_gain: quantize(1.0 / cordic_gain(iters), work).0.raw(),
        })
    }

    pub fn fmt(&self) -> QFormat {
        self.fmt
    }

    /// Internal register format.
    pub fn work_fmt(&self) -> QFormat {
        self.work
    }

    pub fn angle_fmt(&self) -> QFormat {
        self.angle_fmt
    }

    pub fn guard_bits(&self) -> u32 {
        self.work.frac_bits() - self.fmt.frac_bits()
    }

    pub fn iters(&self) -> usize {
        self.angles.len()
    }

    fn sat(&self, v: i128, ovf: &mut bool) -> i64 {
        let (r, o) = self.work.saturate(v);
        *ovf |= o;
        r
    }

    fn load(&self, v: f64, ovf: &mut bool) -> i64 {
        let (q, o) = quantize(v, self.fmt);
        *ovf |= o;
        q.raw() << self.guard_bits()
    }

    fn step(&self, s: CordicStateQ, d: Direction, ovf: &mut bool) -> CordicStateQ {
        let (x, y) = (s.x as i128, s.y as i128);
        let (dx, dy) = (y >> s.i, x >> s.i);
        let (x, y, z) = match d {
            Direction::Pos => (x - dx, y + dy, s.z - self.angles[s.i]),
            Direction::Neg => (x + dx, y - dy, s.z + self.angles[s.i]),
        };
        CordicStateQ {
            x: self.sat(x, ovf),
            y: self.sat(y, ovf),
            z,
            i: s.i + 1,
        }
    }

    /// Gain compensation and rounding back to the data format.
    fn store(&self, v: i64, ovf: &mut bool) -> f64 {
        let shift = self.work.frac_bits() + self.guard_bits();
        let (r, o) = self.fmt.saturate(round_shift(v as i128 * self.inv_gain as i128, shift));
        *ovf |= o;
        r as f64 * self.fmt.step()
    }

    /// Rotation mode on quantized inputs. Returns the rotated pair, the
    /// direction sequence, and the overflow flag.
    pub fn rotate(&self, x: f64, y: f64, angle: f64) -> ((f64, f64), Vec<Direction>, bool) {
        let (x, y, rest) = fold_rotation(x, y, angle);
        let mut ovf = false;
        let mut s = CordicStateQ {
            x: self.load(x, &mut ovf),
            y: self.load(y, &mut ovf),
            z: quantize(rest, self.angle_fmt).0.raw(),
            i: 0,
        };
        let mut dirs = Vec::with_capacity(self.iters());
        for _ in 0..self.iters() {
            let d = if s.z >= 0 { Direction::Pos } else { Direction::Neg };
            dirs.push(d);
            s = self.step(s, d, &mut ovf);
        }
        let rx = self.store(s.x, &mut ovf);
        let ry = self.store(s.y, &mut ovf);
        ((rx, ry), dirs, ovf)
    }

    /// Vectoring mode: `(magnitude, angle)` with the angle on the angle grid.
    pub fn vector(&self, x: f64, y: f64) -> Result<(f64, f64, bool)> {
        let mut ovf = false;
        let (qx, o1) = quantize(x, self.fmt);
        let (qy, o2) = quantize(y, self.fmt);
        ovf |= o1 | o2;
        if qx.raw() == 0 && qy.raw() == 0 {
            return Err(Error::InvalidArgument("vectoring a zero vector".into()));
        }
        let (fx, fy, offset) = fold_vector(qx.to_real(), qy.to_real());
        let offset_q = quantize(offset, self.angle_fmt).0.raw();
        if fy == 0.0 {
            return Ok((fx, offset_q as f64 * self.angle_fmt.step(), ovf));
        }
        let mut s = CordicStateQ {
            x: self.load(fx, &mut ovf),
            y: self.load(fy, &mut ovf),
            z: 0,
            i: 0,
        };
        for _ in 0..self.iters() {
            let d = if s.y >= 0 { Direction::Neg } else { Direction::Pos };
            s = self.step(s, d, &mut ovf);
        }
        let mag = self.store(s.x, &mut ovf);
        let z = offset_q + s.z;
        Ok((mag, settle(z as f64 * self.angle_fmt.step(), qy.to_real()), ovf))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn angle_table_examples() {
        let t = AngleTable::new(1).unwrap();
        assert_eq!(t.angles(), &[FRAC_PI_4]);
        let t = AngleTable::new(32).unwrap();
        assert!((t.angles()[1] - 0.463_647_609_000_806_1).abs() < 1e-15);
        // Σ atan(2^-i), i < 32, summed independently in extended steps
        let mut sum = 0.0f64;
        for i in (0..32).rev() {
            sum += (0.5f64).powi(i).atan();
        }
        assert!((t.range() - sum).abs() < 1e-14);
        assert!((t.range() - 1.743_286_620_006_678_7).abs() < 1e-12);
        assert!(t.angles().windows(2).all(|w| w[0] > w[1]));
        assert!(AngleTable::new(0).is_err());
        assert!(AngleTable::new(65).is_err());
        for iters in 4..=64 {
            assert!(AngleTable::new(iters).unwrap().range() > FRAC_PI_2);
        }
    }

    #[test]
    fn iterate_examples() {
        let t = AngleTable::new(32).unwrap();
        let s = cordic_iterate(CordicState::new(1.0, 0.0, FRAC_PI_4), Direction::Pos, &t).unwrap();
        assert_eq!(s, CordicState { x: 1.0, y: 1.0, z: 0.0, i: 1 });

        let s0 = CordicState { x: 0.3, y: -0.8, z: 0.1, i: 5 };
        let fwd = cordic_iterate(s0, Direction::Pos, &t).unwrap();
        let back = cordic_iterate(CordicState { i: 5, ..fwd }, Direction::Neg, &t).unwrap();
        assert_eq!(back.z, s0.z);
        let second_order = (2.0f64).powi(-10);
        assert!((back.x - s0.x * (1.0 + second_order)).abs() < 1e-15);
        assert!((back.y - s0.y * (1.0 + second_order)).abs() < 1e-15);

        let theta = 0.9;
        let mut s = CordicState::new(1.0, 0.0, theta);
        for _ in 0..32 {
            s = cordic_iterate(s, Direction::of(s.z), &t).unwrap();
        }
        assert!(s.z.abs() <= (2.0f64).powi(-31).atan());
        assert!(cordic_iterate(s, Direction::Pos, &t).is_err());
    }

    #[test]
    fn gain_examples() {
        assert!((cordic_gain(1) - 2f64.sqrt()).abs() < 1e-15);
        assert!((cordic_gain(2) - 1.581_138_830_084_189_8).abs() < 1e-15);
        assert!((cordic_gain(32) - 1.646_760_258_121_065_6).abs() < 1e-12);
    }

    #[test]
    fn rotate_examples() {
        let (x, y) = cordic_rotate(1.0, 0.0, FRAC_PI_4, 32).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((x - h).abs() < 2e-9 && (y - h).abs() < 2e-9);
        let (x, y) = cordic_rotate(0.3, -0.4, 0.0, 32).unwrap();
        assert!((x - 0.3).abs() < 2f64.powi(-31) && (y + 0.4).abs() < 2f64.powi(-31));
        let (x, y) = cordic_rotate(0.6, 0.8, 1.0, 32).unwrap();
        let (s, c) = 1f64.sin_cos();
        let (ex, ey) = (0.6 * c - 0.8 * s, 0.6 * s + 0.8 * c);
        // 30-digit evaluation of the rotation matrix
        assert!((ex + 0.348_995_404_325_433_4).abs() < 1e-15);
        assert!((ey - 0.937_124_435_579_249_7).abs() < 1e-15);
        assert!((x - ex).abs() < 2f64.powi(-31) && (y - ey).abs() < 2f64.powi(-31));
    }

    #[test]
    fn vector_examples() {
        let tol = 2f64.powi(-31);
        let (m, a) = cordic_vector(1.0, 1.0, 32).unwrap();
        assert!((m - 2f64.sqrt()).abs() < 2f64.sqrt() * tol && (a - FRAC_PI_4).abs() < tol);
        let (m, a) = cordic_vector(1.0, 0.0, 32).unwrap();
        assert!((m - 1.0).abs() < tol && a.abs() < tol);
        let (m, a) = cordic_vector(-3.0, 4.0, 32).unwrap();
        assert!((m - 5.0).abs() < 5.0 * tol);
        assert!((a - (PI - (4.0f64 / 3.0).atan())).abs() < tol);
        assert!((a - 2.2143).abs() < 1e-4);
        let (_, a) = cordic_vector(-1.0, 0.0, 32).unwrap();
        assert!((a - PI).abs() < tol);
        assert!(cordic_vector(0.0, 0.0, 32).is_err());
    }

    #[test]
    fn uncompensated_gain_is_deterministic() {
        let c = Cordic::new(32).unwrap();
        let k = cordic_gain(32);
        for &theta in &[0.0, 0.3, -0.7, 1.2, -1.5] {
            let s = c.rotate_raw(0.6, 0.8, theta);
            assert!((s.x.hypot(s.y) - k).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_engine() {
        let f = QFormat::Q2_14;
        let e = CordicFixed::new(f, None).unwrap();
        assert_eq!(e.iters(), 16);
        let ((x, y), _, ovf) = e.rotate(0.6, 0.8, 1.0);
        assert!(!ovf);
        let (s, c) = 1f64.sin_cos();
        let tol = 16.0 * f.step();
        assert!((x - (0.6 * c - 0.8 * s)).abs() < tol && (y - (0.6 * s + 0.8 * c)).abs() < tol);
        let (m, a, _) = e.vector(-0.3, 0.4).unwrap();
        assert!((m - 0.5).abs() < tol && (a - 0.4f64.atan2(-0.3)).abs() < tol);
        assert!(e.vector(0.0, 0.0).is_err());
        assert!(CordicFixed::new(QFormat::new(1, 15).unwrap(), None).is_err());
    }

    /// Rotation-mode decisions only depend on `z`; fixed and float agree as
    /// long as the float residual stays clear of the accumulated angle error.
    #[test]
    fn fixed_and_float_directions_agree() {
        let f = QFormat::Q2_14;
        let fixed = CordicFixed::new(f, Some(16)).unwrap();
        let float = Cordic::new(16).unwrap();
        let mut theta = -3.0;
        while theta < 3.0 {
            let (_, dq, _) = fixed.rotate(0.5, 0.1, theta);
            let df = float.rotation_directions(theta);
            let (_, _, mut z) = fold_rotation(1.0, 0.0, theta);
            for i in 0..16 {
                // angle quantization error after i steps
                if z.abs() <= (i as f64 + 1.0) * f.step() {
                    break;
                }
                assert_eq!(dq[i], df[i], "theta {theta} step {i}");
                z -= df[i].sign() * float.table().angles()[i];
            }
            theta += 0.0137;
        }
    }

    proptest! {
        #[test]
        fn rotation_error_bound(x in -1.0f64..1.0, y in -1.0f64..1.0, theta in -10.0f64..10.0, iters in 8usize..=40) {
            let c = Cordic::new(iters).unwrap();
            let (rx, ry) = c.rotate(x, y, theta);
            let (s, co) = theta.sin_cos();
            let (ex, ey) = (x * co - y * s, x * s + y * co);
            let bound = x.hypot(y) * (2f64.powi(-(iters as i32) + 1) + 1e-15) + 1e-15;
            prop_assert!((rx - ex).hypot(ry - ey) <= bound);
            prop_assert!((rx.hypot(ry) - x.hypot(y)).abs() <= bound);
        }

        #[test]
        fn angle_additivity(alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let c = Cordic::new(32).unwrap();
            let (x1, y1) = c.rotate(0.6, 0.8, alpha);
            let (x2, y2) = c.rotate(x1, y1, beta);
            let (s, co) = (alpha + beta).sin_cos();
            let (x3, y3) = (0.6 * co - 0.8 * s, 0.6 * s + 0.8 * co);
            prop_assert!((x2 - x3).hypot(y2 - y3) <= 2.0 * 2f64.powi(-31) + 1e-15);
        }

        #[test]
        fn vectoring_inverts_rotation(m in 0.01f64..10.0, theta in -3.1f64..3.1) {
            let c = Cordic::new(32).unwrap();
            let tol = 2f64.powi(-31);
            let (x, y) = (m * theta.cos(), m * theta.sin());
            let (rx, ry) = c.rotate(x, y, -theta);
            prop_assert!((rx - m).abs() <= m * tol + 1e-14 && ry.abs() <= m * tol + 1e-14);
            let (vm, va) = c.vector(x, y).unwrap();
            prop_assert!((vm - m).abs() <= m * tol + 1e-14);
            prop_assert!((va - theta).abs() <= tol + 1e-15);
        }
    }
}
