//! Plain-text vector and matrix files.
//!
//! Complex vector: first line `n`, then `n` lines of `re im`.
//! Matrix: first line `rows cols`, then `rows·cols` whitespace-separated reals.
//! A real vector uses the complex-vector header with one value per line.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;

use crate::matrix::MatrixF;
use crate::{Error, Result};

/// Shortest representation that parses back to the same `f64`.
/// Shortest text that parses back to `x`; integers print without a point.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn parse_num<T: FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::Parse(format!("bad {what}: {tok:?}")))
}

fn expect_end<'a>(mut toks: impl Iterator<Item = &'a str>) -> Result<()> {
    match toks.next() {
        None => Ok(()),
        Some(t) => Err(Error::Parse(format!("trailing data: {t:?}"))),
    }
}

pub fn write_complex_vector(v: &[Complex64]) -> String {
    let mut s = format!("{}\n", v.len());
    for z in v {
        let _ = writeln!(s, "{} {}", num(z.re), num(z.im));
    }
    s
}

pub fn parse_complex_vector(text: &str) -> Result<Vec<Complex64>> {
    let mut toks = text.split_whitespace();
    let n: usize = parse_num(toks.next(), "length")?;
    let v = (0..n)
        .map(|i| {
            let re = parse_num(toks.next(), &format!("re[{i}]"))?;
            let im = parse_num(toks.next(), &format!("im[{i}]"))?;
            Ok(Complex64::new(re, im))
        })
        .collect::<Result<Vec<_>>>()?;
    expect_end(toks)?;
    Ok(v)
}

pub fn write_real_vector(v: &[f64]) -> String {
    let mut s = format!("{}\n", v.len());
    for x in v {
        let _ = writeln!(s, "{}", num(*x));
    }
    s
}

pub fn parse_real_vector(text: &str) -> Result<Vec<f64>> {
    let mut toks = text.split_whitespace();
    let n: usize = parse_num(toks.next(), "length")?;
    let v = (0..n)
        .map(|i| parse_num(toks.next(), &format!("value[{i}]")))
        .collect::<Result<Vec<f64>>>()?;
    expect_end(toks)?;
    Ok(v)
}

pub fn write_matrix(m: &MatrixF) -> String {
    let mut s = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| num(m[(i, j)])).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_matrix(text: &str) -> Result<MatrixF> {
    let mut toks = text.split_whitespace();
    let rows: usize = parse_num(toks.next(), "row count")?;
    let cols: usize = parse_num(toks.next(), "column count")?;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Parse("matrix too large".into()))?;
    let data = (0..len)
        .map(|k| parse_num(toks.next(), &format!("entry {k}")))
        .collect::<Result<Vec<f64>>>()?;
    expect_end(toks)?;
    MatrixF::from_vec(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats() {
        let v = vec![Complex64::new(1.0, 0.0), Complex64::new(-0.5, 2.25)];
        assert_eq!(write_complex_vector(&v), "2\n1 0\n-0.5 2.25\n");
        assert_eq!(parse_complex_vector("2\n1 0\n-0.5 2.25").unwrap(), v);
        let m = MatrixF::from_rows(&[&[3.0, 0.0], &[4.0, 5.0]]).unwrap();
        assert_eq!(write_matrix(&m), "2 2\n3 0\n4 5\n");
        assert_eq!(parse_matrix("2 2 3 0 4 5").unwrap(), m);
        assert_eq!(write_real_vector(&[3.0, 2.0]), "2\n3\n2\n");
        assert_eq!(write_real_vector(&[1e300, -2.5e-7, 0.1]), "3\n1e300\n-2.5e-7\n0.1\n");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_complex_vector(""), Err(Error::Parse(_))));
        assert!(matches!(parse_complex_vector("2\n1 0\n1"), Err(Error::Parse(_))));
        assert!(matches!(parse_complex_vector("1\n1 0\n7"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("2 2 1 x 3 4"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("0 2"), Err(Error::Dimension(_))));
        assert!(matches!(parse_real_vector("-1"), Err(Error::Parse(_))));
    }

    proptest! {
        #[test]
        fn vector_round_trip(v in prop::collection::vec((-1e300f64..1e300, -1e-300f64..1e-300), 0..20)) {
            let v: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            prop_assert_eq!(parse_complex_vector(&write_complex_vector(&v)).unwrap(), v);
        }

        #[test]
        fn matrix_round_trip(r in 1usize..6, c in 1usize..6, seed in any::<u64>()) {
            let data: Vec<f64> = (0..r * c).map(|k| f64::from_bits(seed.rotate_left(k as u32) >> 2)).collect();
            let m = MatrixF::from_vec(r, c, data).unwrap();
            prop_assert_eq!(parse_matrix(&write_matrix(&m)).unwrap(), m);
        }
    }
}
