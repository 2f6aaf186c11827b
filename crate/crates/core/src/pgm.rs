//! Grayscale PGM, binary (`P5`) and plain (`P2`). Pixels map to
//! `value / maxval`; written files always use maxval 255.

use crate::watermark::Image;
use crate::{Error, Result};

/// Header fields and the offset of the first raster byte.
fn header(bytes: &[u8]) -> Result<([usize; 3], &[u8; 2], usize)> {
    let magic: &[u8; 2] = bytes
        .get(..2)
        .and_then(|m| m.try_into().ok())
        .ok_or_else(|| Error::Parse("truncated PGM header".into()))?;
    if magic != b"P5" && magic != b"P2" {
        return Err(Error::Parse("not a P2/P5 PGM file".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for f in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *f = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad PGM header field".into()))?;
    }
    // exactly one whitespace byte separates the header from binary data
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Parse("truncated PGM header".into()));
    }
    Ok((fields, magic, pos + 1))
}

pub fn read_pgm(bytes: &[u8]) -> Result<Image> {
    let ([width, height, maxval], magic, start) = header(bytes)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse(format!("unsupported maxval {maxval}")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::Parse("image too large".into()))?;
    let raw: Vec<usize> = if magic == b"P5" {
        let data = bytes
            .get(start..start + count)
            .ok_or_else(|| Error::Parse("truncated PGM raster".into()))?;
        data.iter().map(|&b| b as usize).collect()
    } else {
        let text = std::str::from_utf8(&bytes[start..]).map_err(|_| Error::Parse("non-ASCII P2 raster".into()))?;
        let vals = text
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad pixel {t:?}"))))
            .collect::<Result<Vec<usize>>>()?;
        if vals.len() != count {
            return Err(Error::Parse(format!("{} pixels, expected {count}", vals.len())));
        }
        vals
    };
    if let Some(v) = raw.iter().find(|&&v| v > maxval) {
        return Err(Error::Parse(format!("pixel {v} above maxval {maxval}")));
    }
    Image::new(width, height, raw.into_iter().map(|v| v as f64 / maxval as f64).collect())
}

fn levels(img: &Image) -> impl Iterator<Item = u8> + '_ {
    img.pixels().iter().map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8)
}

pub fn write_pgm_p5(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(levels(img));
    out
}

pub fn write_pgm_p2(img: &Image) -> String {
    let mut out = format!("P2\n{} {}\n255\n", img.width(), img.height());
    let vals: Vec<u8> = levels(img).collect();
    for row in vals.chunks(img.width()) {
        let line: Vec<String> = row.iter().map(u8::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let img = Image::new(3, 2, vec![0.0, 1.0, 128.0 / 255.0, 7.0 / 255.0, 0.5, 254.0 / 255.0]).unwrap();
        let p5 = write_pgm_p5(&img);
        assert!(p5.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(read_pgm(&p5).unwrap(), img.quantized());
        let p2 = write_pgm_p2(&img);
        assert_eq!(p2, "P2\n3 2\n255\n0 255 128\n7 128 254\n");
        assert_eq!(read_pgm(p2.as_bytes()).unwrap(), img.quantized());
        assert_eq!(write_pgm_p5(&read_pgm(&p5).unwrap()), p5);
    }

    #[test]
    fn header_comments_and_maxval() {
        let img = read_pgm(b"P2 # made by hand\n2 1\n# max\n15\n0 15\n").unwrap();
        assert_eq!(img.pixels(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_pgm(b"P6\n1 1\n255\n\0").is_err());
        assert!(read_pgm(b"P5\n2 2\n255\n\0\0").is_err());
        assert!(read_pgm(b"P2\n1 1\n255\n300\n").is_err());
        assert!(read_pgm(b"P2\n1 1\n65535\n3\n").is_err());
        assert!(read_pgm(b"P5").is_err());
    }
}
