//! Image and point-cloud files.
//!
//! * depth: PFM `Pf`, one channel; UV: PFM `PF` with R = u, G = v,
//!   B = coverage. Scale line `-1.0` (little-endian), rows stored bottom to
//!   top.
//! * color: PPM `P6`, RGBA: PAM `P7` (`DEPTH 4`, `TUPLTYPE RGB_ALPHA`),
//!   part masks: PGM `P5`. All 8-bit with maxval 255.
//! * point clouds: ASCII PLY with `x y z nx ny nz`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::image::Image;
use crate::Vec3;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(msg: impl Into<String>) -> FormatError {
    FormatError::Parse(msg.into())
}

pub fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>, FormatError> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open(path: impl AsRef<Path>) -> Result<BufReader<File>, FormatError> {
    Ok(BufReader::new(File::open(path)?))
}

/// Reads whitespace-separated header tokens, skipping `#` comments, and
/// consumes exactly one whitespace byte after the last token.
fn read_tokens<R: Read>(r: &mut R, count: usize) -> Result<Vec<String>, FormatError> {
    let mut tokens = Vec::with_capacity(count);
    let mut current = String::new();
    let mut in_comment = false;
    let mut byte = [0u8; 1];
    while tokens.len() < count {
        if r.read(&mut byte)? == 0 {
            return Err(parse_err("unexpected end of header"));
        }
        let c = byte[0];
        if in_comment {
            in_comment = c != b'\n';
            continue;
        }
        if c == b'#' && current.is_empty() {
            in_comment = true;
        } else if c.is_ascii_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else {
            current.push(c as char);
        }
    }
    Ok(tokens)
}

fn parse_usize(s: &str, what: &str) -> Result<usize, FormatError> {
    s.parse().map_err(|_| parse_err(format!("bad {what} '{s}'")))
}

fn read_pnm_header<R: Read>(r: &mut R, magic: &str) -> Result<(usize, usize), FormatError> {
    let t = read_tokens(r, 4)?;
    if t[0] != magic {
        return Err(parse_err(format!("expected {magic}, found '{}'", t[0])));
    }
    let (w, h) = (parse_usize(&t[1], "width")?, parse_usize(&t[2], "height")?);
    if t[3] != "255" {
        return Err(parse_err(format!("only maxval 255 is supported, found {}", t[3])));
    }
    Ok((w, h))
}

fn read_body<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>, FormatError> {
    let mut body = vec![0u8; len];
    r.read_exact(&mut body).map_err(|_| parse_err("truncated pixel data"))?;
    Ok(body)
}

pub fn write_pgm<W: Write>(mut w: W, img: &Image<u8>) -> Result<(), FormatError> {
    write!(w, "P5\n{} {}\n255\n", img.width(), img.height())?;
    w.write_all(img.data())?;
    w.flush()?;
    Ok(())
}

pub fn read_pgm<R: Read>(mut r: R) -> Result<Image<u8>, FormatError> {
    let (w, h) = read_pnm_header(&mut r, "P5")?;
    Ok(Image::from_vec(w, h, read_body(&mut r, w * h)?).unwrap())
}

pub fn write_ppm<W: Write>(mut w: W, img: &Image<[u8; 3]>) -> Result<(), FormatError> {
    write!(w, "P6\n{} {}\n255\n", img.width(), img.height())?;
    w.write_all(&img.data().concat())?;
    w.flush()?;
    Ok(())
}

pub fn read_ppm<R: Read>(mut r: R) -> Result<Image<[u8; 3]>, FormatError> {
    let (w, h) = read_pnm_header(&mut r, "P6")?;
    let body = read_body(&mut r, w * h * 3)?;
    Ok(Image::from_vec(w, h, body.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()).unwrap())
}

pub fn write_pam<W: Write>(mut w: W, img: &Image<[u8; 4]>) -> Result<(), FormatError> {
    write!(w, "P7\nWIDTH {}\nHEIGHT {}\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGB_ALPHA\nENDHDR\n", img.width(), img.height())?;
    w.write_all(&img.data().concat())?;
    w.flush()?;
    Ok(())
}

pub fn read_pam<R: BufRead>(mut r: R) -> Result<Image<[u8; 4]>, FormatError> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != "P7" {
        return Err(parse_err("expected P7"));
    }
    let (mut w, mut h, mut depth, mut maxval) = (None, None, None, None);
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(parse_err("missing ENDHDR"));
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next()) {
            (Some("ENDHDR"), _) => break,
            (Some("WIDTH"), Some(v)) => w = Some(parse_usize(v, "width")?),
            (Some("HEIGHT"), Some(v)) => h = Some(parse_usize(v, "height")?),
            (Some("DEPTH"), Some(v)) => depth = Some(parse_usize(v, "depth")?),
            (Some("MAXVAL"), Some(v)) => maxval = Some(parse_usize(v, "maxval")?),
            _ => {}
        }
    }
    let (w, h) = w.zip(h).ok_or_else(|| parse_err("missing WIDTH or HEIGHT"))?;
    if depth != Some(4) || maxval != Some(255) {
        return Err(parse_err("only 8-bit RGBA PAM files are supported"));
    }
    let body = read_body(&mut r, w * h * 4)?;
    Ok(Image::from_vec(w, h, body.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect()).unwrap())
}

fn write_pfm<W: Write>(mut w: W, tag: &str, width: usize, height: usize, channels: usize, data: &[f32]) -> Result<(), FormatError> {
    write!(w, "{tag}\n{width} {height}\n-1.0\n")?;
    let mut body = Vec::with_capacity(data.len() * 4);
    for row in data.chunks_exact(width * channels).rev() {
        for v in row {
            body.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

pub fn write_pfm_gray<W: Write>(w: W, img: &Image<f32>) -> Result<(), FormatError> {
    write_pfm(w, "Pf", img.width(), img.height(), 1, img.data())
}

pub fn write_pfm_rgb<W: Write>(w: W, img: &Image<[f32; 3]>) -> Result<(), FormatError> {
    write_pfm(w, "PF", img.width(), img.height(), 3, &img.data().concat())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pfm {
    Gray(Image<f32>),
    Rgb(Image<[f32; 3]>),
}

pub fn read_pfm<R: Read>(mut r: R) -> Result<Pfm, FormatError> {
    let t = read_tokens(&mut r, 4)?;
    let channels = match t[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(parse_err(format!("expected Pf or PF, found '{other}'"))),
    };
    let (w, h) = (parse_usize(&t[1], "width")?, parse_usize(&t[2], "height")?);
    let scale: f64 = t[3].parse().map_err(|_| parse_err(format!("bad scale '{}'", t[3])))?;
    let little = scale < 0.0;
    let body = read_body(&mut r, w * h * channels * 4)?;
    let floats: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    let mut top_down = Vec::with_capacity(floats.len());
    for row in floats.chunks_exact((w * channels).max(1)).rev() {
        top_down.extend_from_slice(row);
    }
    Ok(match channels {
        1 => Pfm::Gray(Image::from_vec(w, h, top_down).unwrap()),
        _ => Pfm::Rgb(Image::from_vec(w, h, top_down.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()).unwrap()),
    })
}

/// Writes `x y z nx ny nz` per point in shortest round-trip decimal form.
pub fn write_ply<W: Write>(mut w: W, points: &[Vec3], normals: &[Vec3]) -> Result<(), FormatError> {
    if points.len() != normals.len() {
        return Err(parse_err("points and normals differ in length"));
    }
    write!(
        w,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
         property double nx\nproperty double ny\nproperty double nz\nend_header\n",
        points.len()
    )?;
    for (p, n) in points.iter().zip(normals) {
        writeln!(w, "{} {} {} {} {} {}", p.x, p.y, p.z, n.x, n.y, n.z)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an ASCII PLY vertex element with position and normal properties.
pub fn read_ply<R: BufRead>(r: R) -> Result<(Vec<Vec3>, Vec<Vec3>), FormatError> {
    let mut lines = r.lines();
    let mut next =
        || -> Result<String, FormatError> { lines.next().ok_or_else(|| parse_err("unexpected end of file"))?.map_err(Into::into) };
    if next()?.trim() != "ply" {
        return Err(parse_err("missing 'ply' magic"));
    }
    let mut count = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    loop {
        let line = next()?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => return Err(parse_err(format!("unsupported PLY format '{fmt}'"))),
            ["element", "vertex", n] => {
                count = Some(parse_usize(n, "vertex count")?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", _, name] if in_vertex => props.push(name.to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    let count = count.ok_or_else(|| parse_err("no vertex element"))?;
    let col = |name: &str| props.iter().position(|p| p == name).ok_or_else(|| parse_err(format!("missing property '{name}'")));
    let cols = [col("x")?, col("y")?, col("z")?, col("nx")?, col("ny")?, col("nz")?];
    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(count);
    for i in 0..count {
        let line = next()?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| parse_err(format!("vertex {i}: bad number '{s}'"))))
            .collect::<Result<_, _>>()?;
        if vals.len() < props.len() {
            return Err(parse_err(format!("vertex {i}: expected {} values", props.len())));
        }
        points.push(Vec3::new(vals[cols[0]], vals[cols[1]], vals[cols[2]]));
        normals.push(Vec3::new(vals[cols[3]], vals[cols[4]], vals[cols[5]]));
    }
    Ok((points, normals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_rows_are_bottom_to_top() {
        let img = Image::from_vec(2, 2, vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let mut bytes = Vec::new();
        write_pfm_gray(&mut bytes, &img).unwrap();
        assert!(bytes.starts_with(b"Pf\n2 2\n-1.0\n"));
        let body = &bytes[12..];
        assert_eq!(body[0..4], 3.0f32.to_le_bytes());
        assert_eq!(body[12..16], 2.0f32.to_le_bytes());
        assert_eq!(read_pfm(&bytes[..]).unwrap(), Pfm::Gray(img));

        let rgb = Image::from_vec(1, 2, vec![[0.1f32, 0.2, 1.0], [0.5, 0.6, 0.0]]).unwrap();
        let mut bytes = Vec::new();
        write_pfm_rgb(&mut bytes, &rgb).unwrap();
        assert!(bytes.starts_with(b"PF\n1 2\n-1.0\n"));
        assert_eq!(read_pfm(&bytes[..]).unwrap(), Pfm::Rgb(rgb));
    }

    #[test]
    fn netpbm_headers() {
        let mask = Image::from_vec(3, 1, vec![0u8, 7, 14]).unwrap();
        let mut bytes = Vec::new();
        write_pgm(&mut bytes, &mask).unwrap();
        assert_eq!(bytes, b"P5\n3 1\n255\n\x00\x07\x0e");
        assert_eq!(read_pgm(&bytes[..]).unwrap(), mask);

        let rgb = Image::from_vec(1, 1, vec![[1u8, 2, 3]]).unwrap();
        let mut bytes = Vec::new();
        write_ppm(&mut bytes, &rgb).unwrap();
        assert_eq!(bytes, b"P6\n1 1\n255\n\x01\x02\x03");
        assert_eq!(read_ppm(&bytes[..]).unwrap(), rgb);

        let rgba = Image::from_vec(2, 1, vec![[1u8, 2, 3, 0], [9, 8, 7, 255]]).unwrap();
        let mut bytes = Vec::new();
        write_pam(&mut bytes, &rgba).unwrap();
        assert!(bytes.starts_with(b"P7\nWIDTH 2\nHEIGHT 1\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGB_ALPHA\nENDHDR\n"));
        assert_eq!(read_pam(&bytes[..]).unwrap(), rgba);
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P5\n# made by hand\n2 1\n255\n\x01\x02";
        assert_eq!(read_pgm(&bytes[..]).unwrap().data(), &[1, 2]);
        assert!(read_pgm(&b"P6\n1 1\n255\n\x00\x00\x00"[..]).is_err());
    }

    #[test]
    fn ply_round_trip_is_exact() {
        let pts = vec![Vec3::new(0.1, -0.2, 1.0 / 3.0), Vec3::new(1e-9, 2.5, -7.0)];
        let nrm = vec![Vec3::x(), Vec3::new(0.6, 0.8, 0.0)];
        let mut bytes = Vec::new();
        write_ply(&mut bytes, &pts, &nrm).unwrap();
        let (p, n) = read_ply(&bytes[..]).unwrap();
        assert_eq!(p, pts);
        assert_eq!(n, nrm);
    }
}
