//! Grayscale little-endian PFM.
//!
//! Layout: `Pf\n`, `<W> <H>\n`, `-1.0\n`, then `W * H` little-endian `f32`
//! values with the bottom row first. Depth maps store invalid pixels as
//! `-1.0`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::ErpGrid;
use crate::image::DepthMap;

use super::{read_file, write_file};

/// Value written for invalid depth pixels.
pub const INVALID_DEPTH: f32 = -1.0;

/// Encodes a `width x height` raster given top row first.
pub fn encode_pfm(width: usize, height: usize, data: &[f32]) -> Result<Vec<u8>> {
    if width == 0 || height == 0 || width.checked_mul(height) != Some(data.len()) {
        return Err(Error::config("PFM raster does not match its dimensions"));
    }
    let header = format!("Pf\n{width} {height}\n-1.0\n");
    let mut out = Vec::with_capacity(header.len() + data.len() * 4);
    out.extend_from_slice(header.as_bytes());
    for row in data.chunks_exact(width).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn token(&mut self, what: &str) -> Result<&'a str> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.pos - start < 32 {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(format!("PFM header ends before the {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| Error::format(format!("PFM {what} is not text")))
    }
}

fn dimension(tok: &str, what: &str) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(0) => Err(Error::format(format!("PFM {what} is zero"))),
        Ok(v) => Ok(v),
        Err(_) => Err(Error::format(format!("PFM {what} '{tok}' is not a valid size"))),
    }
}

/// Decodes a grayscale PFM into `(width, height, data)` with the top row
/// first.
pub fn decode_pfm(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    let mut cur = Cursor { bytes, pos: 0 };
    match cur.token("magic")? {
        "Pf" => {}
        "PF" => return Err(Error::format("colour PFM (PF) is not supported; expected grayscale Pf")),
        other => return Err(Error::format(format!("not a PFM file (magic '{other}')"))),
    }
    let width = dimension(cur.token("width")?, "width")?;
    let height = dimension(cur.token("height")?, "height")?;
    let scale_tok = cur.token("scale")?;
    let scale: f64 =
        scale_tok.parse().map_err(|_| Error::format(format!("PFM scale '{scale_tok}' is not a number")))?;
    if scale > 0.0 {
        return Err(Error::format("big-endian PFM (positive scale) is not supported"));
    }
    if !(scale < 0.0) {
        return Err(Error::format(format!("PFM scale must be negative, got '{scale_tok}'")));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(Error::format("PFM header is not terminated"));
    }
    let payload = &bytes[cur.pos + 1..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format(format!("PFM dimensions {width} x {height} overflow")))?;
    if payload.len() < expected {
        return Err(Error::format(format!(
            "truncated PFM payload: expected {expected} bytes, found {}",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::format(format!("{} unexpected bytes after the PFM payload", payload.len() - expected)));
    }
    let mut data = vec![0.0f32; width * height];
    for (row, chunk) in payload.chunks_exact(width * 4).enumerate() {
        let dst = &mut data[(height - 1 - row) * width..(height - row) * width];
        for (d, b) in dst.iter_mut().zip(chunk.chunks_exact(4)) {
            *d = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
        }
    }
    Ok((width, height, data))
}

/// Depth values as stored on disk: `f32`, invalid pixels negative.
pub fn depth_to_f32(depth: &DepthMap) -> Vec<f32> {
    depth.depths().iter().zip(depth.mask()).map(|(d, ok)| if *ok { *d as f32 } else { INVALID_DEPTH }).collect()
}

/// Builds a depth map from stored values. Negative, non-finite and
/// out-of-range values are invalid.
pub fn depth_from_f32(width: usize, height: usize, data: &[f32], d_min: f64, d_max: f64) -> Result<DepthMap> {
    let grid = ErpGrid::new(width, height).map_err(|e| Error::format(format!("PFM is not a panorama: {e}")))?;
    let depth: Vec<f64> = data.iter().map(|v| *v as f64).collect();
    let valid = data.iter().map(|v| *v >= 0.0).collect();
    DepthMap::with_mask(grid, depth, valid, d_min, d_max)
}

pub fn write_depth_pfm(path: impl AsRef<Path>, depth: &DepthMap) -> Result<()> {
    let bytes = encode_pfm(depth.width(), depth.height(), &depth_to_f32(depth))?;
    write_file(path.as_ref(), &bytes)
}

/// Reads a depth map; validity is re-evaluated against `[d_min, d_max]`.
pub fn read_depth_pfm(path: impl AsRef<Path>, d_min: f64, d_max: f64) -> Result<DepthMap> {
    let (w, h, data) = decode_pfm(&read_file(path.as_ref())?)?;
    depth_from_f32(w, h, &data, d_min, d_max)
}
