//! 8-bit PNG images and masks.

use std::path::Path;

use image::{GrayImage, RgbImage};

use crate::error::{Error, Result};
use crate::geom::ErpGrid;
use crate::image::{ErpImage, Rgb};

use super::with_path;

fn to_u8(x: f32) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an RGB raster of `width x height` pixels, top row first.
pub fn write_rgb_png(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[Rgb]) -> Result<()> {
    let path = path.as_ref();
    if width.checked_mul(height) != Some(pixels.len()) {
        return Err(Error::config("PNG raster does not match its dimensions"));
    }
    let buf: Vec<u8> = pixels.iter().flat_map(|p| p.map(to_u8)).collect();
    let img = RgbImage::from_raw(width as u32, height as u32, buf).expect("buffer sized above");
    img.save(path).map_err(|e| with_path(path, e.into()))
}

pub fn write_png(path: impl AsRef<Path>, img: &ErpImage) -> Result<()> {
    write_rgb_png(path, img.width(), img.height(), img.pixels())
}

/// Reads any PNG as 8-bit RGB. The image must have the 2:1 panorama shape.
pub fn read_png(path: impl AsRef<Path>) -> Result<ErpImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| with_path(path, e.into()))?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let grid = ErpGrid::new(w, h).map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    let pixels = img.pixels().map(|p| p.0.map(|c| c as f32 / 255.0)).collect();
    ErpImage::new(grid, pixels)
}

/// Writes a mask as black (false) and white (true).
pub fn write_mask_png(path: impl AsRef<Path>, grid: ErpGrid, mask: &[bool]) -> Result<()> {
    let path = path.as_ref();
    if mask.len() != grid.len() {
        return Err(Error::config("mask does not match the grid"));
    }
    let buf = mask.iter().map(|m| if *m { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(grid.width as u32, grid.height as u32, buf).expect("buffer sized above");
    img.save(path).map_err(|e| with_path(path, e.into()))
}

/// Reads a mask written by [`write_mask_png`]; any non-zero luma is set.
pub fn read_mask_png(path: impl AsRef<Path>) -> Result<(ErpGrid, Vec<bool>)> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| with_path(path, e.into()))?.to_luma8();
    let grid = ErpGrid::new(img.width() as usize, img.height() as usize)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    Ok((grid, img.pixels().map(|p| p.0[0] > 0).collect()))
}
