//! Binary PGM (P5) map export with a small text metadata companion.

use super::grid::{CellClass, OccupancyGrid, SensorModel};
use crate::error::{Error, Result};
use crate::raycast::GridGeometry;
use std::fmt::Write as _;

pub const PGM_FREE: u8 = 254;
pub const PGM_OCCUPIED: u8 = 0;
pub const PGM_UNKNOWN: u8 = 205;

/// Encodes the classified grid, top row = largest y.
pub fn write_pgm(grid: &OccupancyGrid) -> Vec<u8> {
    let g = grid.geometry();
    let mut out = format!("P5\n{} {}\n255\n", g.width, g.height).into_bytes();
    out.reserve(g.len());
    for iy in (0..g.height).rev() {
        for ix in 0..g.width {
            out.push(match grid.class_at(ix, iy) {
                CellClass::Free => PGM_FREE,
                CellClass::Occupied => PGM_OCCUPIED,
                CellClass::Unknown => PGM_UNKNOWN,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapMetadata {
    pub resolution: f64,
    pub origin_x: f64,
    pub origin_y: f64,
    pub occupied_thresh: f64,
    pub free_thresh: f64,
}

impl MapMetadata {
    pub fn of(grid: &OccupancyGrid, model: &SensorModel) -> Self {
        let g = grid.geometry();
        MapMetadata {
            resolution: g.resolution,
            origin_x: g.origin_x,
            origin_y: g.origin_y,
            occupied_thresh: model.p_occ_thresh,
            free_thresh: model.p_free_thresh,
        }
    }
}

impl Default for MapMetadata {
    fn default() -> Self {
        MapMetadata {
            resolution: 0.25,
            origin_x: 0.0,
            origin_y: 0.0,
            occupied_thresh: 0.65,
            free_thresh: 0.35,
        }
    }
}

pub fn write_map_metadata(meta: &MapMetadata, image: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "image {image}");
    let _ = writeln!(s, "resolution {}", meta.resolution);
    let _ = writeln!(s, "origin {} {}", meta.origin_x, meta.origin_y);
    let _ = writeln!(s, "occupied_thresh {}", meta.occupied_thresh);
    let _ = writeln!(s, "free_thresh {}", meta.free_thresh);
    s
}

pub fn read_map_metadata(text: &str) -> Result<MapMetadata> {
    let mut meta = MapMetadata::default();
    for (n, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else { continue };
        let mut num = || -> Result<f64> {
            parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::parse(n + 1, 1, format!("`{key}` needs a number")))
        };
        match key {
            "image" => {}
            "resolution" => meta.resolution = num()?,
            "origin" => {
                meta.origin_x = num()?;
                meta.origin_y = num()?;
            }
            "occupied_thresh" => meta.occupied_thresh = num()?,
            "free_thresh" => meta.free_thresh = num()?,
            other => return Err(Error::parse(n + 1, 1, format!("unknown metadata key `{other}`"))),
        }
    }
    Ok(meta)
}

fn pgm_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::parse(1, start + 1, "truncated PGM header"));
    }
    Ok(&bytes[start..*pos])
}

/// Decodes a P5 map back into a grid whose cells are pinned to the
/// thresholded classes (0 occupied, 254 free, anything else unknown, with
/// intermediate grays thresholded like a map_server trinary image).
pub fn read_pgm(bytes: &[u8], meta: &MapMetadata, model: &SensorModel) -> Result<OccupancyGrid> {
    let mut pos = 0;
    if pgm_token(bytes, &mut pos)? != b"P5" {
        return Err(Error::parse(1, 1, "not a binary PGM (P5)"));
    }
    let mut number = |what: &str| -> Result<usize> {
        std::str::from_utf8(pgm_token(bytes, &mut pos)?)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(1, 1, format!("bad PGM {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 || width == 0 || height == 0 {
        return Err(Error::parse(1, 1, "PGM must be 8-bit and non-empty"));
    }
    let data = &bytes[pos + 1..];
    if data.len() < width * height {
        return Err(Error::parse(1, 1, "PGM pixel data truncated"));
    }
    let geometry = GridGeometry::new(width, height, meta.resolution, meta.origin_x, meta.origin_y);
    let mut classes = vec![CellClass::Unknown; width * height];
    for row in 0..height {
        let iy = height - 1 - row;
        for ix in 0..width {
            let v = data[row * width + ix];
            let occ = 1.0 - v as f64 / 255.0;
            classes[geometry.index(ix, iy)] = if occ > meta.occupied_thresh {
                CellClass::Occupied
            } else if occ < meta.free_thresh && v != PGM_UNKNOWN {
                CellClass::Free
            } else {
                CellClass::Unknown
            };
        }
    }
    Ok(OccupancyGrid::from_classes(geometry, model, &classes))
}
