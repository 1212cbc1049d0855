//! Built-in 25×25 binary letter rasters.
//!
//! Block capitals with a 3-pixel stroke, 17 rows tall (rows 4..=20):
//! - `L`: stem in columns 7..=9, foot in rows 18..=20 out to column 18.
//! - `C`: spine in columns 6..=8, top bar rows 4..=6 and bottom bar rows
//!   18..=20, both spanning columns 6..=18.
//!
//! The shipped assets are the output of [`generate`]; a test keeps them in
//! sync.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub const SIZE: usize = 25;

const LETTER_C: &str = include_str!("../assets/letter_c.txt");
const LETTER_L: &str = include_str!("../assets/letter_l.txt");

/// Parses a raster of `#` (on) and `.` (off), one row per line.
pub fn parse_raster(text: &str) -> Result<Array2<f64>> {
    let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let ny = rows.len();
    let nx = rows.first().map_or(0, |r| r.trim().chars().count());
    if ny == 0 || nx == 0 {
        return Err(Error::Format("empty raster".into()));
    }
    let mut out = Array2::zeros((ny, nx));
    for (iy, row) in rows.iter().enumerate() {
        let row = row.trim();
        if row.chars().count() != nx {
            return Err(Error::Format(format!("raster row {iy} has a different width")));
        }
        for (ix, ch) in row.chars().enumerate() {
            out[[iy, ix]] = match ch {
                '#' | '1' => 1.0,
                '.' | '0' => 0.0,
                other => {
                    return Err(Error::Format(format!("unexpected raster character {other:?}")))
                }
            };
        }
    }
    Ok(out)
}

/// Loads a raster from disk: `.txt` in the `#`/`.` format, anything else
/// as an 8-bit grey image scaled to `[0, 1]`.
pub fn load_raster(path: &Path) -> Result<Array2<f64>> {
    if path.extension().and_then(|e| e.to_str()) == Some("txt") {
        return parse_raster(&std::fs::read_to_string(path)?);
    }
    let img = image::open(path)?.to_luma8();
    let (w, h) = img.dimensions();
    Ok(Array2::from_shape_fn((h as usize, w as usize), |(y, x)| {
        f64::from(img.get_pixel(x as u32, y as u32)[0]) / 255.0
    }))
}

/// Built-in raster for `C` or `L` (case-insensitive).
pub fn letter(ch: char) -> Option<Array2<f64>> {
    let text = match ch.to_ascii_uppercase() {
        'C' => LETTER_C,
        'L' => LETTER_L,
        _ => return None,
    };
    Some(parse_raster(text).expect("bundled rasters are well formed"))
}

/// Rebuilds a raster from the stroke rules in the module docs.
pub fn generate(ch: char) -> Option<Array2<f64>> {
    let on = |r: usize, c: usize| -> bool {
        match ch.to_ascii_uppercase() {
            'L' => ((4..=20).contains(&r) && (7..=9).contains(&c))
                || ((18..=20).contains(&r) && (7..=18).contains(&c)),
            'C' => {
                let bar = ((4..=6).contains(&r) || (18..=20).contains(&r)) && (6..=18).contains(&c);
                let spine = (4..=20).contains(&r) && (6..=8).contains(&c);
                bar || spine
            }
            _ => false,
        }
    };
    if !matches!(ch.to_ascii_uppercase(), 'C' | 'L') {
        return None;
    }
    Some(Array2::from_shape_fn((SIZE, SIZE), |(r, c)| if on(r, c) { 1.0 } else { 0.0 }))
}
