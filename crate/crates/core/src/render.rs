//! Raster and vector rendering of two-dimensional scaled shapes: one
//! unit square (side 1/n) per discovered site, axes fixed to the
//! window [-1.1, 1.1] in both directions.

use crate::lattice::{ScaledSet, Site};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("rendering needs a two-dimensional set, got dimension {0}")]
    NotTwoDimensional(usize),
}

const WINDOW: f64 = 1.1;

/// Binary PGM (P5, maxval 255): discovered cells black on white.
pub fn render_pgm(s: &ScaledSet, pixels: u32) -> Result<Vec<u8>, RenderError> {
    if s.dim() != 2 {
        return Err(RenderError::NotTwoDimensional(s.dim()));
    }
    let w = pixels as usize;
    let mut img = vec![255u8; w * w];
    let n = s.scale() as f64;
    let to_px = |world: f64| (world + WINDOW) / (2.0 * WINDOW) * pixels as f64;
    for site in s.sites() {
        let x = site.coords[0] as f64;
        let y = site.coords[1] as f64;
        let x0 = to_px((x - 0.5) / n).floor().max(0.0) as usize;
        let x1 = (to_px((x + 0.5) / n).ceil() as usize).min(w);
        // raster rows grow downward, world y grows upward
        let y0 = to_px((y + 0.5) / n);
        let y1 = to_px((y - 0.5) / n);
        let r0 = (pixels as f64 - y0).floor().max(0.0) as usize;
        let r1 = ((pixels as f64 - y1).ceil() as usize).min(w);
        for r in r0..r1 {
            for c in x0..x1 {
                img[r * w + c] = 0;
            }
        }
    }
    let mut out = format!("P5\n{pixels} {pixels}\n255\n").into_bytes();
    out.extend_from_slice(&img);
    Ok(out)
}

/// SVG with one rect per horizontal run of discovered sites (visually
/// identical to one rect per site, far fewer elements).
pub fn render_svg(s: &ScaledSet) -> Result<String, RenderError> {
    if s.dim() != 2 {
        return Err(RenderError::NotTwoDimensional(s.dim()));
    }
    let n = s.scale() as f64;
    let side = 1.0 / n;
    let mut rows: Vec<Site> = s.sites().to_vec();
    rows.sort_unstable_by_key(|p| (p.coords[1], p.coords[0]));

    let mut rects = String::new();
    let mut i = 0;
    while i < rows.len() {
        let y = rows[i].coords[1];
        let x_start = rows[i].coords[0];
        let mut x_end = x_start;
        while i + 1 < rows.len()
            && rows[i + 1].coords[1] == y
            && rows[i + 1].coords[0] == x_end + 1
        {
            x_end += 1;
            i += 1;
        }
        i += 1;
        let wx = (x_start as f64 - 0.5) / n;
        // svg y axis points down; flip by negating and shifting by the cell top
        let wy = -((y as f64 + 0.5) / n);
        let width = (x_end - x_start + 1) as f64 / n;
        rects.push_str(&format!(
            "<rect x=\"{wx:.6}\" y=\"{wy:.6}\" width=\"{width:.6}\" height=\"{side:.6}\"/>\n"
        ));
    }

    Ok(format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-{WINDOW} -{WINDOW} {two} {two}\" width=\"700\" height=\"700\">\n\
         <rect x=\"-{WINDOW}\" y=\"-{WINDOW}\" width=\"{two}\" height=\"{two}\" fill=\"white\"/>\n\
         <g fill=\"black\">\n{rects}</g>\n</svg>\n",
        two = 2.0 * WINDOW,
    ))
}
