//! Boundary overlays for visual inspection.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::labels::LabelGrid;

pub const DEFAULT_COLOR: [u8; 3] = [255, 0, 0];

/// Pixels whose right or lower neighbour has a different label. This draws
/// each boundary one pixel wide.
pub fn thin_boundary_mask(labels: &LabelGrid) -> Vec<bool> {
    let (w, h) = (labels.width(), labels.height());
    let l = labels.labels();
    (0..w * h)
        .map(|p| {
            let (x, y) = (p % w, p / w);
            (x + 1 < w && l[p + 1] != l[p]) || (y + 1 < h && l[p + w] != l[p])
        })
        .collect()
}

/// Draws superpixel boundaries over `image` in `color`.
pub fn render_overlay(image: &ImageBuffer, labels: &LabelGrid, color: [u8; 3]) -> Result<image::RgbImage> {
    if image.width() != labels.width() || image.height() != labels.height() {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} vs labeling {}x{}",
            image.width(),
            image.height(),
            labels.width(),
            labels.height()
        )));
    }
    let mut out = image.to_rgb8();
    for (px, edge) in out.pixels_mut().zip(thin_boundary_mask(labels)) {
        if edge {
            *px = image::Rgb(color);
        }
    }
    Ok(out)
}

/// Loads `image_path`, draws the overlay and writes it to `output_path`.
pub fn render_overlay_file(image_path: &Path, labels: &LabelGrid, output_path: &Path, color: [u8; 3]) -> Result<()> {
    let image = ImageBuffer::load(image_path)?;
    render_overlay(&image, labels, color)?
        .save(output_path)
        .map_err(|source| Error::Image { path: output_path.to_path_buf(), source })
}
