//! The two warm-residue detectors comparing a region before and after a visit.

use crate::error::{Error, Result};
use crate::imgproc::{find_contours, gaussian_blur, threshold, GrayImage};

use super::DetectorConfig;

/// Lowest cut used on the blurred difference image.
pub const DIFF_FLOOR: f64 = 0.05;

fn same_dims(pre: &GrayImage, post: &GrayImage) -> Result<()> {
    if (pre.width, pre.height) != (post.width, post.height) {
        return Err(Error::DimensionMismatch {
            expected: (pre.width, pre.height),
            found: (post.width, post.height),
        });
    }
    Ok(())
}

/// Mean warming of the region: `mean(post) - mean(pre)`.
pub fn detector_mean(pre: &GrayImage, post: &GrayImage) -> Result<f64> {
    same_dims(pre, post)?;
    Ok(post.mean() - pre.mean())
}

/// Size of the largest warm blob in the smoothed positive difference.
///
/// The difference is clipped to `[0, 1]`, blurred, and cut at half its maximum
/// or [`DIFF_FLOOR`], whichever is larger. The blob size is its pixel count.
pub fn detector_diff_area(pre: &GrayImage, post: &GrayImage, cfg: &DetectorConfig) -> Result<f64> {
    same_dims(pre, post)?;
    let diff = GrayImage::new(
        pre.width,
        pre.height,
        pre.values
            .iter()
            .zip(&post.values)
            .map(|(a, b)| (b - a).clamp(0.0, 1.0))
            .collect(),
    );
    let radius = (2.0 * cfg.diff_blur_sigma).ceil().max(1.0) as u32;
    let smooth = gaussian_blur(&diff, cfg.diff_blur_sigma, radius)?;
    let peak = smooth.values.iter().copied().fold(0.0, f64::max);
    let cut = (0.5 * peak).max(DIFF_FLOOR);
    let mask = threshold(&smooth, cut);
    Ok(find_contours(&mask)
        .iter()
        .map(|c| c.pixel_count)
        .max()
        .unwrap_or(0) as f64)
}
