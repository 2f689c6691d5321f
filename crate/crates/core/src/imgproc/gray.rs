use super::{BinaryMask, GrayImage};
use crate::error::{Error, Result};
use crate::frames_io::ThermalFrame;

/// Maps 16-bit counts onto `[0, 1]`.
pub fn to_gray(frame: &ThermalFrame) -> GrayImage {
    let values = frame
        .counts
        .iter()
        .map(|&c| f64::from(c) / f64::from(u16::MAX))
        .collect();
    GrayImage::new(frame.width, frame.height, values)
}

/// Lower median: element `(n - 1) / 2` of the sorted values.
pub fn median_value(img: &GrayImage) -> f64 {
    assert!(!img.values.is_empty(), "median of an empty image");
    let mut scratch = img.values.clone();
    let k = (scratch.len() - 1) / 2;
    let (_, median, _) = scratch.select_nth_unstable_by(k, f64::total_cmp);
    *median
}

/// Median-relative contrast, clipped to `[0, 1]`: `(p - m) / m`.
pub fn normalize(img: &GrayImage) -> Result<GrayImage> {
    let median = median_value(img);
    if median <= 0.0 {
        return Err(Error::ZeroMedian);
    }
    let values = img
        .values
        .iter()
        .map(|&p| ((p - median) / median).clamp(0.0, 1.0))
        .collect();
    Ok(GrayImage::new(img.width, img.height, values))
}

/// Foreground where the value is strictly greater than `t`.
pub fn threshold(img: &GrayImage, t: f64) -> BinaryMask {
    BinaryMask::new(
        img.width,
        img.height,
        img.values.iter().map(|&v| v > t).collect(),
    )
}
