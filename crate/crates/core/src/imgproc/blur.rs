use super::GrayImage;
use crate::error::{Error, Result};

/// Sampled Gaussian of `2 * radius + 1` taps, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64, radius: u32) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "blur sigma must be positive, got {sigma}"
        )));
    }
    if radius == 0 {
        return Err(Error::InvalidParameter("blur radius must be at least 1".into()));
    }
    let r = radius as i64;
    let mut kernel: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= sum);
    Ok(kernel)
}

/// Separable Gaussian blur with clamp-to-edge borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64, radius: u32) -> Result<GrayImage> {
    let kernel = gaussian_kernel(sigma, radius)?;
    let r = radius as i64;
    let (w, h) = (img.width as usize, img.height as usize);
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;

    let mut horizontal = vec![0.0; w * h];
    for y in 0..h {
        let row = &img.values[y * w..(y + 1) * w];
        let out = &mut horizontal[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &wk) in kernel.iter().enumerate() {
                acc += wk * row[clamp(x as i64 + k as i64 - r, w)];
            }
            *o = acc;
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for (k, &wk) in kernel.iter().enumerate() {
            let src = clamp(y as i64 + k as i64 - r, h);
            let src_row = &horizontal[src * w..(src + 1) * w];
            let dst_row = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += wk * s;
            }
        }
    }
    Ok(GrayImage::new(img.width, img.height, out))
}
