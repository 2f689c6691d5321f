//! Jitter correction from a colored reference marker in the paired RGB stream.

mod transform;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use transform::{wrap_axis_angle, SimilarityTransform};

use crate::error::{Error, Result};
use crate::frames_io::{RgbFrame, ThermalFrame};
use crate::imgproc::{label_components, BinaryMask};

/// Smallest marker component accepted, in pixels.
pub const MIN_REFERENCE_PIXELS: usize = 20;

/// Default Chebyshev color tolerance for the marker mask.
pub const DEFAULT_REF_TOL: u8 = 130;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePose {
    pub cx: f64,
    pub cy: f64,
    /// Principal axis angle in `(-π/2, π/2]`.
    pub orientation: f64,
    /// Component pixel count.
    pub area: f64,
}

fn chebyshev(a: [u8; 3], b: [u8; 3]) -> u8 {
    (0..3).map(|i| a[i].abs_diff(b[i])).max().unwrap_or(0)
}

/// Locates the reference marker: the largest 8-connected component of pixels
/// within Chebyshev distance `tol` of `ref_color`.
///
/// Centroid and second moments are weighted by color closeness,
/// `1 - d / (tol + 1)`, so blended edge pixels count partially.
pub fn detect_reference(rgb: &RgbFrame, ref_color: [u8; 3], tol: u8) -> Result<ReferencePose> {
    let (w, h) = (rgb.width, rgb.height);
    let dist: Vec<u8> = rgb
        .rgb
        .chunks_exact(3)
        .map(|p| chebyshev([p[0], p[1], p[2]], ref_color))
        .collect();
    let mask = BinaryMask::new(w, h, dist.iter().map(|&d| d <= tol).collect());
    let (labels, n) = label_components(&mask);
    if n == 0 {
        return Err(Error::ReferenceLost);
    }
    let mut sizes = vec![0usize; n as usize + 1];
    for &l in &labels {
        sizes[l as usize] += 1;
    }
    // labels are assigned in raster order, so the first maximum is the earliest
    let (best, &count) = sizes
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, &0), |acc, (i, c)| if *c > *acc.1 { (i, c) } else { acc });
    if count < MIN_REFERENCE_PIXELS {
        return Err(Error::ReferenceLost);
    }

    let weight = |d: u8| 1.0 - f64::from(d) / (f64::from(tol) + 1.0);
    let (mut m, mut mx, mut my) = (0.0, 0.0, 0.0);
    for (i, &l) in labels.iter().enumerate() {
        if l as usize == best {
            let wt = weight(dist[i]);
            let (x, y) = ((i % w as usize) as f64, (i / w as usize) as f64);
            m += wt;
            mx += wt * x;
            my += wt * y;
        }
    }
    let (cx, cy) = (mx / m, my / m);
    let (mut mu20, mut mu02, mut mu11) = (0.0, 0.0, 0.0);
    for (i, &l) in labels.iter().enumerate() {
        if l as usize == best {
            let wt = weight(dist[i]);
            let dx = (i % w as usize) as f64 - cx;
            let dy = (i / w as usize) as f64 - cy;
            mu20 += wt * dx * dx;
            mu02 += wt * dy * dy;
            mu11 += wt * dx * dy;
        }
    }
    let orientation = wrap_axis_angle(0.5 * (2.0 * mu11).atan2(mu20 - mu02));
    Ok(ReferencePose {
        cx,
        cy,
        orientation,
        area: count as f64,
    })
}

/// The similarity carrying the initial marker pose onto the current one.
pub fn estimate_transform(initial: &ReferencePose, current: &ReferencePose) -> SimilarityTransform {
    let scale = (current.area / initial.area).sqrt();
    let theta = wrap_axis_angle(current.orientation - initial.orientation);
    with_rotation(initial, current, theta, scale)
}

fn with_rotation(
    initial: &ReferencePose,
    current: &ReferencePose,
    theta: f64,
    scale: f64,
) -> SimilarityTransform {
    let (rx, ry) = SimilarityTransform::new(0.0, 0.0, theta, scale).apply(initial.cx, initial.cy);
    SimilarityTransform {
        tx: current.cx - rx,
        ty: current.cy - ry,
        theta,
        scale,
    }
}

/// Output pixel `(x, y)` is the input bilinearly sampled at `t(x, y)`;
/// samples falling outside the frame read as zero counts.
pub fn apply_inverse(frame: &ThermalFrame, t: &SimilarityTransform) -> ThermalFrame {
    let (w, h) = (frame.width as usize, frame.height as usize);
    let mut counts = vec![0u16; w * h];
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = t.apply(x as f64, y as f64);
            if !(sx >= 0.0 && sy >= 0.0 && sx <= (w - 1) as f64 && sy <= (h - 1) as f64) {
                continue;
            }
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(h - 1);
            let at = |xx: usize, yy: usize| f64::from(frame.counts[yy * w + xx]);
            let v = (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x1, y0))
                + fy * ((1.0 - fx) * at(x0, y1) + fx * at(x1, y1));
            counts[y * w + x] = v.round().clamp(0.0, 65535.0) as u16;
        }
    }
    ThermalFrame {
        counts,
        ..frame.clone()
    }
}

/// Per-frame estimate; `tracked` is false when the marker was lost and the
/// previous transform was reused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedTransform {
    pub tx: f64,
    pub ty: f64,
    pub theta: f64,
    pub scale: f64,
    pub tracked: bool,
}

impl TrackedTransform {
    pub fn transform(&self) -> SimilarityTransform {
        SimilarityTransform::new(self.tx, self.ty, self.theta, self.scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stabilized {
    pub frames: Vec<ThermalFrame>,
    pub transforms: Vec<TrackedTransform>,
}

/// Warps every thermal frame back into the coordinate system of frame 0.
///
/// Marker poses are found in parallel; the transform chain runs in frame order.
/// The axis ambiguity of the orientation is resolved toward the previous
/// frame's rotation.
pub fn stabilize_sequence(
    thermal: &[ThermalFrame],
    rgb: &[RgbFrame],
    ref_color: [u8; 3],
    tol: u8,
) -> Result<Stabilized> {
    if thermal.len() != rgb.len() {
        return Err(Error::FrameCountMismatch {
            thermal: thermal.len(),
            rgb: rgb.len(),
        });
    }
    if thermal.is_empty() {
        return Err(Error::InvalidFrame("empty sequence".into()));
    }
    let poses: Vec<Option<ReferencePose>> = rgb
        .par_iter()
        .map(|f| match detect_reference(f, ref_color, tol) {
            Ok(p) => Ok(Some(p)),
            Err(Error::ReferenceLost) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let initial = poses[0].ok_or(Error::ReferenceLostInFirstFrame)?;

    let mut transforms = Vec::with_capacity(poses.len());
    let mut last = SimilarityTransform::IDENTITY;
    for pose in &poses {
        match pose {
            Some(p) => {
                let mut t = estimate_transform(&initial, p);
                let flipped = t.theta - std::f64::consts::PI.copysign(t.theta);
                if (flipped - last.theta).abs() < (t.theta - last.theta).abs() {
                    t = with_rotation(&initial, p, flipped, t.scale);
                }
                last = t;
                transforms.push(TrackedTransform {
                    tx: t.tx,
                    ty: t.ty,
                    theta: t.theta,
                    scale: t.scale,
                    tracked: true,
                });
            }
            None => transforms.push(TrackedTransform {
                tx: last.tx,
                ty: last.ty,
                theta: last.theta,
                scale: last.scale,
                tracked: false,
            }),
        }
    }
    let frames = thermal
        .par_iter()
        .zip(&transforms)
        .map(|(f, t)| {
            let t = t.transform();
            if t.is_identity() {
                f.clone()
            } else {
                apply_inverse(f, &t)
            }
        })
        .collect();
    Ok(Stabilized { frames, transforms })
}

pub fn write_transforms_json(path: impl AsRef<Path>, transforms: &[TrackedTransform]) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(transforms).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
