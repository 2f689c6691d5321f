//! Greedy placement of fixed-size, non-overlapping regions of interest over
//! the fingertip scatter of a whole recording.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand_detect::HandObservation;
use crate::imgproc::{point_in_polygon, Contour, Point};

pub const MIN_ROI_SIZE: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TipSample {
    pub x: i32,
    pub y: i32,
    pub frame: usize,
}

/// Every fingertip observed in a recording, in observation order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FingertipHistory {
    pub points: Vec<TipSample>,
}

impl FingertipHistory {
    pub fn from_observations(observations: &[HandObservation]) -> Self {
        let points = observations
            .iter()
            .flat_map(|o| {
                o.fingertips.iter().map(move |p| TipSample {
                    x: p.x,
                    y: p.y,
                    frame: o.frame_index,
                })
            })
            .collect();
        Self { points }
    }
}

/// Square window with top-left pixel `(x, y)` covering `size`×`size` pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub id: usize,
    pub x: u32,
    pub y: u32,
    pub size: u32,
}

impl Roi {
    /// The window centered on `p`, shifted as needed to stay inside the frame.
    pub fn centered(id: usize, p: Point, size: u32, frame_dims: (u32, u32)) -> Self {
        let half = (size / 2) as i32;
        let x = (p.x - half).clamp(0, (frame_dims.0 - size) as i32) as u32;
        let y = (p.y - half).clamp(0, (frame_dims.1 - size) as i32) as u32;
        Self { id, x, y, size }
    }

    fn last_x(&self) -> i64 {
        i64::from(self.x) + i64::from(self.size) - 1
    }

    fn last_y(&self) -> i64 {
        i64::from(self.y) + i64::from(self.size) - 1
    }

    /// Closed on all four edges.
    pub fn contains(&self, p: Point) -> bool {
        let (px, py) = (i64::from(p.x), i64::from(p.y));
        px >= i64::from(self.x) && px <= self.last_x() && py >= i64::from(self.y) && py <= self.last_y()
    }

    pub fn contains_f(&self, x: f64, y: f64) -> bool {
        x >= f64::from(self.x)
            && x <= self.last_x() as f64
            && y >= f64::from(self.y)
            && y <= self.last_y() as f64
    }

    /// True when the two windows share at least one pixel.
    pub fn overlaps(&self, other: &Roi) -> bool {
        i64::from(self.x) <= other.last_x()
            && i64::from(other.x) <= self.last_x()
            && i64::from(self.y) <= other.last_y()
            && i64::from(other.y) <= self.last_y()
    }

    pub fn corners(&self) -> [Point; 4] {
        let (x0, y0) = (self.x as i32, self.y as i32);
        let (x1, y1) = (self.last_x() as i32, self.last_y() as i32);
        [
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ]
    }
}

pub fn roi_contains(roi: &Roi, p: Point) -> bool {
    roi.contains(p)
}

/// A contour overlaps a window when one of its points lies inside the window or
/// a window corner lies inside the contour polygon (even-odd rule).
pub fn roi_overlaps_contour(roi: &Roi, contour: &Contour) -> bool {
    contour.points.iter().any(|&p| roi.contains(p))
        || roi
            .corners()
            .iter()
            .any(|c| point_in_polygon(f64::from(c.x), f64::from(c.y), &contour.points))
}

/// Summed-area table over a count grid, one row and column of zero padding.
struct CountTable {
    width: usize,
    sums: Vec<u32>,
}

impl CountTable {
    fn build(grid: &[u32], w: usize, h: usize) -> Self {
        let stride = w + 1;
        let mut sums = vec![0u32; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0;
            for x in 0..w {
                row += grid[y * w + x];
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { width: stride, sums }
    }

    fn count(&self, roi: &Roi) -> u32 {
        let (x0, y0) = (roi.x as usize, roi.y as usize);
        let (x1, y1) = (x0 + roi.size as usize, y0 + roi.size as usize);
        let s = |x: usize, y: usize| self.sums[y * self.width + x];
        s(x1, y1) + s(x0, y0) - s(x0, y1) - s(x1, y0)
    }
}

/// Greedy maximum coverage with fixed-size, pairwise disjoint windows.
///
/// Each round considers a window centered on every remaining point (clamped to
/// the frame), skips windows that intersect an accepted one, and accepts the
/// window covering the most remaining points; ties go to the earliest point.
/// Covered points are retired. Stops when no admissible window is left.
pub fn select_rois(
    history: &FingertipHistory,
    roi_size: u32,
    frame_dims: (u32, u32),
) -> Result<Vec<Roi>> {
    let (w, h) = frame_dims;
    if roi_size < MIN_ROI_SIZE || roi_size > w.min(h) {
        return Err(Error::InvalidParameter(format!(
            "ROI size {roi_size} outside [{MIN_ROI_SIZE}, {}]",
            w.min(h)
        )));
    }
    let pts: Vec<Point> = history.points.iter().map(|s| Point::new(s.x, s.y)).collect();
    if let Some(p) = pts
        .iter()
        .find(|p| p.x < 0 || p.y < 0 || p.x as u32 >= w || p.y as u32 >= h)
    {
        return Err(Error::InvalidParameter(format!(
            "fingertip ({}, {}) outside the {w}x{h} frame",
            p.x, p.y
        )));
    }

    let (wu, hu) = (w as usize, h as usize);
    let mut grid = vec![0u32; wu * hu];
    for p in &pts {
        grid[p.y as usize * wu + p.x as usize] += 1;
    }
    let mut remaining = vec![true; pts.len()];
    let mut rois: Vec<Roi> = Vec::new();

    loop {
        let table = CountTable::build(&grid, wu, hu);
        let mut best: Option<(Roi, u32)> = None;
        for (i, p) in pts.iter().enumerate() {
            if !remaining[i] {
                continue;
            }
            let cand = Roi::centered(rois.len(), *p, roi_size, frame_dims);
            if rois.iter().any(|r| r.overlaps(&cand)) {
                continue;
            }
            let n = table.count(&cand);
            if n >= 1 && best.is_none_or(|(_, bn)| n > bn) {
                best = Some((cand, n));
            }
        }
        let Some((roi, _)) = best else { break };
        for (i, p) in pts.iter().enumerate() {
            if remaining[i] && roi.contains(*p) {
                remaining[i] = false;
                grid[p.y as usize * wu + p.x as usize] -= 1;
            }
        }
        rois.push(roi);
    }
    Ok(rois)
}
