use super::{Contour, Point};
use crate::error::{Error, Result};

/// The deepest contour point between two consecutive hull vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityDefect {
    pub start_idx: usize,
    pub end_idx: usize,
    pub farthest_idx: usize,
    /// Perpendicular distance from the hull edge, in pixels.
    pub depth: f64,
}

fn distance_to_line(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (f64::from(b.x - a.x), f64::from(b.y - a.y));
    let len = dx.hypot(dy);
    if len == 0.0 {
        return p.distance(a);
    }
    (dx * f64::from(p.y - a.y) - dy * f64::from(p.x - a.x)).abs() / len
}

/// Convexity defects of `contour` against `hull`.
///
/// Hull vertices are located on the contour (first occurrence) and visited in
/// contour order, so the result does not depend on the hull's orientation.
/// Each gap between consecutive vertices contributes its deepest point; gaps
/// of zero depth are omitted.
pub fn convexity_defects(contour: &Contour, hull: &[Point]) -> Result<Vec<ConvexityDefect>> {
    let pts = &contour.points;
    let mut indices = Vec::with_capacity(hull.len());
    for v in hull {
        let i = pts
            .iter()
            .position(|p| p == v)
            .ok_or(Error::HullVertexNotOnContour((v.x, v.y)))?;
        indices.push(i);
    }
    indices.sort_unstable();
    indices.dedup();
    if indices.len() < 2 {
        return Ok(Vec::new());
    }

    let n = pts.len();
    let mut defects = Vec::new();
    for (k, &start) in indices.iter().enumerate() {
        let end = indices[(k + 1) % indices.len()];
        let span = if end > start { end - start } else { end + n - start };
        let (a, b) = (pts[start], pts[end]);
        let mut best: Option<(usize, f64)> = None;
        for off in 1..span {
            let i = (start + off) % n;
            let d = distance_to_line(pts[i], a, b);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        if let Some((farthest_idx, depth)) = best {
            if depth > 0.0 {
                defects.push(ConvexityDefect {
                    start_idx: start,
                    end_idx: end,
                    farthest_idx,
                    depth,
                });
            }
        }
    }
    Ok(defects)
}

#[cfg(test)]
mod tests {
    use super::super::{convex_hull, find_contours, BinaryMask};
    use super::*;

    fn paint(m: &mut BinaryMask, x0: u32, y0: u32, w: u32, h: u32) {
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                m.set(x, y, true);
            }
        }
    }

    fn defects_of(m: &BinaryMask) -> Vec<ConvexityDefect> {
        let c = &find_contours(m)[0];
        convexity_defects(c, &convex_hull(&c.points)).unwrap()
    }

    #[test]
    fn rectangle_has_no_defects() {
        let mut m = BinaryMask::empty(20, 20);
        paint(&mut m, 3, 4, 10, 6);
        assert!(defects_of(&m).is_empty());
    }

    #[test]
    fn u_shape_notch_depth() {
        // 21 wide, 16 tall block with a 7-wide notch cut 10 rows deep from the top
        let mut m = BinaryMask::empty(30, 30);
        paint(&mut m, 4, 4, 21, 16);
        for y in 4..14 {
            for x in 11..18 {
                m.set(x, y, false);
            }
        }
        let d = defects_of(&m);
        assert_eq!(d.len(), 1);
        // hull edge runs along y=4, notch floor boundary pixels sit on y=14
        assert!((d[0].depth - 10.0).abs() <= 1.0, "depth {}", d[0].depth);
        let c = &find_contours(&m)[0];
        let far = c.points[d[0].farthest_idx];
        assert_eq!(far.y, 14);
    }

    #[test]
    fn five_arm_star() {
        let m = star_mask(60, 30.0, 30.0, 5, 24.0, 9.0);
        let d = defects_of(&m);
        let deep: Vec<_> = d.iter().filter(|d| d.depth > 3.0).collect();
        assert_eq!(deep.len(), 5, "{d:?}");
    }

    #[test]
    fn vertex_missing_from_contour() {
        let c = Contour::from_points(vec![Point::new(0, 0), Point::new(1, 0), Point::new(1, 1)]);
        assert!(convexity_defects(&c, &[Point::new(5, 5)]).is_err());
    }

    #[test]
    fn farthest_lies_between_endpoints() {
        let m = star_mask(60, 30.0, 30.0, 5, 24.0, 9.0);
        let c = &find_contours(&m)[0];
        let n = c.points.len();
        for d in defects_of(&m) {
            let span = (d.end_idx + n - d.start_idx) % n;
            let off = (d.farthest_idx + n - d.start_idx) % n;
            assert!(off > 0 && off < span.max(1) || span == 0);
        }
    }

    /// Star polygon rasterized by pixel-center inclusion.
    pub(crate) fn star_mask(size: u32, cx: f64, cy: f64, arms: usize, outer: f64, inner: f64) -> BinaryMask {
        let mut poly = Vec::new();
        for k in 0..2 * arms {
            let r = if k % 2 == 0 { outer } else { inner };
            let a = std::f64::consts::PI * k as f64 / arms as f64 - std::f64::consts::FRAC_PI_2;
            poly.push((cx + r * a.cos(), cy + r * a.sin()));
        }
        let mut m = BinaryMask::empty(size, size);
        for y in 0..size {
            for x in 0..size {
                let (px, py) = (x as f64, y as f64);
                let mut inside = false;
                let mut j = poly.len() - 1;
                for i in 0..poly.len() {
                    let (xi, yi) = poly[i];
                    let (xj, yj) = poly[j];
                    if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
                        inside = !inside;
                    }
                    j = i;
                }
                m.set(x, y, inside);
            }
        }
        m
    }
}
