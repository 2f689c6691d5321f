//! Per-frame hand and fingertip extraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames_io::ThermalFrame;
use crate::imgproc::{
    convex_hull, convexity_defects, find_contours, gaussian_blur, morph_close, morph_open,
    normalize, threshold, to_gray, BinaryMask, Contour, GrayImage, Point,
};

/// Most fingertips reported for one hand.
pub const MAX_FINGERTIPS: usize = 10;

/// Settings for the grayscale → binary mask chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub blur_sigma: f64,
    pub blur_radius: u32,
    /// Cut on the median-normalized image; foreground is strictly above it.
    pub threshold: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            blur_sigma: 1.0,
            blur_radius: 2,
            threshold: 0.5,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.blur_sigma.is_finite() && self.blur_sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "blur sigma must be positive, got {}",
                self.blur_sigma
            )));
        }
        if self.blur_radius == 0 {
            return Err(Error::InvalidParameter("blur radius must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Which extreme contour point stands in for a single extended finger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TipFallback {
    #[default]
    Top,
    Bottom,
    Left,
    Right,
}

impl std::str::FromStr for TipFallback {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top" => Ok(Self::Top),
            "bottom" => Ok(Self::Bottom),
            "left" => Ok(Self::Left),
            "right" => Ok(Self::Right),
            other => Err(Error::InvalidParameter(format!("unknown fallback {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingertipConfig {
    /// Minimum convexity-defect depth, pixels.
    pub depth_thresh: f64,
    /// Contours enclosing less than this (shoelace, pixels²) are not hands.
    pub min_hand_area: f64,
    /// Area floor for contours touching the frame border, which may be a hand
    /// only partly in view.
    pub min_edge_area: f64,
    /// Tip candidates closer than this are one fingertip.
    pub merge_radius: f64,
    pub fallback: TipFallback,
}

impl Default for FingertipConfig {
    fn default() -> Self {
        Self {
            depth_thresh: 8.0,
            min_hand_area: 150.0,
            min_edge_area: 10.0,
            merge_radius: 5.0,
            fallback: TipFallback::Top,
        }
    }
}

impl FingertipConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("depth threshold", self.depth_thresh),
            ("minimum hand area", self.min_hand_area),
            ("minimum edge area", self.min_edge_area),
            ("merge radius", self.merge_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandObservation {
    pub frame_index: usize,
    pub contour: Option<Contour>,
    /// Points on the hand contour.
    pub fingertips: Vec<Point>,
    /// The frame could not be normalized (zero median).
    pub skipped: bool,
}

impl HandObservation {
    pub fn empty(frame_index: usize) -> Self {
        Self {
            frame_index,
            contour: None,
            fingertips: Vec::new(),
            skipped: false,
        }
    }

    pub fn has_hand(&self) -> bool {
        self.contour.is_some()
    }
}

/// Everything the later passes need from one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnalysis {
    /// Blurred, median-normalized frame; `None` when the frame was skipped.
    pub normalized: Option<GrayImage>,
    pub observation: HandObservation,
}

/// Grayscale, blur, median normalization, threshold, open, close.
pub fn preprocess(frame: &ThermalFrame, cfg: &PreprocessConfig) -> Result<(GrayImage, BinaryMask)> {
    let (normalized, raw) = normalize_and_threshold(frame, cfg)?;
    Ok((normalized, morph_close(&morph_open(&raw))))
}

fn normalize_and_threshold(frame: &ThermalFrame, cfg: &PreprocessConfig) -> Result<(GrayImage, BinaryMask)> {
    let gray = to_gray(frame);
    let blurred = gaussian_blur(&gray, cfg.blur_sigma, cfg.blur_radius)?;
    let normalized = normalize(&blurred)?;
    let raw = threshold(&normalized, cfg.threshold);
    Ok((normalized, raw))
}

/// The largest contour, if it is big enough to be a hand. Equal areas go to
/// the contour found first in raster order.
pub fn detect_hand(mask: &BinaryMask, cfg: &FingertipConfig) -> Option<Contour> {
    let mut best: Option<Contour> = None;
    for c in find_contours(mask) {
        if best.as_ref().is_none_or(|b| c.area > b.area) {
            best = Some(c);
        }
    }
    best.filter(|c| c.area >= cfg.min_hand_area)
}

/// The largest contour touching the frame border with at least
/// `min_edge_area`: a hand only partly in view. Meant for the raw threshold
/// mask, since opening erases thin strips along the border.
pub fn detect_edge_fragment(mask: &BinaryMask, cfg: &FingertipConfig) -> Option<Contour> {
    let (w, h) = (mask.width as i32, mask.height as i32);
    let mut best: Option<Contour> = None;
    for c in find_contours(mask) {
        let on_border = c.points.iter().any(|p| p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1);
        if on_border && best.as_ref().is_none_or(|b| c.area > b.area) {
            best = Some(c);
        }
    }
    best.filter(|c| c.area >= cfg.min_edge_area)
}

fn extreme_point(hand: &Contour, fallback: TipFallback) -> Option<Point> {
    let pts = hand.points.iter().copied();
    match fallback {
        TipFallback::Top => pts.min_by_key(|p| (p.y, p.x)),
        TipFallback::Bottom => pts.min_by_key(|p| (-p.y, p.x)),
        TipFallback::Left => pts.min_by_key(|p| (p.x, p.y)),
        TipFallback::Right => pts.min_by_key(|p| (-p.x, p.y)),
    }
}

fn find_root(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Fingertips from the convexity defects of a hand contour.
///
/// Endpoints of every nonzero defect are grouped by single linkage within
/// `merge_radius`, regardless of depth. A group becomes a fingertip when one of
/// its endpoints belongs to a defect at least `depth_thresh` deep; it is placed
/// at the contour point nearest the centroid of those endpoints. Because the
/// grouping ignores the threshold, raising the threshold can only remove tips.
/// Without any qualifying defect the configured extreme point is the single tip,
/// provided the contour encloses at least `min_hand_area`.
pub fn detect_fingertips(hand: &Contour, cfg: &FingertipConfig) -> Vec<Point> {
    let pts = &hand.points;
    if pts.is_empty() {
        return Vec::new();
    }
    let hull = convex_hull(pts);
    let defects = convexity_defects(hand, &hull).expect("hull vertices come from the contour");

    // (contour index, deepest qualifying depth or None)
    let mut endpoints: Vec<(usize, Option<f64>)> = Vec::new();
    for d in &defects {
        let passes = d.depth >= cfg.depth_thresh;
        for idx in [d.start_idx, d.end_idx] {
            match endpoints.iter_mut().find(|(i, _)| *i == idx) {
                Some((_, depth)) => {
                    if passes {
                        *depth = Some(depth.map_or(d.depth, |x: f64| x.max(d.depth)));
                    }
                }
                None => endpoints.push((idx, passes.then_some(d.depth))),
            }
        }
    }

    if endpoints.iter().all(|(_, d)| d.is_none()) {
        if hand.area < cfg.min_hand_area {
            return Vec::new();
        }
        return extreme_point(hand, cfg.fallback).into_iter().collect();
    }

    let mut parent: Vec<usize> = (0..endpoints.len()).collect();
    for a in 0..endpoints.len() {
        for b in a + 1..endpoints.len() {
            if pts[endpoints[a].0].distance(pts[endpoints[b].0]) < cfg.merge_radius {
                let (ra, rb) = (find_root(&mut parent, a), find_root(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }

    // per group: (sum x, sum y, count, deepest)
    let mut groups: Vec<Option<(f64, f64, usize, f64)>> = vec![None; endpoints.len()];
    for (k, &(idx, depth)) in endpoints.iter().enumerate() {
        let Some(depth) = depth else { continue };
        let root = find_root(&mut parent, k);
        let p = pts[idx];
        let g = groups[root].get_or_insert((0.0, 0.0, 0, 0.0));
        g.0 += f64::from(p.x);
        g.1 += f64::from(p.y);
        g.2 += 1;
        g.3 = g.3.max(depth);
    }

    let mut tips: Vec<(usize, f64)> = groups
        .into_iter()
        .flatten()
        .map(|(sx, sy, n, depth)| {
            let (cx, cy) = ((sx / n as f64).round(), (sy / n as f64).round());
            let nearest = (0..pts.len())
                .min_by(|&i, &j| {
                    let di = (f64::from(pts[i].x) - cx).powi(2) + (f64::from(pts[i].y) - cy).powi(2);
                    let dj = (f64::from(pts[j].x) - cx).powi(2) + (f64::from(pts[j].y) - cy).powi(2);
                    di.total_cmp(&dj).then(i.cmp(&j))
                })
                .expect("nonempty contour");
            (nearest, depth)
        })
        .collect();

    if tips.len() > MAX_FINGERTIPS {
        tips.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        tips.truncate(MAX_FINGERTIPS);
    }
    tips.sort_by_key(|t| t.0);
    tips.dedup_by_key(|t| t.0);
    tips.into_iter().map(|(i, _)| pts[i]).collect()
}

/// Runs preprocessing and hand detection on one frame. Without a hand in the
/// cleaned mask, an edge fragment of the raw mask stands in for it, with no
/// fingertips.
pub fn analyze_frame(
    frame: &ThermalFrame,
    pre: &PreprocessConfig,
    tips: &FingertipConfig,
) -> Result<FrameAnalysis> {
    match normalize_and_threshold(frame, pre) {
        Ok((normalized, raw)) => {
            let mask = morph_close(&morph_open(&raw));
            let (contour, fingertips) = match detect_hand(&mask, tips) {
                Some(c) => {
                    let t = detect_fingertips(&c, tips);
                    (Some(c), t)
                }
                None => (detect_edge_fragment(&raw, tips), Vec::new()),
            };
            Ok(FrameAnalysis {
                normalized: Some(normalized),
                observation: HandObservation {
                    frame_index: frame.index,
                    contour,
                    fingertips,
                    skipped: false,
                },
            })
        }
        Err(Error::ZeroMedian) => Ok(FrameAnalysis {
            normalized: None,
            observation: HandObservation {
                skipped: true,
                ..HandObservation::empty(frame.index)
            },
        }),
        Err(e) => Err(e),
    }
}

/// First pass over a whole recording. Frames are processed in parallel; the
/// output keeps input order.
pub fn analyze_sequence(
    frames: &[ThermalFrame],
    pre: &PreprocessConfig,
    tips: &FingertipConfig,
) -> Result<Vec<FrameAnalysis>> {
    if frames.is_empty() {
        return Err(Error::InvalidFrame("empty sequence".into()));
    }
    pre.validate()?;
    tips.validate()?;
    frames
        .par_iter()
        .map(|f| analyze_frame(f, pre, tips))
        .collect()
}

/// Hand observations for every frame; frames without a hand get an empty
/// observation and degenerate frames are marked `skipped`.
pub fn per_frame_pass(
    frames: &[ThermalFrame],
    pre: &PreprocessConfig,
    tips: &FingertipConfig,
) -> Result<Vec<HandObservation>> {
    Ok(analyze_sequence(frames, pre, tips)?
        .into_iter()
        .map(|a| a.observation)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paint_rect(m: &mut BinaryMask, x0: u32, y0: u32, w: u32, h: u32) {
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                m.set(x, y, true);
            }
        }
    }

    #[test]
    fn no_hand_in_empty_mask() {
        assert!(detect_hand(&BinaryMask::empty(20, 20), &FingertipConfig::default()).is_none());
    }

    #[test]
    fn largest_blob_wins() {
        let mut m = BinaryMask::empty(60, 60);
        paint_rect(&mut m, 2, 2, 8, 8); // polygon 7x7 = 49
        paint_rect(&mut m, 20, 20, 21, 21); // polygon 20x20 = 400
        let hand = detect_hand(&m, &FingertipConfig { min_hand_area: 100.0, ..Default::default() })
            .unwrap();
        assert_eq!(hand.area, 400.0);
        assert_eq!(hand.top_left(), Some(Point::new(20, 20)));
    }

    #[test]
    fn small_blob_is_not_a_hand() {
        let mut m = BinaryMask::empty(30, 30);
        paint_rect(&mut m, 2, 2, 8, 8);
        assert!(detect_hand(&m, &FingertipConfig::default()).is_none());
    }

    #[test]
    fn edge_fragment_must_touch_the_border() {
        let mut m = BinaryMask::empty(40, 30);
        paint_rect(&mut m, 10, 27, 8, 3); // polygon 7x2 = 14, on the bottom edge
        paint_rect(&mut m, 25, 5, 10, 9); // polygon 9x8 = 72, interior
        assert!(detect_hand(&m, &FingertipConfig::default()).is_none());
        let frag = detect_edge_fragment(&m, &FingertipConfig::default()).unwrap();
        assert_eq!(frag.area, 14.0);
        assert_eq!(frag.top_left(), Some(Point::new(10, 27)));
        let strict = FingertipConfig { min_edge_area: 15.0, ..Default::default() };
        assert!(detect_edge_fragment(&m, &strict).is_none());
    }

    #[test]
    fn thin_strip_at_border_survives_as_fragment() {
        // a one-row warm strip along the bottom edge is erased by opening
        let (w, h) = (40u32, 30u32);
        let counts: Vec<u16> = (0..w * h)
            .map(|i| if i / w == h - 1 && (10..26).contains(&(i % w)) { 1200 } else { 200 })
            .collect();
        let frame = ThermalFrame::new(w, h, counts, 0, 0).unwrap();
        let (_, cleaned) = preprocess(&frame, &PreprocessConfig::default()).unwrap();
        assert!(detect_hand(&cleaned, &FingertipConfig::default()).is_none());
        let a = analyze_frame(&frame, &PreprocessConfig::default(), &FingertipConfig::default()).unwrap();
        assert!(a.observation.contour.is_some());
        assert!(a.observation.fingertips.is_empty());
    }

    #[test]
    fn ties_go_to_first_in_raster_order() {
        let mut m = BinaryMask::empty(60, 60);
        paint_rect(&mut m, 30, 5, 16, 16);
        paint_rect(&mut m, 2, 30, 16, 16);
        let hand = detect_hand(&m, &FingertipConfig::default()).unwrap();
        assert_eq!(hand.top_left(), Some(Point::new(30, 5)));
    }

    #[test]
    fn convex_blob_falls_back_to_topmost_point() {
        let mut m = BinaryMask::empty(40, 40);
        paint_rect(&mut m, 10, 12, 15, 15);
        let hand = detect_hand(&m, &FingertipConfig::default()).unwrap();
        let tips = detect_fingertips(&hand, &FingertipConfig::default());
        assert_eq!(tips, vec![Point::new(10, 12)]);

        let cfg = FingertipConfig { fallback: TipFallback::Right, ..Default::default() };
        assert_eq!(detect_fingertips(&hand, &cfg), vec![Point::new(24, 12)]);
    }

    #[test]
    fn fallback_parses() {
        assert_eq!("left".parse::<TipFallback>().unwrap(), TipFallback::Left);
        assert!("up".parse::<TipFallback>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(FingertipConfig { depth_thresh: 0.0, ..Default::default() }.validate().is_err());
        assert!(PreprocessConfig { threshold: 1.5, ..Default::default() }.validate().is_err());
        assert!(PreprocessConfig::default().validate().is_ok());
    }
}
