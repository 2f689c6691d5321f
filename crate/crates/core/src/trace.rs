//! Finger traces from residual heat against a hand-free baseline.
//!
//! Every pixel that stays warmer than the baseline for a few frames while no
//! hand covers it is stamped with the frame its warm run started. Stamped
//! pixels are grouped into 8-connected clusters and each cluster becomes a
//! polyline through the centroids of its stamps, oldest first.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand_detect::FrameAnalysis;
use crate::imgproc::{dilate_square, fill_contour, gaussian_blur, label_components, BinaryMask, GrayImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceConfig {
    /// Minimum smoothed residual, normalized intensity.
    pub residual_floor: f64,
    /// Leading hand-free frames averaged into the baseline, at most.
    pub baseline_frames: usize,
    pub smooth_sigma: f64,
    /// Consecutive warm frames before a pixel is stamped.
    pub persistence: usize,
    /// Dilation of the filled hand contour, in pixels.
    pub hand_margin: u32,
    pub min_cluster_px: usize,
    /// Stamps with fewer new pixels than this yield no point.
    pub min_stamp_px: usize,
    /// Hand-free frames averaged for the decay comparison, at most.
    pub decay_frames: usize,
    pub decay_margin: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            residual_floor: 0.05,
            baseline_frames: 3,
            smooth_sigma: 2.0,
            persistence: 3,
            hand_margin: 5,
            min_cluster_px: 8,
            min_stamp_px: 4,
            decay_frames: 3,
            decay_margin: 0.02,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_floor > 0.0 && self.residual_floor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "residual floor {} outside (0, 1)",
                self.residual_floor
            )));
        }
        if !(self.smooth_sigma >= 0.0 && self.smooth_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "trace smoothing sigma {} must be finite and non-negative",
                self.smooth_sigma
            )));
        }
        if self.baseline_frames == 0 {
            return Err(Error::InvalidParameter("at least one baseline frame is required".into()));
        }
        if self.decay_frames == 0 {
            return Err(Error::InvalidParameter("at least one decay frame is required".into()));
        }
        if self.persistence == 0 {
            return Err(Error::InvalidParameter("trace persistence must be at least 1".into()));
        }
        if !(self.decay_margin >= 0.0 && self.decay_margin.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "decay margin {} must be finite and non-negative",
                self.decay_margin
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x: f64,
    pub y: f64,
    /// Frame in which the point's pixels first turned warm.
    pub frame: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TracePolyline {
    pub points: Vec<TracePoint>,
    pub length: f64,
}

impl TracePolyline {
    pub fn new(points: Vec<TracePoint>) -> Self {
        let length = points
            .windows(2)
            .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
            .fold(0.0, |a, b| a + b);
        Self { points, length }
    }
}

/// Mean of up to `limit` leading hand-free frames, and the index after them.
fn baseline(analyses: &[FrameAnalysis], limit: usize) -> Result<(GrayImage, usize)> {
    let start = analyses
        .iter()
        .position(|a| a.normalized.is_some() && !a.observation.has_hand())
        .ok_or(Error::NoBaseline)?;
    let mut sum: Option<GrayImage> = None;
    let mut count = 0usize;
    let mut end = start;
    for a in analyses[start..].iter().take(limit) {
        let Some(img) = a.normalized.as_ref() else { break };
        if a.observation.has_hand() {
            break;
        }
        match sum.as_mut() {
            None => sum = Some(img.clone()),
            Some(s) => {
                if (s.width, s.height) != (img.width, img.height) {
                    return Err(Error::DimensionMismatch {
                        expected: (s.width, s.height),
                        found: (img.width, img.height),
                    });
                }
                s.values.iter_mut().zip(&img.values).for_each(|(a, b)| *a += b);
            }
        }
        count += 1;
        end += 1;
    }
    let mut mean = sum.ok_or(Error::NoBaseline)?;
    mean.values.iter_mut().for_each(|v| *v /= count as f64);
    Ok((mean, end))
}

fn exclusion(a: &FrameAnalysis, w: u32, h: u32, margin: u32) -> BinaryMask {
    match &a.observation.contour {
        Some(c) => dilate_square(&fill_contour(c, w, h), margin),
        None => BinaryMask::empty(w, h),
    }
}

/// Smoothed, clamped warming over the baseline with the hand region zeroed.
fn residual(img: &GrayImage, base: &GrayImage, excluded: &BinaryMask, sigma: f64) -> Result<GrayImage> {
    if (img.width, img.height) != (base.width, base.height) {
        return Err(Error::DimensionMismatch {
            expected: (base.width, base.height),
            found: (img.width, img.height),
        });
    }
    let diff: Vec<f64> = img
        .values
        .iter()
        .zip(&base.values)
        .zip(&excluded.bits)
        .map(|((v, b), &ex)| if ex { 0.0 } else { v - b })
        .collect();
    let diff = GrayImage::new(img.width, img.height, diff);
    let mut smooth = if sigma > 0.0 {
        gaussian_blur(&diff, sigma, (2.0 * sigma).ceil() as u32)?
    } else {
        diff
    };
    smooth.values.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(smooth)
}

fn turns_back(a: &TracePoint, b: &TracePoint, c: &TracePoint) -> bool {
    (b.x - a.x) * (c.x - b.x) + (b.y - a.y) * (c.y - b.y) < 0.0
}

/// Resolves reversals: wherever the path turns by more than 90 degrees, the
/// lighter of the two points after the turn is dropped, until none is left.
/// Pixels are stamped once, so a stroke cannot revisit its own trail between
/// two stamps; such points come from pixels uncovered as the hand moves or
/// leaves.
fn prune_reversals(mut pts: Vec<(TracePoint, usize)>) -> Vec<TracePoint> {
    while let Some(i) = (1..pts.len().saturating_sub(1)).find(|&i| turns_back(&pts[i - 1].0, &pts[i].0, &pts[i + 1].0)) {
        pts.remove(if pts[i].1 < pts[i + 1].1 { i } else { i + 1 });
    }
    pts.into_iter().map(|(p, _)| p).collect()
}

/// One polyline per warm cluster, clusters ordered by their oldest stamp.
pub fn build_trace(analyses: &[FrameAnalysis], cfg: &TraceConfig) -> Result<Vec<TracePolyline>> {
    cfg.validate()?;
    let (base, first) = baseline(analyses, cfg.baseline_frames)?;
    let (w, h) = (base.width, base.height);
    let n = base.values.len();
    let mut run = vec![0usize; n];
    let mut run_start = vec![0usize; n];
    let mut stamp: Vec<Option<usize>> = vec![None; n];

    for (t, a) in analyses.iter().enumerate().skip(first) {
        let Some(img) = a.normalized.as_ref() else { continue };
        let excluded = exclusion(a, w, h, cfg.hand_margin);
        let res = residual(img, &base, &excluded, cfg.smooth_sigma)?;
        for i in 0..n {
            if excluded.bits[i] || res.values[i] <= cfg.residual_floor {
                run[i] = 0;
                continue;
            }
            if run[i] == 0 {
                run_start[i] = t;
            }
            run[i] += 1;
            if run[i] >= cfg.persistence && stamp[i].is_none() {
                stamp[i] = Some(run_start[i]);
            }
        }
    }

    let mask = BinaryMask::new(w, h, stamp.iter().map(Option::is_some).collect());
    let (labels, count) = label_components(&mask);
    // label -> stamp -> (sum x, sum y, pixels)
    let mut groups: Vec<BTreeMap<usize, (f64, f64, usize)>> = vec![BTreeMap::new(); count as usize];
    let mut sizes = vec![0usize; count as usize];
    for (i, s) in stamp.iter().enumerate() {
        let Some(s) = *s else { continue };
        let l = labels[i] as usize - 1;
        sizes[l] += 1;
        let e = groups[l].entry(s).or_insert((0.0, 0.0, 0));
        e.0 += (i % w as usize) as f64;
        e.1 += (i / w as usize) as f64;
        e.2 += 1;
    }
    let mut polylines: Vec<TracePolyline> = groups
        .into_iter()
        .zip(sizes)
        .filter(|(_, size)| *size >= cfg.min_cluster_px)
        .map(|(g, _)| {
            TracePolyline::new(prune_reversals(
                g.into_iter()
                    .filter(|(_, (_, _, k))| *k >= cfg.min_stamp_px)
                    .map(|(frame, (sx, sy, k))| {
                        let p = TracePoint {
                            x: sx / k as f64,
                            y: sy / k as f64,
                            frame,
                        };
                        (p, k)
                    })
                    .collect(),
            ))
        })
        .filter(|p: &TracePolyline| !p.points.is_empty())
        .collect();
    polylines.sort_by_key(|p| p.points[0].frame);
    Ok(polylines)
}

fn mean_around(img: &GrayImage, x: f64, y: f64) -> f64 {
    let (cx, cy) = (x.round() as i64, y.round() as i64);
    let mut sum = 0.0;
    let mut k = 0;
    for yy in cy - 1..=cy + 1 {
        for xx in cx - 1..=cx + 1 {
            if xx >= 0 && yy >= 0 && xx < i64::from(img.width) && yy < i64::from(img.height) {
                sum += img.get(xx as u32, yy as u32);
                k += 1;
            }
        }
    }
    if k == 0 {
        0.0
    } else {
        sum / f64::from(k)
    }
}

/// True when the trace warms toward its newest end: the least-squares line
/// of residual against stamp frame rises by more than `cfg.decay_margin`
/// from the oldest to the newest stamp. All points are read in the same
/// frames, the first `cfg.decay_frames` hand-free frames after the newest
/// stamp (or the last hand-free frames when none follow it). Traces with
/// fewer than two points, or a single stamp frame, pass.
pub fn trace_decay_check(polyline: &TracePolyline, analyses: &[FrameAnalysis], cfg: &TraceConfig) -> Result<bool> {
    let (Some(oldest), Some(newest)) = (polyline.points.first(), polyline.points.last()) else {
        return Ok(true);
    };
    let span = newest.frame as f64 - oldest.frame as f64;
    if polyline.points.len() < 2 || span <= 0.0 {
        return Ok(true);
    }
    let (base, _) = baseline(analyses, cfg.baseline_frames)?;
    let free = |a: &&FrameAnalysis| a.normalized.is_some() && !a.observation.has_hand();
    let mut frames: Vec<&FrameAnalysis> = analyses
        .iter()
        .skip(newest.frame + 1)
        .filter(free)
        .take(cfg.decay_frames)
        .collect();
    if frames.is_empty() {
        frames = analyses.iter().rev().filter(free).take(cfg.decay_frames).collect();
    }
    if frames.is_empty() {
        return Ok(false);
    }
    let none = BinaryMask::empty(base.width, base.height);
    // endpoints carry partial deposits; fit on the interior when possible
    let pts = if polyline.points.len() >= 4 {
        &polyline.points[1..polyline.points.len() - 1]
    } else {
        &polyline.points[..]
    };
    let mut levels = vec![0.0; pts.len()];
    for a in &frames {
        let img = a.normalized.as_ref().expect("filtered on presence");
        let res = residual(img, &base, &none, cfg.smooth_sigma)?;
        for (l, p) in levels.iter_mut().zip(pts) {
            *l += mean_around(&res, p.x, p.y) / frames.len() as f64;
        }
    }
    let n = levels.len() as f64;
    let mt = pts.iter().map(|p| p.frame as f64).sum::<f64>() / n;
    let ml = levels.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (p, l) in pts.iter().zip(&levels) {
        let dt = p.frame as f64 - mt;
        sxy += dt * (l - ml);
        sxx += dt * dt;
    }
    if sxx == 0.0 {
        return Ok(true);
    }
    Ok(sxy / sxx * span > cfg.decay_margin)
}

/// Polylines that pass [`trace_decay_check`].
pub fn decaying_traces(analyses: &[FrameAnalysis], cfg: &TraceConfig) -> Result<Vec<TracePolyline>> {
    let mut out = Vec::new();
    for p in build_trace(analyses, cfg)? {
        if trace_decay_check(&p, analyses, cfg)? {
            out.push(p);
        }
    }
    Ok(out)
}

pub fn write_traces_json(path: &Path, traces: &[TracePolyline]) -> Result<()> {
    let body: Vec<&Vec<TracePoint>> = traces.iter().map(|t| &t.points).collect();
    let text = serde_json::to_string_pretty(&body).map_err(|e| Error::json(path, e))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_traces_json(path: &Path) -> Result<Vec<TracePolyline>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let body: Vec<Vec<TracePoint>> = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    Ok(body.into_iter().map(TracePolyline::new).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand_detect::{analyze_sequence, FingertipConfig, PreprocessConfig};
    use crate::synth::{generate, stroke_scene, SynthSceneConfig};
    use crate::imgproc::Point;
    use crate::hand_detect::HandObservation;
    use crate::Contour;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn analyses_of(cfg: &SynthSceneConfig) -> Vec<FrameAnalysis> {
        let clip = generate(cfg).unwrap();
        analyze_sequence(&clip.frames, &PreprocessConfig::default(), &FingertipConfig::default()).unwrap()
    }

    fn segment_distance(p: (f64, f64), a: [f64; 2], b: [f64; 2]) -> f64 {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p.0 - a[0]) * dx + (p.1 - a[1]) * dy) / len2).clamp(0.0, 1.0)
        };
        (p.0 - a[0] - t * dx).hypot(p.1 - a[1] - t * dy)
    }

    fn flat(v: f64, n: usize) -> Vec<FrameAnalysis> {
        (0..n)
            .map(|i| FrameAnalysis {
                normalized: Some(GrayImage::filled(40, 30, v)),
                observation: HandObservation::empty(i),
            })
            .collect()
    }

    #[test]
    fn quiet_clip_has_no_trace() {
        let cfg = SynthSceneConfig { duration_s: 3.0, ..SynthSceneConfig::default() };
        assert!(build_trace(&analyses_of(&cfg), &TraceConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn no_baseline_is_an_error() {
        let mut a = flat(0.0, 3);
        for f in &mut a {
            f.observation.contour = Some(Contour::from_points(vec![Point::new(1, 1), Point::new(2, 1)]));
        }
        assert!(matches!(build_trace(&a, &TraceConfig::default()), Err(Error::NoBaseline)));
    }

    #[test]
    fn straight_stroke_follows_segment() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let scene = stroke_scene(&SynthSceneConfig::default(), &mut rng, 40.0);
        let clip = generate(&scene).unwrap();
        let stroke = clip.truth.events[0].stroke.clone();
        let analyses =
            analyze_sequence(&clip.frames, &PreprocessConfig::default(), &FingertipConfig::default()).unwrap();
        let traces = build_trace(&analyses, &TraceConfig::default()).unwrap();
        assert_eq!(traces.len(), 1, "{traces:?}");
        let t = &traces[0];
        assert!(t.points.len() >= 3);
        let mean = t
            .points
            .iter()
            .map(|p| segment_distance((p.x, p.y), stroke[0], stroke[1]))
            .sum::<f64>()
            / t.points.len() as f64;
        assert!(mean <= 3.0, "mean distance {mean}");
        assert!(t.points.windows(2).all(|w| w[0].frame < w[1].frame));
        assert!(trace_decay_check(t, &analyses, &TraceConfig::default()).unwrap());
    }

    #[test]
    fn two_strokes_two_polylines() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = SynthSceneConfig::default();
        let a = stroke_scene(&base, &mut rng, 35.0);
        let ev_a = a.events[0].clone();
        let mut ev_b;
        loop {
            ev_b = stroke_scene(&base, &mut rng, 35.0).events[0].clone();
            // keep the two trails well apart
            let d = (ev_a.path[1].x - ev_b.path[1].x).abs().min((ev_a.path[2].x - ev_b.path[2].x).abs());
            if d > 45.0 {
                break;
            }
        }
        let shift = ev_a.path.last().unwrap().t + 0.5 - ev_b.path[0].t;
        ev_b.path.iter_mut().for_each(|w| w.t += shift);
        let end = ev_b.path.last().unwrap().t + 1.5;
        let scene = SynthSceneConfig {
            duration_s: end,
            events: vec![ev_a, ev_b],
            seed: 77,
            ..base
        };
        let traces = build_trace(&analyses_of(&scene), &TraceConfig::default()).unwrap();
        assert_eq!(traces.len(), 2, "{traces:?}");
    }

    #[test]
    fn uniform_warm_pair_fails_decay() {
        // warm everywhere from the baseline on: equal residual at both ends
        let mut a = flat(0.2, 6);
        for f in a.iter_mut().skip(1) {
            f.normalized = Some(GrayImage::filled(40, 30, 0.5));
        }
        let p = TracePolyline::new(vec![
            TracePoint { x: 5.0, y: 5.0, frame: 1 },
            TracePoint { x: 30.0, y: 20.0, frame: 4 },
        ]);
        assert!(!trace_decay_check(&p, &a, &TraceConfig::default()).unwrap());
    }

    #[test]
    fn static_object_leaves_no_trace() {
        let mut a = flat(0.2, 6);
        for f in &mut a {
            let img = f.normalized.as_mut().unwrap();
            for y in 10..20 {
                for x in 10..20 {
                    img.set(x, y, 0.9);
                }
            }
        }
        assert!(build_trace(&a, &TraceConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn single_point_passes_decay() {
        let p = TracePolyline::new(vec![TracePoint { x: 3.0, y: 3.0, frame: 2 }]);
        assert!(trace_decay_check(&p, &flat(0.0, 3), &TraceConfig::default()).unwrap());
        assert!(p.length == 0.0 && p.length.is_sign_positive());
    }

    #[test]
    fn persistence_filters_flicker() {
        let mut a = flat(0.2, 8);
        // one warm frame only
        let img = a[3].normalized.as_mut().unwrap();
        for y in 5..15 {
            for x in 5..15 {
                img.set(x, y, 0.9);
            }
        }
        assert!(build_trace(&a, &TraceConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn appearing_patch_is_stamped_at_first_warm_frame() {
        let mut a = flat(0.2, 8);
        for f in a.iter_mut().skip(3) {
            let img = f.normalized.as_mut().unwrap();
            for y in 10..16 {
                for x in 10..16 {
                    img.set(x, y, 0.9);
                }
            }
        }
        let cfg = TraceConfig { smooth_sigma: 0.0, ..TraceConfig::default() };
        let t = build_trace(&a, &cfg).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].points, vec![TracePoint { x: 12.5, y: 12.5, frame: 3 }]);
    }

    #[test]
    fn hand_region_is_not_stamped() {
        let mut a = flat(0.2, 8);
        for f in a.iter_mut().skip(2) {
            let img = f.normalized.as_mut().unwrap();
            for y in 10..16 {
                for x in 10..16 {
                    img.set(x, y, 0.9);
                }
            }
            f.observation.contour = Some(Contour::from_points(vec![
                Point::new(12, 12),
                Point::new(13, 12),
                Point::new(13, 13),
                Point::new(12, 13),
            ]));
        }
        let cfg = TraceConfig { smooth_sigma: 0.0, ..TraceConfig::default() };
        assert!(build_trace(&a, &cfg).unwrap().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traces.json");
        let t = vec![TracePolyline::new(vec![
            TracePoint { x: 1.0, y: 2.0, frame: 3 },
            TracePoint { x: 4.0, y: 6.0, frame: 5 },
        ])];
        write_traces_json(&path, &t).unwrap();
        let back = read_traces_json(&path).unwrap();
        assert_eq!(back, t);
        assert_eq!(back[0].length, 5.0);
        let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(raw[0][1]["frame"], 5);
    }

    fn weighted(pts: &[(f64, f64, usize)]) -> Vec<(TracePoint, usize)> {
        pts.iter()
            .enumerate()
            .map(|(frame, &(x, y, k))| (TracePoint { x, y, frame }, k))
            .collect()
    }

    #[test]
    fn light_straggler_after_the_end_is_dropped() {
        let kept = prune_reversals(weighted(&[(0.0, 0.0, 20), (3.0, 0.0, 20), (6.0, 0.0, 90), (2.0, 1.0, 5)]));
        assert_eq!(kept.iter().map(|p| p.x).collect::<Vec<_>>(), vec![0.0, 3.0, 6.0]);
    }

    #[test]
    fn light_spike_goes_heavy_end_stays() {
        let kept = prune_reversals(weighted(&[
            (0.0, 0.0, 20),
            (3.0, 0.0, 20),
            (1.0, 3.0, 6),
            (6.0, 0.0, 20),
            (12.0, 0.0, 120),
            (9.0, 1.0, 7),
        ]));
        assert_eq!(kept.iter().map(|p| p.x).collect::<Vec<_>>(), vec![0.0, 3.0, 6.0, 12.0]);
    }

    #[test]
    fn right_angle_corner_is_kept() {
        let pts = [(0.0, 0.0, 9), (3.0, 0.0, 9), (6.0, 0.0, 9), (6.0, 3.0, 9), (6.0, 6.0, 9)];
        assert_eq!(prune_reversals(weighted(&pts)).len(), 5);
    }
}
