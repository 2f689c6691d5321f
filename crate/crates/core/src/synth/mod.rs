//! Physics-based synthetic thermal scenes with ground truth.
//!
//! The surface starts at ambient temperature. While a finger pad is in
//! contact, the covered pixels relax toward `ambient + deposit_delta_k` with
//! time constant `tau_contact_s`; otherwise every pixel cools toward ambient
//! with time constant `tau_s` (Newtonian cooling). A hand at `hand_k` occludes
//! the surface. Counts are `(T - ambient) * gain + base_counts + noise`.

mod corpus;
pub mod hand;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use corpus::{
    make_corpus, read_manifest, stroke_scene, touch_scene, hover_scene, negative_scene,
    corpus_scenes, ClipCategory, CorpusRecipe, FingerLayout, Manifest, ManifestEntry, MANIFEST_FILE,
    TRUTH_FILE, SCENE_FILE,
};
pub use hand::HandPose;

use crate::error::{Error, Result};
use crate::frames_io::{write_sequence, LinearMap, RgbFrame, SequenceMeta, ThermalFrame};
use crate::stabilize::SimilarityTransform;

/// Hands enter from below, so waypoints may sit this far under the frame.
pub const OFFSCREEN_MARGIN: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneEventKind {
    Touch,
    Hover,
    Stroke,
    Distractor,
}

impl SceneEventKind {
    fn has_hand(self) -> bool {
        self != SceneEventKind::Distractor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    /// Seconds from clip start.
    pub t: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }
}

/// One scripted actor. For hand events the path is the anchor fingertip; a
/// distractor is a warm disk at `path[0]` that exists between the first and
/// last waypoint times (to the end of the clip with a single waypoint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedEvent {
    pub kind: SceneEventKind,
    pub path: Vec<Waypoint>,
    /// Whether the fingers touch the surface along each path segment.
    #[serde(default)]
    pub contact: Vec<bool>,
    #[serde(default = "one")]
    pub finger_count: usize,
    #[serde(default = "default_spacing")]
    pub finger_spacing_px: f64,
    #[serde(default = "default_object_radius")]
    pub object_radius_px: f64,
    #[serde(default = "default_object_delta")]
    pub object_delta_k: f64,
}

fn one() -> usize {
    1
}
fn default_spacing() -> f64 {
    7.0
}
fn default_object_radius() -> f64 {
    5.0
}
fn default_object_delta() -> f64 {
    4.0
}

impl ScriptedEvent {
    pub fn hand(kind: SceneEventKind, path: Vec<Waypoint>, contact: Vec<bool>) -> Self {
        Self {
            kind,
            path,
            contact,
            finger_count: 1,
            finger_spacing_px: default_spacing(),
            object_radius_px: default_object_radius(),
            object_delta_k: default_object_delta(),
        }
    }

    pub fn distractor(x: f64, y: f64, radius: f64, delta_k: f64) -> Self {
        Self {
            kind: SceneEventKind::Distractor,
            path: vec![Waypoint::new(x, y, 0.0)],
            contact: Vec::new(),
            finger_count: 1,
            finger_spacing_px: default_spacing(),
            object_radius_px: radius,
            object_delta_k: delta_k,
        }
    }

    fn start(&self) -> f64 {
        self.path.first().map_or(0.0, |w| w.t)
    }

    fn end(&self) -> f64 {
        match self.path.len() {
            0 => 0.0,
            1 if self.kind == SceneEventKind::Distractor => f64::INFINITY,
            n => self.path[n - 1].t,
        }
    }

    /// Anchor position at time `t`, or `None` outside the scripted span.
    pub fn position(&self, t: f64) -> Option<(f64, f64)> {
        if self.kind == SceneEventKind::Distractor {
            let p = self.path.first()?;
            return (t >= self.start() && t <= self.end()).then_some((p.x, p.y));
        }
        if self.path.is_empty() || t < self.start() || t > self.end() {
            return None;
        }
        for w in self.path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if t <= b.t {
                let f = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 1.0 };
                return Some((a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)));
            }
        }
        self.path.last().map(|p| (p.x, p.y))
    }

    /// True when the fingers are on the surface at time `t`. Segment ends are
    /// half-open, so a zero-length contact segment never touches.
    pub fn in_contact(&self, t: f64) -> bool {
        self.path
            .windows(2)
            .zip(&self.contact)
            .any(|(w, &c)| c && t >= w[0].t && t < w[1].t)
    }

    pub fn pose(&self, t: f64) -> Option<HandPose> {
        if !self.kind.has_hand() {
            return None;
        }
        self.position(t)
            .map(|p| HandPose::new(p, self.finger_count, self.finger_spacing_px))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum JitterSpec {
    /// One transform per frame.
    Explicit { transforms: Vec<SimilarityTransform> },
    /// Frame 0 is the identity; every later frame draws translation, rotation
    /// and scale uniformly within the bounds.
    Random {
        max_translation_px: f64,
        max_rotation_deg: f64,
        max_scale_dev: f64,
    },
}

/// Colored rectangle rendered into the RGB stream as a stabilization reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarkerSpec {
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
    pub angle_deg: f64,
    pub color: [u8; 3],
    pub background: [u8; 3],
}

impl Default for MarkerSpec {
    fn default() -> Self {
        Self {
            cx: 42.5,
            cy: 32.5,
            width: 60.0,
            height: 36.0,
            angle_deg: 0.0,
            color: [250, 220, 0],
            background: [70, 80, 90],
        }
    }
}

impl MarkerSpec {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.angle_deg.to_radians().sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        u.abs() <= self.width / 2.0 && v.abs() <= self.height / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSceneConfig {
    pub dims: (u32, u32),
    pub fps: f64,
    pub duration_s: f64,
    pub ambient_k: f64,
    pub hand_k: f64,
    pub deposit_delta_k: f64,
    /// Cooling time constant of deposited heat.
    pub tau_s: f64,
    /// Time constant of heat transfer while in contact.
    pub tau_contact_s: f64,
    pub pad_radius_px: f64,
    pub noise_sigma_counts: f64,
    pub counts_per_kelvin: f64,
    /// Counts reported for a surface at ambient temperature.
    pub base_counts: f64,
    /// Physics updates per frame interval.
    pub substeps: u32,
    pub events: Vec<ScriptedEvent>,
    pub jitter: Option<JitterSpec>,
    pub marker: Option<MarkerSpec>,
    pub seed: u64,
}

impl Default for SynthSceneConfig {
    fn default() -> Self {
        Self {
            dims: (160, 120),
            fps: 9.0,
            duration_s: 6.0,
            ambient_k: 295.0,
            hand_k: 306.0,
            deposit_delta_k: 3.0,
            tau_s: 2.5,
            tau_contact_s: 0.5,
            pad_radius_px: 3.0,
            noise_sigma_counts: 30.0,
            counts_per_kelvin: 100.0,
            base_counts: 200.0,
            substeps: 4,
            events: Vec::new(),
            jitter: None,
            marker: None,
            seed: 0,
        }
    }
}

impl SynthSceneConfig {
    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps).round().max(1.0) as usize
    }

    pub fn frame_time(&self, i: usize) -> f64 {
        i as f64 / self.fps
    }

    fn in_frame(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x < f64::from(self.dims.0) && y < f64::from(self.dims.1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(m));
        let (w, h) = self.dims;
        if w < crate::frames_io::MIN_FRAME_SIDE || h < crate::frames_io::MIN_FRAME_SIDE {
            return bad(format!("frame {w}x{h} too small"));
        }
        for (name, v) in [
            ("fps", self.fps),
            ("duration_s", self.duration_s),
            ("tau_s", self.tau_s),
            ("tau_contact_s", self.tau_contact_s),
            ("counts_per_kelvin", self.counts_per_kelvin),
            ("pad_radius_px", self.pad_radius_px),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.hand_k.is_finite() && self.hand_k > self.ambient_k) {
            return bad("hand must be warmer than ambient".into());
        }
        if !(self.noise_sigma_counts >= 0.0 && self.deposit_delta_k >= 0.0 && self.base_counts >= 0.0) {
            return bad("noise, deposit and base counts must be non-negative".into());
        }
        if self.substeps == 0 {
            return bad("substeps must be at least 1".into());
        }
        if let Some(JitterSpec::Explicit { transforms }) = &self.jitter {
            if transforms.len() != self.frame_count() {
                return bad(format!(
                    "{} jitter transforms for {} frames",
                    transforms.len(),
                    self.frame_count()
                ));
            }
            if transforms.iter().any(|t| !(t.scale.is_finite() && t.scale > 0.0)) {
                return bad("jitter scale must be positive".into());
            }
        }
        for (i, ev) in self.events.iter().enumerate() {
            self.validate_event(i, ev)?;
        }
        Ok(())
    }

    fn validate_event(&self, i: usize, ev: &ScriptedEvent) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(format!("event {i}: {m}")));
        if ev.path.is_empty() {
            return bad("empty path".into());
        }
        if ev.path.windows(2).any(|w| !(w[1].t.is_finite() && w[1].t >= w[0].t)) {
            return bad("waypoints are not time-ordered".into());
        }
        if ev.kind == SceneEventKind::Distractor {
            let p = ev.path[0];
            if !self.in_frame(p.x, p.y) {
                return bad(format!("object at ({}, {}) outside the frame", p.x, p.y));
            }
            if !(ev.object_radius_px.is_finite() && ev.object_radius_px > 0.0) {
                return bad("object radius must be positive".into());
            }
            return Ok(());
        }
        if ev.finger_count == 0 {
            return bad("finger_count must be at least 1".into());
        }
        if ev.contact.len() != ev.path.len() - 1 {
            return bad(format!(
                "{} contact flags for {} segments",
                ev.contact.len(),
                ev.path.len() - 1
            ));
        }
        if ev.kind == SceneEventKind::Hover && ev.contact.iter().any(|&c| c) {
            return bad("hover events cannot touch".into());
        }
        let (w, h) = (f64::from(self.dims.0), f64::from(self.dims.1));
        for p in &ev.path {
            if !(p.x >= 0.0 && p.x < w && p.y >= 0.0 && p.y <= h + OFFSCREEN_MARGIN) {
                return bad(format!("waypoint ({}, {}) leaves the frame", p.x, p.y));
            }
        }
        for (seg, &c) in ev.path.windows(2).zip(&ev.contact) {
            if !c {
                continue;
            }
            for p in seg {
                let pose = HandPose::new((p.x, p.y), ev.finger_count, ev.finger_spacing_px);
                for f in &pose.fingers {
                    let (px, py) = f.pad_center(self.pad_radius_px);
                    if !self.in_frame(px, py) {
                        return bad(format!("contact at ({px:.1}, {py:.1}) outside the frame"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn meta(&self) -> SequenceMeta {
        SequenceMeta {
            fps: self.fps,
            width: self.dims.0,
            height: self.dims.1,
            counts_to_kelvin: Some(LinearMap {
                gain: 1.0 / self.counts_per_kelvin,
                offset: self.ambient_k - self.base_counts / self.counts_per_kelvin,
            }),
            has_rgb: self.marker.is_some(),
        }
    }
}

/// Excess surface temperature (Kelvin above ambient) at every frame time.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceHistory {
    pub width: u32,
    pub height: u32,
    pub frames: Vec<Vec<f64>>,
}

fn contact_pads(cfg: &SynthSceneConfig, t: f64) -> Vec<(f64, f64)> {
    cfg.events
        .iter()
        .filter(|e| e.kind.has_hand() && e.in_contact(t))
        .filter_map(|e| e.pose(t))
        .flat_map(|pose| {
            pose.fingers
                .iter()
                .map(|f| f.pad_center(cfg.pad_radius_px))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Runs the deposit ledger: exact exponential updates over `substeps`
/// intervals per frame, with contact evaluated at each interval midpoint.
pub fn simulate_surface(cfg: &SynthSceneConfig) -> Result<SurfaceHistory> {
    cfg.validate()?;
    let (w, h) = (cfg.dims.0 as usize, cfg.dims.1 as usize);
    let n = cfg.frame_count();
    let dt = 1.0 / (cfg.fps * f64::from(cfg.substeps));
    let cool = (-dt / cfg.tau_s).exp();
    let heat = (-dt / cfg.tau_contact_s).exp();
    let r = cfg.pad_radius_px;

    let mut field = vec![0.0f64; w * h];
    let mut in_contact = vec![false; w * h];
    let mut frames = Vec::with_capacity(n);
    frames.push(field.clone());
    for i in 1..n {
        for s in 0..cfg.substeps {
            let tm = cfg.frame_time(i - 1) + (f64::from(s) + 0.5) * dt;
            let pads = contact_pads(cfg, tm);
            in_contact.iter_mut().for_each(|c| *c = false);
            for &(cx, cy) in &pads {
                let (x0, x1) = ((cx - r).floor().max(0.0) as usize, ((cx + r).ceil() as usize).min(w - 1));
                let (y0, y1) = ((cy - r).floor().max(0.0) as usize, ((cy + r).ceil() as usize).min(h - 1));
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                        if dx * dx + dy * dy <= r * r {
                            in_contact[y * w + x] = true;
                        }
                    }
                }
            }
            for (v, &c) in field.iter_mut().zip(&in_contact) {
                *v = if c {
                    cfg.deposit_delta_k + (*v - cfg.deposit_delta_k) * heat
                } else {
                    *v * cool
                };
            }
        }
        frames.push(field.clone());
    }
    Ok(SurfaceHistory {
        width: cfg.dims.0,
        height: cfg.dims.1,
        frames,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEvent {
    pub kind: SceneEventKind,
    /// Frames in which the actor is present (hand pixels or object visible).
    pub first_frame: Option<usize>,
    pub last_frame: Option<usize>,
    /// First and last frame whose time falls inside a contact segment.
    pub contact_span: Option<(usize, usize)>,
    /// Pad centers at every contact waypoint (touch) or every in-frame
    /// waypoint (hover).
    pub contact_points: Vec<[f64; 2]>,
    /// Pad path of the anchor finger along contact segments (stroke).
    pub stroke: Vec<[f64; 2]>,
    pub finger_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub events: Vec<TruthEvent>,
    /// Injected per-frame jitter; empty without jitter.
    pub jitter: Vec<SimilarityTransform>,
    /// Whether any hand pixel is visible, per frame.
    pub hand_visible: Vec<bool>,
}

impl GroundTruth {
    pub fn touch_events(&self) -> impl Iterator<Item = &TruthEvent> {
        self.events.iter().filter(|e| e.kind == SceneEventKind::Touch)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthClip {
    pub config: SynthSceneConfig,
    pub meta: SequenceMeta,
    pub frames: Vec<ThermalFrame>,
    pub rgb: Option<Vec<RgbFrame>>,
    pub truth: GroundTruth,
}

fn jitter_transforms(cfg: &SynthSceneConfig) -> Vec<SimilarityTransform> {
    let n = cfg.frame_count();
    match &cfg.jitter {
        None => Vec::new(),
        Some(JitterSpec::Explicit { transforms }) => transforms.clone(),
        Some(JitterSpec::Random {
            max_translation_px,
            max_rotation_deg,
            max_scale_dev,
        }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(u64::MAX);
            let mut sym = |m: f64| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 };
            (0..n)
                .map(|i| {
                    let t = SimilarityTransform {
                        tx: sym(*max_translation_px),
                        ty: sym(*max_translation_px),
                        theta: sym(*max_rotation_deg).to_radians(),
                        scale: 1.0 + sym(*max_scale_dev),
                    };
                    if i == 0 {
                        SimilarityTransform::IDENTITY
                    } else {
                        t
                    }
                })
                .collect()
        }
    }
}

fn truth_for(cfg: &SynthSceneConfig, ev: &ScriptedEvent, visible: &[bool]) -> TruthEvent {
    let n = visible.len();
    let present: Vec<usize> = (0..n).filter(|&i| visible[i]).collect();
    let contact: Vec<usize> = (0..n).filter(|&i| ev.in_contact(cfg.frame_time(i))).collect();
    let pads = |p: &Waypoint| -> Vec<[f64; 2]> {
        HandPose::new((p.x, p.y), ev.finger_count, ev.finger_spacing_px)
            .fingers
            .iter()
            .map(|f| {
                let (x, y) = f.pad_center(cfg.pad_radius_px);
                [x, y]
            })
            .collect()
    };
    let mut contact_points: Vec<[f64; 2]> = Vec::new();
    let mut stroke: Vec<[f64; 2]> = Vec::new();
    match ev.kind {
        SceneEventKind::Touch | SceneEventKind::Stroke => {
            for (seg, &c) in ev.path.windows(2).zip(&ev.contact) {
                if !c {
                    continue;
                }
                for p in seg {
                    for q in pads(p) {
                        if !contact_points.contains(&q) {
                            contact_points.push(q);
                        }
                    }
                    let anchor = pads(p)[0];
                    if ev.kind == SceneEventKind::Stroke && stroke.last() != Some(&anchor) {
                        stroke.push(anchor);
                    }
                }
            }
        }
        SceneEventKind::Hover => {
            for p in ev.path.iter().filter(|p| cfg.in_frame(p.x, p.y)) {
                for q in pads(p) {
                    if !contact_points.contains(&q) {
                        contact_points.push(q);
                    }
                }
            }
        }
        SceneEventKind::Distractor => {
            contact_points.push([ev.path[0].x, ev.path[0].y]);
        }
    }
    TruthEvent {
        kind: ev.kind,
        first_frame: present.first().copied(),
        last_frame: present.last().copied(),
        contact_span: contact.first().map(|&a| (a, *contact.last().unwrap())),
        contact_points,
        stroke,
        finger_count: ev.finger_count,
    }
}

fn sample_bilinear(values: &[f64], w: usize, h: usize, x: f64, y: f64, outside: f64) -> f64 {
    if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
        return outside;
    }
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let at = |xx: usize, yy: usize| values[yy * w + xx];
    (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x1, y0))
        + fy * ((1.0 - fx) * at(x0, y1) + fx * at(x1, y1))
}

/// Noise-free counts of the world (before jitter) plus the per-event hand
/// visibility at frame `i`.
fn render_world(cfg: &SynthSceneConfig, surface: &[f64], i: usize) -> (Vec<f64>, Vec<bool>) {
    let (w, h) = (cfg.dims.0 as usize, cfg.dims.1 as usize);
    let t = cfg.frame_time(i);
    let mut excess = surface.to_vec();
    let mut visible = vec![false; cfg.events.len()];
    for (k, ev) in cfg.events.iter().enumerate() {
        if ev.kind != SceneEventKind::Distractor {
            continue;
        }
        let Some((cx, cy)) = ev.position(t) else { continue };
        let r = ev.object_radius_px;
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= r * r {
                    let v = &mut excess[y * w + x];
                    *v = v.max(ev.object_delta_k);
                    visible[k] = true;
                }
            }
        }
    }
    let hand_excess = cfg.hand_k - cfg.ambient_k;
    for (k, ev) in cfg.events.iter().enumerate() {
        let Some(pose) = ev.pose(t) else { continue };
        let Some((x0, y0, x1, y1)) = pose.pixel_bounds(cfg.dims.0, cfg.dims.1) else {
            continue;
        };
        for y in y0..=y1 {
            for x in x0..=x1 {
                if pose.contains(f64::from(x), f64::from(y)) {
                    excess[y as usize * w + x as usize] = hand_excess;
                    visible[k] = true;
                }
            }
        }
    }
    let counts = excess
        .iter()
        .map(|e| e * cfg.counts_per_kelvin + cfg.base_counts)
        .collect();
    (counts, visible)
}

fn render_marker(cfg: &SynthSceneConfig, marker: &MarkerSpec, jitter: Option<&SimilarityTransform>, i: usize) -> RgbFrame {
    const SS: usize = 4;
    let (w, h) = (cfg.dims.0 as usize, cfg.dims.1 as usize);
    let inv = jitter.map(|t| t.inverse());
    let mut rgb = vec![0u8; 3 * w * h];
    for y in 0..h {
        for x in 0..w {
            let mut hits = 0usize;
            for sy in 0..SS {
                for sx in 0..SS {
                    let px = x as f64 + (sx as f64 + 0.5) / SS as f64 - 0.5;
                    let py = y as f64 + (sy as f64 + 0.5) / SS as f64 - 0.5;
                    let (wx, wy) = inv.map_or((px, py), |t| t.apply(px, py));
                    if marker.contains(wx, wy) {
                        hits += 1;
                    }
                }
            }
            let a = hits as f64 / (SS * SS) as f64;
            for c in 0..3 {
                let (bg, fg) = (f64::from(marker.background[c]), f64::from(marker.color[c]));
                rgb[3 * (y * w + x) + c] = (bg + a * (fg - bg)).round() as u8;
            }
        }
    }
    RgbFrame {
        width: cfg.dims.0,
        height: cfg.dims.1,
        rgb,
        index: i,
    }
}

/// Renders a scene. Deterministic for a given config, including its seed,
/// regardless of the number of worker threads.
pub fn generate(cfg: &SynthSceneConfig) -> Result<SynthClip> {
    let surface = simulate_surface(cfg)?;
    let meta = cfg.meta();
    let jitter = jitter_transforms(cfg);
    let (w, h) = (cfg.dims.0 as usize, cfg.dims.1 as usize);
    let noise = (cfg.noise_sigma_counts > 0.0)
        .then(|| Normal::new(0.0, cfg.noise_sigma_counts).expect("finite sigma"));

    let rendered: Vec<(ThermalFrame, Vec<bool>, bool)> = surface
        .frames
        .par_iter()
        .enumerate()
        .map(|(i, field)| {
            let (world, visible) = render_world(cfg, field, i);
            let hand_visible = cfg
                .events
                .iter()
                .zip(&visible)
                .any(|(e, &v)| v && e.kind.has_hand());
            let warped = match jitter.get(i) {
                Some(t) if !t.is_identity() => {
                    let inv = t.inverse();
                    let mut out = vec![0.0; w * h];
                    for y in 0..h {
                        for x in 0..w {
                            let (sx, sy) = inv.apply(x as f64, y as f64);
                            out[y * w + x] = sample_bilinear(&world, w, h, sx, sy, cfg.base_counts);
                        }
                    }
                    out
                }
                _ => world,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let counts = warped
                .iter()
                .map(|&v| {
                    let n = noise.map_or(0.0, |d| d.sample(&mut rng));
                    (v + n).round().clamp(0.0, 65535.0) as u16
                })
                .collect();
            let frame = ThermalFrame {
                width: cfg.dims.0,
                height: cfg.dims.1,
                counts,
                index: i,
                timestamp_ms: meta.timestamp_ms(i),
            };
            (frame, visible, hand_visible)
        })
        .collect();

    let rgb = cfg.marker.as_ref().map(|m| {
        (0..rendered.len())
            .into_par_iter()
            .map(|i| render_marker(cfg, m, jitter.get(i), i))
            .collect::<Vec<_>>()
    });

    let events = cfg
        .events
        .iter()
        .enumerate()
        .map(|(k, ev)| {
            let vis: Vec<bool> = rendered.iter().map(|r| r.1[k]).collect();
            truth_for(cfg, ev, &vis)
        })
        .collect();
    let hand_visible = rendered.iter().map(|r| r.2).collect();
    let frames = rendered.into_iter().map(|r| r.0).collect();
    Ok(SynthClip {
        config: cfg.clone(),
        meta,
        frames,
        rgb,
        truth: GroundTruth {
            events,
            jitter,
            hand_visible,
        },
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes the sequence, `truth.json` and the generating `scene.json`.
pub fn write_clip(dir: impl AsRef<Path>, clip: &SynthClip) -> Result<()> {
    let dir = dir.as_ref();
    write_sequence(dir, &clip.meta, &clip.frames, clip.rgb.as_deref())?;
    write_json(&dir.join(TRUTH_FILE), &clip.truth)?;
    write_json(&dir.join(SCENE_FILE), &clip.config)
}

pub fn read_truth(dir: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = dir.as_ref().join(TRUTH_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(&path, e))
}

pub fn read_scene(path: impl AsRef<Path>) -> Result<SynthSceneConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}
