//! Seeded corpora of labeled clips.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{generate, write_clip, write_json, ScriptedEvent, SceneEventKind, SynthSceneConfig, Waypoint};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRUTH_FILE: &str = "truth.json";
pub const SCENE_FILE: &str = "scene.json";

/// Offscreen depth below the frame where hands start and end.
const OFFSCREEN_Y: f64 = 45.0;
const CLOSE_SPACING: f64 = 7.0;
const WIDE_SPACING: f64 = 28.0;
const STROKE_SPEED: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClipCategory {
    Touch,
    Hover,
    Negative,
}

impl ClipCategory {
    pub const ALL: [ClipCategory; 3] = [ClipCategory::Touch, ClipCategory::Hover, ClipCategory::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            ClipCategory::Touch => "touch",
            ClipCategory::Hover => "hover",
            ClipCategory::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FingerLayout {
    Single,
    /// Adjacent fingers pressed together; they read as one blob.
    Close(usize),
    /// Two splayed fingers far enough apart for separate regions.
    Wide,
}

impl FingerLayout {
    fn count_and_spacing(self) -> (usize, f64) {
        match self {
            FingerLayout::Single => (1, CLOSE_SPACING),
            FingerLayout::Close(n) => (n.max(1), CLOSE_SPACING),
            FingerLayout::Wide => (2, WIDE_SPACING),
        }
    }

    fn half_span(self) -> f64 {
        let (n, s) = self.count_and_spacing();
        (n as f64 - 1.0) / 2.0 * s
    }
}

/// Clip counts per category plus the shared scene settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusRecipe {
    /// Touch clips, including the multi-finger ones.
    pub touch: usize,
    /// How many of the touch clips use more than one finger.
    pub multi_finger: usize,
    pub hover: usize,
    pub negative: usize,
    pub seed: u64,
    pub duration_s: f64,
    pub noise_sigma_counts: f64,
    pub dims: (u32, u32),
    pub fps: f64,
}

impl Default for CorpusRecipe {
    fn default() -> Self {
        Self {
            touch: 0,
            multi_finger: 0,
            hover: 0,
            negative: 0,
            seed: 0,
            duration_s: 6.0,
            noise_sigma_counts: 30.0,
            dims: (160, 120),
            fps: 9.0,
        }
    }
}

impl CorpusRecipe {
    /// 15 touch clips (4 multi-finger), 5 hover, 5 negative.
    pub fn split25(seed: u64) -> Self {
        Self {
            touch: 15,
            multi_finger: 4,
            hover: 5,
            negative: 5,
            seed,
            ..Self::default()
        }
    }

    /// 60 touch clips (20 multi-finger), 20 hover, 20 negative.
    pub fn corpus100(seed: u64) -> Self {
        Self {
            touch: 60,
            multi_finger: 20,
            hover: 20,
            negative: 20,
            seed,
            ..Self::default()
        }
    }

    pub fn total(&self) -> usize {
        self.touch + self.hover + self.negative
    }

    pub fn validate(&self) -> Result<()> {
        if self.multi_finger > self.touch {
            return Err(Error::InvalidParameter(format!(
                "{} multi-finger clips exceed {} touch clips",
                self.multi_finger, self.touch
            )));
        }
        self.base_scene().validate()
    }

    fn base_scene(&self) -> SynthSceneConfig {
        SynthSceneConfig {
            dims: self.dims,
            fps: self.fps,
            duration_s: self.duration_s,
            noise_sigma_counts: self.noise_sigma_counts,
            ..SynthSceneConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub category: ClipCategory,
    pub fingers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub recipe: CorpusRecipe,
    pub clips: Vec<ManifestEntry>,
}

fn offscreen(rng: &mut ChaCha8Rng, x: f64, base: &SynthSceneConfig) -> (f64, f64) {
    let w = f64::from(base.dims.0);
    let dx: f64 = rng.random_range(-20.0..=20.0);
    ((x + dx).clamp(1.0, w - 2.0), f64::from(base.dims.1) + OFFSCREEN_Y)
}

/// Approach from below, dwell on the target (touching or not), retract.
fn dwell_scene(
    base: &SynthSceneConfig,
    rng: &mut ChaCha8Rng,
    layout: FingerLayout,
    contact: bool,
) -> SynthSceneConfig {
    let (w, h) = (f64::from(base.dims.0), f64::from(base.dims.1));
    let margin = 16.0 + layout.half_span();
    let x = rng.random_range(margin..=w - margin);
    let y = rng.random_range(16.0..=h - 50.0);
    let t0 = rng.random_range(0.5..=1.2);
    let t1 = t0 + rng.random_range(0.6..=0.8);
    let t2 = t1 + rng.random_range(1.0..=1.6);
    let t3 = t2 + rng.random_range(0.6..=0.8);
    let (sx, sy) = offscreen(rng, x, base);
    let (ex, ey) = offscreen(rng, x, base);
    let (n, spacing) = layout.count_and_spacing();
    let kind = if contact { SceneEventKind::Touch } else { SceneEventKind::Hover };
    let mut ev = ScriptedEvent::hand(
        kind,
        vec![
            Waypoint::new(sx, sy, t0),
            Waypoint::new(x, y, t1),
            Waypoint::new(x, y, t2),
            Waypoint::new(ex, ey, t3),
        ],
        vec![false, contact, false],
    );
    ev.finger_count = n;
    ev.finger_spacing_px = spacing;
    SynthSceneConfig {
        events: vec![ev],
        seed: rng.random(),
        ..base.clone()
    }
}

pub fn touch_scene(base: &SynthSceneConfig, rng: &mut ChaCha8Rng, layout: FingerLayout) -> SynthSceneConfig {
    dwell_scene(base, rng, layout, true)
}

pub fn hover_scene(base: &SynthSceneConfig, rng: &mut ChaCha8Rng) -> SynthSceneConfig {
    dwell_scene(base, rng, FingerLayout::Single, false)
}

/// A static warm object plus a hand sweeping through the scene without
/// touching, kept away from the object.
pub fn negative_scene(base: &SynthSceneConfig, rng: &mut ChaCha8Rng) -> SynthSceneConfig {
    let (w, h) = (f64::from(base.dims.0), f64::from(base.dims.1));
    let ox = rng.random_range(15.0..=w - 15.0);
    let oy = rng.random_range(15.0..=h - 40.0);
    let object = ScriptedEvent::distractor(ox, oy, rng.random_range(4.0..=6.0), rng.random_range(3.0..=5.0));
    let far = |x: f64, y: f64| (x - ox).hypot(y - oy) > 35.0;
    let (ax, ay, bx, by) = loop {
        let ax = rng.random_range(16.0..=w - 16.0);
        let ay = rng.random_range(25.0..=h - 45.0);
        let bx = rng.random_range(16.0..=w - 16.0);
        let by = rng.random_range(25.0..=h - 45.0);
        if far(ax, ay) && far(bx, by) && far((ax + bx) / 2.0, (ay + by) / 2.0) {
            break (ax, ay, bx, by);
        }
    };
    let t0 = rng.random_range(0.5..=1.5);
    let (sx, sy) = offscreen(rng, ax, base);
    let (ex, ey) = offscreen(rng, bx, base);
    let pass = ScriptedEvent::hand(
        SceneEventKind::Hover,
        vec![
            Waypoint::new(sx, sy, t0),
            Waypoint::new(ax, ay, t0 + 0.8),
            Waypoint::new(bx, by, t0 + 1.8),
            Waypoint::new(ex, ey, t0 + 2.6),
        ],
        vec![false; 3],
    );
    SynthSceneConfig {
        events: vec![object, pass],
        seed: rng.random(),
        ..base.clone()
    }
}

/// A single-finger stroke of the given length, drawn sideways or toward the
/// wrist so the hand does not cover the fresh trail.
pub fn stroke_scene(base: &SynthSceneConfig, rng: &mut ChaCha8Rng, length: f64) -> SynthSceneConfig {
    let (w, h) = (f64::from(base.dims.0), f64::from(base.dims.1));
    let (a, b) = loop {
        let angle: f64 = rng.random_range(0.0..=PI);
        let ax = rng.random_range(20.0..=w - 20.0);
        let ay = rng.random_range(15.0..=h - 45.0);
        let (bx, by) = (ax + length * angle.cos(), ay + length * angle.sin());
        if (20.0..=w - 20.0).contains(&bx) && (15.0..=h - 45.0).contains(&by) {
            break ((ax, ay), (bx, by));
        }
    };
    let t0 = rng.random_range(0.6..=1.0);
    let t1 = t0 + 0.7;
    let t3 = t1 + length / STROKE_SPEED;
    let t4 = t3 + 0.7;
    let (sx, sy) = offscreen(rng, a.0, base);
    let (ex, ey) = offscreen(rng, b.0, base);
    let ev = ScriptedEvent::hand(
        SceneEventKind::Stroke,
        vec![
            Waypoint::new(sx, sy, t0),
            Waypoint::new(a.0, a.1, t1),
            Waypoint::new(b.0, b.1, t3),
            Waypoint::new(ex, ey, t4),
        ],
        vec![false, true, false],
    );
    SynthSceneConfig {
        duration_s: base.duration_s.max(t4 + 1.5),
        events: vec![ev],
        seed: rng.random(),
        ..base.clone()
    }
}

const MULTI_LAYOUTS: [FingerLayout; 3] = [FingerLayout::Close(2), FingerLayout::Wide, FingerLayout::Close(3)];

/// Scene configs for every clip of a recipe, in manifest order: single-finger
/// touches, multi-finger touches, hovers, negatives.
pub fn corpus_scenes(recipe: &CorpusRecipe) -> Result<Vec<(ManifestEntry, SynthSceneConfig)>> {
    recipe.validate()?;
    let base = recipe.base_scene();
    let mut out = Vec::with_capacity(recipe.total());
    let singles = recipe.touch - recipe.multi_finger;
    for i in 0..recipe.total() {
        let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
        rng.set_stream(i as u64);
        let (category, scene, fingers) = if i < singles {
            (ClipCategory::Touch, touch_scene(&base, &mut rng, FingerLayout::Single), 1)
        } else if i < recipe.touch {
            let layout = MULTI_LAYOUTS[(i - singles) % MULTI_LAYOUTS.len()];
            let n = layout.count_and_spacing().0;
            (ClipCategory::Touch, touch_scene(&base, &mut rng, layout), n)
        } else if i < recipe.touch + recipe.hover {
            (ClipCategory::Hover, hover_scene(&base, &mut rng), 1)
        } else {
            (ClipCategory::Negative, negative_scene(&base, &mut rng), 0)
        };
        let entry = ManifestEntry {
            name: format!("clip_{i:03}_{}", category.as_str()),
            category,
            fingers,
        };
        out.push((entry, scene));
    }
    Ok(out)
}

/// Generates every clip of the recipe under `out_dir` and writes
/// `manifest.json`.
pub fn make_corpus(recipe: &CorpusRecipe, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut clips = Vec::new();
    for (entry, scene) in corpus_scenes(recipe)? {
        let clip = generate(&scene)?;
        write_clip(out_dir.join(&entry.name), &clip)?;
        clips.push(entry);
    }
    let manifest = Manifest {
        recipe: recipe.clone(),
        clips,
    };
    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(&path, e))
}
