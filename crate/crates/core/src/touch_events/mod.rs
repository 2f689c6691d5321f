//! Second pass: per-region occupancy, before/after frame capture and
//! touch/hover classification.

mod detectors;
mod occupancy;

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use detectors::{detector_diff_area, detector_mean, DIFF_FLOOR};
pub use occupancy::{debounce_intervals, is_occupied, occupancy_track, OccupancyInterval};

use crate::error::{Error, Result};
use crate::frames_io::ThermalFrame;
use crate::hand_detect::{
    analyze_sequence, FingertipConfig, FrameAnalysis, HandObservation, PreprocessConfig,
};
use crate::imgproc::GrayImage;
use crate::roi::{select_rois, FingertipHistory, Roi};

pub const DEFAULT_ROI_SIZE: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Minimum mean warming of the region (normalized intensity).
    pub tau_mean: f64,
    /// Minimum warm-blob size in pixels.
    pub tau_area: f64,
    pub diff_blur_sigma: f64,
    /// Consecutive frames needed to flip the occupancy state.
    pub debounce: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            tau_mean: 0.03,
            tau_area: 9.0,
            diff_blur_sigma: 1.0,
            debounce: 2,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau_mean", self.tau_mean),
            ("tau_area", self.tau_area),
            ("diff_blur_sigma", self.diff_blur_sigma),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.debounce == 0 {
            return Err(Error::InvalidParameter("debounce must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Touch,
    Hover,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Touch => "touch",
            EventKind::Hover => "hover",
        })
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "touch" => Ok(EventKind::Touch),
            "hover" => Ok(EventKind::Hover),
            other => Err(Error::InvalidParameter(format!("unknown event kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionEvent {
    pub roi_id: usize,
    pub interval: OccupancyInterval,
    pub kind: EventKind,
    pub mean_delta: f64,
    pub diff_area: f64,
    /// Most fingertips seen inside the region in any single frame of the visit.
    pub fingertip_count: usize,
}

impl InteractionEvent {
    pub fn is_touch(&self) -> bool {
        self.kind == EventKind::Touch
    }
}

/// Flat on-disk form of an [`InteractionEvent`], one per line of `events.jsonl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub roi_id: usize,
    pub kind: EventKind,
    pub pre_frame: usize,
    pub enter_frame: usize,
    pub exit_frame: usize,
    pub post_frame: usize,
    pub mean_delta: f64,
    pub diff_area: f64,
    pub fingertip_count: usize,
}

impl From<&InteractionEvent> for EventRecord {
    fn from(e: &InteractionEvent) -> Self {
        Self {
            roi_id: e.roi_id,
            kind: e.kind,
            pre_frame: e.interval.pre_frame,
            enter_frame: e.interval.enter_frame,
            exit_frame: e.interval.exit_frame,
            post_frame: e.interval.post_frame,
            mean_delta: e.mean_delta,
            diff_area: e.diff_area,
            fingertip_count: e.fingertip_count,
        }
    }
}

impl From<EventRecord> for InteractionEvent {
    fn from(r: EventRecord) -> Self {
        Self {
            roi_id: r.roi_id,
            interval: OccupancyInterval {
                roi_id: r.roi_id,
                pre_frame: r.pre_frame,
                enter_frame: r.enter_frame,
                exit_frame: r.exit_frame,
                post_frame: r.post_frame,
            },
            kind: r.kind,
            mean_delta: r.mean_delta,
            diff_area: r.diff_area,
            fingertip_count: r.fingertip_count,
        }
    }
}

fn roi_crop(img: &GrayImage, roi: &Roi) -> Result<GrayImage> {
    if roi.x + roi.size > img.width || roi.y + roi.size > img.height {
        return Err(Error::InvalidParameter(format!(
            "ROI {} at ({}, {}) size {} exceeds the {}x{} frame",
            roi.id, roi.x, roi.y, roi.size, img.width, img.height
        )));
    }
    Ok(img.crop(roi.x, roi.y, roi.size, roi.size))
}

/// Scores one visit: compares the region in the last empty frame before it and
/// the first empty frame after it. A touch needs both detectors to fire.
pub fn classify_touch(
    interval: &OccupancyInterval,
    frames: &[FrameAnalysis],
    roi: &Roi,
    cfg: &DetectorConfig,
) -> Result<InteractionEvent> {
    let normalized = |i: usize| -> Result<&GrayImage> {
        frames
            .get(i)
            .ok_or_else(|| Error::InvalidParameter(format!("frame {i} out of range")))?
            .normalized
            .as_ref()
            .ok_or_else(|| Error::InvalidFrame(format!("frame {i} was skipped")))
    };
    let pre = roi_crop(normalized(interval.pre_frame)?, roi)?;
    let post = roi_crop(normalized(interval.post_frame)?, roi)?;
    let mean_delta = detector_mean(&pre, &post)?;
    let diff_area = detector_diff_area(&pre, &post, cfg)?;
    let kind = if mean_delta >= cfg.tau_mean && diff_area >= cfg.tau_area {
        EventKind::Touch
    } else {
        EventKind::Hover
    };
    let fingertip_count = frames[interval.enter_frame..=interval.exit_frame]
        .iter()
        .map(|f| {
            f.observation
                .fingertips
                .iter()
                .filter(|&&p| roi.contains(p))
                .count()
        })
        .max()
        .unwrap_or(0);
    Ok(InteractionEvent {
        roi_id: roi.id,
        interval: *interval,
        kind,
        mean_delta,
        diff_area,
        fingertip_count,
    })
}

/// Every tunable of the detection pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub fingertips: FingertipConfig,
    pub roi_size: u32,
    pub detector: DetectorConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            fingertips: FingertipConfig::default(),
            roi_size: DEFAULT_ROI_SIZE,
            detector: DetectorConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.fingertips.validate()?;
        self.detector.validate()
    }
}

/// Output of the full two-pass pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub observations: Vec<HandObservation>,
    pub rois: Vec<Roi>,
    /// Sorted by `(enter_frame, roi_id)`.
    pub events: Vec<InteractionEvent>,
}

/// Second pass over an already analyzed recording.
pub fn detect_from_analyses(
    analyses: &[FrameAnalysis],
    frame_dims: (u32, u32),
    cfg: &PipelineConfig,
) -> Result<(Vec<Roi>, Vec<InteractionEvent>)> {
    cfg.detector.validate()?;
    let observations: Vec<HandObservation> =
        analyses.iter().map(|a| a.observation.clone()).collect();
    let history = FingertipHistory::from_observations(&observations);
    let rois = select_rois(&history, cfg.roi_size, frame_dims)?;
    let tracks = occupancy_track(&observations, &rois, cfg.detector.debounce);
    let jobs: Vec<(&OccupancyInterval, &Roi)> = tracks
        .iter()
        .zip(&rois)
        .flat_map(|(ivs, roi)| ivs.iter().map(move |iv| (iv, roi)))
        .collect();
    let mut events = jobs
        .par_iter()
        .map(|(iv, roi)| classify_touch(iv, analyses, roi, &cfg.detector))
        .collect::<Result<Vec<_>>>()?;
    events.sort_by_key(|e| (e.interval.enter_frame, e.roi_id));
    Ok((rois, events))
}

/// Full pipeline: per-frame hand analysis, region selection, occupancy
/// tracking and classification of every visit.
pub fn detect_events(frames: &[ThermalFrame], cfg: &PipelineConfig) -> Result<Detection> {
    cfg.validate()?;
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidFrame("empty sequence".into()))?;
    let dims = (first.width, first.height);
    let analyses = analyze_sequence(frames, &cfg.preprocess, &cfg.fingertips)?;
    let (rois, events) = detect_from_analyses(&analyses, dims, cfg)?;
    Ok(Detection {
        observations: analyses.into_iter().map(|a| a.observation).collect(),
        rois,
        events,
    })
}

pub fn write_events_jsonl(path: impl AsRef<Path>, events: &[InteractionEvent]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for e in events {
        serde_json::to_writer(&mut out, &EventRecord::from(e)).map_err(|e| Error::json(path, e))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_events_jsonl(path: impl AsRef<Path>) -> Result<Vec<InteractionEvent>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut events = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EventRecord = serde_json::from_str(&line).map_err(|e| Error::json(path, e))?;
        events.push(rec.into());
    }
    Ok(events)
}

pub fn write_rois_json(path: impl AsRef<Path>, rois: &[Roi]) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(rois).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_rois_json(path: impl AsRef<Path>) -> Result<Vec<Roi>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}
