//! Scoring of detected events against synthetic ground truth.
//!
//! A truth touch (or stroke) is matched when every one of its contact points
//! lies inside the region of some predicted touch whose `enter..=exit` span
//! shares at least one frame with the truth contact span. A clip is correct
//! when all truth touches are matched and no predicted touch is left
//! unmatched.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames_io::read_sequence;
use crate::roi::Roi;
use crate::synth::{read_manifest, read_truth, ClipCategory, GroundTruth, Manifest, SceneEventKind};
use crate::touch_events::{
    detect_events, read_events_jsonl, read_rois_json, write_events_jsonl, write_rois_json, InteractionEvent,
    PipelineConfig,
};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const ROIS_FILE: &str = "rois.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Verdict {
    pub correct: bool,
    pub truth_touches: usize,
    pub matched_touches: usize,
    /// Predicted touches that match no truth touch.
    pub false_positives: usize,
    /// `touch` if any touch was predicted, `hover` if only hovers, else `negative`.
    pub predicted: Option<ClipCategory>,
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

pub fn score_clip(events: &[InteractionEvent], rois: &[Roi], truth: &GroundTruth) -> Verdict {
    let roi_of = |id: usize| rois.iter().find(|r| r.id == id);
    let touches: Vec<(&InteractionEvent, Option<&Roi>)> = events
        .iter()
        .filter(|e| e.is_touch())
        .map(|e| (e, roi_of(e.roi_id)))
        .collect();
    let mut used = vec![false; touches.len()];
    let mut truth_touches = 0;
    let mut matched_touches = 0;

    for ev in truth
        .events
        .iter()
        .filter(|e| matches!(e.kind, SceneEventKind::Touch | SceneEventKind::Stroke))
    {
        truth_touches += 1;
        let Some(span) = ev.contact_span else { continue };
        let mut all = !ev.contact_points.is_empty();
        for p in &ev.contact_points {
            let mut hit = false;
            for (k, (e, roi)) in touches.iter().enumerate() {
                let Some(roi) = roi else { continue };
                if roi.contains_f(p[0], p[1]) && overlaps((e.interval.enter_frame, e.interval.exit_frame), span) {
                    used[k] = true;
                    hit = true;
                }
            }
            all &= hit;
        }
        if all {
            matched_touches += 1;
        }
    }

    let false_positives = used.iter().filter(|u| !**u).count();
    let predicted = if !touches.is_empty() {
        ClipCategory::Touch
    } else if events.is_empty() {
        ClipCategory::Negative
    } else {
        ClipCategory::Hover
    };
    Verdict {
        correct: matched_touches == truth_touches && false_positives == 0,
        truth_touches,
        matched_touches,
        false_positives,
        predicted: Some(predicted),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipVerdict {
    pub name: String,
    pub category: ClipCategory,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    /// `counts[truth][predicted]`, both indexed touch, hover, negative.
    pub counts: [[usize; 3]; 3],
    pub accuracy: f64,
    pub false_positive_count: usize,
    pub clips: Vec<ClipVerdict>,
}

fn class_index(c: ClipCategory) -> usize {
    match c {
        ClipCategory::Touch => 0,
        ClipCategory::Hover => 1,
        ClipCategory::Negative => 2,
    }
}

impl ConfusionReport {
    pub fn from_verdicts(clips: Vec<ClipVerdict>) -> Self {
        let mut counts = [[0usize; 3]; 3];
        for c in &clips {
            let p = c.verdict.predicted.unwrap_or(ClipCategory::Negative);
            counts[class_index(c.category)][class_index(p)] += 1;
        }
        let correct = clips.iter().filter(|c| c.verdict.correct).count();
        let accuracy = if clips.is_empty() {
            0.0
        } else {
            correct as f64 / clips.len() as f64
        };
        Self {
            counts,
            accuracy,
            false_positive_count: clips.iter().map(|c| c.verdict.false_positives).sum(),
            clips,
        }
    }

    pub fn correct(&self) -> usize {
        self.clips.iter().filter(|c| c.verdict.correct).count()
    }

    /// Fraction of clips of `category` with at least one unmatched touch.
    pub fn false_positive_rate(&self, category: ClipCategory) -> f64 {
        let of: Vec<&ClipVerdict> = self.clips.iter().filter(|c| c.category == category).collect();
        if of.is_empty() {
            return 0.0;
        }
        of.iter().filter(|c| c.verdict.false_positives > 0).count() as f64 / of.len() as f64
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

impl fmt::Display for ConfusionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>8} {:>8} {:>8}", "truth\\pred", "touch", "hover", "negative")?;
        for c in ClipCategory::ALL {
            let row = self.counts[class_index(c)];
            writeln!(f, "{:<10} {:>8} {:>8} {:>8}", c.as_str(), row[0], row[1], row[2])?;
        }
        writeln!(
            f,
            "accuracy {:.3} ({}/{} clips), false positives {}",
            self.accuracy,
            self.correct(),
            self.clips.len(),
            self.false_positive_count
        )?;
        for c in self.clips.iter().filter(|c| !c.verdict.correct) {
            writeln!(
                f,
                "  wrong: {} ({}), matched {}/{}, false positives {}",
                c.name,
                c.category.as_str(),
                c.verdict.matched_touches,
                c.verdict.truth_touches,
                c.verdict.false_positives
            )?;
        }
        Ok(())
    }
}

/// Scores `results_dir/<clip>/{events.jsonl, rois.json}` against the truth of
/// every clip in the corpus manifest.
pub fn score_corpus(corpus_dir: impl AsRef<Path>, results_dir: impl AsRef<Path>) -> Result<ConfusionReport> {
    let corpus_dir = corpus_dir.as_ref();
    let results_dir = results_dir.as_ref();
    let manifest = read_manifest(corpus_dir)?;
    let clips = manifest
        .clips
        .par_iter()
        .map(|entry| {
            let res = results_dir.join(&entry.name);
            let (events_path, rois_path) = (res.join(EVENTS_FILE), res.join(ROIS_FILE));
            if !events_path.is_file() || !rois_path.is_file() {
                return Err(Error::MissingResult(entry.name.clone()));
            }
            let events = read_events_jsonl(&events_path)?;
            let rois = read_rois_json(&rois_path)?;
            let truth = read_truth(corpus_dir.join(&entry.name))?;
            Ok(ClipVerdict {
                name: entry.name.clone(),
                category: entry.category,
                verdict: score_clip(&events, &rois, &truth),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConfusionReport::from_verdicts(clips))
}

/// Runs detection on every clip of a corpus and writes
/// `results_dir/<clip>/{events.jsonl, rois.json}`.
pub fn detect_corpus(
    corpus_dir: impl AsRef<Path>,
    results_dir: impl AsRef<Path>,
    cfg: &PipelineConfig,
) -> Result<Manifest> {
    let corpus_dir = corpus_dir.as_ref();
    let results_dir = results_dir.as_ref();
    let manifest = read_manifest(corpus_dir)?;
    manifest.clips.par_iter().try_for_each(|entry| {
        let seq = read_sequence(corpus_dir.join(&entry.name))?;
        let detection = detect_events(&seq.thermal, cfg)?;
        let out = results_dir.join(&entry.name);
        std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        write_events_jsonl(out.join(EVENTS_FILE), &detection.events)?;
        write_rois_json(out.join(ROIS_FILE), &detection.rois)
    })?;
    Ok(manifest)
}
