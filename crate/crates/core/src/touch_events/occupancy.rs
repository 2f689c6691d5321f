//! Debounced empty/occupied state machine per region.

use serde::{Deserialize, Serialize};

use crate::hand_detect::HandObservation;
use crate::roi::{roi_overlaps_contour, Roi};

/// One debounced occupied episode of a region, bracketed by empty frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyInterval {
    pub roi_id: usize,
    /// Last empty frame before the hand arrived.
    pub pre_frame: usize,
    /// First occupied frame.
    pub enter_frame: usize,
    /// Last occupied frame.
    pub exit_frame: usize,
    /// First empty frame after the hand left.
    pub post_frame: usize,
}

/// Raw per-frame occupancy: a fingertip inside, or the hand contour touching the
/// region. Skipped frames count as occupied so they can never serve as a
/// comparison frame.
pub fn is_occupied(obs: &HandObservation, roi: &Roi) -> bool {
    obs.skipped
        || obs.fingertips.iter().any(|&p| roi.contains(p))
        || obs
            .contour
            .as_ref()
            .is_some_and(|c| roi_overlaps_contour(roi, c))
}

/// Debounces a raw occupancy signal into intervals.
///
/// The state starts at the first frame's raw value and flips only after
/// `debounce` consecutive frames disagree with it; the flip is dated to the
/// first of those frames. Episodes without an empty frame on both sides are
/// dropped.
pub fn debounce_intervals(raw: &[bool], debounce: usize, roi_id: usize) -> Vec<OccupancyInterval> {
    let debounce = debounce.max(1);
    let Some(&first) = raw.first() else {
        return Vec::new();
    };
    let mut occupied = first;
    let mut run_start = 0;
    let mut run_len = 0;
    let mut entered: Option<usize> = None;
    let mut out = Vec::new();
    for (i, &r) in raw.iter().enumerate() {
        if r == occupied {
            run_len = 0;
            continue;
        }
        if run_len == 0 {
            run_start = i;
        }
        run_len += 1;
        if run_len < debounce {
            continue;
        }
        occupied = r;
        run_len = 0;
        if occupied {
            entered = Some(run_start);
        } else if let Some(enter) = entered.take() {
            out.push(OccupancyInterval {
                roi_id,
                pre_frame: enter - 1,
                enter_frame: enter,
                exit_frame: run_start - 1,
                post_frame: run_start,
            });
        }
    }
    out
}

/// Intervals for every region, indexed like `rois`.
pub fn occupancy_track(
    observations: &[HandObservation],
    rois: &[Roi],
    debounce: usize,
) -> Vec<Vec<OccupancyInterval>> {
    rois.iter()
        .map(|roi| {
            let raw: Vec<bool> = observations.iter().map(|o| is_occupied(o, roi)).collect();
            debounce_intervals(&raw, debounce, roi.id)
        })
        .collect()
}
