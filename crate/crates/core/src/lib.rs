//! Touch, hover, multi-finger and finger-trace detection on arbitrary surfaces
//! from recorded thermal frame sequences.
//!
//! The detection pipeline is two-pass:
//!
//! 1. Every frame is converted to grayscale, blurred, normalized by its median,
//!    thresholded and cleaned with morphology. The largest contour is taken as
//!    the hand and fingertips are read off its convexity defects
//!    ([`hand_detect`]). The scatter of fingertips over the whole recording is
//!    covered greedily with fixed-size, non-overlapping regions of interest
//!    ([`roi`]).
//! 2. Each region gets an occupancy state machine. The last empty frame before
//!    a hand enters and the first empty frame after it leaves are compared by
//!    two detectors (mean warming and warm-blob area); only intervals that pass
//!    both are touches ([`touch_events`]).
//!
//! Residual heat against a hand-free baseline gives finger traces
//! ([`trace`]); a colored reference marker in a paired RGB stream removes
//! camera jitter ([`stabilize`]). [`synth`] renders physically plausible
//! synthetic scenes with ground truth, and [`eval`] scores pipeline output
//! against it.

pub mod error;
pub mod eval;
pub mod frames_io;
pub mod hand_detect;
pub mod imgproc;
pub mod roi;
pub mod stabilize;
pub mod synth;
pub mod touch_events;
pub mod trace;

pub use error::{Error, Result};
pub use frames_io::{RgbFrame, Sequence, SequenceMeta, ThermalFrame};
pub use imgproc::{BinaryMask, Contour, GrayImage, Point};
