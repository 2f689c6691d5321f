//! Annotated PPM frames: contrast-stretched thermal image, hand contour,
//! fingertip dots and ROI boxes. A box turns green while a touch is in
//! progress inside it.

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use thermotouch::frames_io::write_ppm;
use thermotouch::hand_detect::FrameAnalysis;
use thermotouch::roi::Roi;
use thermotouch::touch_events::InteractionEvent;
use thermotouch::{RgbFrame, ThermalFrame};

const CONTOUR: [u8; 3] = [40, 140, 255];
const TIP: [u8; 3] = [0, 255, 0];
const ROI_IDLE: [u8; 3] = [255, 200, 0];
const ROI_TOUCH: [u8; 3] = [0, 230, 0];

struct Canvas {
    w: u32,
    h: u32,
    rgb: Vec<u8>,
}

impl Canvas {
    fn from_thermal(frame: &ThermalFrame) -> Self {
        let lo = frame.counts.iter().copied().min().unwrap_or(0);
        let hi = frame.counts.iter().copied().max().unwrap_or(0);
        let span = f64::from(hi.saturating_sub(lo)).max(1.0);
        let rgb = frame
            .counts
            .iter()
            .flat_map(|&c| {
                let v = (255.0 * f64::from(c - lo) / span).round() as u8;
                [v, v, v]
            })
            .collect();
        Self {
            w: frame.width,
            h: frame.height,
            rgb,
        }
    }

    fn put(&mut self, x: i32, y: i32, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as u32) < self.w && (y as u32) < self.h {
            let i = 3 * (y as usize * self.w as usize + x as usize);
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    fn rect(&mut self, roi: &Roi, c: [u8; 3]) {
        let (x0, y0) = (roi.x as i32, roi.y as i32);
        let (x1, y1) = (x0 + roi.size as i32 - 1, y0 + roi.size as i32 - 1);
        for x in x0..=x1 {
            self.put(x, y0, c);
            self.put(x, y1, c);
        }
        for y in y0..=y1 {
            self.put(x0, y, c);
            self.put(x1, y, c);
        }
    }
}

pub fn write_annotated(
    dir: &Path,
    frames: &[ThermalFrame],
    analyses: &[FrameAnalysis],
    rois: &[Roi],
    events: &[InteractionEvent],
) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    frames.par_iter().zip(analyses).enumerate().try_for_each(|(i, (frame, a))| {
        let mut canvas = Canvas::from_thermal(frame);
        for roi in rois {
            let touching = events.iter().any(|e| {
                e.is_touch() && e.roi_id == roi.id && (e.interval.enter_frame..=e.interval.exit_frame).contains(&i)
            });
            canvas.rect(roi, if touching { ROI_TOUCH } else { ROI_IDLE });
        }
        if let Some(c) = &a.observation.contour {
            for p in &c.points {
                canvas.put(p.x, p.y, CONTOUR);
            }
        }
        for t in &a.observation.fingertips {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    canvas.put(t.x + dx, t.y + dy, TIP);
                }
            }
        }
        let out = RgbFrame::new(canvas.w, canvas.h, canvas.rgb, i)?;
        write_ppm(dir.join(format!("frame_{i:06}.ppm")), &out)?;
        anyhow::Ok(())
    })
}
