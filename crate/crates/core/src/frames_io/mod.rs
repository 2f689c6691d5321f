//! Frame sequences on disk.
//!
//! A sequence is a directory holding a `meta.json` sidecar, 16-bit P5 thermal
//! frames under `thermal/frame_%06d.pgm` and, optionally, P6 RGB frames under
//! `rgb/frame_%06d.ppm`. Frame numbers start at 0 and must be contiguous.

mod netpbm;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const META_FILE: &str = "meta.json";
pub const THERMAL_DIR: &str = "thermal";
pub const RGB_DIR: &str = "rgb";

/// Smallest accepted frame side, in pixels.
pub const MIN_FRAME_SIDE: u32 = 8;

/// One raw radiometric frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThermalFrame {
    pub width: u32,
    pub height: u32,
    /// Row-major 16-bit counts.
    pub counts: Vec<u16>,
    pub index: usize,
    pub timestamp_ms: u64,
}

impl ThermalFrame {
    pub fn new(
        width: u32,
        height: u32,
        counts: Vec<u16>,
        index: usize,
        timestamp_ms: u64,
    ) -> Result<Self> {
        check_dims(width, height)?;
        if counts.len() != width as usize * height as usize {
            return Err(Error::InvalidFrame(format!(
                "{} counts for a {width}x{height} frame",
                counts.len()
            )));
        }
        Ok(Self {
            width,
            height,
            counts,
            index,
            timestamp_ms,
        })
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.counts[(y * self.width + x) as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbFrame {
    pub width: u32,
    pub height: u32,
    /// Row-major interleaved 8-bit RGB triples.
    pub rgb: Vec<u8>,
    pub index: usize,
}

impl RgbFrame {
    pub fn new(width: u32, height: u32, rgb: Vec<u8>, index: usize) -> Result<Self> {
        check_dims(width, height)?;
        if rgb.len() != 3 * width as usize * height as usize {
            return Err(Error::InvalidFrame(format!(
                "{} bytes for a {width}x{height} RGB frame",
                rgb.len()
            )));
        }
        Ok(Self {
            width,
            height,
            rgb,
            index,
        })
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y * self.width + x) as usize;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }
}

fn check_dims(width: u32, height: u32) -> Result<()> {
    if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
        return Err(Error::InvalidFrame(format!(
            "{width}x{height} is below the {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE} minimum"
        )));
    }
    Ok(())
}

/// Linear map from counts to Kelvin: `kelvin = gain * counts + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    pub gain: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts_to_kelvin: Option<LinearMap>,
    #[serde(default)]
    pub has_rgb: bool,
}

impl SequenceMeta {
    pub fn new(fps: f64, width: u32, height: u32) -> Self {
        Self {
            fps,
            width,
            height,
            counts_to_kelvin: None,
            has_rgb: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::InvalidMeta(format!("fps must be positive, got {}", self.fps)));
        }
        if let Some(map) = self.counts_to_kelvin {
            if !(map.gain.is_finite() && map.gain > 0.0) {
                return Err(Error::InvalidMeta(format!(
                    "counts_to_kelvin gain must be positive, got {}",
                    map.gain
                )));
            }
        }
        check_dims(self.width, self.height)
    }

    /// Milliseconds from sequence start for frame `index`.
    pub fn timestamp_ms(&self, index: usize) -> u64 {
        (1000.0 * index as f64 / self.fps).round() as u64
    }

    pub fn resolution(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

/// A decoded sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub meta: SequenceMeta,
    pub thermal: Vec<ThermalFrame>,
    pub rgb: Option<Vec<RgbFrame>>,
}

pub fn thermal_frame_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(THERMAL_DIR).join(format!("frame_{index:06}.pgm"))
}

pub fn rgb_frame_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(RGB_DIR).join(format!("frame_{index:06}.ppm"))
}

/// Parses `frame_NNNNNN.<ext>`; anything else is not a frame file.
fn frame_number(name: &str, ext: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(ext)?.strip_suffix('.')?;
    if digits.len() != 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Lists frame files sorted by number, rejecting gaps.
fn list_frames(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let entries = match fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(dir, e)),
    };
    let mut numbered = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        if let Some(n) = name.to_str().and_then(|s| frame_number(s, ext)) {
            numbered.push((n, entry.path()));
        }
    }
    numbered.sort_by_key(|(n, _)| *n);
    for (expected, (found, _)) in numbered.iter().enumerate() {
        if *found != expected {
            return Err(Error::FrameGap {
                expected,
                found: *found,
            });
        }
    }
    Ok(numbered.into_iter().map(|(_, p)| p).collect())
}

pub fn read_meta(dir: &Path) -> Result<SequenceMeta> {
    let path = dir.join(META_FILE);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingMeta(path))
        }
        Err(e) => return Err(Error::io(&path, e)),
    };
    let meta: SequenceMeta = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    meta.validate()?;
    Ok(meta)
}

/// Reads a sequence directory.
pub fn read_sequence(dir: impl AsRef<Path>) -> Result<Sequence> {
    let dir = dir.as_ref();
    let meta = read_meta(dir)?;
    let expected = meta.resolution();

    let thermal_paths = list_frames(&dir.join(THERMAL_DIR), "pgm")?;
    if thermal_paths.is_empty() {
        return Err(Error::NoFrames(dir.to_path_buf()));
    }
    let mut thermal = Vec::with_capacity(thermal_paths.len());
    for (index, path) in thermal_paths.iter().enumerate() {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let (w, h, counts) = netpbm::decode_pgm(&bytes, path)?;
        if (w, h) != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: (w, h),
            });
        }
        thermal.push(ThermalFrame::new(w, h, counts, index, meta.timestamp_ms(index))?);
    }

    let rgb = if meta.has_rgb {
        let rgb_paths = list_frames(&dir.join(RGB_DIR), "ppm")?;
        if rgb_paths.len() != thermal.len() {
            return Err(Error::FrameCountMismatch {
                thermal: thermal.len(),
                rgb: rgb_paths.len(),
            });
        }
        let mut frames = Vec::with_capacity(rgb_paths.len());
        for (index, path) in rgb_paths.iter().enumerate() {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let (w, h, data) = netpbm::decode_ppm(&bytes, path)?;
            if (w, h) != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: (w, h),
                });
            }
            frames.push(RgbFrame::new(w, h, data, index)?);
        }
        Some(frames)
    } else {
        None
    };

    Ok(Sequence { meta, thermal, rgb })
}

fn clear_frames(dir: &Path, ext: &str) -> Result<()> {
    let entries = match fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(Error::io(dir, e)),
    };
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.file_name().to_str().and_then(|s| frame_number(s, ext)).is_some() {
            fs::remove_file(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
        }
    }
    Ok(())
}

/// Writes a sequence directory, replacing any frames already there.
pub fn write_sequence(
    dir: impl AsRef<Path>,
    meta: &SequenceMeta,
    frames: &[ThermalFrame],
    rgb: Option<&[RgbFrame]>,
) -> Result<()> {
    let dir = dir.as_ref();
    meta.validate()?;
    if frames.is_empty() {
        return Err(Error::InvalidFrame("cannot write an empty sequence".into()));
    }
    match (meta.has_rgb, rgb) {
        (false, Some(_)) => {
            return Err(Error::InvalidMeta(
                "RGB frames supplied but has_rgb is false".into(),
            ))
        }
        (true, None) => {
            return Err(Error::InvalidMeta("has_rgb is set but no RGB frames supplied".into()))
        }
        (true, Some(rgb)) if rgb.len() != frames.len() => {
            return Err(Error::FrameCountMismatch {
                thermal: frames.len(),
                rgb: rgb.len(),
            })
        }
        _ => {}
    }
    let expected = meta.resolution();
    for f in frames {
        if (f.width, f.height) != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: (f.width, f.height),
            });
        }
    }
    for f in rgb.unwrap_or_default() {
        if (f.width, f.height) != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: (f.width, f.height),
            });
        }
    }

    let thermal_dir = dir.join(THERMAL_DIR);
    fs::create_dir_all(&thermal_dir).map_err(|e| Error::io(&thermal_dir, e))?;
    clear_frames(&thermal_dir, "pgm")?;
    for (i, f) in frames.iter().enumerate() {
        let path = thermal_frame_path(dir, i);
        fs::write(&path, netpbm::encode_pgm16(f.width, f.height, &f.counts))
            .map_err(|e| Error::io(&path, e))?;
    }

    let rgb_dir = dir.join(RGB_DIR);
    clear_frames(&rgb_dir, "ppm")?;
    if let Some(rgb) = rgb {
        fs::create_dir_all(&rgb_dir).map_err(|e| Error::io(&rgb_dir, e))?;
        for (i, f) in rgb.iter().enumerate() {
            let path = rgb_frame_path(dir, i);
            fs::write(&path, netpbm::encode_ppm(f.width, f.height, &f.rgb))
                .map_err(|e| Error::io(&path, e))?;
        }
    }

    let meta_path = dir.join(META_FILE);
    let text = serde_json::to_string_pretty(meta).map_err(|e| Error::json(&meta_path, e))?;
    fs::write(&meta_path, text + "\n").map_err(|e| Error::io(&meta_path, e))?;
    Ok(())
}

/// Writes a single RGB frame as P6, used for annotated output.
pub fn write_ppm(path: impl AsRef<Path>, frame: &RgbFrame) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, netpbm::encode_ppm(frame.width, frame.height, &frame.rgb))
        .map_err(|e| Error::io(path, e))
}
