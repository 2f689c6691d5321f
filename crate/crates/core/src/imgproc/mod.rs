//! Low-level image kernels used by every stage of the pipeline.

mod blur;
mod contour;
mod defects;
mod gray;
mod hull;
mod morphology;

pub use blur::{gaussian_blur, gaussian_kernel};
pub use contour::{fill_contour, find_contours, label_components, point_in_polygon, shoelace_area};
pub use defects::{convexity_defects, ConvexityDefect};
pub use gray::{median_value, normalize, threshold, to_gray};
pub use hull::convex_hull;
pub use morphology::{dilate, dilate_square, erode, morph_close, morph_open};

/// Integer pixel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        dx.hypot(dy)
    }

    pub fn is_adjacent8(self, other: Point) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }
}

impl From<(i32, i32)> for Point {
    fn from((x, y): (i32, i32)) -> Self {
        Self { x, y }
    }
}

/// Floating-point intensity image.
///
/// Values are dimensionless. After [`normalize`] every value lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width as usize * height as usize);
        Self {
            width,
            height,
            values,
        }
    }

    pub fn filled(width: u32, height: u32, value: f64) -> Self {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: f64) {
        self.values[(y * self.width + x) as usize] = v;
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Copies the `w`×`h` window with top-left corner `(x0, y0)`.
    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> GrayImage {
        assert!(x0 + w <= self.width && y0 + h <= self.height, "crop out of bounds");
        let mut values = Vec::with_capacity(w as usize * h as usize);
        for y in y0..y0 + h {
            let row = (y * self.width) as usize;
            values.extend_from_slice(&self.values[row + x0 as usize..row + (x0 + w) as usize]);
        }
        GrayImage::new(w, h, values)
    }
}

/// Foreground/background mask; `true` is foreground (warm).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize);
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self::new(width, height, vec![false; width as usize * height as usize])
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_signed(&self, x: i32, y: i32) -> bool {
        x >= 0
            && y >= 0
            && (x as u32) < self.width
            && (y as u32) < self.height
            && self.bits[(y as u32 * self.width + x as u32) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[(y * self.width + x) as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Outer boundary of one 8-connected foreground component.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Boundary pixels in tracing order; consecutive points are 8-adjacent.
    pub points: Vec<Point>,
    /// Shoelace area of the boundary polygon through pixel centers.
    pub area: f64,
    /// Number of pixels in the component.
    pub pixel_count: usize,
}

impl Contour {
    /// Builds a contour from boundary points alone, e.g. for synthetic geometry.
    pub fn from_points(points: Vec<Point>) -> Self {
        let area = shoelace_area(&points);
        Self {
            pixel_count: points.len(),
            points,
            area,
        }
    }

    /// Topmost boundary point; ties go to the smallest x.
    pub fn top_left(&self) -> Option<Point> {
        self.points.iter().copied().min_by_key(|p| (p.y, p.x))
    }

    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(lo, hi), p| {
            (
                Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }
}
