//! Articulated hand: palm ellipse, finger capsules and a forearm capsule
//! entering from the bottom of the frame.

pub const FINGER_RADIUS: f64 = 2.5;
pub const FINGER_LENGTH: f64 = 13.0;
pub const PALM_HALF_WIDTH: f64 = 10.0;
pub const PALM_HALF_HEIGHT: f64 = 12.0;
pub const ARM_RADIUS: f64 = 7.0;
pub const ARM_LENGTH: f64 = 140.0;
/// Finger bases spread less than the tips, so wide layouts splay.
const BASE_SPREAD: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Finger {
    /// Topmost point of the finger.
    pub tip: (f64, f64),
    pub base: (f64, f64),
}

impl Finger {
    fn axis(&self) -> (f64, f64) {
        let (dx, dy) = (self.base.0 - self.tip.0, self.base.1 - self.tip.1);
        let n = dx.hypot(dy);
        (dx / n, dy / n)
    }

    /// Center of the contact pad, `pad_radius` behind the tip along the finger.
    pub fn pad_center(&self, pad_radius: f64) -> (f64, f64) {
        let (ux, uy) = self.axis();
        (self.tip.0 + pad_radius * ux, self.tip.1 + pad_radius * uy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandPose {
    pub fingers: Vec<Finger>,
    pub palm: (f64, f64),
}

fn seg_dist2(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let (apx, apy) = (p.0 - a.0, p.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (apx - t * abx, apy - t * aby);
    dx * dx + dy * dy
}

/// Horizontal offset of finger `k` of `n`, centered on the anchor.
pub fn finger_offset(k: usize, n: usize, spacing: f64) -> (f64, f64) {
    let rel = k as f64 - (n as f64 - 1.0) / 2.0;
    // outer fingers sit slightly lower, like a real hand
    (rel * spacing, 2.0 * rel * rel)
}

impl HandPose {
    /// `anchor` is the tip of the middle finger (or the midpoint between the
    /// two tips for an even count).
    pub fn new(anchor: (f64, f64), finger_count: usize, spacing: f64) -> Self {
        let n = finger_count.max(1);
        let palm = (anchor.0, anchor.1 + FINGER_LENGTH + PALM_HALF_HEIGHT);
        let limit = PALM_HALF_WIDTH - 3.0;
        let fingers = (0..n)
            .map(|k| {
                let (ox, oy) = finger_offset(k, n, spacing);
                Finger {
                    tip: (anchor.0 + ox, anchor.1 + oy),
                    base: (
                        palm.0 + (BASE_SPREAD * ox).clamp(-limit, limit),
                        palm.1 - PALM_HALF_HEIGHT + 3.0,
                    ),
                }
            })
            .collect();
        Self { fingers, palm }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (ex, ey) = ((x - self.palm.0) / PALM_HALF_WIDTH, (y - self.palm.1) / PALM_HALF_HEIGHT);
        if ex * ex + ey * ey <= 1.0 {
            return true;
        }
        let arm_end = (self.palm.0, self.palm.1 + ARM_LENGTH);
        if seg_dist2((x, y), self.palm, arm_end) <= ARM_RADIUS * ARM_RADIUS {
            return true;
        }
        self.fingers.iter().any(|f| {
            let (ux, uy) = f.axis();
            let start = (f.tip.0 + FINGER_RADIUS * ux, f.tip.1 + FINGER_RADIUS * uy);
            seg_dist2((x, y), start, f.base) <= FINGER_RADIUS * FINGER_RADIUS
        })
    }

    /// Inclusive pixel bounds that can contain hand pixels, clipped to the frame.
    pub fn pixel_bounds(&self, w: u32, h: u32) -> Option<(u32, u32, u32, u32)> {
        let mut x0 = self.palm.0 - PALM_HALF_WIDTH.max(ARM_RADIUS);
        let mut x1 = self.palm.0 + PALM_HALF_WIDTH.max(ARM_RADIUS);
        let mut y0 = self.palm.1 - PALM_HALF_HEIGHT;
        for f in &self.fingers {
            x0 = x0.min(f.tip.0 - FINGER_RADIUS);
            x1 = x1.max(f.tip.0 + FINGER_RADIUS);
            y0 = y0.min(f.tip.1);
        }
        let y1 = self.palm.1 + ARM_LENGTH + ARM_RADIUS;
        let (x0, y0) = (x0.floor().max(0.0), y0.floor().max(0.0));
        let (x1, y1) = (x1.ceil().min(f64::from(w) - 1.0), y1.ceil().min(f64::from(h) - 1.0));
        (x0 <= x1 && y0 <= y1).then_some((x0 as u32, y0 as u32, x1 as u32, y1 as u32))
    }
}
