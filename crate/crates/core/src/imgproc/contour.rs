//! Connected components and outer-boundary tracing.

use std::collections::VecDeque;

use super::{BinaryMask, Contour, Point};

/// Clockwise neighbor order in image coordinates (y grows downward), starting west.
const DIRS: [(i32, i32); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

/// 8-connected labeling. Labels start at 1 and follow raster order of each
/// component's first pixel; 0 is background.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, u32) {
    let (w, h) = (mask.width as i32, mask.height as i32);
    let mut labels = vec![0u32; mask.bits.len()];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..mask.bits.len() {
        if !mask.bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i as i32) % w, (i as i32) / w);
            for (dx, dy) in DIRS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if mask.bits[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    (labels, next)
}

/// Signed-magnitude shoelace area of a closed polygon.
pub fn shoelace_area(points: &[Point]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let twice: i64 = points
        .iter()
        .zip(points.iter().cycle().skip(1))
        .map(|(a, b)| i64::from(a.x) * i64::from(b.y) - i64::from(b.x) * i64::from(a.y))
        .sum();
    twice.abs() as f64 / 2.0
}

/// One outer contour per 8-connected foreground component, in raster order of
/// the component's top-left pixel. Holes are ignored.
pub fn find_contours(mask: &BinaryMask) -> Vec<Contour> {
    let (labels, count) = label_components(mask);
    let mut starts = vec![None; count as usize];
    let mut sizes = vec![0usize; count as usize];
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let k = (l - 1) as usize;
        sizes[k] += 1;
        if starts[k].is_none() {
            starts[k] = Some(i);
        }
    }
    starts
        .into_iter()
        .zip(sizes)
        .map(|(start, size)| {
            let start = start.expect("every label has a first pixel");
            let p = Point::new(
                (start % mask.width as usize) as i32,
                (start / mask.width as usize) as i32,
            );
            let points = trace_outer(mask, p, size);
            let area = shoelace_area(&points);
            Contour {
                points,
                area,
                pixel_count: size,
            }
        })
        .collect()
}

/// Moore-neighbor tracing from the component's top-left pixel, whose west
/// neighbor is guaranteed to be background. Stops when the walk re-enters the
/// start pixel heading for the same successor as on the first step.
fn trace_outer(mask: &BinaryMask, start: Point, component_size: usize) -> Vec<Point> {
    let step = |c: Point, back: Point| -> Option<(Point, Point)> {
        let offset = (back.x - c.x, back.y - c.y);
        let i = DIRS.iter().position(|&d| d == offset).expect("backtrack is a neighbor");
        for k in 1..=8 {
            let (dx, dy) = DIRS[(i + k) % 8];
            let n = Point::new(c.x + dx, c.y + dy);
            if mask.get_signed(n.x, n.y) {
                let (bx, by) = DIRS[(i + k - 1) % 8];
                return Some((n, Point::new(c.x + bx, c.y + by)));
            }
        }
        None
    };

    let west = Point::new(start.x - 1, start.y);
    let Some((first_next, first_back)) = step(start, west) else {
        return vec![start];
    };
    let mut points = vec![start];
    let (mut c, mut b) = (first_next, first_back);
    // each boundary pixel is entered at most four times
    let limit = 4 * component_size + 8;
    while points.len() <= limit {
        let (n, nb) = step(c, b).expect("component has more than one pixel");
        if c == start && n == first_next {
            break;
        }
        points.push(c);
        c = n;
        b = nb;
    }
    points
}

/// Even-odd point-in-polygon test with the point at `(x, y)`.
pub fn point_in_polygon(x: f64, y: f64, polygon: &[Point]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (f64::from(polygon[i].x), f64::from(polygon[i].y));
        let (xj, yj) = (f64::from(polygon[j].x), f64::from(polygon[j].y));
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Rasterizes the region enclosed by a contour, boundary included.
///
/// The boundary acts as a wall for a 4-connected flood from the image border;
/// everything the flood cannot reach is inside.
pub fn fill_contour(contour: &Contour, width: u32, height: u32) -> BinaryMask {
    let (w, h) = (width as i32, height as i32);
    let idx = |x: i32, y: i32| (y * w + x) as usize;
    let mut wall = vec![false; (w * h) as usize];
    for p in &contour.points {
        if p.x >= 0 && p.y >= 0 && p.x < w && p.y < h {
            wall[idx(p.x, p.y)] = true;
        }
    }
    let mut outside = vec![false; wall.len()];
    let mut queue = VecDeque::new();
    let seed = |x: i32, y: i32, outside: &mut [bool], queue: &mut VecDeque<(i32, i32)>| {
        let i = idx(x, y);
        if !wall[i] && !outside[i] {
            outside[i] = true;
            queue.push_back((x, y));
        }
    };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut queue);
        seed(x, h - 1, &mut outside, &mut queue);
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut queue);
        seed(w - 1, y, &mut outside, &mut queue);
    }
    while let Some((x, y)) = queue.pop_front() {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && ny >= 0 && nx < w && ny < h {
                seed(nx, ny, &mut outside, &mut queue);
            }
        }
    }
    BinaryMask::new(width, height, outside.into_iter().map(|o| !o).collect())
}
