use super::Point;

fn cross(o: Point, a: Point, b: Point) -> i64 {
    let (ax, ay) = (i64::from(a.x - o.x), i64::from(a.y - o.y));
    let (bx, by) = (i64::from(b.x - o.x), i64::from(b.y - o.y));
    ax * by - ay * bx
}

/// Convex hull by Andrew's monotone chain.
///
/// Vertices come out counter-clockwise in the `cross > 0` sense, without
/// collinear vertices, starting at the lexicographically smallest `(x, y)`.
/// Collinear input yields its two extreme points; a single distinct point
/// yields itself.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(i32, i32)]) -> Vec<Point> {
        v.iter().copied().map(Point::from).collect()
    }

    #[test]
    fn square_with_center() {
        let h = convex_hull(&pts(&[(0, 0), (4, 0), (4, 4), (0, 4), (2, 2)]));
        assert_eq!(h, pts(&[(0, 0), (4, 0), (4, 4), (0, 4)]));
    }

    #[test]
    fn collinear_points_give_extremes() {
        let h = convex_hull(&pts(&[(2, 2), (0, 0), (5, 5), (3, 3), (1, 1)]));
        assert_eq!(h, pts(&[(0, 0), (5, 5)]));
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(convex_hull(&pts(&[(3, 1)])), pts(&[(3, 1)]));
        assert_eq!(convex_hull(&pts(&[(3, 1), (3, 1)])), pts(&[(3, 1)]));
        assert!(convex_hull(&[]).is_empty());
    }

    #[test]
    fn drops_collinear_edge_points() {
        let h = convex_hull(&pts(&[(0, 0), (1, 0), (2, 0), (2, 2), (0, 2), (0, 1)]));
        assert_eq!(h, pts(&[(0, 0), (2, 0), (2, 2), (0, 2)]));
    }

    proptest! {
        #[test]
        fn every_input_point_is_inside_or_on(v in prop::collection::vec((-20i32..20, -20i32..20), 3..40)) {
            let p = pts(&v);
            let h = convex_hull(&p);
            if h.len() >= 3 {
                for q in &p {
                    for i in 0..h.len() {
                        prop_assert!(cross(h[i], h[(i + 1) % h.len()], *q) >= 0);
                    }
                }
            }
        }
    }
}
