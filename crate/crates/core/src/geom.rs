//! Small 2D vector and polygon primitives shared across the crate.
//!
//! Points are plain `[f64; 2]`. Everything here is allocation-free and pure.

pub type Pt = [f64; 2];

pub fn sub(a: Pt, b: Pt) -> Pt {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Pt, b: Pt) -> Pt {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(a: Pt, s: f64) -> Pt {
    [a[0] * s, a[1] * s]
}

pub fn dot(a: Pt, b: Pt) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// z-component of the cross product of 2D vectors.
pub fn cross(a: Pt, b: Pt) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm(a: Pt) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist(a: Pt, b: Pt) -> f64 {
    norm(sub(a, b))
}

pub fn normalize(a: Pt) -> Pt {
    let n = norm(a);
    [a[0] / n, a[1] / n]
}

/// Counterclockwise rotation by 90 degrees (the left normal of a tangent).
pub fn perp_left(a: Pt) -> Pt {
    [-a[1], a[0]]
}

pub fn rotate(a: Pt, angle: f64) -> Pt {
    let (s, c) = angle.sin_cos();
    [c * a[0] - s * a[1], s * a[0] + c * a[1]]
}

/// Distance from point `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Pt, a: Pt, b: Pt) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    dist(p, add(a, scale(ab, t)))
}

/// Minimum distance from `p` to a polyline given by its vertices.
pub fn point_polyline_distance(p: Pt, poly: &[Pt]) -> f64 {
    if poly.is_empty() {
        return f64::INFINITY;
    }
    if poly.len() == 1 {
        return dist(p, poly[0]);
    }
    let mut best = f64::INFINITY;
    for w in poly.windows(2) {
        let d = point_segment_distance(p, w[0], w[1]);
        if d < best {
            best = d;
        }
    }
    best
}

/// Proper intersection test for closed segments, with a snap tolerance.
///
/// Returns the intersection point when the segments meet in (numerically)
/// a single point; collinear overlapping segments report the midpoint of
/// the overlap so callers can flag them.
pub fn segment_intersection(a0: Pt, a1: Pt, b0: Pt, b1: Pt, snap: f64) -> Option<Pt> {
    let r = sub(a1, a0);
    let s = sub(b1, b0);
    let denom = cross(r, s);
    let qp = sub(b0, a0);
    if denom.abs() > snap * (norm(r) * norm(s)).max(1e-300) {
        let t = cross(qp, s) / denom;
        let u = cross(qp, r) / denom;
        let eps_t = snap / norm(r).max(1e-300);
        let eps_u = snap / norm(s).max(1e-300);
        if t >= -eps_t && t <= 1.0 + eps_t && u >= -eps_u && u <= 1.0 + eps_u {
            return Some(add(a0, scale(r, t)));
        }
        return None;
    }
    // Near-parallel: fall back to endpoint proximity checks.
    let mut hits: Vec<Pt> = Vec::new();
    for &(p, seg_a, seg_b) in &[(a0, b0, b1), (a1, b0, b1), (b0, a0, a1), (b1, a0, a1)] {
        if point_segment_distance(p, seg_a, seg_b) <= snap {
            hits.push(p);
        }
    }
    if hits.is_empty() {
        return None;
    }
    let mut c = [0.0, 0.0];
    for h in &hits {
        c = add(c, *h);
    }
    Some(scale(c, 1.0 / hits.len() as f64))
}

/// A simple polygon given by counterclockwise vertices.
#[derive(Debug, Clone)]
pub struct Polygon {
    pub vertices: Vec<Pt>,
}

impl Polygon {
    pub fn new(vertices: Vec<Pt>) -> Self {
        Polygon { vertices }
    }

    pub fn edge(&self, i: usize) -> (Pt, Pt) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn num_edges(&self) -> usize {
        self.vertices.len()
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(dist(*a, *b));
            }
        }
        d
    }

    pub fn bbox(&self) -> (Pt, Pt) {
        let mut lo = [f64::INFINITY, f64::INFINITY];
        let mut hi = [f64::NEG_INFINITY, f64::NEG_INFINITY];
        for v in &self.vertices {
            lo[0] = lo[0].min(v[0]);
            lo[1] = lo[1].min(v[1]);
            hi[0] = hi[0].max(v[0]);
            hi[1] = hi[1].max(v[1]);
        }
        (lo, hi)
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut a = 0.0;
        for i in 0..n {
            let (p, q) = self.edge(i);
            a += cross(p, q);
        }
        0.5 * a
    }

    /// Even-odd crossing test. Points on the boundary are not guaranteed a
    /// stable answer; callers use strictly interior query points.
    pub fn contains(&self, p: Pt) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = self.edge(i);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn distance_to_boundary(&self, p: Pt) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.num_edges() {
            let (a, b) = self.edge(i);
            best = best.min(point_segment_distance(p, a, b));
        }
        best
    }

    /// Whether the polygon is simple (no two non-adjacent edges intersect),
    /// has no repeated vertices and positive (counterclockwise) area.
    pub fn is_simple_ccw(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 || self.area() <= 0.0 {
            return false;
        }
        for i in 0..n {
            let (a0, a1) = self.edge(i);
            if dist(a0, a1) == 0.0 {
                return false;
            }
            for j in i + 1..n {
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let (b0, b1) = self.edge(j);
                if segment_intersection(a0, a1, b0, b1, 1e-12).is_some() {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn segment_distance_basics() {
        assert_relative_eq!(
            point_segment_distance([0.5, 1.0], [0.0, 0.0], [1.0, 0.0]),
            1.0
        );
        assert_relative_eq!(
            point_segment_distance([2.0, 0.0], [0.0, 0.0], [1.0, 0.0]),
            1.0
        );
        assert_relative_eq!(
            point_segment_distance([3.0, 4.0], [0.0, 0.0], [0.0, 0.0]),
            5.0
        );
    }

    #[test]
    fn polygon_queries() {
        let square = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!(square.is_simple_ccw());
        assert_relative_eq!(square.area(), 1.0);
        assert_relative_eq!(square.diameter(), 2.0f64.sqrt());
        assert!(square.contains([0.5, 0.5]));
        assert!(!square.contains([1.5, 0.5]));
        assert_relative_eq!(square.distance_to_boundary([0.5, 0.4]), 0.4);
    }

    #[test]
    fn crossing_segments_intersect() {
        let p = segment_intersection([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0], 1e-12)
            .expect("segments cross");
        assert_relative_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(p[1], 0.5, epsilon = 1e-12);
        assert!(
            segment_intersection([0.0, 0.0], [1.0, 0.0], [0.0, 0.5], [1.0, 0.5], 1e-12).is_none()
        );
    }
}
