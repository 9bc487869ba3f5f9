//! Polygon arithmetic in continuous pixel coordinates.
//!
//! Pixel `(row i, col j)` covers `[j, j+1) x [i, i+1)` and has its center at
//! `(j + 0.5, i + 0.5)`. Every [`Polygon`] is stored with positive shoelace
//! area, i.e. counter-clockwise in a y-up frame (clockwise on screen).

use std::cmp::Ordering;

use clipper2_rust::{inflate_paths_d, EndType, JoinType, PathD};

use crate::error::{Error, Result};

/// Maximum deviation of a polyline arc from the true round join, in px.
pub const ARC_TOLERANCE: f64 = 0.25;

/// Decimal digits kept when coordinates are handed to the offsetting engine.
const OFFSET_PRECISION: i32 = 6;

/// Distance below which a point counts as lying on a polygon edge.
const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn distance(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    /// Rigid rotation about `center`, counter-clockwise in a y-up frame.
    pub fn rotate(self, angle_deg: f64, center: Point) -> Point {
        let (c, s) = cos_sin_deg(angle_deg);
        let dx = self.x - center.x;
        let dy = self.y - center.y;
        Point::new(center.x + dx * c - dy * s, center.y + dx * s + dy * c)
    }
}

/// Cosine and sine of an angle in degrees, exact at multiples of 90.
pub fn cos_sin_deg(angle_deg: f64) -> (f64, f64) {
    let r = angle_deg.rem_euclid(360.0);
    if r == 0.0 {
        (1.0, 0.0)
    } else if r == 90.0 {
        (0.0, 1.0)
    } else if r == 180.0 {
        (-1.0, 0.0)
    } else if r == 270.0 {
        (0.0, -1.0)
    } else {
        let t = angle_deg.to_radians();
        (t.cos(), t.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAlignedBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl AxisAlignedBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min > x_max || y_min > y_max {
            return Err(Error::ShapeMismatch(format!(
                "box ({x_min}, {y_min}, {x_max}, {y_max}) is not ordered"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    pub fn intersects(&self, other: &AxisAlignedBox) -> bool {
        self.x_min <= other.x_max
            && other.x_min <= self.x_max
            && self.y_min <= other.y_max
            && other.y_min <= self.y_max
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    /// The box as a polygon, `None` when it has zero extent.
    pub fn to_polygon(&self) -> Option<Polygon> {
        Polygon::rect(self.x_min, self.y_min, self.x_max, self.y_max).ok()
    }
}

/// A simple polygon with at least three vertices and positive shoelace area.
///
/// Edges may touch at vertices (the outer boundary of an 8-connected pixel
/// set pinches at diagonal contacts) but never cross or overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Validates and canonicalizes a vertex ring. Either orientation is
    /// accepted; a closing vertex equal to the first one is dropped.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::InvalidPolygon("non-finite coordinate".into()));
        }
        let mut vertices = vertices;
        vertices.dedup();
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "{} distinct vertices, need at least 3",
                vertices.len()
            )));
        }
        let area = signed_area(&vertices);
        let bb = bounds(&vertices);
        let scale = bb.width().max(bb.height());
        if area.abs() <= 1e-12 * scale * scale {
            return Err(Error::InvalidPolygon("zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        if let Some((i, j)) = find_self_intersection(&vertices) {
            return Err(Error::InvalidPolygon(format!(
                "edges {i} and {j} intersect"
            )));
        }
        Ok(Self { vertices })
    }

    pub fn from_xy(coords: &[[f64; 2]]) -> Result<Self> {
        Self::new(coords.iter().map(|&[x, y]| Point::new(x, y)).collect())
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn to_xy(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|p| [p.x, p.y]).collect()
    }

    /// Directed edges of the closed ring.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point {
        let o = self.vertices[0];
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for (p, q) in self.edges() {
            let (p, q) = (p.sub(o), q.sub(o));
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
            a2 += w;
        }
        Point::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
    }

    /// Minimum axis-aligned bounding box.
    pub fn bounding_box(&self) -> AxisAlignedBox {
        bounds(&self.vertices)
    }

    /// Even-odd containment; points on the boundary count as inside.
    pub fn contains(&self, q: Point) -> bool {
        match self.locate(q) {
            Location::Inside | Location::Boundary(_) => true,
            Location::Outside => false,
        }
    }

    fn locate(&self, q: Point) -> Location {
        let mut inside = false;
        for (a, b) in self.edges() {
            if on_segment(q, a, b) {
                return Location::Boundary(b.sub(a));
            }
            if (a.y > q.y) != (b.y > q.y) {
                let x = crossing_x(a, b, q.y);
                if q.x < x {
                    inside = !inside;
                }
            }
        }
        if inside {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    pub fn rotate(&self, angle_deg: f64, center: Point) -> Polygon {
        Polygon {
            vertices: self
                .vertices
                .iter()
                .map(|p| p.rotate(angle_deg, center))
                .collect(),
        }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Polygon {
        Polygon {
            vertices: self
                .vertices
                .iter()
                .map(|p| Point::new(p.x + dx, p.y + dy))
                .collect(),
        }
    }

    /// Offsets the polygon by a signed distance with round joins.
    ///
    /// A negative `delta` shrinks: the result may be empty or split into
    /// several pieces. A positive `delta` dilates into a single polygon.
    pub fn offset(&self, delta: f64) -> Vec<Polygon> {
        if delta == 0.0 {
            return vec![self.clone()];
        }
        let path: PathD = self
            .vertices
            .iter()
            .map(|p| clipper2_rust::Point::new(p.x, p.y))
            .collect();
        let solution = inflate_paths_d(
            &vec![path],
            delta,
            JoinType::Round,
            EndType::Polygon,
            2.0,
            OFFSET_PRECISION,
            ARC_TOLERANCE,
        );
        let mut pieces: Vec<Polygon> = solution
            .into_iter()
            .map(|path| {
                path.into_iter()
                    .map(|p| Point::new(p.x, p.y))
                    .collect::<Vec<_>>()
            })
            // negative rings are holes
            .filter(|ring| signed_area(ring) > 0.0)
            .filter_map(|ring| Polygon::new(ring).ok())
            .collect();
        if delta > 0.0 && pieces.len() > 1 {
            pieces.sort_by(|a, b| b.area().total_cmp(&a.area()));
            pieces.truncate(1);
        }
        pieces
    }

    /// Douglas-Peucker simplification of the closed ring. Returns the
    /// polygon unchanged when the simplified ring would be invalid.
    pub fn simplify(&self, epsilon: f64) -> Polygon {
        let n = self.vertices.len();
        if epsilon <= 0.0 || n <= 3 {
            return self.clone();
        }
        let far = (1..n)
            .max_by(|&i, &j| {
                let di = self.vertices[i].distance(self.vertices[0]);
                let dj = self.vertices[j].distance(self.vertices[0]);
                di.total_cmp(&dj)
            })
            .unwrap_or(n / 2);
        let mut keep = vec![false; n];
        keep[0] = true;
        keep[far] = true;
        let ring: Vec<Point> = self
            .vertices
            .iter()
            .copied()
            .chain(std::iter::once(self.vertices[0]))
            .collect();
        douglas_peucker(&ring, 0, far, epsilon, &mut keep);
        let mut keep_tail = vec![false; n + 1];
        douglas_peucker(&ring, far, n, epsilon, &mut keep_tail);
        let kept: Vec<Point> = (0..n)
            .filter(|&i| keep[i] || keep_tail[i])
            .map(|i| self.vertices[i])
            .collect();
        Polygon::new(kept).unwrap_or_else(|_| self.clone())
    }

    /// True when both rings list the same vertices in the same cyclic order.
    pub fn is_cyclic_shift_of(&self, other: &Polygon, tol: f64) -> bool {
        let n = self.vertices.len();
        if n != other.vertices.len() {
            return false;
        }
        (0..n).any(|shift| {
            (0..n).all(|i| {
                let a = self.vertices[i];
                let b = other.vertices[(i + shift) % n];
                (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol
            })
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Location {
    Inside,
    Outside,
    /// On an edge with the given direction.
    Boundary(Point),
}

/// Area of the intersection of two polygons, by exact clipping of their
/// boundaries.
///
/// The boundary of `a ∩ b` is made of the pieces of each boundary lying
/// inside the other polygon, plus shared pieces running in the same
/// direction. Integrating `x dy - y dx` over those pieces gives twice the
/// area.
pub fn intersection_area(a: &Polygon, b: &Polygon) -> f64 {
    if !a.bounding_box().intersects(&b.bounding_box()) {
        return 0.0;
    }
    let origin = a.vertices[0];
    let twice = clipped_boundary_integral(a, b, origin, true)
        + clipped_boundary_integral(b, a, origin, false);
    (twice / 2.0).clamp(0.0, a.area().min(b.area()))
}

/// Intersection over union of two polygons, in `[0, 1]`.
pub fn polygon_iou(a: &Polygon, b: &Polygon) -> f64 {
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

fn clipped_boundary_integral(
    subject: &Polygon,
    clip: &Polygon,
    origin: Point,
    keep_shared: bool,
) -> f64 {
    let clip_box = clip.bounding_box();
    let mut sum = 0.0;
    let mut cuts: Vec<f64> = Vec::new();
    for (p, q) in subject.edges() {
        let edge_box = bounds(&[p, q]);
        if !edge_box.intersects(&clip_box) {
            continue;
        }
        cuts.clear();
        cuts.push(0.0);
        cuts.push(1.0);
        for (c, d) in clip.edges() {
            cut_parameters(p, q, c, d, &mut cuts);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let at = |t: f64| {
            if t >= 1.0 {
                q
            } else {
                Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
            }
        };
        let dir = q.sub(p);
        for w in cuts.windows(2) {
            let (s, e) = (at(w[0]), at(w[1]));
            if s == e {
                continue;
            }
            let keep = match clip.locate(at(0.5 * (w[0] + w[1]))) {
                Location::Inside => true,
                Location::Outside => false,
                Location::Boundary(other) => keep_shared && other.dot(dir) > 0.0,
            };
            if keep {
                sum += s.sub(origin).cross(e.sub(origin));
            }
        }
    }
    sum
}

/// Pushes the parameters along `p -> q` where segment `c -> d` touches it.
fn cut_parameters(p: Point, q: Point, c: Point, d: Point, cuts: &mut Vec<f64>) {
    let r = q.sub(p);
    let s = d.sub(c);
    let rr = r.dot(r);
    let denom = r.cross(s);
    let cp = c.sub(p);
    let scale = rr.sqrt() * s.dot(s).sqrt();
    if denom.abs() > 1e-14 * scale {
        let t = cp.cross(s) / denom;
        let u = cp.cross(r) / denom;
        if (0.0..=1.0).contains(&u) && t > 0.0 && t < 1.0 {
            cuts.push(t);
        }
        return;
    }
    // parallel: only collinear overlaps produce cuts
    if cp.cross(r).abs() > BOUNDARY_EPS * rr.sqrt() {
        return;
    }
    for end in [c, d] {
        let t = end.sub(p).dot(r) / rr;
        if t > 0.0 && t < 1.0 {
            cuts.push(t);
        }
    }
}

fn crossing_x(a: Point, b: Point, y: f64) -> f64 {
    a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y)
}

/// Crossings of the horizontal line `y` with the polygon boundary, using the
/// same half-open rule as [`Polygon::contains`].
pub(crate) fn scanline_crossings(poly: &Polygon, y: f64, out: &mut Vec<f64>) {
    out.clear();
    for (a, b) in poly.edges() {
        if (a.y > y) != (b.y > y) {
            out.push(crossing_x(a, b, y));
        }
    }
    out.sort_by(f64::total_cmp);
}

fn on_segment(q: Point, a: Point, b: Point) -> bool {
    let ab = b.sub(a);
    let aq = q.sub(a);
    let len2 = ab.dot(ab);
    let t = (aq.dot(ab) / len2).clamp(0.0, 1.0);
    let nearest = Point::new(a.x + t * ab.x, a.y + t * ab.y);
    q.distance(nearest) <= BOUNDARY_EPS
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let o = vertices[0];
    let twice: f64 = (1..n - 1)
        .map(|i| vertices[i].sub(o).cross(vertices[i + 1].sub(o)))
        .sum();
    twice / 2.0
}

fn bounds(vertices: &[Point]) -> AxisAlignedBox {
    let mut b = AxisAlignedBox {
        x_min: f64::INFINITY,
        y_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    for p in vertices {
        b.x_min = b.x_min.min(p.x);
        b.y_min = b.y_min.min(p.y);
        b.x_max = b.x_max.max(p.x);
        b.y_max = b.y_max.max(p.y);
    }
    b
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

/// Returns the first pair of edges that cross or overlap. Contact at a
/// single point is allowed.
fn find_self_intersection(v: &[Point]) -> Option<(usize, usize)> {
    let n = v.len();
    let edge = |i: usize| (v[i], v[(i + 1) % n]);
    let mut order: Vec<usize> = (0..n).collect();
    let min_x = |i: usize| v[i].x.min(v[(i + 1) % n].x);
    order.sort_by(|&i, &j| min_x(i).total_cmp(&min_x(j)).then(i.cmp(&j)));
    for (k, &i) in order.iter().enumerate() {
        let (a, b) = edge(i);
        let max_x = a.x.max(b.x);
        let (ylo, yhi) = (a.y.min(b.y), a.y.max(b.y));
        for &j in &order[k + 1..] {
            let (c, d) = edge(j);
            if min_x(j) > max_x {
                break;
            }
            if c.y.max(d.y) < ylo || c.y.min(d.y) > yhi {
                continue;
            }
            let adjacent = (i + 1) % n == j || (j + 1) % n == i;
            if adjacent {
                // spikes fold an edge back onto its neighbour
                let (first, second) = if (i + 1) % n == j {
                    ((a, b), (c, d))
                } else {
                    ((c, d), (a, b))
                };
                let u = first.1.sub(first.0);
                let w = second.1.sub(second.0);
                if u.cross(w) == 0.0 && u.dot(w) < 0.0 {
                    return Some((i.min(j), i.max(j)));
                }
                continue;
            }
            if segments_conflict(a, b, c, d) {
                return Some((i.min(j), i.max(j)));
            }
        }
    }
    None
}

/// Proper crossing or positive-length collinear overlap.
fn segments_conflict(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    if o1 == 0.0 && o2 == 0.0 {
        let r = b.sub(a);
        let rr = r.dot(r);
        let mut tc = c.sub(a).dot(r) / rr;
        let mut td = d.sub(a).dot(r) / rr;
        if tc > td {
            std::mem::swap(&mut tc, &mut td);
        }
        let lo = tc.max(0.0);
        let hi = td.min(1.0);
        return hi - lo > 0.0;
    }
    false
}

fn douglas_peucker(ring: &[Point], first: usize, last: usize, eps: f64, keep: &mut [bool]) {
    if last <= first + 1 {
        return;
    }
    let (a, b) = (ring[first], ring[last]);
    let ab = b.sub(a);
    let len = ab.dot(ab).sqrt();
    let dist = |p: Point| {
        if len == 0.0 {
            p.distance(a)
        } else {
            ab.cross(p.sub(a)).abs() / len
        }
    };
    let (idx, dmax) = (first + 1..last)
        .map(|i| (i, dist(ring[i])))
        .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(Ordering::Equal))
        .unwrap_or((first, 0.0));
    if dmax > eps {
        keep[idx] = true;
        douglas_peucker(ring, first, idx, eps, keep);
        douglas_peucker(ring, idx, last, eps, keep);
    }
}
