//! Planar primitives: points, poses, segments, circular arcs, polygons, and
//! the tangent-arc (fillet) constructions used to turn polyline corners into
//! car-feasible transitions.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for tangency and incidence tests, in world units.
pub const EPS_GEO: f64 = 1e-9;

/// Largest arc radius the planners emit. Beyond it the center/angle form
/// cannot place arc endpoints to within `EPS_GEO`.
pub const MAX_ARC_RADIUS: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("turning radius does not fit between the corner's half-edges")]
    TurnTooTight,
    #[error("corner points are not distinct")]
    DegenerateCorner,
    #[error("corner doubles back on itself")]
    ReversalCorner,
    #[error("heading lines are parallel")]
    ParallelHeadings,
    #[error("arc-length parameter outside the primitive")]
    OutOfRange,
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is self-intersecting or has zero area")]
    NotSimple,
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn distance_squared(self, other: Self) -> f64 {
        (self - other).norm_squared()
    }

    pub fn normalized(self) -> Self {
        self * (1.0 / self.norm())
    }

    /// Rotated by +90 degrees.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn midpoint(self, other: Self) -> Self {
        Self::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Signed smallest difference `b - a`, in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = normalize_angle(b - a);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// A planar car state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point,
    heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self::from_point(Point::new(x, y), heading)
    }

    pub fn from_point(position: Point, heading: f64) -> Self {
        Self {
            position,
            heading: normalize_angle(heading),
        }
    }

    /// Heading in `[0, 2π)`.
    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn direction(&self) -> Point {
        Point::from_angle(self.heading)
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.heading.is_finite()
    }

    /// Same position, heading turned by π.
    pub fn flipped(&self) -> Self {
        Self::from_point(self.position, self.heading + PI)
    }

    /// True when positions and headings agree within the given tolerances.
    pub fn approx_eq(&self, other: &Pose, pos_tol: f64, heading_tol: f64) -> bool {
        self.position.distance(other.position) <= pos_tol
            && angle_diff(self.heading, other.heading).abs() <= heading_tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
}

impl Segment {
    pub const fn new(start: Point, end: Point) -> Self {
        Self { start, end }
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn point_at(&self, s: f64) -> Point {
        let len = self.length();
        if len == 0.0 {
            return self.start;
        }
        self.start + (self.end - self.start) * (s / len)
    }

    pub fn distance_to_point(&self, p: Point) -> f64 {
        distance_point_segment(p, self.start, self.end)
    }
}

/// Circular arc; positive sweep is counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub center: Point,
    pub radius: f64,
    pub start_angle: f64,
    pub sweep: f64,
}

impl Arc {
    pub fn length(&self) -> f64 {
        self.radius * self.sweep.abs()
    }

    pub fn end_angle(&self) -> f64 {
        self.start_angle + self.sweep
    }

    pub fn start_point(&self) -> Point {
        self.center + Point::from_angle(self.start_angle) * self.radius
    }

    pub fn end_point(&self) -> Point {
        self.center + Point::from_angle(self.end_angle()) * self.radius
    }

    /// Turning side: +1 for counter-clockwise (and zero sweep), -1 otherwise.
    pub fn turn_sign(&self) -> f64 {
        if self.sweep < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Tangent heading at the given polar angle, in the direction of traversal.
    fn tangent_heading(&self, polar: f64) -> f64 {
        polar + self.turn_sign() * 0.5 * PI
    }

    pub fn start_pose(&self) -> Pose {
        Pose::from_point(self.start_point(), self.tangent_heading(self.start_angle))
    }

    pub fn end_pose(&self) -> Pose {
        Pose::from_point(self.end_point(), self.tangent_heading(self.end_angle()))
    }
}

/// Pose on the arc at arc-length `s` from its start, facing along the
/// direction of traversal.
pub fn arc_point_at(arc: &Arc, s: f64) -> Result<Pose, GeometryError> {
    let len = arc.length();
    if !(s >= 0.0 && s <= len * (1.0 + 1e-12) + 1e-12) {
        return Err(GeometryError::OutOfRange);
    }
    if s >= len {
        return Ok(arc.end_pose());
    }
    let polar = arc.start_angle + arc.turn_sign() * s / arc.radius;
    Ok(Pose::from_point(
        arc.center + Point::from_angle(polar) * arc.radius,
        arc.tangent_heading(polar),
    ))
}

/// Simple polygon stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
    min: Point,
    max: Point,
}

impl Polygon {
    /// Validates and normalizes to counter-clockwise order.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let area = signed_area(&vertices);
        if area == 0.0 || !is_simple(&vertices) {
            return Err(GeometryError::NotSimple);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self::from_ccw_unchecked(vertices))
    }

    /// Skips validation; the caller guarantees a simple CCW ring.
    pub(crate) fn from_ccw_unchecked(vertices: Vec<Point>) -> Self {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &vertices {
            min = Point::new(min.x.min(v.x), min.y.min(v.y));
            max = Point::new(max.x.max(v.x), max.y.max(v.y));
        }
        Self { vertices, min, max }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn aabb(&self) -> (Point, Point) {
        (self.min, self.max)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Inside or on the boundary.
    pub fn contains(&self, p: Point) -> bool {
        if p.x < self.min.x || p.x > self.max.x || p.y < self.min.y || p.y > self.max.y {
            return false;
        }
        if self.edges().any(|(a, b)| distance_point_segment(p, a, b) == 0.0) {
            return true;
        }
        self.strictly_contains(p)
    }

    /// Even-odd test; boundary points may go either way.
    pub fn strictly_contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance to the boundary, ignoring whether `p` is inside.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges()
            .map(|(a, b)| distance_point_segment(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Zero inside or on the boundary, Euclidean distance to the boundary outside.
pub fn distance_point_polygon(p: Point, poly: &Polygon) -> f64 {
    if poly.contains(p) {
        0.0
    } else {
        poly.boundary_distance(p)
    }
}

pub fn distance_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

fn segment_segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    distance_point_segment(a, c, d)
        .min(distance_point_segment(b, c, d))
        .min(distance_point_segment(c, a, b))
        .min(distance_point_segment(d, a, b))
}

/// Closed polygons overlap (touching counts).
pub fn polygons_intersect(p: &Polygon, q: &Polygon) -> bool {
    let (pmin, pmax) = p.aabb();
    let (qmin, qmax) = q.aabb();
    if pmax.x < qmin.x || qmax.x < pmin.x || pmax.y < qmin.y || qmax.y < pmin.y {
        return false;
    }
    for (a, b) in p.edges() {
        for (c, d) in q.edges() {
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    // no boundary crossings: one contains the other or they are disjoint
    q.strictly_contains(p.vertices[0]) || p.strictly_contains(q.vertices[0])
}

/// Zero when the polygons overlap, else the minimum boundary distance.
pub fn polygon_distance(p: &Polygon, q: &Polygon) -> f64 {
    if polygons_intersect(p, q) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (a, b) in p.edges() {
        for (c, d) in q.edges() {
            best = best.min(segment_segment_distance(a, b, c, d));
        }
    }
    best
}

/// Lower bound on the distance between the two polygons' bounding boxes.
pub fn aabb_gap(p: &Polygon, q: &Polygon) -> f64 {
    let (pmin, pmax) = p.aabb();
    let (qmin, qmax) = q.aabb();
    let dx = (qmin.x - pmax.x).max(pmin.x - qmax.x).max(0.0);
    let dy = (qmin.y - pmax.y).max(pmin.y - qmax.y).max(0.0);
    dx.hypot(dy)
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum::<f64>()
}

fn is_simple(vertices: &[Point]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if adjacent {
                // adjacent edges may only share their common vertex
                let shared = if j == i + 1 { b } else { a };
                let (other_ab, other_cd) = if j == i + 1 { (a, d) } else { (b, c) };
                if orient(other_ab, shared, other_cd) == 0.0 && (other_cd - shared).dot(other_ab - shared) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Segment, tangent arc, segment: the smoothed version of a polyline corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fillet {
    pub lead_in: Segment,
    pub arc: Arc,
    pub lead_out: Segment,
}

impl Fillet {
    pub fn is_straight(&self) -> bool {
        self.arc.sweep == 0.0
    }

    pub fn length(&self) -> f64 {
        self.lead_in.length() + self.arc.length() + self.lead_out.length()
    }
}

/// Unit directions and corner angle terms shared by the fillet routines.
struct Corner {
    d_in: Point,
    d_out: Point,
    half_in: f64,
    half_out: f64,
    /// tan of half the interior angle
    tan_half_interior: f64,
    /// signed turn angle in `(-π, π)`
    turn: f64,
    straight: bool,
}

fn analyze_corner(prev: Point, corner: Point, next: Point) -> Result<Corner, GeometryError> {
    if !(prev.is_finite() && corner.is_finite() && next.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    if prev == corner || corner == next || prev == next {
        return Err(GeometryError::DegenerateCorner);
    }
    let e_in = corner - prev;
    let e_out = next - corner;
    let (len_in, len_out) = (e_in.norm(), e_out.norm());
    let d_in = e_in * (1.0 / len_in);
    let d_out = e_out * (1.0 / len_out);
    let cross = e_in.cross(e_out);
    let collinear = cross.abs() < EPS_GEO * len_in * len_out;
    if collinear && e_in.dot(e_out) < 0.0 {
        return Err(GeometryError::ReversalCorner);
    }
    // interior angle α = π - |turn|, so tan(α/2) = 1 / tan(|turn|/2)
    let turn = d_in.cross(d_out).atan2(d_in.dot(d_out));
    Ok(Corner {
        d_in,
        d_out,
        half_in: 0.5 * len_in,
        half_out: 0.5 * len_out,
        tan_half_interior: 1.0 / (0.5 * turn.abs()).tan(),
        turn,
        straight: collinear,
    })
}

/// Largest fillet radius whose tangent points stay within both half-edges.
/// `None` for straight-through corners, where any radius fits.
pub fn max_fillet_radius(prev: Point, corner: Point, next: Point) -> Result<Option<f64>, GeometryError> {
    let c = analyze_corner(prev, corner, next)?;
    if c.straight {
        return Ok(None);
    }
    Ok(Some(c.half_in.min(c.half_out) * c.tan_half_interior))
}

/// Replaces the corner of the polyline `prev → corner → next` by a tangent
/// arc of the given radius. The lead-in starts at the midpoint of the
/// incoming edge and the lead-out ends at the midpoint of the outgoing one.
pub fn fillet_corner(prev: Point, corner: Point, next: Point, radius: f64) -> Result<Fillet, GeometryError> {
    assert!(radius > 0.0, "fillet radius must be positive");
    let c = analyze_corner(prev, corner, next)?;
    let m_in = prev.midpoint(corner);
    let m_out = corner.midpoint(next);
    if c.straight {
        // zero-sweep arc sitting on the corner, tangent to the travel direction
        let center = corner + c.d_in.perp() * radius;
        return Ok(Fillet {
            lead_in: Segment::new(m_in, corner),
            arc: Arc {
                center,
                radius,
                start_angle: normalize_angle((corner - center).angle()),
                sweep: 0.0,
            },
            lead_out: Segment::new(corner, m_out),
        });
    }
    let tangent_len = radius / c.tan_half_interior;
    if tangent_len > c.half_in + EPS_GEO || tangent_len > c.half_out + EPS_GEO {
        return Err(GeometryError::TurnTooTight);
    }
    // clamp so a tangent point that lands on the midpoint within tolerance is exact
    let snap = |half: f64| tangent_len >= half * (1.0 - 1e-12);
    let entry = if snap(c.half_in) {
        m_in
    } else {
        corner - c.d_in * tangent_len
    };
    let exit = if snap(c.half_out) {
        m_out
    } else {
        corner + c.d_out * tangent_len
    };
    let side = c.turn.signum();
    let center = entry + c.d_in.perp() * (side * radius);
    Ok(Fillet {
        lead_in: Segment::new(m_in, entry),
        arc: Arc {
            center,
            radius,
            start_angle: normalize_angle((entry - center).angle()),
            sweep: c.turn,
        },
        lead_out: Segment::new(exit, m_out),
    })
}

/// Intersection of the heading lines of two poses, with the signed distance
/// from `a` to the intersection along `a`'s heading and from the
/// intersection to `b` along `b`'s heading.
pub fn heading_intersection(a: &Pose, b: &Pose) -> Result<(Point, f64, f64), GeometryError> {
    let da = a.direction();
    let db = b.direction();
    let denom = da.cross(db);
    if denom.abs() < EPS_GEO {
        return Err(GeometryError::ParallelHeadings);
    }
    let w = b.position - a.position;
    let d_a = w.cross(db) / denom;
    let d_b = -w.cross(da) / denom;
    Ok((a.position + da * d_a, d_a, d_b))
}
