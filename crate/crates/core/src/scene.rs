//! The polygonal world, the car footprint, and collision / clearance queries.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{aabb_gap, polygon_distance, polygons_intersect, GeometryError, Point, Polygon, Pose};
use crate::path::MotionPrimitive;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("pose is in collision")]
    InCollision,
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SceneError {
    SceneError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarModel {
    pub length: f64,
    pub width: f64,
    /// Distance from the rear edge to the reference point along the body axis.
    pub ref_offset: f64,
    pub min_turn_radius: f64,
}

impl CarModel {
    pub fn validate(&self) -> Result<(), SceneError> {
        for (name, v) in [
            ("car.length", self.length),
            ("car.width", self.width),
            ("car.min_turn_radius", self.min_turn_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.ref_offset >= 0.0 && self.ref_offset <= self.length) {
            return Err(invalid(
                "car.ref_offset",
                format!("must lie in [0, length], got {}", self.ref_offset),
            ));
        }
        Ok(())
    }

    /// Farthest footprint corner from the reference point.
    pub fn circumradius(&self) -> f64 {
        let along = self.ref_offset.max(self.length - self.ref_offset);
        along.hypot(0.5 * self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    /// Distance from an interior point to the nearest wall (negative outside).
    pub fn wall_distance(&self, p: Point) -> f64 {
        (p.x - self.xmin)
            .min(self.xmax - p.x)
            .min(p.y - self.ymin)
            .min(self.ymax - p.y)
    }
}

/// Arc-length spacing of the sampled poses and the obstacle inflation used
/// by the swept collision check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCheckConfig {
    pub step: f64,
    pub margin: f64,
}

impl SweepCheckConfig {
    /// Fast approximate mode: step `0.1 · min_turn_radius`, no inflation.
    pub fn fast(car: &CarModel) -> Self {
        Self {
            step: 0.1 * car.min_turn_radius,
            margin: 0.0,
        }
    }

    /// Inflates obstacles by the farthest any footprint point can travel
    /// between two consecutive samples' midpoint and the nearer sample.
    pub fn conservative(car: &CarModel) -> Self {
        Self::conservative_with_step(car, 0.1 * car.min_turn_radius)
    }

    pub fn conservative_with_step(car: &CarModel, step: f64) -> Self {
        Self {
            step,
            margin: conservative_margin(car, step),
        }
    }
}

/// Between samples `step` apart, every pose lies within `step / 2` of a sample.
/// A body point at distance `ρ` from the reference point moves at most
/// `1 + ρ / r` per unit of arc length when the heading turns at curvature `1 / r`.
pub fn conservative_margin(car: &CarModel, step: f64) -> f64 {
    0.5 * step * (1.0 + car.circumradius() / car.min_turn_radius)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub bounds: Bounds,
    pub obstacles: Vec<Polygon>,
    pub car: CarModel,
    /// Optional stored query, used by the bundled demo scenes.
    pub start: Option<Pose>,
    pub goal: Option<Pose>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl From<PoseRecord> for Pose {
    fn from(r: PoseRecord) -> Pose {
        Pose::new(r.x, r.y, r.theta)
    }
}

impl From<Pose> for PoseRecord {
    fn from(p: Pose) -> PoseRecord {
        PoseRecord {
            x: p.position.x,
            y: p.position.y,
            theta: p.heading(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    bounds: Bounds,
    car: CarModel,
    obstacles: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<PoseRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    goal: Option<PoseRecord>,
}

impl Scene {
    pub fn new(bounds: Bounds, obstacles: Vec<Polygon>, car: CarModel) -> Result<Self, SceneError> {
        let scene = Self {
            bounds,
            obstacles,
            car,
            start: None,
            goal: None,
        };
        scene.validate()?;
        Ok(scene)
    }

    fn validate(&self) -> Result<(), SceneError> {
        let b = &self.bounds;
        if ![b.xmin, b.ymin, b.xmax, b.ymax].iter().all(|v| v.is_finite()) || b.xmax <= b.xmin || b.ymax <= b.ymin {
            return Err(invalid("bounds", "must be a finite, non-degenerate rectangle"));
        }
        self.car.validate()
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: SceneFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            SceneError::Parse(format!(
                "line {} column {}: field `{}`: {}",
                inner.line(),
                inner.column(),
                e.path(),
                crate::format::bare_message(inner)
            ))
        })?;
        let mut obstacles = Vec::with_capacity(file.obstacles.len());
        for (i, ring) in file.obstacles.iter().enumerate() {
            let vertices = ring.iter().map(|&[x, y]| Point::new(x, y)).collect();
            let poly =
                Polygon::new(vertices).map_err(|e: GeometryError| invalid(format!("obstacles[{i}]"), e.to_string()))?;
            obstacles.push(poly);
        }
        let mut scene = Scene::new(file.bounds, obstacles, file.car)?;
        for (name, rec) in [("start", file.start), ("goal", file.goal)] {
            if let Some(r) = rec {
                if ![r.x, r.y, r.theta].iter().all(|v| v.is_finite()) {
                    return Err(invalid(name, "pose must be finite"));
                }
            }
        }
        scene.start = file.start.map(Pose::from);
        scene.goal = file.goal.map(Pose::from);
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = SceneFile {
            bounds: self.bounds,
            car: self.car,
            obstacles: self
                .obstacles
                .iter()
                .map(|p| p.vertices().iter().map(|v| [v.x, v.y]).collect())
                .collect(),
            start: self.start.map(PoseRecord::from),
            goal: self.goal.map(PoseRecord::from),
        };
        serde_json::to_string_pretty(&file).expect("scene serializes")
    }

    /// The car rectangle with its reference point at the pose.
    pub fn footprint_at(&self, pose: &Pose) -> Polygon {
        footprint_at(&self.car, pose)
    }

    pub fn pose_in_collision(&self, pose: &Pose, margin: f64) -> bool {
        let fp = self.footprint_at(pose);
        if fp.vertices().iter().any(|&v| self.bounds.wall_distance(v) <= margin) {
            return true;
        }
        self.obstacles.iter().any(|obs| {
            if aabb_gap(&fp, obs) > margin {
                false
            } else if margin == 0.0 {
                polygons_intersect(&fp, obs)
            } else {
                polygon_distance(&fp, obs) <= margin
            }
        })
    }

    /// Samples the primitive every `cfg.step` of arc length (both endpoints
    /// included) and reports whether any sampled footprint collides.
    pub fn primitive_in_collision(&self, prim: &MotionPrimitive, cfg: &SweepCheckConfig) -> bool {
        prim.sample_poses(cfg.step)
            .iter()
            .any(|(_, pose)| self.pose_in_collision(pose, cfg.margin))
    }

    pub fn chain_in_collision(&self, chain: &[MotionPrimitive], cfg: &SweepCheckConfig) -> bool {
        chain.iter().any(|p| self.primitive_in_collision(p, cfg))
    }

    /// Distance from the footprint to the nearest obstacle or wall.
    pub fn min_clearance(&self, pose: &Pose) -> Result<f64, SceneError> {
        if self.pose_in_collision(pose, 0.0) {
            return Err(SceneError::InCollision);
        }
        let fp = self.footprint_at(pose);
        let mut best = fp
            .vertices()
            .iter()
            .map(|&v| self.bounds.wall_distance(v))
            .fold(f64::INFINITY, f64::min);
        for obs in &self.obstacles {
            if aabb_gap(&fp, obs) < best {
                best = best.min(polygon_distance(&fp, obs));
            }
        }
        Ok(best)
    }

    /// True if `p` lies inside (or on) some obstacle.
    pub fn point_in_obstacle(&self, p: Point) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }
}

pub fn footprint_at(car: &CarModel, pose: &Pose) -> Polygon {
    let (back, front, half) = (-car.ref_offset, car.length - car.ref_offset, 0.5 * car.width);
    let corners = [
        Point::new(back, -half),
        Point::new(front, -half),
        Point::new(front, half),
        Point::new(back, half),
    ];
    let (s, c) = pose.heading().sin_cos();
    let o = pose.position;
    let vertices = corners
        .iter()
        .map(|p| Point::new(o.x + c * p.x - s * p.y, o.y + s * p.x + c * p.y))
        .collect();
    Polygon::from_ccw_unchecked(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance_point_polygon, Arc};
    use crate::path::Direction;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn car() -> CarModel {
        CarModel {
            length: 2.0,
            width: 1.0,
            ref_offset: 0.0,
            min_turn_radius: 1.0,
        }
    }

    fn open(car: CarModel) -> Scene {
        Scene::new(
            Bounds {
                xmin: -10.0,
                ymin: -10.0,
                xmax: 10.0,
                ymax: 10.0,
            },
            vec![],
            car,
        )
        .unwrap()
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon::new(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
        .unwrap()
    }

    fn corners(poly: &Polygon) -> Vec<(f64, f64)> {
        poly.vertices().iter().map(|v| (v.x, v.y)).collect()
    }

    fn assert_corners(poly: &Polygon, expected: &[(f64, f64)]) {
        for (got, want) in corners(poly).iter().zip(expected) {
            assert!(
                (got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12,
                "{got:?} != {want:?}"
            );
        }
    }

    #[test]
    fn footprint_placements() {
        let s = open(car());
        assert_corners(
            &s.footprint_at(&Pose::new(0.0, 0.0, 0.0)),
            &[(0.0, -0.5), (2.0, -0.5), (2.0, 0.5), (0.0, 0.5)],
        );
        assert_corners(
            &s.footprint_at(&Pose::new(0.0, 0.0, FRAC_PI_2)),
            &[(0.5, 0.0), (0.5, 2.0), (-0.5, 2.0), (-0.5, 0.0)],
        );
        let centered = open(CarModel {
            ref_offset: 1.0,
            ..car()
        });
        assert_corners(
            &centered.footprint_at(&Pose::new(0.0, 0.0, 0.0)),
            &[(-1.0, -0.5), (1.0, -0.5), (1.0, 0.5), (-1.0, 0.5)],
        );
    }

    #[test]
    fn collision_cases() {
        let mut s = open(car());
        assert!(!s.pose_in_collision(&Pose::new(0.0, 0.0, 1.0), 0.0));
        s.obstacles.push(rect(1.0, 0.0, 3.0, 3.0));
        assert!(s.pose_in_collision(&Pose::new(0.0, 0.0, 0.0), 0.0));

        // footprint right edge at x = 2, obstacle starts at x = 2.05
        let mut s = open(car());
        s.obstacles.push(rect(2.05, -1.0, 3.0, 1.0));
        let pose = Pose::new(0.0, 0.0, 0.0);
        let fp = s.footprint_at(&pose);
        let gap = fp
            .vertices()
            .iter()
            .map(|&v| distance_point_polygon(v, &s.obstacles[0]))
            .fold(f64::INFINITY, f64::min);
        assert!((gap - 0.05).abs() < 1e-12);
        assert!(!s.pose_in_collision(&pose, 0.0));
        assert!(s.pose_in_collision(&pose, 0.1));
    }

    #[test]
    fn leaving_bounds_collides() {
        let s = open(car());
        assert!(s.pose_in_collision(&Pose::new(8.5, 0.0, 0.0), 0.0));
        assert!(!s.pose_in_collision(&Pose::new(7.5, 0.0, 0.0), 0.0));
    }

    #[test]
    fn primitive_checks() {
        let mut s = open(car());
        let prim = MotionPrimitive::straight(Point::new(-8.0, 0.0), 0.0, 10.0, Direction::Forward);
        let cfg = SweepCheckConfig { step: 0.1, margin: 0.0 };
        assert!(!s.primitive_in_collision(&prim, &cfg));
        // obstacle around the midpoint footprint only
        s.obstacles.push(rect(-2.0, 0.2, -1.5, 2.0));
        let coarse = SweepCheckConfig { step: 5.0, margin: 0.0 };
        assert!(s.primitive_in_collision(&prim, &coarse));
    }

    #[test]
    fn coarse_arc_check_can_miss_a_graze() {
        // Quarter arc of radius 2 whose footprint clips a thin post between samples.
        let car = CarModel {
            length: 0.4,
            width: 0.2,
            ref_offset: 0.0,
            min_turn_radius: 1.0,
        };
        let arc = Arc {
            center: Point::new(0.0, 0.0),
            radius: 2.0,
            start_angle: 0.0,
            sweep: FRAC_PI_2,
        };
        let prim = MotionPrimitive::arc(arc, Direction::Forward);
        let step = arc.length() / 2.0;
        // post just outside the arc near polar angle 22.5 degrees
        let a = std::f64::consts::PI / 8.0;
        let p = Point::from_angle(a) * 2.02;
        let mut s = open(car);
        s.obstacles.push(rect(p.x - 0.03, p.y - 0.03, p.x + 0.03, p.y + 0.03));
        let dense = SweepCheckConfig {
            step: step / 100.0,
            margin: 0.0,
        };
        let coarse = SweepCheckConfig { step, margin: 0.0 };
        assert!(s.primitive_in_collision(&prim, &dense));
        assert!(!s.primitive_in_collision(&prim, &coarse));
        let safe = SweepCheckConfig::conservative_with_step(&car, step);
        assert!(s.primitive_in_collision(&prim, &safe));
    }

    #[test]
    fn clearance_values() {
        let mut s = open(car());
        s.obstacles.push(rect(5.0, -1.0, 6.0, 1.0));
        // footprint front at x = 2; obstacle face at x = 5
        let c = s.min_clearance(&Pose::new(0.0, 0.0, 0.0)).unwrap();
        assert!((c - 3.0).abs() < 1e-12);

        // empty scene, car centred: the short sides are 9 units from the walls
        let centered = open(CarModel {
            ref_offset: 1.0,
            ..car()
        });
        let c = centered.min_clearance(&Pose::new(0.0, 0.0, 0.0)).unwrap();
        assert!((c - 9.0).abs() < 1e-12);

        assert!(matches!(
            s.min_clearance(&Pose::new(4.0, 0.0, 0.0)),
            Err(SceneError::InCollision)
        ));
    }

    #[test]
    fn scene_json_round_trip_and_errors() {
        let text = r#"{
            "bounds": {"xmin": 0, "ymin": 0, "xmax": 10, "ymax": 5},
            "car": {"length": 1, "width": 0.5, "ref_offset": 0, "min_turn_radius": 1},
            "obstacles": [[[1,1],[1,2],[2,2],[2,1]]]
        }"#;
        let s = Scene::from_json(text).unwrap();
        assert!(s.obstacles[0].area() > 0.0);
        let again = Scene::from_json(&s.to_json()).unwrap();
        assert_eq!(s, again);

        let bad = text.replace("\"width\": 0.5", "\"width\": \"wide\"");
        let err = Scene::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("car.width") && err.contains("line 3"), "{err}");

        let bad = text.replace("[[1,1],[1,2],[2,2],[2,1]]", "[[1,1],[1,2]]");
        let err = Scene::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("obstacles[0]"), "{err}");

        let bad = text.replace("\"ref_offset\": 0", "\"ref_offset\": 3");
        assert!(Scene::from_json(&bad)
            .unwrap_err()
            .to_string()
            .contains("car.ref_offset"));
    }

    // Brute-force polygon distance oracle: dense boundary sampling.
    fn sampled_polygon_distance(a: &Polygon, b: &Polygon, n: usize) -> f64 {
        let sample = |poly: &Polygon| -> Vec<Point> {
            poly.edges()
                .flat_map(|(p, q)| (0..=n).map(move |i| p + (q - p) * (i as f64 / n as f64)))
                .collect()
        };
        let (sa, sb) = (sample(a), sample(b));
        sa.iter()
            .flat_map(|p| sb.iter().map(move |q| p.distance(*q)))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn clearance_matches_sampled_oracle() {
        let mut s = open(car());
        s.obstacles.push(rect(3.0, 2.0, 4.0, 4.0));
        let pose = Pose::new(0.0, 0.0, 0.3);
        let exact = s.min_clearance(&pose).unwrap();
        let oracle = sampled_polygon_distance(&s.footprint_at(&pose), &s.obstacles[0], 2000);
        assert!(exact <= oracle + 1e-12 && oracle - exact < 1e-3, "{exact} vs {oracle}");
    }

    proptest! {
        #[test]
        fn footprint_area_is_exact(x in -5.0..5.0f64, y in -5.0..5.0f64, t in 0.0..TAU, off in 0.0..2.0f64) {
            let s = open(CarModel { ref_offset: off, ..car() });
            let area = s.footprint_at(&Pose::new(x, y, t)).area();
            prop_assert!((area - 2.0).abs() < 1e-12);
        }

        #[test]
        fn clearance_is_lipschitz(
            x in -3.0..3.0f64, y in -3.0..3.0f64, t in 0.0..TAU,
            dx in -0.01..0.01f64, dy in -0.01..0.01f64, dt in -0.01..0.01f64,
        ) {
            let mut s = open(car());
            s.obstacles.push(rect(4.0, -1.0, 5.0, 1.0));
            s.obstacles.push(rect(-6.0, 4.0, -4.0, 6.0));
            let a = Pose::new(x, y, t);
            let b = Pose::new(x + dx, y + dy, t + dt);
            if let (Ok(ca), Ok(cb)) = (s.min_clearance(&a), s.min_clearance(&b)) {
                let delta = dx.hypot(dy) + dt.abs();
                let rc = s.car.circumradius();
                prop_assert!((ca - cb).abs() <= delta * (1.0 + std::f64::consts::PI * rc) + 1e-12);
            }
        }
    }
}
