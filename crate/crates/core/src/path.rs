//! Motion primitives and the car paths built from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_diff, arc_point_at, Arc, Point, Pose, Segment, EPS_GEO};

/// Straights shorter than this are rounding residue and are not emitted.
pub const MIN_STRAIGHT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn is_reverse(self) -> bool {
        self == Direction::Reverse
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    Straight,
    Arc,
}

/// Geometry traced by the car's reference point, in the order of travel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trace {
    /// `heading` is the direction of travel, which is the car heading only
    /// when driving forward.
    Straight {
        start: Point,
        heading: f64,
        length: f64,
    },
    Arc(Arc),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionPrimitive {
    pub trace: Trace,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PathError {
    #[error("primitive {index} does not start where the previous one ends")]
    DiscontinuousPath { index: usize },
}

impl MotionPrimitive {
    pub fn straight(start: Point, travel_heading: f64, length: f64, direction: Direction) -> Self {
        debug_assert!(length >= 0.0);
        Self {
            trace: Trace::Straight {
                start,
                heading: travel_heading,
                length,
            },
            direction,
        }
    }

    /// Straight between two distinct points.
    pub fn segment(seg: Segment, direction: Direction) -> Self {
        Self::straight(seg.start, (seg.end - seg.start).angle(), seg.length(), direction)
    }

    pub fn arc(arc: Arc, direction: Direction) -> Self {
        Self {
            trace: Trace::Arc(arc),
            direction,
        }
    }

    pub fn kind(&self) -> PrimitiveKind {
        match self.trace {
            Trace::Straight { .. } => PrimitiveKind::Straight,
            Trace::Arc(_) => PrimitiveKind::Arc,
        }
    }

    pub fn length(&self) -> f64 {
        match self.trace {
            Trace::Straight { length, .. } => length,
            Trace::Arc(arc) => arc.length(),
        }
    }

    /// Absolute heading change along the primitive.
    pub fn turning(&self) -> f64 {
        match self.trace {
            Trace::Straight { .. } => 0.0,
            Trace::Arc(arc) => arc.sweep.abs(),
        }
    }

    pub fn as_arc(&self) -> Option<&Arc> {
        match &self.trace {
            Trace::Arc(arc) => Some(arc),
            Trace::Straight { .. } => None,
        }
    }

    /// Position and direction of travel at arc length `s`, clamped to the primitive.
    fn travel_at(&self, s: f64) -> Pose {
        match self.trace {
            Trace::Straight { start, heading, length } => {
                let s = s.clamp(0.0, length);
                Pose::from_point(start + Point::from_angle(heading) * s, heading)
            }
            Trace::Arc(arc) => {
                let s = s.clamp(0.0, arc.length());
                arc_point_at(&arc, s).expect("clamped arc parameter")
            }
        }
    }

    fn car_pose(&self, travel: Pose) -> Pose {
        match self.direction {
            Direction::Forward => travel,
            Direction::Reverse => travel.flipped(),
        }
    }

    /// Car pose at arc length `s` (clamped to `[0, length]`).
    pub fn pose_at(&self, s: f64) -> Pose {
        self.car_pose(self.travel_at(s))
    }

    pub fn start_pose(&self) -> Pose {
        self.pose_at(0.0)
    }

    pub fn end_pose(&self) -> Pose {
        match self.trace {
            Trace::Straight { start, heading, length } => {
                self.car_pose(Pose::from_point(start + Point::from_angle(heading) * length, heading))
            }
            Trace::Arc(arc) => self.car_pose(arc.end_pose()),
        }
    }

    pub fn start_point(&self) -> Point {
        self.start_pose().position
    }

    pub fn end_point(&self) -> Point {
        self.end_pose().position
    }

    /// Poses at `n + 1` evenly spaced arc lengths, `n = ceil(length / step)`,
    /// so both endpoints are included and spacing never exceeds `step`.
    pub fn sample_poses(&self, step: f64) -> Vec<(f64, Pose)> {
        let len = self.length();
        let n = sample_count(len, step);
        (0..=n)
            .map(|i| {
                if i == n {
                    (len, self.end_pose())
                } else {
                    let s = len * i as f64 / n as f64;
                    (s, self.pose_at(s))
                }
            })
            .collect()
    }

    /// The primitive after rotating by `angle` about the origin, then translating.
    pub fn transformed(&self, angle: f64, offset: Point) -> Self {
        let map = |p: Point| p.rotated(angle) + offset;
        let trace = match self.trace {
            Trace::Straight { start, heading, length } => Trace::Straight {
                start: map(start),
                heading: heading + angle,
                length,
            },
            Trace::Arc(arc) => Trace::Arc(Arc {
                center: map(arc.center),
                start_angle: arc.start_angle + angle,
                ..arc
            }),
        };
        Self {
            trace,
            direction: self.direction,
        }
    }
}

pub(crate) fn sample_count(len: f64, step: f64) -> usize {
    assert!(step > 0.0, "sampling step must be positive");
    ((len / step).ceil() as usize).max(1)
}

/// A start pose followed by a chain of motion primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct CarPath {
    pub start: Pose,
    pub primitives: Vec<MotionPrimitive>,
}

impl CarPath {
    pub fn new(start: Pose, primitives: Vec<MotionPrimitive>) -> Self {
        Self { start, primitives }
    }

    pub fn empty(start: Pose) -> Self {
        Self::new(start, Vec::new())
    }

    pub fn length(&self) -> f64 {
        self.primitives.iter().map(MotionPrimitive::length).sum()
    }

    pub fn end_pose(&self) -> Result<Pose, PathError> {
        path_end_pose(self)
    }

    /// Appends another path whose start is this path's end.
    pub fn extend(&mut self, other: &CarPath) {
        self.primitives.extend_from_slice(&other.primitives);
    }
}

/// True when two car poses join without a gap or a heading jump.
pub fn poses_join(a: &Pose, b: &Pose) -> bool {
    a.position.distance(b.position) <= EPS_GEO && angle_diff(a.heading(), b.heading()).abs() <= EPS_GEO
}

/// Folds the primitives from the start pose, checking every junction.
pub fn path_end_pose(path: &CarPath) -> Result<Pose, PathError> {
    let mut pose = path.start;
    for (index, prim) in path.primitives.iter().enumerate() {
        if !poses_join(&pose, &prim.start_pose()) {
            return Err(PathError::DiscontinuousPath { index });
        }
        pose = prim.end_pose();
    }
    Ok(pose)
}

/// Number of forward/reverse switches between consecutive primitives.
pub fn gear_changes(primitives: &[MotionPrimitive]) -> usize {
    primitives
        .windows(2)
        .filter(|w| w[0].direction != w[1].direction)
        .count()
}

/// Heading of travel for a car pose driven in `direction`.
pub fn travel_heading(pose: &Pose, direction: Direction) -> f64 {
    match direction {
        Direction::Forward => pose.heading(),
        Direction::Reverse => pose.heading() + PI,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn straight_forward_end() {
        let path = CarPath::new(
            Pose::new(0.0, 0.0, 0.0),
            vec![MotionPrimitive::straight(
                Point::new(0.0, 0.0),
                0.0,
                5.0,
                Direction::Forward,
            )],
        );
        assert!(path
            .end_pose()
            .unwrap()
            .approx_eq(&Pose::new(5.0, 0.0, 0.0), 1e-12, 1e-12));
    }

    #[test]
    fn quarter_arc_left_end() {
        let arc = Arc {
            center: Point::new(0.0, 1.0),
            radius: 1.0,
            start_angle: -FRAC_PI_2,
            sweep: FRAC_PI_2,
        };
        let path = CarPath::new(
            Pose::new(0.0, 0.0, 0.0),
            vec![MotionPrimitive::arc(arc, Direction::Forward)],
        );
        assert!(path
            .end_pose()
            .unwrap()
            .approx_eq(&Pose::new(1.0, 1.0, FRAC_PI_2), 1e-12, 1e-12));
    }

    #[test]
    fn reverse_straight_keeps_heading() {
        let path = CarPath::new(
            Pose::new(0.0, 0.0, 0.0),
            vec![MotionPrimitive::straight(
                Point::new(0.0, 0.0),
                PI,
                2.0,
                Direction::Reverse,
            )],
        );
        assert!(path
            .end_pose()
            .unwrap()
            .approx_eq(&Pose::new(-2.0, 0.0, 0.0), 1e-12, 1e-12));
    }

    #[test]
    fn discontinuity_is_reported() {
        let path = CarPath::new(
            Pose::new(0.0, 0.0, 0.0),
            vec![
                MotionPrimitive::straight(Point::new(0.0, 0.0), 0.0, 1.0, Direction::Forward),
                MotionPrimitive::straight(Point::new(1.0, 0.5), 0.0, 1.0, Direction::Forward),
            ],
        );
        assert_eq!(path.end_pose(), Err(PathError::DiscontinuousPath { index: 1 }));
        // heading mismatch at the start
        let path = CarPath::new(
            Pose::new(0.0, 0.0, 0.1),
            vec![MotionPrimitive::straight(
                Point::new(0.0, 0.0),
                0.0,
                1.0,
                Direction::Forward,
            )],
        );
        assert_eq!(path.end_pose(), Err(PathError::DiscontinuousPath { index: 0 }));
    }

    #[test]
    fn sampling_includes_endpoints() {
        let prim = MotionPrimitive::straight(Point::new(0.0, 0.0), 0.0, 1.0, Direction::Forward);
        let samples = prim.sample_poses(0.3);
        assert_eq!(samples.len(), 5);
        assert_eq!(samples[0].0, 0.0);
        assert_eq!(samples[4].0, 1.0);
        assert!(samples.windows(2).all(|w| w[1].0 - w[0].0 <= 0.3));
    }
}
