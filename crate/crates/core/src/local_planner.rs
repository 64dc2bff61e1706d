//! Exact local planner between two car poses.
//!
//! The two heading lines are intersected and the corner they form is
//! rounded with a single tangent arc, with straight runs on either side.
//! The arc uses the full available tangent length, so its radius is as
//! large as the geometry allows. With reversing enabled the mirrored
//! constructions, in which one or more pieces are driven backwards, are
//! also tried and the shortest feasible chain wins.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_diff, heading_intersection, Arc, Point, Pose, EPS_GEO, MAX_ARC_RADIUS};
use crate::path::{Direction, MotionPrimitive, MIN_STRAIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ConnectError {
    #[error("connecting arc would be tighter than the minimum turning radius")]
    TurnTooSharp,
    #[error("target is not ahead of the start along both heading lines")]
    NoForwardConnection,
    #[error("headings are parallel but the target is off the start's heading line")]
    ParallelUnaligned,
    #[error("connection exceeds the maximum length")]
    TooLong,
    #[error("headings are too close to parallel for a bounded arc")]
    NearlyParallel,
}

/// Upper bound on the length of a connection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxLength {
    Absolute(f64),
    /// A multiple of the straight-line distance between the two poses.
    RelativeToDistance(f64),
}

impl MaxLength {
    fn limit(&self, a: &Pose, b: &Pose) -> f64 {
        match *self {
            MaxLength::Absolute(v) => v,
            MaxLength::RelativeToDistance(f) => f * a.position.distance(b.position),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectConfig {
    pub min_turn_radius: f64,
    pub allow_reverse: bool,
    pub max_connect_length: MaxLength,
}

impl ConnectConfig {
    pub fn new(min_turn_radius: f64) -> Self {
        Self {
            min_turn_radius,
            allow_reverse: false,
            max_connect_length: MaxLength::RelativeToDistance(4.0),
        }
    }

    pub fn with_reverse(self, allow_reverse: bool) -> Self {
        Self { allow_reverse, ..self }
    }
}

fn chain_length(chain: &[MotionPrimitive]) -> f64 {
    chain.iter().map(MotionPrimitive::length).sum()
}

fn reverse_count(chain: &[MotionPrimitive]) -> usize {
    chain.iter().filter(|p| p.direction.is_reverse()).count()
}

fn straight_run(from: Point, car_heading: f64, signed_len: f64) -> Option<MotionPrimitive> {
    if signed_len.abs() <= MIN_STRAIGHT {
        None
    } else if signed_len > 0.0 {
        Some(MotionPrimitive::straight(
            from,
            car_heading,
            signed_len,
            Direction::Forward,
        ))
    } else {
        Some(MotionPrimitive::straight(
            from,
            car_heading + std::f64::consts::PI,
            -signed_len,
            Direction::Reverse,
        ))
    }
}

/// Straight, arc, straight chain. `arc_sign` is +1 when the arc is driven
/// forward and -1 when it is driven in reverse; `tangent` is the distance
/// from the heading-line intersection to both tangent points.
#[allow(clippy::too_many_arguments)]
fn corner_chain(
    a: &Pose,
    b: &Pose,
    intersection: Point,
    d_a: f64,
    d_b: f64,
    arc_sign: f64,
    tangent: f64,
    min_radius: f64,
) -> Result<Vec<MotionPrimitive>, ConnectError> {
    let turn = angle_diff(a.heading(), b.heading());
    let radius = tangent / (0.5 * turn.abs()).tan();
    if radius.is_nan() || radius < min_radius {
        return Err(ConnectError::TurnTooSharp);
    }
    if radius > MAX_ARC_RADIUS {
        return Err(ConnectError::NearlyParallel);
    }
    let u1 = a.direction() * arc_sign;
    let entry = intersection - u1 * tangent;
    let center = entry + u1.perp() * (turn.signum() * radius);
    let arc = Arc {
        center,
        radius,
        start_angle: (entry - center).angle(),
        sweep: turn,
    };
    let arc_dir = if arc_sign > 0.0 {
        Direction::Forward
    } else {
        Direction::Reverse
    };

    let mut chain = Vec::with_capacity(3);
    chain.extend(straight_run(a.position, a.heading(), d_a - arc_sign * tangent));
    chain.push(MotionPrimitive::arc(arc, arc_dir));
    // the exit run starts from the computed arc end so the junction is exact
    chain.extend(straight_run(arc.end_point(), b.heading(), d_b - arc_sign * tangent));
    Ok(chain)
}

/// Connects pose `a` to pose `b` with a curvature-bounded chain of at most
/// three primitives. Identical poses give an empty chain.
pub fn connect_poses(a: &Pose, b: &Pose, cfg: &ConnectConfig) -> Result<Vec<MotionPrimitive>, ConnectError> {
    if a.approx_eq(b, EPS_GEO, EPS_GEO) {
        return Ok(Vec::new());
    }
    let limit = cfg.max_connect_length.limit(a, b);
    let mut candidates: Vec<Result<Vec<MotionPrimitive>, ConnectError>> = Vec::new();

    match heading_intersection(a, b) {
        Err(_) => {
            let ha = a.direction();
            let delta = b.position - a.position;
            let aligned = angle_diff(a.heading(), b.heading()).abs() <= EPS_GEO
                && ha.cross(delta).abs() <= EPS_GEO * delta.norm().max(1.0);
            if !aligned {
                return Err(ConnectError::ParallelUnaligned);
            }
            let along = delta.dot(ha);
            if along > 0.0 || cfg.allow_reverse {
                candidates.push(Ok(straight_run(a.position, a.heading(), along).into_iter().collect()));
            } else {
                return Err(ConnectError::NoForwardConnection);
            }
        }
        Ok((corner, d_a, d_b)) => {
            if d_a > 0.0 && d_b > 0.0 {
                candidates.push(corner_chain(
                    a,
                    b,
                    corner,
                    d_a,
                    d_b,
                    1.0,
                    d_a.min(d_b),
                    cfg.min_turn_radius,
                ));
            }
            if cfg.allow_reverse {
                for sign in [1.0, -1.0] {
                    for t in [sign * d_a, sign * d_b] {
                        if t > 0.0 {
                            candidates.push(corner_chain(a, b, corner, d_a, d_b, sign, t, cfg.min_turn_radius));
                        }
                    }
                }
            }
            if candidates.is_empty() {
                return Err(ConnectError::NoForwardConnection);
            }
        }
    }

    let mut best: Option<Vec<MotionPrimitive>> = None;
    let mut too_long = false;
    for chain in candidates.iter().flatten() {
        let len = chain_length(chain);
        if len > limit {
            too_long = true;
            continue;
        }
        let better = match &best {
            None => true,
            Some(cur) => {
                let cur_len = chain_length(cur);
                len < cur_len || (len == cur_len && reverse_count(chain) < reverse_count(cur))
            }
        };
        if better {
            best = Some(chain.clone());
        }
    }
    match best {
        Some(chain) => Ok(chain),
        None if too_long => Err(ConnectError::TooLong),
        None => Err(candidates
            .into_iter()
            .find_map(Result::err)
            .unwrap_or(ConnectError::NoForwardConnection)),
    }
}
