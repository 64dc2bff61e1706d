//! Path quality: length, smoothness, clearance and reversal count, and their
//! weighted combination.
//!
//! Every component is additive over primitives (reversals and gear-change
//! smoothness aside, which depend on the junction between neighbours), so
//! per-edge costs can be summed by a shortest-path search.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pose;
use crate::path::{gear_changes, CarPath, Direction};
use crate::scene::{Scene, SceneError};

/// Reported for clearance fields when the clearance term is not evaluated.
pub const CLEARANCE_SKIPPED: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualityError {
    #[error("path pose collides with the scene")]
    InCollision,
    #[error("invalid quality weights: {0}")]
    InvalidSpec(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualitySpec {
    pub w_length: f64,
    pub w_smoothness: f64,
    pub w_clearance: f64,
    pub w_reversals: f64,
    /// Lower bound on the clearance used in the inverse-clearance integrand.
    pub clearance_floor: f64,
    /// Arc-length spacing of clearance samples.
    pub clearance_step: f64,
}

impl QualitySpec {
    pub fn new(weights: [f64; 4], clearance_step: f64) -> Result<Self, QualityError> {
        let spec = Self {
            w_length: weights[0],
            w_smoothness: weights[1],
            w_clearance: weights[2],
            w_reversals: weights[3],
            clearance_floor: 1e-3,
            clearance_step,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Pure length cost.
    pub fn length_only(clearance_step: f64) -> Self {
        Self::new([1.0, 0.0, 0.0, 0.0], clearance_step).expect("valid weights")
    }

    pub fn weights(&self) -> [f64; 4] {
        [self.w_length, self.w_smoothness, self.w_clearance, self.w_reversals]
    }

    pub fn validate(&self) -> Result<(), QualityError> {
        let w = self.weights();
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(QualityError::InvalidSpec("weights must be finite and non-negative"));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(QualityError::InvalidSpec("at least one weight must be positive"));
        }
        if !(self.clearance_floor > 0.0 && self.clearance_step > 0.0) {
            return Err(QualityError::InvalidSpec("clearance floor and step must be positive"));
        }
        Ok(())
    }

    /// Extra cost of entering a chain whose first primitive drives in
    /// `first` when the car arrives in gear `incoming`. A standalone chain
    /// already charges one reversal for starting in reverse; arriving in a
    /// known gear replaces that with a gear-change charge.
    pub fn junction_adjustment(&self, incoming: Option<Direction>, first: Direction) -> f64 {
        let Some(gear) = incoming else { return 0.0 };
        let flip = gear != first;
        let reversals = f64::from(u8::from(flip)) - f64::from(u8::from(first.is_reverse()));
        let smooth = if flip { PI } else { 0.0 };
        self.w_reversals * reversals + self.w_smoothness * smooth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostBreakdown {
    pub length: f64,
    pub smoothness: f64,
    pub clearance_cost: f64,
    pub reversal_count: u32,
    pub min_clearance: f64,
    pub total: f64,
}

pub fn path_length(path: &CarPath) -> f64 {
    path.length()
}

/// Total absolute turning plus π for every gear change.
pub fn path_smoothness(path: &CarPath) -> f64 {
    let turning: f64 = path.primitives.iter().map(|p| p.turning()).sum();
    turning + PI * gear_changes(&path.primitives) as f64
}

/// Gear changes, plus one if the path starts in reverse.
pub fn reversal_count(path: &CarPath) -> u32 {
    let initial = path.primitives.first().is_some_and(|p| p.direction.is_reverse());
    (gear_changes(&path.primitives) + usize::from(initial)) as u32
}

/// Trapezoid-rule integral of `1 / max(clearance, floor)` along the path,
/// sampled per primitive, and the smallest sampled clearance.
pub fn path_clearance_cost(path: &CarPath, scene: &Scene, spec: &QualitySpec) -> Result<(f64, f64), QualityError> {
    let clearance = |pose: &Pose| {
        scene.min_clearance(pose).map_err(|e| match e {
            SceneError::InCollision => QualityError::InCollision,
            other => unreachable!("clearance query failed: {other}"),
        })
    };
    if path.primitives.is_empty() {
        return Ok((0.0, clearance(&path.start)?));
    }
    let mut cost = 0.0;
    let mut min_seen = f64::INFINITY;
    for prim in &path.primitives {
        let samples = prim.sample_poses(spec.clearance_step);
        let h = prim.length() / (samples.len() - 1) as f64;
        let last = samples.len() - 1;
        for (i, (_, pose)) in samples.iter().enumerate() {
            let c = clearance(pose)?;
            min_seen = min_seen.min(c);
            let weight = if i == 0 || i == last { 0.5 * h } else { h };
            cost += weight / c.max(spec.clearance_floor);
        }
    }
    Ok((cost, min_seen))
}

/// All four components and their weighted total. The clearance term is only
/// evaluated when its weight is positive; otherwise its fields carry
/// [`CLEARANCE_SKIPPED`].
pub fn path_cost(path: &CarPath, scene: &Scene, spec: &QualitySpec) -> Result<CostBreakdown, QualityError> {
    let length = path_length(path);
    let smoothness = path_smoothness(path);
    let reversals = reversal_count(path);
    let (clearance_cost, min_clearance) = if spec.w_clearance > 0.0 {
        path_clearance_cost(path, scene, spec)?
    } else {
        (CLEARANCE_SKIPPED, CLEARANCE_SKIPPED)
    };
    let mut total = spec.w_length * length + spec.w_smoothness * smoothness + spec.w_reversals * f64::from(reversals);
    if spec.w_clearance > 0.0 {
        total += spec.w_clearance * clearance_cost;
    }
    Ok(CostBreakdown {
        length,
        smoothness,
        clearance_cost,
        reversal_count: reversals,
        min_clearance,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Arc, Point, Polygon, Pose};
    use crate::path::MotionPrimitive;
    use crate::scene::{Bounds, CarModel};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn scene(half: f64) -> Scene {
        Scene::new(
            Bounds {
                xmin: -half,
                ymin: -half,
                xmax: half,
                ymax: half,
            },
            vec![],
            CarModel {
                length: 1.0,
                width: 0.5,
                ref_offset: 0.0,
                min_turn_radius: 1.0,
            },
        )
        .unwrap()
    }

    fn straight(x: f64, len: f64, dir: Direction) -> MotionPrimitive {
        let heading = if dir.is_reverse() { PI } else { 0.0 };
        MotionPrimitive::straight(Point::new(x, 0.0), heading, len, dir)
    }

    fn quarter_arc() -> CarPath {
        let arc = Arc {
            center: Point::new(0.0, 1.0),
            radius: 1.0,
            start_angle: -FRAC_PI_2,
            sweep: FRAC_PI_2,
        };
        CarPath::new(
            Pose::new(0.0, 0.0, 0.0),
            vec![MotionPrimitive::arc(arc, Direction::Forward)],
        )
    }

    fn fwd_rev_fwd() -> CarPath {
        CarPath::new(
            Pose::new(0.0, 0.0, 0.0),
            vec![
                straight(0.0, 3.0, Direction::Forward),
                straight(3.0, 1.0, Direction::Reverse),
                straight(2.0, 2.0, Direction::Forward),
            ],
        )
    }

    #[test]
    fn lengths() {
        let p = CarPath::new(Pose::new(0.0, 0.0, 0.0), vec![straight(0.0, 5.0, Direction::Forward)]);
        assert_eq!(path_length(&p), 5.0);
        assert!((path_length(&quarter_arc()) - FRAC_PI_2).abs() < 1e-12);
        let mut combo = CarPath::new(Pose::new(-2.0, 0.0, 0.0), vec![straight(-2.0, 2.0, Direction::Forward)]);
        combo.extend(&quarter_arc());
        assert!((path_length(&combo) - (2.0 + FRAC_PI_2)).abs() < 1e-12);
    }

    #[test]
    fn smoothness_values() {
        let p = CarPath::new(Pose::new(0.0, 0.0, 0.0), vec![straight(0.0, 5.0, Direction::Forward)]);
        assert_eq!(path_smoothness(&p), 0.0);
        assert!((path_smoothness(&quarter_arc()) - FRAC_PI_2).abs() < 1e-12);
        let fr = CarPath::new(
            Pose::new(0.0, 0.0, 0.0),
            vec![
                straight(0.0, 3.0, Direction::Forward),
                straight(3.0, 1.0, Direction::Reverse),
            ],
        );
        assert_eq!(path_smoothness(&fr), PI);
    }

    #[test]
    fn reversal_values() {
        let p = CarPath::new(Pose::new(0.0, 0.0, 0.0), vec![straight(0.0, 5.0, Direction::Forward)]);
        assert_eq!(reversal_count(&p), 0);
        assert_eq!(reversal_count(&fwd_rev_fwd()), 2);
        let r = CarPath::new(Pose::new(0.0, 0.0, 0.0), vec![straight(0.0, 1.0, Direction::Reverse)]);
        assert_eq!(reversal_count(&r), 1);
    }

    #[test]
    fn weighted_totals() {
        let s = scene(50.0);
        let p = CarPath::new(Pose::new(0.0, 0.0, 0.0), vec![straight(0.0, 5.0, Direction::Forward)]);
        let c = path_cost(&p, &s, &QualitySpec::new([1.0, 0.0, 0.0, 0.0], 0.1).unwrap()).unwrap();
        assert_eq!(c.total, 5.0);
        assert_eq!(c.clearance_cost, CLEARANCE_SKIPPED);
        let c = path_cost(
            &quarter_arc(),
            &s,
            &QualitySpec::new([1.0, 1.0, 0.0, 0.0], 0.1).unwrap(),
        )
        .unwrap();
        assert!((c.total - PI).abs() < 1e-12);
        let c = path_cost(
            &fwd_rev_fwd(),
            &s,
            &QualitySpec::new([0.0, 0.0, 0.0, 1.0], 0.1).unwrap(),
        )
        .unwrap();
        assert_eq!(c.total, 2.0);
    }

    #[test]
    fn constant_clearance_integral() {
        // car 1 x 0.5 driving along y = 0 inside a channel of half-width 2.25:
        // the long sides stay exactly 2 from the walls
        let s = Scene::new(
            Bounds {
                xmin: -1000.0,
                ymin: -2.25,
                xmax: 1000.0,
                ymax: 2.25,
            },
            vec![],
            scene(1.0).car,
        )
        .unwrap();
        let len = 7.3;
        let p = CarPath::new(Pose::new(0.0, 0.0, 0.0), vec![straight(0.0, len, Direction::Forward)]);
        let spec = QualitySpec::new([0.0, 0.0, 1.0, 0.0], 0.1).unwrap();
        let (cost, min) = path_clearance_cost(&p, &s, &spec).unwrap();
        assert!((min - 2.0).abs() < 1e-12);
        assert!((cost - len / 2.0).abs() < 1e-12);
    }

    #[test]
    fn clearance_floor_saturates() {
        // an obstacle hugging the car's side, closer than the floor everywhere
        let mut s = scene(50.0);
        s.obstacles.push(
            Polygon::new(vec![
                Point::new(-1.0, 0.2505),
                Point::new(10.0, 0.2505),
                Point::new(10.0, 1.0),
                Point::new(-1.0, 1.0),
            ])
            .unwrap(),
        );
        let mut spec = QualitySpec::new([0.0, 0.0, 1.0, 0.0], 0.1).unwrap();
        spec.clearance_floor = 0.01;
        let p = CarPath::new(Pose::new(0.0, 0.0, 0.0), vec![straight(0.0, 4.0, Direction::Forward)]);
        let (cost, _) = path_clearance_cost(&p, &s, &spec).unwrap();
        assert!((cost - 4.0 / 0.01).abs() < 1e-9);
    }

    #[test]
    fn colliding_path_is_rejected() {
        let mut s = scene(50.0);
        s.obstacles.push(
            Polygon::new(vec![
                Point::new(2.0, -1.0),
                Point::new(3.0, -1.0),
                Point::new(3.0, 1.0),
                Point::new(2.0, 1.0),
            ])
            .unwrap(),
        );
        let p = CarPath::new(Pose::new(0.0, 0.0, 0.0), vec![straight(0.0, 5.0, Direction::Forward)]);
        let spec = QualitySpec::new([1.0, 0.0, 1.0, 0.0], 0.1).unwrap();
        assert_eq!(path_cost(&p, &s, &spec), Err(QualityError::InCollision));
    }

    #[test]
    fn spec_validation() {
        assert!(QualitySpec::new([0.0; 4], 0.1).is_err());
        assert!(QualitySpec::new([-1.0, 1.0, 0.0, 0.0], 0.1).is_err());
        assert!(QualitySpec::new([1.0, 0.0, 0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn junction_adjustment_restores_path_totals() {
        let s = scene(50.0);
        let spec = QualitySpec::new([1.0, 1.0, 0.0, 1.0], 0.1).unwrap();
        let path = fwd_rev_fwd();
        let whole = path_cost(&path, &s, &spec).unwrap().total;
        let mut sum = 0.0;
        let mut gear = None;
        let mut pose = path.start;
        for prim in &path.primitives {
            let piece = CarPath::new(pose, vec![*prim]);
            sum += path_cost(&piece, &s, &spec).unwrap().total + spec.junction_adjustment(gear, prim.direction);
            gear = Some(prim.direction);
            pose = prim.end_pose();
        }
        assert!((whole - sum).abs() < 1e-12);
    }

    fn arb_path() -> impl Strategy<Value = CarPath> {
        // random chains of straights and arcs, folded from the origin
        prop::collection::vec((any::<bool>(), any::<bool>(), 0.1..2.0f64, -2.0..2.0f64), 1..6).prop_map(|parts| {
            let start = Pose::new(0.0, 0.0, 0.3);
            let mut pose = start;
            let mut prims = Vec::new();
            for (is_arc, rev, len, bend) in parts {
                let dir = if rev { Direction::Reverse } else { Direction::Forward };
                let travel = crate::path::travel_heading(&pose, dir);
                let prim = if is_arc {
                    let radius = 1.0 + bend.abs();
                    let sign = if bend < 0.0 { -1.0 } else { 1.0 };
                    let center = pose.position + Point::from_angle(travel).perp() * (sign * radius);
                    let arc = Arc {
                        center,
                        radius,
                        start_angle: (pose.position - center).angle(),
                        sweep: sign * len / radius,
                    };
                    MotionPrimitive::arc(arc, dir)
                } else {
                    MotionPrimitive::straight(pose.position, travel, len, dir)
                };
                pose = prim.end_pose();
                prims.push(prim);
            }
            CarPath::new(start, prims)
        })
    }

    proptest! {
        #[test]
        fn components_are_additive(path in arb_path(), cut in 0usize..6) {
            let s = scene(100.0);
            let spec = QualitySpec::new([1.0, 1.0, 1.0, 1.0], 0.05).unwrap();
            let cut = cut.min(path.primitives.len());
            let head = CarPath::new(path.start, path.primitives[..cut].to_vec());
            let mid = head.end_pose().unwrap();
            let tail = CarPath::new(mid, path.primitives[cut..].to_vec());
            let (w, h, t) = (
                path_cost(&path, &s, &spec).unwrap(),
                path_cost(&head, &s, &spec).unwrap(),
                path_cost(&tail, &s, &spec).unwrap(),
            );
            prop_assert!((w.length - (h.length + t.length)).abs() < 1e-9);
            let flip = cut > 0 && cut < path.primitives.len()
                && path.primitives[cut - 1].direction != path.primitives[cut].direction;
            let tail_reverse_start = cut < path.primitives.len() && path.primitives[cut].direction.is_reverse();
            let expected_rev = h.reversal_count + t.reversal_count + u32::from(flip)
                - u32::from(cut > 0 && tail_reverse_start);
            prop_assert_eq!(w.reversal_count, expected_rev);
            let junction = if flip { PI } else { 0.0 };
            prop_assert!((w.smoothness - (h.smoothness + t.smoothness + junction)).abs() < 1e-9);
            // the junction sample is shared: each side weights it by half its own step
            prop_assert!((w.clearance_cost - (h.clearance_cost + t.clearance_cost)).abs() < 1e-9);
        }

        #[test]
        fn totals_are_monotone_and_scale(path in arb_path(), w in prop::array::uniform4(0.0..3.0f64), bump in 0usize..4, c in 0.1..10.0f64) {
            let s = scene(100.0);
            let mut w = w;
            w[0] += 0.1;
            let spec = QualitySpec::new(w, 0.05).unwrap();
            let base = path_cost(&path, &s, &spec).unwrap().total;
            let mut more = w;
            more[bump] += 1.0;
            let bigger = path_cost(&path, &s, &QualitySpec::new(more, 0.05).unwrap()).unwrap().total;
            prop_assert!(bigger >= base - 1e-12);
            let scaled = QualitySpec::new(w.map(|v| v * c), 0.05).unwrap();
            let st = path_cost(&path, &s, &scaled).unwrap().total;
            prop_assert!((st - c * base).abs() <= 1e-9 * (1.0 + st.abs()));
        }

        #[test]
        fn argmin_is_scale_invariant(paths in prop::collection::vec(arb_path(), 2..6), c in 0.1..10.0f64) {
            let s = scene(100.0);
            let spec = QualitySpec::new([1.0, 0.5, 0.0, 2.0], 0.05).unwrap();
            let scaled = QualitySpec::new(spec.weights().map(|v| v * c), 0.05).unwrap();
            let argmin = |sp: &QualitySpec| {
                let costs: Vec<f64> = paths.iter().map(|p| path_cost(p, &s, sp).unwrap().total).collect();
                let best = costs.iter().cloned().fold(f64::INFINITY, f64::min);
                costs.iter().map(|v| (v - best).abs() <= 1e-9 * (1.0 + best)).collect::<Vec<_>>()
            };
            let (a, b) = (argmin(&spec), argmin(&scaled));
            // every strict minimiser under one scaling is a minimiser under the other
            prop_assert!(a.iter().zip(&b).any(|(x, y)| *x && *y));
        }

        #[test]
        fn length_dominates_chord(path in arb_path()) {
            let end = path.end_pose().unwrap();
            prop_assert!(path_length(&path) >= path.start.position.distance(end.position) - 1e-12);
        }
    }
}
