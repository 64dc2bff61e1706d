//! C-PRM: the approximate roadmap of car-feasible transitions and the lazy
//! query that collision-checks only the transitions on candidate paths.
//!
//! Approximate-roadmap nodes sit at the midpoints of control-roadmap edges,
//! one per travel direction, facing along the edge. For every corner
//! `prev → corner → next` of the control roadmap the corner is rounded with
//! a tangent arc; the resulting segment–arc–segment chain is a directed
//! transition from the `(prev, corner)` midpoint to the `(corner, next)`
//! midpoint.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control_roadmap::{build_control_roadmap, ControlRoadmap, PrmConfig, RoadmapError};
use crate::geometry::{fillet_corner, max_fillet_radius, Point, Pose, MAX_ARC_RADIUS};
use crate::local_planner::{connect_poses, ConnectConfig};
use crate::quality::{path_cost, CostBreakdown, QualityError, QualitySpec};
use crate::scene::{Scene, SweepCheckConfig};
use crate::search::{gear_shortest_path, GearEdge};
use crate::spatial::GridIndex;

pub use crate::path::{
    path_end_pose, CarPath, Direction, MotionPrimitive, PathError, PrimitiveKind, Trace, MIN_STRAIGHT,
};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Roadmap(#[from] RoadmapError),
    #[error("start pose is in collision")]
    StartInCollision,
    #[error("goal pose is in collision")]
    GoalInCollision,
    #[error("no roadmap node could be connected to the {0}")]
    Unreachable(&'static str),
    #[error("start and goal are not connected by a collision-free path")]
    NoPath,
    #[error(transparent)]
    Quality(#[from] QualityError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusMode {
    /// Every arc uses the car's minimum turning radius.
    #[default]
    FixedMin,
    /// Every arc uses the largest radius that fits the corner's half-edges.
    MaxFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    /// Control-roadmap node the transition turns around.
    pub corner: usize,
    pub primitives: Vec<MotionPrimitive>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub corners_tried: usize,
    pub transitions: usize,
    pub corners_skipped: usize,
}

pub struct ApproxRoadmap {
    pub nodes: Vec<Pose>,
    /// Directed control edge `(tail, head)` behind each node.
    pub provenance: Vec<(usize, usize)>,
    pub transitions: Vec<Transition>,
    pub stats: BuildStats,
    index: GridIndex,
}

impl ApproxRoadmap {
    /// Node for travelling along control edge `tail → head`.
    fn node_of(rm: &ControlRoadmap, tail: usize, head: usize) -> usize {
        let e = rm.edge_index(tail, head).expect("edge exists");
        2 * e + usize::from(tail > head)
    }

    pub fn nearest_nodes(&self, p: Point, m: usize) -> Vec<usize> {
        self.index.nearest(p, m)
    }
}

fn transition_chain(prev: Point, corner: Point, next: Point, radius: f64) -> Option<Vec<MotionPrimitive>> {
    let fillet = fillet_corner(prev, corner, next, radius).ok()?;
    let heading_in = (corner - prev).angle();
    if fillet.is_straight() {
        let len = fillet.lead_in.start.distance(fillet.lead_out.end);
        return Some(vec![MotionPrimitive::straight(
            fillet.lead_in.start,
            heading_in,
            len,
            Direction::Forward,
        )]);
    }
    let mut chain = Vec::with_capacity(3);
    let len_in = fillet.lead_in.length();
    if len_in > MIN_STRAIGHT {
        chain.push(MotionPrimitive::straight(
            fillet.lead_in.start,
            heading_in,
            len_in,
            Direction::Forward,
        ));
    }
    chain.push(MotionPrimitive::arc(fillet.arc, Direction::Forward));
    let len_out = fillet.lead_out.length();
    if len_out > MIN_STRAIGHT {
        chain.push(MotionPrimitive::straight(
            fillet.arc.end_point(),
            (next - corner).angle(),
            len_out,
            Direction::Forward,
        ));
    }
    Some(chain)
}

/// Converts every corner of the control roadmap into a directed transition.
/// Corners that cannot be rounded within the car's turning radius are
/// skipped. No collision checks are made.
pub fn build_approx_roadmap(rm: &ControlRoadmap, scene: &Scene, radius_mode: RadiusMode) -> ApproxRoadmap {
    let r_min = scene.car.min_turn_radius;
    let mut nodes = Vec::with_capacity(2 * rm.edges.len());
    let mut provenance = Vec::with_capacity(2 * rm.edges.len());
    for &(a, b) in &rm.edges {
        let (pa, pb) = (rm.nodes[a], rm.nodes[b]);
        let mid = pa.midpoint(pb);
        nodes.push(Pose::from_point(mid, (pb - pa).angle()));
        provenance.push((a, b));
        nodes.push(Pose::from_point(mid, (pa - pb).angle()));
        provenance.push((b, a));
    }

    let mut stats = BuildStats::default();
    let mut transitions = Vec::new();
    for (corner, nbrs) in rm.adjacency.iter().enumerate() {
        let c = rm.nodes[corner];
        for &prev in nbrs {
            for &next in nbrs {
                if next == prev {
                    continue;
                }
                stats.corners_tried += 1;
                let (p, n) = (rm.nodes[prev], rm.nodes[next]);
                let radius = match radius_mode {
                    RadiusMode::FixedMin => Some(r_min),
                    RadiusMode::MaxFit => match max_fillet_radius(p, c, n) {
                        Ok(None) => Some(r_min),
                        Ok(Some(r)) if r >= r_min => Some(r.min(MAX_ARC_RADIUS).max(r_min)),
                        _ => None,
                    },
                };
                match radius.and_then(|r| transition_chain(p, c, n, r)) {
                    Some(primitives) => transitions.push(Transition {
                        from: ApproxRoadmap::node_of(rm, prev, corner),
                        to: ApproxRoadmap::node_of(rm, corner, next),
                        corner,
                        primitives,
                    }),
                    None => stats.corners_skipped += 1,
                }
            }
        }
    }
    stats.transitions = transitions.len();
    let positions: Vec<Point> = nodes.iter().map(|p| p.position).collect();
    ApproxRoadmap {
        index: GridIndex::new(&positions),
        nodes,
        provenance,
        transitions,
        stats,
    }
}

/// Local-planner links from the start pose into the roadmap and from the
/// roadmap into the goal pose, as `(roadmap node, chain)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryLinks {
    pub start: Vec<(usize, Vec<MotionPrimitive>)>,
    pub goal: Vec<(usize, Vec<MotionPrimitive>)>,
}

/// Roadmap poses are tried in order of distance from the query pose until
/// `fanout` links succeed or `scan` poses have been tried.
fn links_near(
    arm: &ApproxRoadmap,
    at: Point,
    fanout: usize,
    scan: usize,
    connect: impl Fn(usize) -> Option<Vec<MotionPrimitive>>,
) -> Vec<(usize, Vec<MotionPrimitive>)> {
    arm.nearest_nodes(at, scan.max(fanout))
        .into_iter()
        .filter_map(|n| connect(n).map(|c| (n, c)))
        .take(fanout)
        .collect()
}

/// Links the start to up to `fanout` nearby roadmap poses and up to
/// `fanout` nearby roadmap poses to the goal.
pub fn attach_query_poses(
    arm: &ApproxRoadmap,
    scene: &Scene,
    start: &Pose,
    goal: &Pose,
    fanout: usize,
    scan: usize,
    cc: &ConnectConfig,
) -> Result<QueryLinks, PlanError> {
    if scene.pose_in_collision(start, 0.0) {
        return Err(PlanError::StartInCollision);
    }
    if scene.pose_in_collision(goal, 0.0) {
        return Err(PlanError::GoalInCollision);
    }
    let start_links = links_near(arm, start.position, fanout, scan, |n| {
        connect_poses(start, &arm.nodes[n], cc).ok()
    });
    if start_links.is_empty() {
        return Err(PlanError::Unreachable("start"));
    }
    let goal_links = links_near(arm, goal.position, fanout, scan, |n| {
        connect_poses(&arm.nodes[n], goal, cc).ok()
    });
    if goal_links.is_empty() {
        return Err(PlanError::Unreachable("goal"));
    }
    Ok(QueryLinks {
        start: start_links,
        goal: goal_links,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryStats {
    pub edges_checked: usize,
    pub edges_discarded: usize,
    pub replans: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub path: CarPath,
    pub validated: bool,
    pub cost: CostBreakdown,
    pub stats: QueryStats,
}

/// An edge of the per-query working graph.
struct WorkEdge<'a> {
    from: usize,
    to: usize,
    from_pose: Pose,
    primitives: &'a [MotionPrimitive],
}

/// Lazy query: search the working graph, collision-check the found path
/// front to back, drop the first colliding edge, and search again until a
/// fully validated path remains or start and goal disconnect.
pub fn query(
    arm: &ApproxRoadmap,
    scene: &Scene,
    links: &QueryLinks,
    start: &Pose,
    cfg: &SweepCheckConfig,
    spec: &QualitySpec,
) -> Result<QueryResult, PlanError> {
    let clock = Instant::now();
    let n = arm.nodes.len();
    let (s, g) = (n, n + 1);
    let mut work: Vec<WorkEdge<'_>> = arm
        .transitions
        .iter()
        .map(|t| WorkEdge {
            from: t.from,
            to: t.to,
            from_pose: arm.nodes[t.from],
            primitives: &t.primitives,
        })
        .collect();
    for (node, chain) in &links.start {
        work.push(WorkEdge {
            from: s,
            to: *node,
            from_pose: *start,
            primitives: chain,
        });
    }
    for (node, chain) in &links.goal {
        work.push(WorkEdge {
            from: *node,
            to: g,
            from_pose: arm.nodes[*node],
            primitives: chain,
        });
    }
    let gear_edges: Vec<GearEdge> = work
        .iter()
        .map(|e| GearEdge {
            from: e.from,
            to: e.to,
            first: e.primitives.first().map(|p| p.direction),
            last: e.primitives.last().map(|p| p.direction),
        })
        .collect();

    let mut weights: Vec<Option<Option<f64>>> = vec![None; work.len()];
    let mut validated = vec![false; work.len()];
    let mut stats = QueryStats::default();
    loop {
        let route = gear_shortest_path(n + 2, &gear_edges, s, g, spec, |e| {
            *weights[e].get_or_insert_with(|| {
                let piece = CarPath::new(work[e].from_pose, work[e].primitives.to_vec());
                // a clearance sample inside an obstacle rules the edge out
                path_cost(&piece, scene, spec).ok().map(|c| c.total)
            })
        })
        .ok_or(PlanError::NoPath)?;

        let mut blocked = None;
        for &e in &route.edges {
            if validated[e] {
                continue;
            }
            stats.edges_checked += 1;
            if scene.chain_in_collision(work[e].primitives, cfg) {
                blocked = Some(e);
                break;
            }
            validated[e] = true;
        }
        match blocked {
            Some(e) => {
                weights[e] = Some(None);
                stats.edges_discarded += 1;
                stats.replans += 1;
            }
            None => {
                let mut path = CarPath::empty(*start);
                for &e in &route.edges {
                    path.primitives.extend_from_slice(work[e].primitives);
                }
                let cost = path_cost(&path, scene, spec)?;
                stats.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
                return Ok(QueryResult {
                    path,
                    validated: true,
                    cost,
                    stats,
                });
            }
        }
    }
}

/// Everything needed to run C-PRM end to end for one seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub prm: PrmConfig,
    pub radius_mode: RadiusMode,
    pub connect: ConnectConfig,
    /// Links made from the start and into the goal.
    pub attach_fanout: usize,
    /// Roadmap poses tried, nearest first, while making those links.
    pub attach_scan: usize,
    pub sweep: SweepCheckConfig,
}

impl PlannerConfig {
    /// Defaults for the given scene.
    pub fn for_scene(scene: &Scene) -> Self {
        Self {
            prm: PrmConfig::default(),
            radius_mode: RadiusMode::FixedMin,
            connect: ConnectConfig::new(scene.car.min_turn_radius),
            attach_fanout: 10,
            attach_scan: 2000,
            sweep: SweepCheckConfig::fast(&scene.car),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub result: QueryResult,
    pub build_stats: BuildStats,
    pub build_ms: f64,
    pub query_ms: f64,
}

/// Builds both roadmaps with `seed` and answers the query.
pub fn plan(
    scene: &Scene,
    cfg: &PlannerConfig,
    start: &Pose,
    goal: &Pose,
    spec: &QualitySpec,
    seed: u64,
) -> Result<PlanOutcome, PlanError> {
    let clock = Instant::now();
    let control = build_control_roadmap(scene, &cfg.prm.with_seed(seed))?;
    let arm = build_approx_roadmap(&control, scene, cfg.radius_mode);
    let build_ms = clock.elapsed().as_secs_f64() * 1e3;
    let clock = Instant::now();
    let links = attach_query_poses(
        &arm,
        scene,
        start,
        goal,
        cfg.attach_fanout,
        cfg.attach_scan,
        &cfg.connect,
    )?;
    let result = query(&arm, scene, &links, start, &cfg.sweep, spec)?;
    Ok(PlanOutcome {
        result,
        build_stats: arm.stats,
        build_ms,
        query_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}
