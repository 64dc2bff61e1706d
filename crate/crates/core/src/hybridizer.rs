//! Path hybridization: merge several start–goal paths into one graph, add
//! local-planner bridges between them, and extract the cheapest route.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_diff, Pose};
use crate::local_planner::{connect_poses, ConnectConfig};
use crate::path::{path_end_pose, CarPath, MotionPrimitive};
use crate::quality::{path_cost, CostBreakdown, QualityError, QualitySpec};
use crate::scene::{Scene, SweepCheckConfig};
use crate::search::{gear_shortest_path, GearEdge};

/// Poses closer than this in position and heading share one node.
pub const EPS_POSE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum HybridizeError {
    #[error("no input paths")]
    NoPaths,
    #[error("path {0} does not share the start and goal of path 0")]
    MismatchedEndpoints(usize),
    #[error("path {0} is discontinuous")]
    Discontinuous(usize),
    #[error("goal is unreachable in the H-graph")]
    NoPath,
    #[error("all {0} planner runs failed")]
    AllRunsFailed(usize),
    #[error("invalid hybridization config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Quality(#[from] QualityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridizeConfig {
    pub k: usize,
    pub bridge_fanout: usize,
    pub bridge_radius: f64,
    pub seed_base: u64,
}

impl HybridizeConfig {
    pub fn for_scene(scene: &Scene) -> Self {
        Self {
            k: 6,
            bridge_fanout: 5,
            bridge_radius: 0.25 * scene.bounds.diagonal(),
            seed_base: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HybridizeError> {
        if self.k == 0 {
            return Err(HybridizeError::InvalidConfig("k must be at least 1"));
        }
        if self.bridge_fanout == 0 {
            return Err(HybridizeError::InvalidConfig("bridge_fanout must be at least 1"));
        }
        if !(self.bridge_radius > 0.0 && self.bridge_radius.is_finite()) {
            return Err(HybridizeError::InvalidConfig("bridge_radius must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HNode {
    pub pose: Pose,
    /// `(path, vertex)` pairs merged into this node, in insertion order.
    pub origins: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Original,
    Bridge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HEdge {
    pub from: usize,
    pub to: usize,
    pub primitives: Vec<MotionPrimitive>,
    pub cost: CostBreakdown,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HGraph {
    pub nodes: Vec<HNode>,
    pub edges: Vec<HEdge>,
    pub start: usize,
    pub goal: usize,
    /// Node sequence of every input path.
    pub embeddings: Vec<Vec<usize>>,
}

impl HGraph {
    pub fn bridge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Bridge).count()
    }

    fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges
            .iter()
            .any(|e| e.from == from && e.to == to && e.kind == EdgeKind::Original)
    }

    /// Every input path can be walked along original edges.
    pub fn embeds_inputs(&self) -> bool {
        self.embeddings.iter().all(|seq| {
            seq.first() == Some(&self.start)
                && seq.last() == Some(&self.goal)
                && seq.windows(2).all(|w| w[0] == w[1] || self.has_edge(w[0], w[1]))
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeStats {
    pub attempted: usize,
    pub geometric_failures: usize,
    pub collision_failures: usize,
    pub inserted: usize,
}

fn same_pose(a: &Pose, b: &Pose) -> bool {
    a.position.distance(b.position) <= EPS_POSE && angle_diff(a.heading(), b.heading()).abs() <= EPS_POSE
}

fn chain_cost(
    from: Pose,
    primitives: &[MotionPrimitive],
    scene: &Scene,
    spec: &QualitySpec,
) -> Result<CostBreakdown, QualityError> {
    path_cost(&CarPath::new(from, primitives.to_vec()), scene, spec)
}

/// Merges the paths into one graph and densifies it with bridges.
///
/// For each node and each input path the node is not on, up to
/// `bridge_fanout` of that path's nodes within `bridge_radius` are tried, in
/// both directions. A graph built from a prefix of the paths is therefore a
/// subgraph of the one built from all of them.
pub fn build_hgraph(
    paths: &[CarPath],
    scene: &Scene,
    spec: &QualitySpec,
    cc: &ConnectConfig,
    cfg: &HybridizeConfig,
    sweep: &SweepCheckConfig,
) -> Result<(HGraph, BridgeStats), HybridizeError> {
    cfg.validate()?;
    let first = paths.first().ok_or(HybridizeError::NoPaths)?;
    let start = first.start;
    let goal = path_end_pose(first).map_err(|_| HybridizeError::Discontinuous(0))?;
    for (i, p) in paths.iter().enumerate() {
        let end = path_end_pose(p).map_err(|_| HybridizeError::Discontinuous(i))?;
        if !same_pose(&p.start, &start) || !same_pose(&end, &goal) {
            return Err(HybridizeError::MismatchedEndpoints(i));
        }
    }

    let mut nodes: Vec<HNode> = Vec::new();
    let mut intern = |pose: Pose, origin: (usize, usize)| -> usize {
        match nodes.iter().position(|n| same_pose(&n.pose, &pose)) {
            Some(i) => {
                nodes[i].origins.push(origin);
                i
            }
            None => {
                nodes.push(HNode {
                    pose,
                    origins: vec![origin],
                });
                nodes.len() - 1
            }
        }
    };

    let mut embeddings = Vec::with_capacity(paths.len());
    let mut pieces: Vec<(usize, usize, &MotionPrimitive)> = Vec::new();
    for (pi, p) in paths.iter().enumerate() {
        let mut seq = vec![intern(p.start, (pi, 0))];
        for (vi, prim) in p.primitives.iter().enumerate() {
            let id = intern(prim.end_pose(), (pi, vi + 1));
            pieces.push((*seq.last().unwrap(), id, prim));
            seq.push(id);
        }
        embeddings.push(seq);
    }
    let goal_node = *embeddings[0].last().unwrap();

    let mut edges: Vec<HEdge> = Vec::new();
    for (from, to, prim) in pieces {
        if from == to
            || edges
                .iter()
                .any(|e| e.from == from && e.to == to && e.primitives[0] == *prim)
        {
            continue;
        }
        let cost = chain_cost(nodes[from].pose, std::slice::from_ref(prim), scene, spec)?;
        edges.push(HEdge {
            from,
            to,
            primitives: vec![*prim],
            cost,
            kind: EdgeKind::Original,
        });
    }

    let on_path: Vec<BTreeSet<usize>> = nodes.iter().map(|n| n.origins.iter().map(|o| o.0).collect()).collect();
    let mut pairs = BTreeSet::new();
    for u in 0..nodes.len() {
        for p in 0..paths.len() {
            if on_path[u].contains(&p) {
                continue;
            }
            let mut near: Vec<(f64, usize)> = (0..nodes.len())
                .filter(|&v| on_path[v].contains(&p))
                .map(|v| (nodes[u].pose.position.distance_squared(nodes[v].pose.position), v))
                .filter(|&(d2, _)| d2 <= cfg.bridge_radius * cfg.bridge_radius)
                .collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, v) in near.iter().take(cfg.bridge_fanout) {
                pairs.insert((u, v));
                pairs.insert((v, u));
            }
        }
    }

    let mut stats = BridgeStats::default();
    for (u, v) in pairs {
        stats.attempted += 1;
        let chain = match connect_poses(&nodes[u].pose, &nodes[v].pose, cc) {
            Ok(c) => c,
            Err(_) => {
                stats.geometric_failures += 1;
                continue;
            }
        };
        if scene.chain_in_collision(&chain, sweep) {
            stats.collision_failures += 1;
            continue;
        }
        let Ok(cost) = chain_cost(nodes[u].pose, &chain, scene, spec) else {
            stats.collision_failures += 1;
            continue;
        };
        stats.inserted += 1;
        edges.push(HEdge {
            from: u,
            to: v,
            primitives: chain,
            cost,
            kind: EdgeKind::Bridge,
        });
    }

    let g = HGraph {
        nodes,
        edges,
        start: 0,
        goal: goal_node,
        embeddings,
    };
    debug_assert!(g.embeds_inputs());
    Ok((g, stats))
}

/// Cheapest start–goal edge sequence, with gear-change costs charged at
/// the junctions where they occur.
pub fn dijkstra(g: &HGraph, spec: &QualitySpec) -> Result<Vec<usize>, HybridizeError> {
    let gear: Vec<GearEdge> = g
        .edges
        .iter()
        .map(|e| GearEdge {
            from: e.from,
            to: e.to,
            first: e.primitives.first().map(|p| p.direction),
            last: e.primitives.last().map(|p| p.direction),
        })
        .collect();
    gear_shortest_path(g.nodes.len(), &gear, g.start, g.goal, spec, |e| {
        Some(g.edges[e].cost.total)
    })
    .map(|r| r.edges)
    .ok_or(HybridizeError::NoPath)
}

/// Concatenates the chains of `edges`, starting at the graph's start pose.
pub fn assemble(g: &HGraph, edges: &[usize]) -> CarPath {
    let mut path = CarPath::empty(g.nodes[g.start].pose);
    for &e in edges {
        path.primitives.extend_from_slice(&g.edges[e].primitives);
    }
    path
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_breakdown: Option<CostBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridRecord {
    pub cost_breakdown: CostBreakdown,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub wall_ms_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridizeReport {
    pub runs: Vec<RunRecord>,
    pub bridges: BridgeStats,
    pub hybrid: HybridRecord,
}

impl HybridizeReport {
    pub fn best_run_total(&self) -> Option<f64> {
        self.runs
            .iter()
            .filter_map(|r| r.cost_breakdown.as_ref().map(|c| c.total))
            .min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone)]
pub struct HybridOutcome {
    pub path: CarPath,
    pub report: HybridizeReport,
    /// Successful run paths, ordered by seed.
    pub inputs: Vec<CarPath>,
    pub graph: HGraph,
}

/// Runs `planner` for seeds `seed_base .. seed_base + k` in parallel and
/// hybridizes the successful paths.
#[allow(clippy::too_many_arguments)]
pub fn hybridize<P, E>(
    planner: P,
    scene: &Scene,
    start: &Pose,
    goal: &Pose,
    spec: &QualitySpec,
    cfg: &HybridizeConfig,
    cc: &ConnectConfig,
    sweep: &SweepCheckConfig,
) -> Result<HybridOutcome, HybridizeError>
where
    P: Fn(u64) -> Result<CarPath, E> + Sync,
    E: Display,
{
    cfg.validate()?;
    spec.validate()?;
    let clock = Instant::now();
    let results: Vec<(u64, Result<CarPath, String>, f64)> = (0..cfg.k as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed_base.wrapping_add(i);
            let t = Instant::now();
            let r = planner(seed).map_err(|e| e.to_string());
            (seed, r, t.elapsed().as_secs_f64() * 1e3)
        })
        .collect();

    let mut runs = Vec::with_capacity(results.len());
    let mut inputs = Vec::new();
    for (seed, result, wall_ms) in results {
        let record = match result {
            Ok(p) => match path_cost(&p, scene, spec) {
                Ok(c) => {
                    if same_pose(&p.start, start) {
                        inputs.push(p);
                    }
                    RunRecord {
                        seed,
                        cost_breakdown: Some(c),
                        error: None,
                        wall_ms,
                    }
                }
                Err(e) => RunRecord {
                    seed,
                    cost_breakdown: None,
                    error: Some(e.to_string()),
                    wall_ms,
                },
            },
            Err(e) => RunRecord {
                seed,
                cost_breakdown: None,
                error: Some(e),
                wall_ms,
            },
        };
        runs.push(record);
    }
    if inputs.is_empty() {
        return Err(HybridizeError::AllRunsFailed(cfg.k));
    }
    let (graph, bridges) = build_hgraph(&inputs, scene, spec, cc, cfg, sweep)?;
    if !same_pose(&graph.nodes[graph.goal].pose, goal) {
        return Err(HybridizeError::MismatchedEndpoints(0));
    }
    let route = dijkstra(&graph, spec)?;
    let path = assemble(&graph, &route);
    let cost = path_cost(&path, scene, spec)?;
    let report = HybridizeReport {
        runs,
        bridges,
        hybrid: HybridRecord {
            cost_breakdown: cost,
            graph_nodes: graph.nodes.len(),
            graph_edges: graph.edges.len(),
            wall_ms_total: clock.elapsed().as_secs_f64() * 1e3,
        },
    };
    Ok(HybridOutcome {
        path,
        report,
        inputs,
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Polygon};
    use crate::path::Direction;
    use crate::scene::{Bounds, CarModel};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn scene(obstacles: Vec<Polygon>) -> Scene {
        Scene::new(
            Bounds {
                xmin: -2.0,
                ymin: -6.0,
                xmax: 14.0,
                ymax: 6.0,
            },
            obstacles,
            CarModel {
                length: 0.6,
                width: 0.3,
                ref_offset: 0.0,
                min_turn_radius: 1.0,
            },
        )
        .unwrap()
    }

    /// Builds a forward path through `waypoints` by chaining local-planner links.
    fn through(poses: &[Pose]) -> CarPath {
        let cc = ConnectConfig {
            max_connect_length: crate::local_planner::MaxLength::Absolute(1e3),
            ..ConnectConfig::new(1.0)
        };
        let mut prims = Vec::new();
        for w in poses.windows(2) {
            prims.extend(connect_poses(&w[0], &w[1], &cc).unwrap());
        }
        CarPath::new(poses[0], prims)
    }

    fn upper() -> CarPath {
        through(&[
            Pose::new(0.0, 0.0, 0.0),
            Pose::new(3.0, 3.0, FRAC_PI_2),
            Pose::new(6.0, 4.0, 0.0),
            Pose::new(9.0, 3.0, -FRAC_PI_2),
            Pose::new(12.0, 0.0, 0.0),
        ])
    }

    fn lower() -> CarPath {
        through(&[
            Pose::new(0.0, 0.0, 0.0),
            Pose::new(3.0, -3.0, -FRAC_PI_2),
            Pose::new(6.0, -4.0, 0.0),
            Pose::new(9.0, -3.0, FRAC_PI_2),
            Pose::new(12.0, 0.0, 0.0),
        ])
    }

    fn block() -> Polygon {
        Polygon::new(vec![
            Point::new(5.0, -1.5),
            Point::new(7.0, -1.5),
            Point::new(7.0, 1.5),
            Point::new(5.0, 1.5),
        ])
        .unwrap()
    }

    fn defaults(s: &Scene) -> (QualitySpec, ConnectConfig, HybridizeConfig, SweepCheckConfig) {
        (
            QualitySpec::length_only(0.1),
            ConnectConfig::new(1.0),
            HybridizeConfig::for_scene(s),
            SweepCheckConfig::fast(&s.car),
        )
    }

    #[test]
    fn single_path_graph() {
        let s = scene(vec![block()]);
        let (spec, cc, cfg, sweep) = defaults(&s);
        let p = upper();
        let n = p.primitives.len();
        let (g, stats) = build_hgraph(std::slice::from_ref(&p), &s, &spec, &cc, &cfg, &sweep).unwrap();
        assert_eq!(g.nodes.len(), n + 1);
        assert_eq!(g.edges.len(), n);
        assert_eq!(stats, BridgeStats::default());
        assert!(g.embeds_inputs());
        let route = dijkstra(&g, &spec).unwrap();
        assert_eq!(assemble(&g, &route), p);
    }

    #[test]
    fn identical_paths_collapse() {
        let s = scene(vec![block()]);
        let (spec, cc, cfg, sweep) = defaults(&s);
        let one = build_hgraph(&[upper()], &s, &spec, &cc, &cfg, &sweep).unwrap().0;
        let two = build_hgraph(&[upper(), upper()], &s, &spec, &cc, &cfg, &sweep)
            .unwrap()
            .0;
        assert_eq!(one.nodes.len(), two.nodes.len());
        assert_eq!(one.edges, two.edges);
    }

    #[test]
    fn bridges_cross_between_sides() {
        let s = scene(vec![block()]);
        let (spec, cc, cfg, sweep) = defaults(&s);
        let (g, stats) = build_hgraph(&[upper(), lower()], &s, &spec, &cc, &cfg, &sweep).unwrap();
        assert!(stats.inserted >= 1);
        assert_eq!(stats.inserted, g.bridge_count());
        assert_eq!(
            stats.attempted,
            stats.inserted + stats.geometric_failures + stats.collision_failures
        );
        assert!(g.embeds_inputs());
        let dense = SweepCheckConfig {
            step: sweep.step / 100.0,
            margin: 0.0,
        };
        for e in g.edges.iter().filter(|e| e.kind == EdgeKind::Bridge) {
            assert!(!s.chain_in_collision(&e.primitives, &dense));
            let end = path_end_pose(&CarPath::new(g.nodes[e.from].pose, e.primitives.clone())).unwrap();
            assert!(end.approx_eq(&g.nodes[e.to].pose, 1e-9, 1e-9));
        }
    }

    #[test]
    fn mismatched_endpoints_rejected() {
        let s = scene(vec![]);
        let (spec, cc, cfg, sweep) = defaults(&s);
        let other = through(&[Pose::new(0.0, 0.0, 0.0), Pose::new(11.0, 0.0, 0.0)]);
        assert!(matches!(
            build_hgraph(&[upper(), other], &s, &spec, &cc, &cfg, &sweep),
            Err(HybridizeError::MismatchedEndpoints(1))
        ));
    }

    #[test]
    fn dominance_for_several_specs() {
        let s = scene(vec![block()]);
        let (_, cc, cfg, sweep) = defaults(&s);
        let inputs = [upper(), lower()];
        for w in [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 0.5, 0.2, 1.0],
            [0.0, 1.0, 0.0, 0.0],
        ] {
            let spec = QualitySpec::new(w, 0.1).unwrap();
            let (g, _) = build_hgraph(&inputs, &s, &spec, &cc, &cfg, &sweep).unwrap();
            let hybrid = path_cost(&assemble(&g, &dijkstra(&g, &spec).unwrap()), &s, &spec).unwrap();
            let best = inputs
                .iter()
                .map(|p| path_cost(p, &s, &spec).unwrap().total)
                .fold(f64::INFINITY, f64::min);
            assert!(hybrid.total <= best + 1e-9, "{w:?}: {} > {best}", hybrid.total);
        }
    }

    #[test]
    fn hybridize_identity_and_failures() {
        let s = scene(vec![block()]);
        let (spec, cc, cfg, sweep) = defaults(&s);
        let start = Pose::new(0.0, 0.0, 0.0);
        let goal = Pose::new(12.0, 0.0, 0.0);
        let one = HybridizeConfig { k: 1, ..cfg };
        let out = hybridize(
            |_| Ok::<_, String>(upper()),
            &s,
            &start,
            &goal,
            &spec,
            &one,
            &cc,
            &sweep,
        )
        .unwrap();
        assert_eq!(out.path, upper());
        assert_eq!(
            out.report.hybrid.cost_breakdown,
            path_cost(&upper(), &s, &spec).unwrap()
        );

        let err = hybridize(
            |_| Err::<CarPath, _>("NoPath"),
            &s,
            &start,
            &goal,
            &spec,
            &cfg,
            &cc,
            &sweep,
        )
        .unwrap_err();
        assert!(matches!(err, HybridizeError::AllRunsFailed(6)));

        // odd seeds fail, even seeds alternate sides
        let out = hybridize(
            |seed| match seed % 4 {
                0 => Ok(upper()),
                2 => Ok(lower()),
                _ => Err("NoPath"),
            },
            &s,
            &start,
            &goal,
            &spec,
            &cfg,
            &cc,
            &sweep,
        )
        .unwrap();
        assert_eq!(out.inputs.len(), 3);
        assert_eq!(out.report.runs.len(), 6);
        assert_eq!(out.report.runs.iter().filter(|r| r.error.is_some()).count(), 3);
        assert!(out.report.hybrid.cost_breakdown.total <= out.report.best_run_total().unwrap() + 1e-9);
        assert!(!s.chain_in_collision(&out.path.primitives, &sweep));
    }

    #[test]
    fn reverse_gear_inputs_keep_dominance() {
        let s = Scene::new(
            Bounds {
                xmin: -10.0,
                ymin: -6.0,
                xmax: 14.0,
                ymax: 8.0,
            },
            vec![],
            scene(vec![]).car,
        )
        .unwrap();
        let (_, _, cfg, sweep) = defaults(&s);
        let cc = ConnectConfig::new(1.0).with_reverse(true);
        let start = Pose::new(0.0, 0.0, 0.0);
        let reverse = CarPath::new(
            start,
            vec![MotionPrimitive::straight(start.position, PI, 6.0, Direction::Reverse)],
        );
        let shuffle = CarPath::new(
            start,
            vec![
                MotionPrimitive::straight(start.position, 0.0, 1.0, Direction::Forward),
                MotionPrimitive::straight(Point::new(1.0, 0.0), PI, 7.0, Direction::Reverse),
            ],
        );
        let around = through(&[
            start,
            Pose::new(3.0, 3.0, FRAC_PI_2),
            Pose::new(0.0, 6.0, PI),
            Pose::new(-8.0, 2.0, -FRAC_PI_2),
            Pose::new(-6.0, 0.0, 0.0),
        ]);
        let inputs = [around, shuffle, reverse];
        for w in [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 0.5, 0.0, 2.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.2, 1.0, 0.0, 5.0],
        ] {
            let spec = QualitySpec::new(w, 0.1).unwrap();
            let (g, _) = build_hgraph(&inputs, &s, &spec, &cc, &cfg, &sweep).unwrap();
            let route = dijkstra(&g, &spec).unwrap();
            let hybrid = path_cost(&assemble(&g, &route), &s, &spec).unwrap();
            let best = inputs
                .iter()
                .map(|p| path_cost(p, &s, &spec).unwrap().total)
                .fold(f64::INFINITY, f64::min);
            assert!(hybrid.total <= best + 1e-9, "{w:?}: {} > {best}", hybrid.total);
        }
    }
}
