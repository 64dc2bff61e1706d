//! The control roadmap: a plain PRM over positions that ignores the car's
//! turning constraint and performs no edge collision checks.

use std::collections::BTreeSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::scene::Scene;
use crate::spatial::GridIndex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoadmapError {
    #[error("rejection sampling gave up after {0} attempts")]
    SamplingExhausted(usize),
    #[error("invalid roadmap configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("edge ({0}, {1}) is invalid")]
    InvalidEdge(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrmConfig {
    pub num_samples: usize,
    pub num_neighbors: usize,
    pub seed: u64,
    /// Reject samples that land inside an obstacle.
    pub presample_rejection: bool,
}

impl Default for PrmConfig {
    fn default() -> Self {
        Self {
            num_samples: 500,
            num_neighbors: 8,
            seed: 0,
            presample_rejection: true,
        }
    }
}

impl PrmConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn validate(&self) -> Result<(), RoadmapError> {
        if self.num_samples < 2 {
            return Err(RoadmapError::InvalidConfig("num_samples must be at least 2"));
        }
        if self.num_neighbors < 1 {
            return Err(RoadmapError::InvalidConfig("num_neighbors must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlRoadmap {
    pub nodes: Vec<Point>,
    /// Undirected edges as `(a, b)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Sorted neighbour lists.
    pub adjacency: Vec<Vec<usize>>,
}

impl ControlRoadmap {
    /// Builds a roadmap from explicit nodes and undirected edges.
    pub fn from_parts(nodes: Vec<Point>, edges: &[(usize, usize)]) -> Result<Self, RoadmapError> {
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b || a >= nodes.len() || b >= nodes.len() {
                return Err(RoadmapError::InvalidEdge(a, b));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self::assemble(nodes, set))
    }

    fn assemble(nodes: Vec<Point>, set: BTreeSet<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            nodes,
            edges: set.into_iter().collect(),
            adjacency,
        }
    }

    /// Index of the undirected edge `{a, b}`, if present.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&(a.min(b), a.max(b))).ok()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }
}

/// Samples `cfg.num_samples` points and joins each to its `cfg.num_neighbors`
/// nearest neighbours; the edge set is the symmetric union.
pub fn build_control_roadmap(scene: &Scene, cfg: &PrmConfig) -> Result<ControlRoadmap, RoadmapError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let b = scene.bounds;
    let max_rejections = 1000 * cfg.num_samples;
    let mut rejections = 0;
    let mut nodes = Vec::with_capacity(cfg.num_samples);
    while nodes.len() < cfg.num_samples {
        let p = Point::new(rng.random_range(b.xmin..b.xmax), rng.random_range(b.ymin..b.ymax));
        if cfg.presample_rejection && scene.obstacles.iter().any(|o| o.strictly_contains(p)) {
            rejections += 1;
            if rejections >= max_rejections {
                return Err(RoadmapError::SamplingExhausted(rejections));
            }
            continue;
        }
        nodes.push(p);
    }

    let index = GridIndex::new(&nodes);
    let mut set = BTreeSet::new();
    for (i, &p) in nodes.iter().enumerate() {
        let near = index.nearest(p, cfg.num_neighbors + 1);
        for j in near.into_iter().filter(|&j| j != i).take(cfg.num_neighbors) {
            // coincident samples would make zero-length edges
            if nodes[j] != p {
                set.insert((i.min(j), i.max(j)));
            }
        }
    }
    Ok(ControlRoadmap::assemble(nodes, set))
}

/// The `min(m, |nodes|)` nearest nodes to `p`, ascending, ties by lower index.
pub fn nearest_nodes(rm: &ControlRoadmap, p: Point, m: usize) -> Vec<usize> {
    GridIndex::new(&rm.nodes).nearest(p, m)
}
