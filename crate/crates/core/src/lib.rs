//! Car-like motion planning with C-PRM roadmaps, improved by hybridizing
//! several independently planned paths into one weighted graph.
//!
//! The pipeline:
//!
//! 1. [`control_roadmap`] samples a plain PRM over positions, ignoring the
//!    car's turning constraint.
//! 2. [`cprm`] turns every pair of adjacent control edges into a
//!    segment–arc–segment transition between edge midpoints and answers
//!    queries lazily, collision-checking only the edges on candidate paths.
//! 3. [`hybridizer`] runs the planner with `k` seeds, merges the resulting
//!    paths into an H-graph, adds bridges built by the [`local_planner`], and
//!    extracts the cheapest path under a [`quality::QualitySpec`].

pub mod control_roadmap;
pub mod cprm;
pub mod format;
pub mod geometry;
pub mod hybridizer;
pub mod local_planner;
pub mod path;
pub mod quality;
pub mod render;
pub mod scene;
pub mod search;
mod spatial;

pub use geometry::{Point, Pose};
pub use path::{CarPath, Direction, MotionPrimitive};
pub use scene::Scene;
