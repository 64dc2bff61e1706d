//! JSON documents exchanged between the planner, the hybridizer, the
//! renderer and the command line.
//!
//! Numbers are written in shortest round-trip form, so a document re-read
//! and re-written is byte-identical.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Arc, Point, Pose};
use crate::hybridizer::{EdgeKind, HGraph, HybridizeReport};
use crate::path::{path_end_pose, CarPath, Direction, MotionPrimitive, Trace};
use crate::quality::CostBreakdown;
use crate::scene::PoseRecord;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line} column {column}: field `{field}`: {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("primitive {index}: {message}")]
    Invalid { index: usize, message: String },
    #[error(transparent)]
    Path(#[from] crate::path::PathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PrimitiveRecord {
    Straight {
        direction: Direction,
        start: [f64; 2],
        #[serde(default)]
        end: Option<[f64; 2]>,
        /// Direction of travel in radians.
        heading: f64,
        length: f64,
    },
    Arc {
        direction: Direction,
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        sweep: f64,
        #[serde(default)]
        length: Option<f64>,
    },
}

impl From<&MotionPrimitive> for PrimitiveRecord {
    fn from(p: &MotionPrimitive) -> Self {
        match p.trace {
            Trace::Straight { start, heading, length } => {
                let end = p.end_point();
                PrimitiveRecord::Straight {
                    direction: p.direction,
                    start: [start.x, start.y],
                    end: Some([end.x, end.y]),
                    heading,
                    length,
                }
            }
            Trace::Arc(a) => PrimitiveRecord::Arc {
                direction: p.direction,
                center: [a.center.x, a.center.y],
                radius: a.radius,
                start_angle: a.start_angle,
                sweep: a.sweep,
                length: Some(a.length()),
            },
        }
    }
}

impl PrimitiveRecord {
    fn to_primitive(self, index: usize) -> Result<MotionPrimitive, FormatError> {
        let invalid = |message: &str| FormatError::Invalid {
            index,
            message: message.to_owned(),
        };
        match self {
            PrimitiveRecord::Straight {
                direction,
                start,
                heading,
                length,
                ..
            } => {
                if !(length > 0.0 && length.is_finite()) {
                    return Err(invalid("straight length must be positive"));
                }
                if !(heading.is_finite() && start.iter().all(|v| v.is_finite())) {
                    return Err(invalid("non-finite straight geometry"));
                }
                Ok(MotionPrimitive::straight(
                    Point::new(start[0], start[1]),
                    heading,
                    length,
                    direction,
                ))
            }
            PrimitiveRecord::Arc {
                direction,
                center,
                radius,
                start_angle,
                sweep,
                ..
            } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(invalid("arc radius must be positive"));
                }
                if !(start_angle.is_finite() && sweep.is_finite() && center.iter().all(|v| v.is_finite())) {
                    return Err(invalid("non-finite arc geometry"));
                }
                Ok(MotionPrimitive::arc(
                    Arc {
                        center: Point::new(center[0], center[1]),
                        radius,
                        start_angle,
                        sweep,
                    },
                    direction,
                ))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathFile {
    start: PoseRecord,
    primitives: Vec<PrimitiveRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost_breakdown: Option<CostBreakdown>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathDocument {
    pub path: CarPath,
    pub cost: Option<CostBreakdown>,
}

/// serde_json's message without its trailing ` at line L column C`.
pub(crate) fn bare_message(e: &serde_json::Error) -> String {
    let full = e.to_string();
    let suffix = format!(" at line {} column {}", e.line(), e.column());
    full.strip_suffix(&suffix).map_or(full.clone(), str::to_owned)
}

fn parse_error(e: serde_path_to_error::Error<serde_json::Error>) -> FormatError {
    let field = e.path().to_string();
    let inner = e.into_inner();
    FormatError::Parse {
        line: inner.line(),
        column: inner.column(),
        field,
        message: bare_message(&inner),
    }
}

pub(crate) fn from_json_with_path<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, FormatError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(parse_error)
}

pub fn path_to_json(path: &CarPath, cost: Option<&CostBreakdown>) -> String {
    let file = PathFile {
        start: path.start.into(),
        primitives: path.primitives.iter().map(PrimitiveRecord::from).collect(),
        cost_breakdown: cost.copied(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("path serializes");
    s.push('\n');
    s
}

/// Parses a path document and checks that its primitives join up.
pub fn path_from_json(text: &str) -> Result<PathDocument, FormatError> {
    let file: PathFile = from_json_with_path(text)?;
    let start: Pose = file.start.into();
    if !start.is_finite() {
        return Err(FormatError::Invalid {
            index: 0,
            message: "non-finite start pose".into(),
        });
    }
    let primitives = file
        .primitives
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.to_primitive(i))
        .collect::<Result<Vec<_>, _>>()?;
    let path = CarPath::new(start, primitives);
    path_end_pose(&path)?;
    Ok(PathDocument {
        path,
        cost: file.cost_breakdown,
    })
}

pub fn report_to_json(report: &HybridizeReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct NodeDump {
    id: usize,
    pose: PoseRecord,
    origins: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct EdgeDump {
    from: usize,
    to: usize,
    kind: EdgeKind,
    cost: CostBreakdown,
    primitives: Vec<PrimitiveRecord>,
}

#[derive(Serialize)]
struct GraphDump {
    start: usize,
    goal: usize,
    nodes: Vec<NodeDump>,
    edges: Vec<EdgeDump>,
}

/// Debug dump of an H-graph's nodes and edges.
pub fn hgraph_to_json(g: &HGraph) -> String {
    let dump = GraphDump {
        start: g.start,
        goal: g.goal,
        nodes: g
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| NodeDump {
                id,
                pose: n.pose.into(),
                origins: n.origins.clone(),
            })
            .collect(),
        edges: g
            .edges
            .iter()
            .map(|e| EdgeDump {
                from: e.from,
                to: e.to,
                kind: e.kind,
                cost: e.cost,
                primitives: e.primitives.iter().map(PrimitiveRecord::from).collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&dump).expect("graph serializes");
    s.push('\n');
    s
}
