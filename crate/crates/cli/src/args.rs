use std::path::PathBuf;

use carplan::cprm::{PlannerConfig, RadiusMode};
use carplan::local_planner::{ConnectConfig, MaxLength};
use carplan::quality::QualitySpec;
use carplan::scene::{Scene, SweepCheckConfig};
use carplan::Pose;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "carplan",
    version,
    about = "Car-like motion planning with C-PRM and path hybridization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan one path with a single C-PRM run.
    Plan(PlanArgs),
    /// Plan k paths with consecutive seeds and hybridize them.
    Hybridize(HybridizeArgs),
    /// Print the cost breakdown of a stored path.
    Cost(CostArgs),
    /// Draw a scene and stored paths as SVG.
    Render(RenderArgs),
    /// Time plan and hybridize over a directory of scenes.
    Bench(BenchArgs),
}

pub fn parse_pose(s: &str) -> Result<Pose, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, y, deg] = parts.as_slice() else {
        return Err(format!("expected x,y,theta_deg but got `{s}`"));
    };
    let num = |v: &str| v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    let (x, y, deg) = (num(x)?, num(y)?, num(deg)?);
    if !(x.is_finite() && y.is_finite() && deg.is_finite()) {
        return Err(format!("non-finite pose `{s}`"));
    }
    Ok(Pose::new(x, y, deg.to_radians()))
}

pub fn parse_weights(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected wl,ws,wc,wr but got `{s}`"));
    }
    let mut w = [0.0; 4];
    for (slot, part) in w.iter_mut().zip(&parts) {
        *slot = part.parse::<f64>().map_err(|e| format!("`{part}`: {e}"))?;
        if !(*slot >= 0.0 && slot.is_finite()) {
            return Err(format!("weight `{part}` must be a finite non-negative number"));
        }
    }
    if w.iter().all(|&v| v == 0.0) {
        return Err("at least one weight must be positive".into());
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RadiusModeArg {
    FixedMin,
    MaxFit,
}

impl From<RadiusModeArg> for RadiusMode {
    fn from(m: RadiusModeArg) -> Self {
        match m {
            RadiusModeArg::FixedMin => RadiusMode::FixedMin,
            RadiusModeArg::MaxFit => RadiusMode::MaxFit,
        }
    }
}

/// Options shared by every command that runs the planner.
#[derive(Debug, Clone, Args)]
pub struct PlannerArgs {
    #[arg(long, env = "CARPLAN_SCENE")]
    pub scene: PathBuf,
    /// Start pose `x,y,theta_deg`; defaults to the scene's stored start.
    #[arg(long, env = "CARPLAN_START", value_parser = parse_pose, allow_hyphen_values = true)]
    pub start: Option<Pose>,
    /// Goal pose `x,y,theta_deg`; defaults to the scene's stored goal.
    #[arg(long, env = "CARPLAN_GOAL", value_parser = parse_pose, allow_hyphen_values = true)]
    pub goal: Option<Pose>,
    #[arg(long, env = "CARPLAN_SAMPLES", default_value_t = 500)]
    pub samples: usize,
    #[arg(long, env = "CARPLAN_NEIGHBORS", default_value_t = 8)]
    pub neighbors: usize,
    /// Quality weights `length,smoothness,clearance,reversals`.
    #[arg(long, env = "CARPLAN_WEIGHTS", value_parser = parse_weights, default_value = "1,0,0,0")]
    pub weights: [f64; 4],
    #[arg(long, env = "CARPLAN_RADIUS_MODE", value_enum, default_value = "fixed-min")]
    pub radius_mode: RadiusModeArg,
    #[arg(long, env = "CARPLAN_ALLOW_REVERSE")]
    pub allow_reverse: bool,
    /// Inflate obstacles so the swept collision check cannot miss contacts.
    #[arg(long, env = "CARPLAN_CONSERVATIVE")]
    pub conservative: bool,
    #[arg(long, env = "CARPLAN_ATTACH_FANOUT", default_value_t = 10)]
    pub attach_fanout: usize,
    #[arg(long, env = "CARPLAN_ATTACH_SCAN", default_value_t = 2000)]
    pub attach_scan: usize,
    /// Local-planner length limit as a multiple of the endpoint distance.
    #[arg(long, env = "CARPLAN_MAX_CONNECT_FACTOR", default_value_t = 4.0)]
    pub max_connect_factor: f64,
    /// Arc-length step of clearance sampling; defaults to a tenth of the turning radius.
    #[arg(long, env = "CARPLAN_CLEARANCE_STEP")]
    pub clearance_step: Option<f64>,
}

/// Everything the planner needs, resolved against the scene.
pub struct Resolved {
    pub scene: Scene,
    pub start: Pose,
    pub goal: Pose,
    pub planner: PlannerConfig,
    pub spec: QualitySpec,
}

impl PlannerArgs {
    pub fn resolve(&self, scene: Scene) -> Result<Resolved, String> {
        let start = self
            .start
            .or(scene.start)
            .ok_or("no --start given and the scene stores none")?;
        let goal = self
            .goal
            .or(scene.goal)
            .ok_or("no --goal given and the scene stores none")?;
        if self.samples < 2 || self.neighbors < 1 || self.attach_fanout < 1 {
            return Err("--samples must be at least 2, --neighbors and --attach-fanout at least 1".into());
        }
        if !(self.max_connect_factor > 0.0 && self.max_connect_factor.is_finite()) {
            return Err("--max-connect-factor must be positive".into());
        }
        let r = scene.car.min_turn_radius;
        let step = self.clearance_step.unwrap_or(0.1 * r);
        let spec = QualitySpec::new(self.weights, step).map_err(|e| e.to_string())?;
        let mut planner = PlannerConfig::for_scene(&scene);
        planner.prm.num_samples = self.samples;
        planner.prm.num_neighbors = self.neighbors;
        planner.radius_mode = self.radius_mode.into();
        planner.connect = ConnectConfig {
            min_turn_radius: r,
            allow_reverse: self.allow_reverse,
            max_connect_length: MaxLength::RelativeToDistance(self.max_connect_factor),
        };
        planner.attach_fanout = self.attach_fanout;
        planner.attach_scan = self.attach_scan;
        if self.conservative {
            planner.sweep = SweepCheckConfig::conservative(&scene.car);
        }
        Ok(Resolved {
            scene,
            start,
            goal,
            planner,
            spec,
        })
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub planner: PlannerArgs,
    #[arg(long, env = "CARPLAN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Path JSON output.
    #[arg(long, env = "CARPLAN_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "CARPLAN_SVG")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HybridizeArgs {
    #[command(flatten)]
    pub planner: PlannerArgs,
    /// First of the k consecutive seeds.
    #[arg(long, env = "CARPLAN_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "CARPLAN_K", default_value_t = 6)]
    pub k: usize,
    #[arg(long, env = "CARPLAN_BRIDGE_FANOUT", default_value_t = 5)]
    pub bridge_fanout: usize,
    /// Defaults to a quarter of the scene diagonal.
    #[arg(long, env = "CARPLAN_BRIDGE_RADIUS")]
    pub bridge_radius: Option<f64>,
    #[arg(long, env = "CARPLAN_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "CARPLAN_SVG")]
    pub svg: Option<PathBuf>,
    /// Hybridization report JSON output.
    #[arg(long, env = "CARPLAN_REPORT")]
    pub report: Option<PathBuf>,
    /// H-graph debug dump JSON output.
    #[arg(long, env = "CARPLAN_GRAPH_DUMP")]
    pub graph_dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[arg(long, env = "CARPLAN_SCENE")]
    pub scene: PathBuf,
    /// Path JSON to evaluate.
    #[arg(long)]
    pub path: PathBuf,
    #[arg(long, env = "CARPLAN_WEIGHTS", value_parser = parse_weights, default_value = "1,0,0,0")]
    pub weights: [f64; 4],
    #[arg(long, env = "CARPLAN_CLEARANCE_STEP")]
    pub clearance_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long, env = "CARPLAN_SCENE")]
    pub scene: PathBuf,
    /// Path JSON files drawn as thin inputs.
    #[arg(long = "path")]
    pub paths: Vec<PathBuf>,
    /// Path JSON drawn with the emphasized stroke.
    #[arg(long)]
    pub emphasize: Option<PathBuf>,
    #[arg(long, env = "CARPLAN_SVG")]
    pub svg: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of scene JSON files, each with a stored start and goal.
    #[arg(long, env = "CARPLAN_SCENE_DIR")]
    pub scene_dir: PathBuf,
    #[arg(long, env = "CARPLAN_REPS", default_value_t = 5)]
    pub reps: usize,
    #[arg(long, env = "CARPLAN_SAMPLES", default_value_t = 500)]
    pub samples: usize,
    #[arg(long, env = "CARPLAN_K", default_value_t = 6)]
    pub k: usize,
    #[arg(long, env = "CARPLAN_WEIGHTS", value_parser = parse_weights, default_value = "1,0,0,0")]
    pub weights: [f64; 4],
    /// Machine-readable rows (JSON) output.
    #[arg(long, env = "CARPLAN_OUT")]
    pub out: Option<PathBuf>,
}
