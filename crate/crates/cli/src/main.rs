mod args;
mod bench;
mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use carplan::cprm::{plan, PlanError};
use carplan::format::{hgraph_to_json, path_from_json, path_to_json, report_to_json};
use carplan::hybridizer::{hybridize, HybridizeConfig, HybridizeError};
use carplan::quality::{path_cost, CostBreakdown, QualitySpec, CLEARANCE_SKIPPED};
use carplan::render::{render_svg, PathStyle};
use carplan::scene::{PoseRecord, Scene};
use carplan::{CarPath, Pose};
use clap::Parser;
use serde_json::json;

use args::{BenchArgs, Cli, Command, CostArgs, HybridizeArgs, PlanArgs, PlannerArgs, RenderArgs, Resolved};
use manifest::Outputs;

enum Failure {
    /// Bad arguments or unreadable input: exit 1.
    Input(String),
    /// The planner ran but found nothing: exit 2.
    Planner(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        match self {
            Failure::Input(m) => {
                eprintln!("error: {m}");
                ExitCode::from(1)
            }
            Failure::Planner(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
        }
    }
}

type Outcome = Result<(), Failure>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn load_scene(path: &Path) -> Result<Scene, Failure> {
    Scene::load(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_path(path: &Path) -> Result<CarPath, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    path_from_json(&text)
        .map(|d| d.path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn resolve(args: &PlannerArgs) -> Result<Resolved, Failure> {
    let scene = load_scene(&args.scene)?;
    let r = args.resolve(scene).map_err(Failure::Input)?;
    if r.scene.pose_in_collision(&r.start, 0.0) {
        return Err(Failure::Input("start pose is in collision".into()));
    }
    if r.scene.pose_in_collision(&r.goal, 0.0) {
        return Err(Failure::Input("goal pose is in collision".into()));
    }
    Ok(r)
}

fn plan_failure(e: PlanError) -> Failure {
    match e {
        PlanError::NoPath => Failure::Planner(format!("NoPath: {e}")),
        PlanError::Unreachable(_) => Failure::Planner(format!("Unreachable: {e}")),
        PlanError::Roadmap(_) => Failure::Planner(format!("RoadmapFailed: {e}")),
        PlanError::StartInCollision | PlanError::GoalInCollision => Failure::Input(e.to_string()),
        PlanError::Quality(_) => Failure::Planner(e.to_string()),
    }
}

fn config_snapshot(r: &Resolved, scene_path: &Path, extra: serde_json::Value) -> serde_json::Value {
    json!({
        "scene": scene_path.display().to_string(),
        "start": PoseRecord::from(r.start),
        "goal": PoseRecord::from(r.goal),
        "planner": r.planner,
        "quality": r.spec,
        "run": extra,
    })
}

fn print_cost(label: &str, c: &CostBreakdown) {
    println!("{label}");
    println!("  length       {:.6}", c.length);
    println!("  smoothness   {:.6}", c.smoothness);
    if c.clearance_cost == CLEARANCE_SKIPPED {
        println!("  clearance    skipped");
    } else {
        println!("  clearance    {:.6} (min {:.6})", c.clearance_cost, c.min_clearance);
    }
    println!("  reversals    {}", c.reversal_count);
    println!("  total        {:.6}", c.total);
}

fn cmd_plan(a: &PlanArgs) -> Outcome {
    let clock = Instant::now();
    let r = resolve(&a.planner)?;
    let out = plan(&r.scene, &r.planner, &r.start, &r.goal, &r.spec, a.seed).map_err(plan_failure)?;
    let path = &out.result.path;
    print_cost("cost", &out.result.cost);
    let s = out.result.stats;
    println!(
        "query: {} edges checked, {} discarded, {} replans",
        s.edges_checked, s.edges_discarded, s.replans
    );

    let mut files = Outputs::new();
    files.add(a.out.as_ref(), path_to_json(path, Some(&out.result.cost)));
    if a.svg.is_some() {
        let rendered = render_svg(
            &r.scene,
            &[(path, PathStyle::Emphasized)],
            Some(&r.start),
            Some(&r.goal),
        );
        for w in &rendered.warnings {
            eprintln!("warning: {w}");
        }
        files.add(a.svg.as_ref(), rendered.svg);
    }
    let timings = BTreeMap::from([
        ("build".to_owned(), out.build_ms),
        ("query".to_owned(), out.query_ms),
        ("total".to_owned(), ms(clock)),
    ]);
    let config = config_snapshot(&r, &a.planner.scene, json!({ "seed": a.seed }));
    files
        .commit(config, &[a.planner.scene.as_path()], timings)
        .map_err(Failure::Input)?;
    Ok(())
}

fn cmd_hybridize(a: &HybridizeArgs) -> Outcome {
    let clock = Instant::now();
    let r = resolve(&a.planner)?;
    let mut hcfg = HybridizeConfig {
        k: a.k,
        bridge_fanout: a.bridge_fanout,
        seed_base: a.seed,
        ..HybridizeConfig::for_scene(&r.scene)
    };
    if let Some(radius) = a.bridge_radius {
        hcfg.bridge_radius = radius;
    }
    hcfg.validate().map_err(input)?;
    let planner = |seed| plan(&r.scene, &r.planner, &r.start, &r.goal, &r.spec, seed).map(|o| o.result.path);
    let out = hybridize(
        planner,
        &r.scene,
        &r.start,
        &r.goal,
        &r.spec,
        &hcfg,
        &r.planner.connect,
        &r.planner.sweep,
    )
    .map_err(|e| match e {
        HybridizeError::AllRunsFailed(_) => Failure::Planner(format!("AllRunsFailed: {e}")),
        HybridizeError::InvalidConfig(_) => Failure::Input(e.to_string()),
        other => Failure::Planner(other.to_string()),
    })?;

    println!("{:<8} {:>20} {:>12} {:>10}", "run", "seed", "total", "wall_ms");
    for run in &out.report.runs {
        match (&run.cost_breakdown, &run.error) {
            (Some(c), _) => println!("{:<8} {:>20} {:>12.6} {:>10.1}", "", run.seed, c.total, run.wall_ms),
            (None, Some(e)) => println!("{:<8} {:>20} {:>12} {:>10.1}  {e}", "", run.seed, "failed", run.wall_ms),
            (None, None) => unreachable!("a run has either a cost or an error"),
        }
    }
    let h = &out.report.hybrid;
    println!(
        "{:<8} {:>20} {:>12.6} {:>10.1}",
        "hybrid", "", h.cost_breakdown.total, h.wall_ms_total
    );
    let b = out.report.bridges;
    println!(
        "bridges: {} attempted, {} inserted, {} geometric failures, {} collision failures",
        b.attempted, b.inserted, b.geometric_failures, b.collision_failures
    );

    let mut files = Outputs::new();
    files.add(a.out.as_ref(), path_to_json(&out.path, Some(&h.cost_breakdown)));
    files.add(a.report.as_ref(), report_to_json(&out.report));
    files.add(a.graph_dump.as_ref(), hgraph_to_json(&out.graph));
    if a.svg.is_some() {
        let mut layers: Vec<(&CarPath, PathStyle)> = out
            .inputs
            .iter()
            .enumerate()
            .map(|(i, p)| (p, PathStyle::Input(i)))
            .collect();
        layers.push((&out.path, PathStyle::Emphasized));
        let rendered = render_svg(&r.scene, &layers, Some(&r.start), Some(&r.goal));
        for w in &rendered.warnings {
            eprintln!("warning: {w}");
        }
        files.add(a.svg.as_ref(), rendered.svg);
    }
    let timings = BTreeMap::from([
        ("hybridize".to_owned(), h.wall_ms_total),
        ("total".to_owned(), ms(clock)),
    ]);
    let config = config_snapshot(
        &r,
        &a.planner.scene,
        json!({ "hybridize": hcfg, "seeds": (0..hcfg.k as u64).map(|i| hcfg.seed_base.wrapping_add(i)).collect::<Vec<_>>() }),
    );
    files
        .commit(config, &[a.planner.scene.as_path()], timings)
        .map_err(Failure::Input)?;
    Ok(())
}

fn cmd_cost(a: &CostArgs) -> Outcome {
    let scene = load_scene(&a.scene)?;
    let path = load_path(&a.path)?;
    let step = a.clearance_step.unwrap_or(0.1 * scene.car.min_turn_radius);
    let spec = QualitySpec::new(a.weights, step).map_err(input)?;
    let cost = path_cost(&path, &scene, &spec).map_err(input)?;
    print_cost(&a.path.display().to_string(), &cost);
    Ok(())
}

fn cmd_render(a: &RenderArgs) -> Outcome {
    let clock = Instant::now();
    let scene = load_scene(&a.scene)?;
    let inputs = a.paths.iter().map(|p| load_path(p)).collect::<Result<Vec<_>, _>>()?;
    let emphasized = a.emphasize.as_deref().map(load_path).transpose()?;
    let mut layers: Vec<(&CarPath, PathStyle)> = inputs
        .iter()
        .enumerate()
        .map(|(i, p)| (p, PathStyle::Input(i)))
        .collect();
    if let Some(p) = &emphasized {
        layers.push((p, PathStyle::Emphasized));
    }
    let reference = emphasized.as_ref().or(inputs.first());
    let (start, goal): (Option<Pose>, Option<Pose>) = match reference {
        Some(p) => (Some(p.start), p.end_pose().ok()),
        None => (scene.start, scene.goal),
    };
    let rendered = render_svg(&scene, &layers, start.as_ref(), goal.as_ref());
    for w in &rendered.warnings {
        eprintln!("warning: {w}");
    }
    let mut files = Outputs::new();
    files.add(Some(&a.svg), rendered.svg);
    let mut read: Vec<&Path> = vec![a.scene.as_path()];
    read.extend(a.paths.iter().map(|p| p.as_path()));
    read.extend(a.emphasize.as_deref());
    let config = json!({
        "scene": a.scene.display().to_string(),
        "paths": a.paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "emphasize": a.emphasize.as_ref().map(|p| p.display().to_string()),
    });
    files
        .commit(config, &read, BTreeMap::from([("total".to_owned(), ms(clock))]))
        .map_err(Failure::Input)?;
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Outcome {
    let clock = Instant::now();
    let files = bench::scene_files(&a.scene_dir).map_err(Failure::Input)?;
    if a.reps == 0 || a.k == 0 || a.samples < 2 {
        return Err(Failure::Input(
            "--reps and --k must be at least 1 and --samples at least 2".into(),
        ));
    }
    // the clearance step only matters when clearance is weighted
    let spec = QualitySpec::new(a.weights, 0.1).map_err(input)?;
    let report = bench::run(a, &files, &spec).map_err(Failure::Input)?;
    print!("{}", bench::table(&report));
    let mut outputs = Outputs::new();
    let mut rows = serde_json::to_string_pretty(&report).expect("bench report serializes");
    rows.push('\n');
    if a.out.is_none() {
        println!("{rows}");
    }
    outputs.add(a.out.as_ref(), rows);
    let read: Vec<&Path> = files.iter().map(|p| p.as_path()).collect();
    let config = json!({
        "scene_dir": a.scene_dir.display().to_string(),
        "reps": a.reps,
        "samples": a.samples,
        "k": a.k,
        "quality": spec,
    });
    outputs
        .commit(config, &read, BTreeMap::from([("total".to_owned(), ms(clock))]))
        .map_err(Failure::Input)?;
    if report.rows.iter().all(|r| r.error.is_some()) {
        return Err(Failure::Planner("every benchmark run failed".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Hybridize(a) => cmd_hybridize(a),
        Command::Cost(a) => cmd_cost(a),
        Command::Render(a) => cmd_render(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
