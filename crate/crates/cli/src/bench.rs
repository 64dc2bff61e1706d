use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use carplan::cprm::{plan, PlannerConfig};
use carplan::hybridizer::{hybridize, HybridizeConfig};
use carplan::quality::QualitySpec;
use carplan::scene::Scene;
use serde::Serialize;

use crate::args::BenchArgs;

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub scene: String,
    pub rep: usize,
    pub seed_base: u64,
    pub build_ms: Option<f64>,
    pub query_ms: Option<f64>,
    pub hybridize_ms: Option<f64>,
    pub best_run_total: Option<f64>,
    pub hybrid_total: Option<f64>,
    /// Relative change of the hybrid total over the best run, in percent.
    pub improvement_pct: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SceneSummary {
    pub scene: String,
    pub runs: usize,
    pub failures: usize,
    pub build_ms_mean: f64,
    pub build_ms_p95: f64,
    pub query_ms_mean: f64,
    pub query_ms_p95: f64,
    pub hybridize_ms_mean: f64,
    pub hybridize_ms_p95: f64,
    pub improvement_pct_mean: f64,
    pub improvement_pct_max: f64,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<SceneSummary>,
}

pub fn scene_files(dir: &Path) -> Result<Vec<PathBuf>, String> {
    let entries = fs::read_dir(dir).map_err(|e| format!("cannot read {}: {e}", dir.display()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!("no scene files in {}", dir.display()));
    }
    Ok(files)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Nearest-rank 95th percentile.
fn p95(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = (0.95 * s.len() as f64).ceil() as usize;
    s[rank.clamp(1, s.len()) - 1]
}

fn bench_scene(name: &str, scene: &Scene, args: &BenchArgs, spec: &QualitySpec) -> Vec<BenchRow> {
    let (Some(start), Some(goal)) = (scene.start, scene.goal) else {
        return vec![BenchRow {
            scene: name.to_owned(),
            rep: 0,
            seed_base: 0,
            build_ms: None,
            query_ms: None,
            hybridize_ms: None,
            best_run_total: None,
            hybrid_total: None,
            improvement_pct: None,
            error: Some("scene stores no start and goal".into()),
        }];
    };
    let mut cfg = PlannerConfig::for_scene(scene);
    cfg.prm.num_samples = args.samples;
    let hcfg = HybridizeConfig {
        k: args.k,
        ..HybridizeConfig::for_scene(scene)
    };
    (0..args.reps)
        .map(|rep| {
            let seed_base = (rep * args.k) as u64;
            let mut row = BenchRow {
                scene: name.to_owned(),
                rep,
                seed_base,
                build_ms: None,
                query_ms: None,
                hybridize_ms: None,
                best_run_total: None,
                hybrid_total: None,
                improvement_pct: None,
                error: None,
            };
            match plan(scene, &cfg, &start, &goal, spec, seed_base) {
                Ok(o) => {
                    row.build_ms = Some(o.build_ms);
                    row.query_ms = Some(o.query_ms);
                }
                Err(e) => row.error = Some(format!("plan: {e}")),
            }
            let clock = Instant::now();
            let h = hybridize(
                |seed| plan(scene, &cfg, &start, &goal, spec, seed).map(|o| o.result.path),
                scene,
                &start,
                &goal,
                spec,
                &HybridizeConfig { seed_base, ..hcfg },
                &cfg.connect,
                &cfg.sweep,
            );
            match h {
                Ok(out) => {
                    row.hybridize_ms = Some(clock.elapsed().as_secs_f64() * 1e3);
                    let best = out.report.best_run_total().expect("a run succeeded");
                    let hybrid = out.report.hybrid.cost_breakdown.total;
                    row.best_run_total = Some(best);
                    row.hybrid_total = Some(hybrid);
                    row.improvement_pct = Some(100.0 * (hybrid - best) / best);
                }
                Err(e) => {
                    let msg = format!("hybridize: {e}");
                    row.error = Some(match row.error.take() {
                        Some(prev) => format!("{prev}; {msg}"),
                        None => msg,
                    });
                }
            }
            row
        })
        .collect()
}

fn summarize(scene: &str, rows: &[BenchRow]) -> SceneSummary {
    let col = |f: fn(&BenchRow) -> Option<f64>| rows.iter().filter_map(f).collect::<Vec<_>>();
    let (build, query, hyb, imp) = (
        col(|r| r.build_ms),
        col(|r| r.query_ms),
        col(|r| r.hybridize_ms),
        col(|r| r.improvement_pct),
    );
    SceneSummary {
        scene: scene.to_owned(),
        runs: rows.len(),
        failures: rows.iter().filter(|r| r.error.is_some()).count(),
        build_ms_mean: mean(&build),
        build_ms_p95: p95(&build),
        query_ms_mean: mean(&query),
        query_ms_p95: p95(&query),
        hybridize_ms_mean: mean(&hyb),
        hybridize_ms_p95: p95(&hyb),
        improvement_pct_mean: mean(&imp),
        improvement_pct_max: imp.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn run(args: &BenchArgs, files: &[PathBuf], spec: &QualitySpec) -> Result<BenchReport, String> {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for file in files {
        let scene = Scene::load(file).map_err(|e| format!("{}: {e}", file.display()))?;
        let name = file
            .file_stem()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        let scene_rows = bench_scene(&name, &scene, args, spec);
        summary.push(summarize(&name, &scene_rows));
        rows.extend(scene_rows);
    }
    Ok(BenchReport { rows, summary })
}

pub fn table(report: &BenchReport) -> String {
    let mut s = format!(
        "{:<16} {:>4} {:>5} {:>10} {:>10} {:>10} {:>10} {:>12} {:>12} {:>10} {:>10}\n",
        "scene",
        "runs",
        "fail",
        "build_ms",
        "build_p95",
        "query_ms",
        "query_p95",
        "hybrid_ms",
        "hybrid_p95",
        "impr_%",
        "impr_max"
    );
    for r in &report.summary {
        s.push_str(&format!(
            "{:<16} {:>4} {:>5} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>12.2} {:>12.2} {:>10.3} {:>10.3}\n",
            r.scene,
            r.runs,
            r.failures,
            r.build_ms_mean,
            r.build_ms_p95,
            r.query_ms_mean,
            r.query_ms_p95,
            r.hybridize_ms_mean,
            r.hybridize_ms_p95,
            r.improvement_pct_mean,
            r.improvement_pct_max,
        ));
    }
    s
}
