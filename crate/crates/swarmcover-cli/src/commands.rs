//! Subcommand implementations. Each returns `Result<(), CliError>`; the
//! binary maps errors to exit codes (validation 2, I/O 3).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swarmcover::sim::{self, SimError};
use swarmcover::{CbfParams, Metrics, Scenario, TrajectoryLog};

use crate::csvio;
use crate::error::CliError;
use crate::scenario_file::{FilterChoice, ScenarioFile};
use crate::svg::{self, PlotScene};

/// Command-line values that overrode the scenario file, recorded verbatim
/// in the metrics provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CliOverrides {
    pub filter: Option<FilterChoice>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
}

/// The resolved scenario (overrides already applied) travels with the
/// metrics so a run directory is re-executable on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: ScenarioFile,
    pub cli_overrides: CliOverrides,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub wasserstein_coverage: f64,
    pub min_inter_agent_distance: Option<f64>,
    pub obstacle_violations: usize,
    pub minimal_violation_steps: usize,
    pub total_weight_remaining: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareDoc {
    pub wasserstein_cbf: f64,
    pub wasserstein_apf: f64,
    pub min_dist_cbf: Option<f64>,
    pub min_dist_apf: Option<f64>,
}

fn map_sim_err(e: SimError) -> CliError {
    match e {
        SimError::ScenarioInvalid { reason } => CliError::ScenarioInvalid(reason),
        other => CliError::ScenarioInvalid(other.to_string()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable document");
    text.push('\n');
    write_text(path, &text)
}

fn tracks_of(log: &TrajectoryLog) -> Vec<Vec<(f64, f64)>> {
    log.agents
        .iter()
        .map(|rows| rows.iter().map(|r| (r.position.x, r.position.y)).collect())
        .collect()
}

fn scene_of(doc: &ScenarioFile, tracks: Vec<Vec<(f64, f64)>>, label: &str) -> Result<PlotScene, CliError> {
    Ok(PlotScene {
        obstacles: doc.build_obstacles()?,
        sample_points: doc
            .field
            .points
            .iter()
            .zip(doc.field.weights.iter())
            .map(|(p, &w)| (p[0], p[1], w))
            .collect(),
        tracks,
        label: label.to_string(),
    })
}

pub struct RunArgs {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub filter: Option<FilterChoice>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let mut doc = ScenarioFile::load(&args.scenario)?;
    let overrides = CliOverrides { filter: args.filter, steps: args.steps, seed: args.seed };
    if let Some(f) = overrides.filter {
        doc.safety.mode = f;
    }
    if let Some(n) = overrides.steps {
        doc.steps = n;
    }
    if let Some(s) = overrides.seed {
        doc.seed = s;
    }
    let scenario = doc.to_scenario()?;
    let seed = doc.seed;
    let (log, metrics) = sim::run(&scenario, seed).map_err(map_sim_err)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    csvio::write_trajectories(&args.out.join("trajectories.csv"), &log)?;
    csvio::write_field(&args.out.join("field_final.csv"), &log.final_field)?;
    let doc_metrics = MetricsDoc {
        wasserstein_coverage: metrics.wasserstein_coverage,
        min_inter_agent_distance: metrics.min_inter_agent_distance,
        obstacle_violations: metrics.obstacle_violations,
        minimal_violation_steps: metrics.minimal_violation_steps,
        total_weight_remaining: metrics.total_weight_remaining,
        provenance: Provenance { scenario: doc, cli_overrides: overrides, seed },
    };
    write_json(&args.out.join("metrics.json"), &doc_metrics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotMode {
    Traj,
    Safeset,
}

pub struct PlotArgs {
    pub run: PathBuf,
    pub out: PathBuf,
    pub mode: PlotMode,
    pub obstacle: usize,
}

pub fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    let metrics_path = args.run.join("metrics.json");
    let csv_path = args.run.join("trajectories.csv");
    if !metrics_path.is_file() || !csv_path.is_file() {
        return Err(CliError::MissingRun(args.run.display().to_string()));
    }
    let metrics_text =
        std::fs::read_to_string(&metrics_path).map_err(|e| CliError::io(&metrics_path, e))?;
    let metrics: MetricsDoc = serde_json::from_str(&metrics_text).map_err(|e| {
        CliError::MalformedLog { path: metrics_path.display().to_string(), detail: e.to_string() }
    })?;
    let log = csvio::read_trajectories(&csv_path)?;
    if log.agents.is_empty() {
        return Err(CliError::MissingRun(args.run.display().to_string()));
    }
    let doc = &metrics.provenance.scenario;
    let rendered = match args.mode {
        PlotMode::Traj => {
            let tracks = log
                .agents
                .iter()
                .map(|rows| rows.iter().map(|r| r.position()).collect())
                .collect();
            svg::trajectory_svg(&scene_of(doc, tracks, "")?)
        }
        PlotMode::Safeset => {
            let obstacles = doc.build_obstacles()?;
            let obs = obstacles.get(args.obstacle).ok_or_else(|| {
                CliError::ScenarioInvalid(format!(
                    "obstacle index {} out of range ({} obstacles in the run)",
                    args.obstacle,
                    obstacles.len()
                ))
            })?;
            let params = CbfParams { k_v: doc.safety.k_v, eps_den: doc.safety.eps_den };
            svg::safe_slice_svg(obs, &params)
        }
    };
    write_text(&args.out, &rendered)
}

pub struct CompareArgs {
    pub scenario: PathBuf,
    pub out: PathBuf,
}

/// Serial fallback is opt-in through SWARMCOVER_THREADS=1 (or 0); any other
/// value, or none, runs the two simulations on separate threads.
fn run_pair(
    cbf: &Scenario,
    apf: &Scenario,
    seed: u64,
) -> Result<((TrajectoryLog, Metrics), (TrajectoryLog, Metrics)), CliError> {
    let cap = std::env::var("SWARMCOVER_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok());
    if matches!(cap, Some(0) | Some(1)) {
        return Ok((sim::run(cbf, seed).map_err(map_sim_err)?, sim::run(apf, seed).map_err(map_sim_err)?));
    }
    let (a, b) = std::thread::scope(|scope| {
        let ha = scope.spawn(|| sim::run(cbf, seed));
        let hb = scope.spawn(|| sim::run(apf, seed));
        (ha.join(), hb.join())
    });
    let a = a.expect("simulation thread panicked").map_err(map_sim_err)?;
    let b = b.expect("simulation thread panicked").map_err(map_sim_err)?;
    Ok((a, b))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let doc = ScenarioFile::load(&args.scenario)?;
    let mut doc_cbf = doc.clone();
    doc_cbf.safety.mode = FilterChoice::Cbf;
    let mut doc_apf = doc.clone();
    doc_apf.safety.mode = FilterChoice::Apf;
    let scenario_cbf = doc_cbf.to_scenario()?;
    let scenario_apf = doc_apf.to_scenario()?;
    let ((log_cbf, met_cbf), (log_apf, met_apf)) =
        run_pair(&scenario_cbf, &scenario_apf, doc.seed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let compare = CompareDoc {
        wasserstein_cbf: met_cbf.wasserstein_coverage,
        wasserstein_apf: met_apf.wasserstein_coverage,
        min_dist_cbf: met_cbf.min_inter_agent_distance,
        min_dist_apf: met_apf.min_inter_agent_distance,
    };
    write_json(&args.out.join("compare.json"), &compare)?;
    let left = scene_of(&doc_cbf, tracks_of(&log_cbf), "cbf")?;
    let right = scene_of(&doc_apf, tracks_of(&log_apf), "apf")?;
    write_text(&args.out.join("compare.svg"), &svg::comparison_svg(&left, &right))
}
