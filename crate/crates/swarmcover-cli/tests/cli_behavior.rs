//! End-to-end behavior of the CLI: schema diagnostics, exit codes, override
//! precedence, CSV round trips, and SVG structure. Exit-code checks spawn
//! the real binary; everything else drives the library in-process.

use std::path::{Path, PathBuf};
use std::process::Command;

use nalgebra::Vector2;
use swarmcover::sim::{self, StepStatus};
use swarmcover::{CbfParams, Obstacle};
use swarmcover_cli::commands::{
    cmd_compare, cmd_plot, cmd_run, CompareArgs, CompareDoc, MetricsDoc, PlotArgs, PlotMode,
    RunArgs,
};
use swarmcover_cli::csvio;
use swarmcover_cli::error::CliError;
use swarmcover_cli::scenario_file::{FilterChoice, ScenarioFile};
use swarmcover_cli::svg;

fn demo_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/demo_3agent.json")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swarmcover"))
}

fn run_bin(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8_lossy(&out.stderr).into_owned())
}

/// Single agent aimed at two sample points hidden behind an off-center
/// circle, so the filter has to modify inputs along the way.
const DETOUR_SCENARIO: &str = r#"{
  "model": { "dt": 0.1, "g": 9.81, "J": 1.0 },
  "limits": { "max_torque": 10.0, "max_speed": 1.75, "max_angle_deg": 1.5, "max_angle_rate_deg": 15.0 },
  "agents": [ { "x0": [0,0,0,0,0,0,0,0], "comm_range": 100.0 } ],
  "obstacles": [ { "shape": "circle", "center": [5.0, 0.4], "radius": 1.2 } ],
  "field": { "points": [[9.0, 0.0], [10.0, 1.0]], "weights": [1.0, 0.6] },
  "planner": { "n_lsp": 4, "horizon": 2, "discount": 0.8, "cov_radius": 1.0, "cov_rate": 2.0, "goal_tol": 0.5 },
  "gains": { "kp": 0.06, "kd": 2.2, "ka": 12.0, "kr": 5.7 },
  "safety": { "mode": "apf" },
  "steps": 220,
  "seed": 5
}"#;

#[test]
fn bundled_demo_matches_builtin_scenario() {
    let doc = ScenarioFile::load(&demo_path()).expect("demo parses");
    assert_eq!(doc.agents.len(), 3);
    assert_eq!(doc.safety.mode, FilterChoice::Cbf);
    let scenario = doc.to_scenario().expect("demo is runnable");
    assert_eq!(scenario, sim::three_agent_demo());
}

#[test]
fn negative_radius_is_reported_with_its_json_path() {
    let doc = DETOUR_SCENARIO.replace("\"radius\": 1.2", "\"radius\": -1.2");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc).unwrap();
    let (code, stderr) =
        run_bin(&["run", "--scenario", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("obstacles[0].radius"), "stderr: {stderr}");
}

#[test]
fn initial_state_inside_obstacle_is_rejected_at_load() {
    let doc = DETOUR_SCENARIO.replace("\"center\": [5.0, 0.4]", "\"center\": [0.5, 0.0]");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc).unwrap();
    let (code, stderr) =
        run_bin(&["run", "--scenario", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("initial safety window"), "stderr: {stderr}");
}

#[test]
fn unknown_keys_are_rejected_with_their_path() {
    let doc = DETOUR_SCENARIO.replace("\"seed\": 5", "\"seed\": 5, \"stepz\": 3");
    let err = ScenarioFile::parse(&doc, "inline").unwrap_err();
    match &err {
        CliError::Parse { detail, .. } => assert!(detail.contains("stepz"), "detail: {detail}"),
        other => panic!("expected a parse error, got {other:?}"),
    }
    let doc = DETOUR_SCENARIO.replace("\"radius\": 1.2", "\"radius\": 1.2, \"rotation\": 0.3");
    let err = ScenarioFile::parse(&doc, "inline").unwrap_err();
    match &err {
        CliError::Parse { path, .. } => {
            assert!(path.contains("obstacles[0]"), "path label: {path}")
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn filter_flag_overrides_file_mode_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("detour.json");
    std::fs::write(&path, DETOUR_SCENARIO).unwrap();
    let out = dir.path().join("run");
    cmd_run(&RunArgs {
        scenario: path.clone(),
        out: out.clone(),
        filter: Some(FilterChoice::Cbf),
        steps: None,
        seed: None,
    })
    .expect("run succeeds");
    let metrics: MetricsDoc =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    // The file said apf; the flag wins and both the override and the
    // resolved mode are visible in the provenance block.
    assert_eq!(metrics.provenance.cli_overrides.filter, Some(FilterChoice::Cbf));
    assert_eq!(metrics.provenance.scenario.safety.mode, FilterChoice::Cbf);
    assert_eq!(metrics.provenance.seed, 5);
    assert_eq!(metrics.obstacle_violations, 0);

    let out2 = dir.path().join("run2");
    cmd_run(&RunArgs { scenario: path, out: out2.clone(), filter: None, steps: None, seed: None })
        .expect("run succeeds");
    let metrics2: MetricsDoc =
        serde_json::from_str(&std::fs::read_to_string(out2.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics2.provenance.cli_overrides.filter, None);
    assert_eq!(metrics2.provenance.scenario.safety.mode, FilterChoice::Apf);
}

#[test]
fn status_labels_round_trip() {
    for status in [
        StepStatus::Init,
        StepStatus::Unmodified,
        StepStatus::Modified,
        StepStatus::MinimalViolation,
    ] {
        assert_eq!(csvio::parse_status(csvio::status_label(status)), Some(status));
    }
    assert_eq!(csvio::parse_status("bogus"), None);
}

#[test]
fn trajectory_csv_round_trips_bit_exactly() {
    let doc = ScenarioFile::parse(DETOUR_SCENARIO, "inline").unwrap();
    let scenario = doc.to_scenario().unwrap();
    let (log, _) = sim::run(&scenario, doc.seed).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trajectories.csv");
    csvio::write_trajectories(&path, &log).unwrap();
    let read = csvio::read_trajectories(&path).unwrap();

    assert_eq!(read.agents.len(), log.agents.len());
    use swarmcover::dynamics::quadrotor_state as qs;
    let order = [qs::PX, qs::PY, qs::VX, qs::VY, qs::PITCH, qs::PITCH_RATE, qs::ROLL, qs::ROLL_RATE];
    for (a, rows) in log.agents.iter().enumerate() {
        assert_eq!(read.agents[a].len(), rows.len());
        for (t, rec) in rows.iter().enumerate() {
            let got = &read.agents[a][t];
            assert_eq!(got.step, t);
            assert_eq!(got.agent, a);
            for (k, &idx) in order.iter().enumerate() {
                assert_eq!(got.state[k].to_bits(), rec.state.x[idx].to_bits(), "state ch {k}");
            }
            for k in 0..2 {
                assert_eq!(got.nominal[k].to_bits(), rec.nominal_input[k].to_bits());
                assert_eq!(got.filtered[k].to_bits(), rec.filtered_input[k].to_bits());
            }
            assert_eq!(got.status, rec.status);
            assert_eq!(got.min_h.to_bits(), rec.min_h.to_bits());
        }
    }
}

#[test]
fn trajectory_svg_draws_every_layer() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    cmd_run(&RunArgs {
        scenario: demo_path(),
        out: out.clone(),
        filter: None,
        steps: Some(40),
        seed: None,
    })
    .unwrap();
    let svg_path = dir.path().join("traj.svg");
    cmd_plot(&PlotArgs { run: out, out: svg_path.clone(), mode: PlotMode::Traj, obstacle: 0 })
        .unwrap();
    let text = std::fs::read_to_string(&svg_path).unwrap();
    assert_eq!(text.matches("<path ").count(), 3, "one path per agent");
    assert_eq!(text.matches("fill=\"#999999\"").count(), 12, "one gray dot per sample point");
    assert_eq!(text.matches("fill=\"#cc3333\"").count(), 3, "one red shape per obstacle");
    // Start cross (two lines) and end ring per agent.
    assert_eq!(text.matches("<line ").count(), 6);
    assert_eq!(text.matches("stroke-width=\"2\"").count(), 9);
}

#[test]
fn safe_slice_boundary_matches_the_closed_form_point() {
    let obs = Obstacle::circle(Vector2::new(0.0, 0.0), 2.0, 0).unwrap();
    let params = CbfParams { k_v: 5.0, eps_den: 1e-6 };
    // Boundary membership at (3, -1): closed set, tight on both sides.
    assert!(svg::slice_safe(&obs, &params, 3.0, -1.0));
    assert!(svg::slice_safe(&obs, &params, 3.0, -1.0 + 1e-6));
    assert!(!svg::slice_safe(&obs, &params, 3.0, -1.0 - 1e-6));
    // Position barrier alone handles the interior and the receding side.
    assert!(!svg::slice_safe(&obs, &params, 1.999, 0.0));
    assert!(svg::slice_safe(&obs, &params, -2.001, 0.0));
    assert!(svg::slice_safe(&obs, &params, 3.0, 5.0));

    let grid = svg::safe_slice_grid(&obs, &params, 200);
    assert_eq!(grid.s.len(), 200);
    assert!((grid.s[0] + 8.0).abs() < 1e-12 && (grid.s[199] - 8.0).abs() < 1e-12);
    let is = (0..200).min_by(|&i, &j| {
        (grid.s[i] - 3.0).abs().partial_cmp(&(grid.s[j] - 3.0).abs()).unwrap()
    })
    .unwrap();
    let first_safe = (0..200)
        .find(|&iv| grid.safe[iv * 200 + is])
        .expect("column has safe cells");
    let v_boundary = grid.v[first_safe];
    assert!(
        (-1.05..=-0.95).contains(&v_boundary),
        "charged boundary near s = 3 should sit near v = -1, got {v_boundary}"
    );
}

#[test]
fn compare_without_obstacles_reports_equal_metrics() {
    let doc = DETOUR_SCENARIO
        .replace(
            "\"obstacles\": [ { \"shape\": \"circle\", \"center\": [5.0, 0.4], \"radius\": 1.2 } ],",
            "\"obstacles\": [],",
        )
        .replace("\"steps\": 220", "\"steps\": 120");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("open.json");
    std::fs::write(&path, doc).unwrap();
    let out = dir.path().join("cmp");
    cmd_compare(&CompareArgs { scenario: path, out: out.clone() }).unwrap();
    let compare: CompareDoc =
        serde_json::from_str(&std::fs::read_to_string(out.join("compare.json")).unwrap()).unwrap();
    assert!((compare.wasserstein_cbf - compare.wasserstein_apf).abs() <= 1e-9);
    assert_eq!(compare.min_dist_cbf, None, "single agent has no pairwise distance");
    assert_eq!(compare.min_dist_apf, None);
    let side_by_side = std::fs::read_to_string(out.join("compare.svg")).unwrap();
    assert_eq!(side_by_side.matches("<path ").count(), 2, "one track per panel");
}

#[test]
fn steps_zero_emits_initial_rows_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    cmd_run(&RunArgs {
        scenario: demo_path(),
        out: out.clone(),
        filter: None,
        steps: Some(0),
        seed: None,
    })
    .unwrap();
    let read = csvio::read_trajectories(&out.join("trajectories.csv")).unwrap();
    assert_eq!(read.agents.len(), 3);
    for rows in &read.agents {
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].status, StepStatus::Init);
    }
}

#[test]
fn plot_exit_codes_distinguish_missing_from_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let (code, stderr) =
        run_bin(&["plot", "--run", empty.to_str().unwrap(), "--out", dir.path().join("a.svg").to_str().unwrap()]);
    assert_eq!(code, 3, "missing run: {stderr}");

    let out = dir.path().join("run");
    cmd_run(&RunArgs {
        scenario: demo_path(),
        out: out.clone(),
        filter: None,
        steps: Some(2),
        seed: None,
    })
    .unwrap();
    std::fs::write(out.join("trajectories.csv"), format!("{}\ngarbage\n", csvio::TRAJECTORY_HEADER))
        .unwrap();
    let (code, stderr) =
        run_bin(&["plot", "--run", out.to_str().unwrap(), "--out", dir.path().join("b.svg").to_str().unwrap()]);
    assert_eq!(code, 2, "malformed log: {stderr}");
    assert!(stderr.contains("malformed log"), "stderr: {stderr}");

    // Header-only CSV means the run produced nothing: missing, not malformed.
    std::fs::write(out.join("trajectories.csv"), format!("{}\n", csvio::TRAJECTORY_HEADER)).unwrap();
    let (code, stderr) =
        run_bin(&["plot", "--run", out.to_str().unwrap(), "--out", dir.path().join("c.svg").to_str().unwrap()]);
    assert_eq!(code, 3, "empty log: {stderr}");
}

#[test]
fn safeset_obstacle_index_out_of_range_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    cmd_run(&RunArgs {
        scenario: demo_path(),
        out: out.clone(),
        filter: None,
        steps: Some(2),
        seed: None,
    })
    .unwrap();
    let (code, stderr) = run_bin(&[
        "plot",
        "--run",
        out.to_str().unwrap(),
        "--out",
        dir.path().join("s.svg").to_str().unwrap(),
        "--mode",
        "safeset",
        "--obstacle",
        "9",
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("out of range"), "stderr: {stderr}");
}

#[test]
fn unwritable_output_directory_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let (code, stderr) = run_bin(&[
        "run",
        "--scenario",
        demo_path().to_str().unwrap(),
        "--steps",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "stderr: {stderr}");
}
