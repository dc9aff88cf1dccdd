//! Trajectory and field CSV emission and exact re-ingestion.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which
//! round-trips every finite f64 bit-for-bit, so parsing a written file
//! reconstructs the logged values exactly.

use std::path::Path;

use swarmcover::dynamics::quadrotor_state as qs;
use swarmcover::sim::StepStatus;
use swarmcover::{SampleField, TrajectoryLog};

use crate::error::CliError;

pub const TRAJECTORY_HEADER: &str =
    "step,agent,px,py,dpx,dpy,theta,dtheta,phi,dphi,taux_nom,tauy_nom,taux,tauy,status,min_h";

pub const FIELD_HEADER: &str = "index,x,y,weight";

pub fn status_label(status: StepStatus) -> &'static str {
    match status {
        StepStatus::Init => "init",
        StepStatus::Unmodified => "unmodified",
        StepStatus::Modified => "modified",
        StepStatus::MinimalViolation => "minimal_violation",
    }
}

pub fn parse_status(label: &str) -> Option<StepStatus> {
    match label {
        "init" => Some(StepStatus::Init),
        "unmodified" => Some(StepStatus::Unmodified),
        "modified" => Some(StepStatus::Modified),
        "minimal_violation" => Some(StepStatus::MinimalViolation),
        _ => None,
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Step-major rows: all agents at step 0, then all agents at step 1, ...
pub fn render_trajectories(log: &TrajectoryLog) -> String {
    let rows = log.agents.first().map_or(0, Vec::len);
    let mut out = String::with_capacity(64 + rows * log.agents.len() * 300);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for t in 0..rows {
        for (a, records) in log.agents.iter().enumerate() {
            let r = &records[t];
            let x = &r.state.x;
            out.push_str(&format!(
                "{t},{a},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                fmt(x[qs::PX]),
                fmt(x[qs::PY]),
                fmt(x[qs::VX]),
                fmt(x[qs::VY]),
                fmt(x[qs::PITCH]),
                fmt(x[qs::PITCH_RATE]),
                fmt(x[qs::ROLL]),
                fmt(x[qs::ROLL_RATE]),
                fmt(r.nominal_input[0]),
                fmt(r.nominal_input[1]),
                fmt(r.filtered_input[0]),
                fmt(r.filtered_input[1]),
                status_label(r.status),
                fmt(r.min_h),
            ));
        }
    }
    out
}

pub fn write_trajectories(path: &Path, log: &TrajectoryLog) -> Result<(), CliError> {
    std::fs::write(path, render_trajectories(log)).map_err(|e| CliError::io(path, e))
}

pub fn render_field(field: &SampleField) -> String {
    let mut out = String::from(FIELD_HEADER);
    out.push('\n');
    for (i, (p, w)) in field.points().iter().zip(field.weights().iter()).enumerate() {
        out.push_str(&format!("{i},{},{},{}\n", fmt(p.x), fmt(p.y), fmt(*w)));
    }
    out
}

pub fn write_field(path: &Path, field: &SampleField) -> Result<(), CliError> {
    std::fs::write(path, render_field(field)).map_err(|e| CliError::io(path, e))
}

/// One parsed trajectory row. Float fields keep the CSV column order, not
/// the model's raw state layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub step: usize,
    pub agent: usize,
    /// px, py, dpx, dpy, theta, dtheta, phi, dphi.
    pub state: [f64; 8],
    pub nominal: [f64; 2],
    pub filtered: [f64; 2],
    pub status: StepStatus,
    pub min_h: f64,
}

impl CsvRow {
    pub fn position(&self) -> (f64, f64) {
        (self.state[0], self.state[1])
    }
}

/// Re-ingested log, agent-major like the in-memory one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReadLog {
    pub agents: Vec<Vec<CsvRow>>,
}

fn malformed(path: &Path, detail: impl Into<String>) -> CliError {
    CliError::MalformedLog { path: path.display().to_string(), detail: detail.into() }
}

fn parse_row(line: &str, lineno: usize, path: &Path) -> Result<CsvRow, CliError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 16 {
        return Err(malformed(path, format!("line {lineno}: expected 16 fields, got {}", fields.len())));
    }
    let uint = |s: &str, name: &str| {
        s.parse::<usize>()
            .map_err(|_| malformed(path, format!("line {lineno}: bad {name} '{s}'")))
    };
    let float = |s: &str, name: &str| {
        s.parse::<f64>()
            .map_err(|_| malformed(path, format!("line {lineno}: bad {name} '{s}'")))
    };
    let mut state = [0.0; 8];
    for (k, slot) in state.iter_mut().enumerate() {
        *slot = float(fields[2 + k], "state value")?;
    }
    Ok(CsvRow {
        step: uint(fields[0], "step")?,
        agent: uint(fields[1], "agent")?,
        state,
        nominal: [float(fields[10], "taux_nom")?, float(fields[11], "tauy_nom")?],
        filtered: [float(fields[12], "taux")?, float(fields[13], "tauy")?],
        status: parse_status(fields[14])
            .ok_or_else(|| malformed(path, format!("line {lineno}: unknown status '{}'", fields[14])))?,
        min_h: float(fields[15], "min_h")?,
    })
}

/// Parse a trajectories.csv back into an agent-major log. Enforces the
/// step-major layout: contiguous steps from 0, agents 0..n within each step.
pub fn read_trajectories(path: &Path) -> Result<ReadLog, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRAJECTORY_HEADER => {}
        Some(h) => return Err(malformed(path, format!("unexpected header '{h}'"))),
        None => return Err(malformed(path, "empty file")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        rows.push(parse_row(line, i + 2, path)?);
    }
    if rows.is_empty() {
        return Ok(ReadLog::default());
    }
    let n_agents = rows.iter().take_while(|r| r.step == 0).count();
    if n_agents == 0 {
        return Err(malformed(path, "first data row is not step 0"));
    }
    if rows.len() % n_agents != 0 {
        return Err(malformed(path, "row count is not a multiple of the agent count"));
    }
    let mut agents = vec![Vec::with_capacity(rows.len() / n_agents); n_agents];
    for (k, row) in rows.iter().enumerate() {
        let (want_step, want_agent) = (k / n_agents, k % n_agents);
        if row.step != want_step || row.agent != want_agent {
            return Err(malformed(
                path,
                format!(
                    "row {k}: expected step {want_step} agent {want_agent}, got step {} agent {}",
                    row.step, row.agent
                ),
            ));
        }
        agents[row.agent].push(*row);
    }
    Ok(ReadLog { agents })
}
