//! On-disk scenario schema and its conversion to a runnable [`Scenario`].
//!
//! The JSON layout mirrors the library's `Scenario` but stays flat and
//! unit-annotated: angles arrive in degrees and are converted to radians at
//! this boundary, and each agent's initial state is the raw 8-element state
//! vector in channel order `[px, vx, pitch, pitch_rate, py, vy, roll,
//! roll_rate]`. Unknown keys are rejected everywhere.

use std::path::Path;

use nalgebra::{DVector, Vector2};
use serde::{Deserialize, Serialize};
use swarmcover::coverage::PlannerParams;
use swarmcover::dynamics::build_quadrotor;
use swarmcover::sim::{self, AgentInit, FilterMode, SimError};
use swarmcover::{
    AgentState, ApfGains, CbfParams, ControllerGains, ModelLimits, Obstacle, SampleField,
    Scenario,
};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub model: ModelSection,
    pub limits: LimitsSection,
    pub agents: Vec<AgentSection>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSection>,
    pub field: FieldSection,
    pub planner: PlannerSection,
    pub gains: GainsSection,
    pub safety: SafetySection,
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Radius of the disk each agent presents to the other agents' filters.
    #[serde(default = "default_exclusion")]
    pub inter_agent_radius: f64,
    /// Audited minimum pairwise separation.
    #[serde(default = "default_exclusion")]
    pub collision_threshold: f64,
}

fn default_exclusion() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Integration step, seconds.
    pub dt: f64,
    /// Gravity, m/s^2.
    pub g: f64,
    /// Rotational inertia about each tilt axis.
    #[serde(rename = "J")]
    pub j: f64,
}

/// Input and state bounds. Angle fields are degrees in the file; the
/// in-memory model works in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    pub max_torque: f64,
    pub max_speed: f64,
    pub max_angle_deg: f64,
    pub max_angle_rate_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    /// Raw 8-element state vector, channel order
    /// `[px, vx, pitch, pitch_rate, py, vy, roll, roll_rate]`.
    pub x0: Vec<f64>,
    pub comm_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObstacleSection {
    Circle { center: [f64; 2], radius: f64 },
    Rect { center: [f64; 2], length: f64, width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    pub n_lsp: usize,
    pub horizon: usize,
    pub discount: f64,
    pub cov_radius: f64,
    pub cov_rate: f64,
    pub goal_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub kp: f64,
    pub kd: f64,
    pub ka: f64,
    pub kr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetySection {
    pub mode: FilterChoice,
    /// Approach-speed charge gain for the barrier filter.
    #[serde(rename = "K_v", default = "default_k_v")]
    pub k_v: f64,
    #[serde(default = "default_eps_den")]
    pub eps_den: f64,
    /// Repulsive gain for the potential-field baseline.
    #[serde(default = "default_k_rep")]
    pub k_rep: f64,
    /// Influence distance for the potential-field baseline.
    #[serde(default = "default_d_0")]
    pub d_0: f64,
    #[serde(default = "default_torque_per_force")]
    pub torque_per_force: f64,
}

fn default_k_v() -> f64 {
    5.0
}
fn default_eps_den() -> f64 {
    1e-6
}
fn default_k_rep() -> f64 {
    2.0
}
fn default_d_0() -> f64 {
    2.5
}
fn default_torque_per_force() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FilterChoice {
    Cbf,
    Apf,
    None,
}

impl FilterChoice {
    pub fn to_mode(self) -> FilterMode {
        match self {
            FilterChoice::Cbf => FilterMode::Cbf,
            FilterChoice::Apf => FilterMode::Apf,
            FilterChoice::None => FilterMode::None,
        }
    }
}

fn schema(path: impl Into<String>, detail: impl Into<String>) -> CliError {
    CliError::Schema { path: path.into(), detail: detail.into() }
}

fn require(ok: bool, path: &str, detail: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(schema(path, detail))
    }
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Deserialize and range-check; `origin` labels diagnostics (a file
    /// name in practice).
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let doc: ScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let json_path = e.path().to_string();
            let label = if json_path == "." {
                origin.to_string()
            } else {
                format!("{origin} ({json_path})")
            };
            CliError::Parse { path: label, detail: e.inner().to_string() }
        })?;
        doc.check_ranges()?;
        Ok(doc)
    }

    /// Field-by-field range validation with JSON-path diagnostics. Checks
    /// only what the schema itself promises; cross-field feasibility is the
    /// simulator's pre-run validation, surfaced by [`Self::to_scenario`].
    pub fn check_ranges(&self) -> Result<(), CliError> {
        require(self.model.dt > 0.0, "model.dt", "must be positive")?;
        require(self.model.g > 0.0, "model.g", "must be positive")?;
        require(self.model.j > 0.0, "model.J", "must be positive")?;
        let lim = &self.limits;
        require(lim.max_torque > 0.0, "limits.max_torque", "must be positive")?;
        require(lim.max_speed > 0.0, "limits.max_speed", "must be positive")?;
        require(
            lim.max_angle_deg > 0.0 && lim.max_angle_deg < 90.0,
            "limits.max_angle_deg",
            "must be in (0, 90)",
        )?;
        require(lim.max_angle_rate_deg > 0.0, "limits.max_angle_rate_deg", "must be positive")?;
        require(!self.agents.is_empty(), "agents", "at least one agent required")?;
        for (i, a) in self.agents.iter().enumerate() {
            require(
                a.x0.len() == 8,
                &format!("agents[{i}].x0"),
                "must have exactly 8 entries [px, vx, pitch, pitch_rate, py, vy, roll, roll_rate]",
            )?;
            require(
                a.comm_range >= 0.0,
                &format!("agents[{i}].comm_range"),
                "must be nonnegative",
            )?;
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            match o {
                ObstacleSection::Circle { radius, .. } => {
                    require(*radius > 0.0, &format!("obstacles[{i}].radius"), "must be positive")?;
                }
                ObstacleSection::Rect { length, width, .. } => {
                    require(*length > 0.0, &format!("obstacles[{i}].length"), "must be positive")?;
                    require(*width > 0.0, &format!("obstacles[{i}].width"), "must be positive")?;
                }
            }
        }
        require(!self.field.points.is_empty(), "field.points", "at least one sample point")?;
        require(
            self.field.weights.len() == self.field.points.len(),
            "field.weights",
            "must match field.points in length",
        )?;
        for (i, w) in self.field.weights.iter().enumerate() {
            require(*w >= 0.0, &format!("field.weights[{i}]"), "must be nonnegative")?;
        }
        let pl = &self.planner;
        require(pl.n_lsp >= 1, "planner.n_lsp", "must be at least 1")?;
        require(pl.horizon >= 1, "planner.horizon", "must be at least 1")?;
        require(
            pl.discount > 0.0 && pl.discount <= 1.0,
            "planner.discount",
            "must be in (0, 1]",
        )?;
        require(pl.cov_radius > 0.0, "planner.cov_radius", "must be positive")?;
        require(pl.cov_rate > 0.0, "planner.cov_rate", "must be positive")?;
        require(pl.goal_tol > 0.0, "planner.goal_tol", "must be positive")?;
        let s = &self.safety;
        require(s.k_v >= 0.0, "safety.K_v", "must be nonnegative")?;
        require(s.eps_den > 0.0, "safety.eps_den", "must be positive")?;
        require(s.k_rep > 0.0, "safety.k_rep", "must be positive")?;
        require(s.d_0 > 0.0, "safety.d_0", "must be positive")?;
        require(s.torque_per_force > 0.0, "safety.torque_per_force", "must be positive")?;
        require(self.inter_agent_radius > 0.0, "inter_agent_radius", "must be positive")?;
        require(self.collision_threshold >= 0.0, "collision_threshold", "must be nonnegative")?;
        Ok(())
    }

    /// Obstacles alone, for plotting a finished run without rebuilding the
    /// whole scenario.
    pub fn build_obstacles(&self) -> Result<Vec<Obstacle>, CliError> {
        self.obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| {
                match *o {
                    ObstacleSection::Circle { center, radius } => {
                        Obstacle::circle(Vector2::new(center[0], center[1]), radius, i)
                    }
                    ObstacleSection::Rect { center, length, width } => {
                        Obstacle::rect(Vector2::new(center[0], center[1]), length, width, i)
                    }
                }
                .map_err(|e| schema(format!("obstacles[{i}]"), e.to_string()))
            })
            .collect()
    }

    /// Build the runnable scenario. Range checks re-run first so a
    /// hand-constructed document gets the same diagnostics as a parsed one;
    /// the final step is the simulator's own pre-run validation (initial
    /// safety window, pairwise separation, stabilizing gains).
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        self.check_ranges()?;
        let model = build_quadrotor(self.model.dt, self.model.g, self.model.j)
            .map_err(|e| schema("model", e.to_string()))?;
        let limits = ModelLimits::quadrotor(
            self.limits.max_torque,
            self.limits.max_speed,
            self.limits.max_angle_deg.to_radians(),
            self.limits.max_angle_rate_deg.to_radians(),
        );
        let agents = self
            .agents
            .iter()
            .map(|a| AgentInit {
                state: AgentState::new(DVector::from_vec(a.x0.clone())),
                comm_range: a.comm_range,
            })
            .collect();
        let obstacles = self.build_obstacles()?;
        let points: Vec<Vector2<f64>> =
            self.field.points.iter().map(|p| Vector2::new(p[0], p[1])).collect();
        let field = SampleField::new(points, self.field.weights.clone())
            .map_err(|e| schema("field", e.to_string()))?;
        let planner = PlannerParams {
            n_lsp: self.planner.n_lsp,
            horizon: self.planner.horizon,
            discount: self.planner.discount,
            cov_radius: self.planner.cov_radius,
            cov_rate: self.planner.cov_rate,
            goal_tol: self.planner.goal_tol,
        };
        let gains =
            ControllerGains::quadrotor(&model, self.gains.kp, self.gains.kd, self.gains.ka, self.gains.kr)
                .map_err(|e| schema("gains", e.to_string()))?;
        let scenario = Scenario {
            model,
            limits,
            agents,
            obstacles,
            field,
            planner,
            gains,
            cbf: CbfParams { k_v: self.safety.k_v, eps_den: self.safety.eps_den },
            apf: ApfGains {
                k_rep: self.safety.k_rep,
                d_0: self.safety.d_0,
                torque_per_force: self.safety.torque_per_force,
            },
            filter_mode: self.safety.mode.to_mode(),
            steps: self.steps,
            inter_agent_radius: self.inter_agent_radius,
            collision_threshold: self.collision_threshold,
        };
        sim::validate(&scenario).map_err(|e| match e {
            SimError::ScenarioInvalid { reason } => CliError::ScenarioInvalid(reason),
            other => CliError::ScenarioInvalid(other.to_string()),
        })?;
        Ok(scenario)
    }
}
