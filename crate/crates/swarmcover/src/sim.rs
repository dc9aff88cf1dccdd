//! Multi-agent episode orchestration.
//!
//! Each step runs plan, nominal control, safety filtering, plant stepping,
//! local weight decay, and a synchronous weight-sharing round, in that fixed
//! order. Every agent decides from the same pre-step snapshot, so per-agent
//! work is order-independent and runs are deterministic. Auditing uses the
//! true geometric predicates, never the filter's own certificates.

use nalgebra::{DVector, Vector2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coverage::{
    merge_weights, nominal_control, plan_goal, update_weights, ControllerGains, CoverageError,
    PlannedGoal, PlannerParams, SampleField,
};
use crate::dynamics::{
    build_quadrotor, planar_position, planar_velocity, quadrotor_state, relative_degree, step,
    step_free, AgentState, LinearModel, ModelLimits,
};
use crate::geometry::{Obstacle, ObstacleShape};
use crate::real::{real, Real};
use crate::safety::{
    apf_filter, build_problem, filter_input, position_barrier, velocity_barrier, ApfGains,
    CbfParams, FilterStatus,
};
use crate::transport::{wasserstein, Order, TransportError, WeightedPoints};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("scenario invalid: {reason}")]
    ScenarioInvalid { reason: String },
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Which input filter runs between the nominal controller and the plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Barrier-constrained minimal-deviation filter.
    Cbf,
    /// Repulsive potential-field baseline.
    Apf,
    /// Clamp only.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentInit<T: Real> {
    pub state: AgentState<T>,
    /// Weight replicas merge between agents within both comm ranges.
    pub comm_range: T,
}

/// Everything one episode needs. Agents keep private field replicas; the
/// shared ground truth is their element-wise minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T: Real> {
    pub model: LinearModel<T>,
    pub limits: ModelLimits<T>,
    pub agents: Vec<AgentInit<T>>,
    pub obstacles: Vec<Obstacle<T>>,
    pub field: SampleField<T>,
    pub planner: PlannerParams<T>,
    pub gains: ControllerGains<T>,
    pub cbf: CbfParams<T>,
    pub apf: ApfGains<T>,
    pub filter_mode: FilterMode,
    pub steps: usize,
    /// Radius of the disk other agents present to the filter.
    pub inter_agent_radius: T,
    /// Audited minimum separation; initial states must exceed it pairwise.
    pub collision_threshold: T,
}

/// Filter outcome attached to each logged step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    /// Row zero: no input has been applied yet.
    Init,
    Unmodified,
    Modified,
    MinimalViolation,
}

impl From<FilterStatus> for StepStatus {
    fn from(s: FilterStatus) -> Self {
        match s {
            FilterStatus::Unmodified => StepStatus::Unmodified,
            FilterStatus::Modified => StepStatus::Modified,
            FilterStatus::MinimalViolation => StepStatus::MinimalViolation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord<T: Real> {
    pub state: AgentState<T>,
    pub position: Vector2<T>,
    pub velocity: Vector2<T>,
    pub nominal_input: Vector2<T>,
    pub filtered_input: Vector2<T>,
    pub status: StepStatus,
    /// Worst certified constraint value for barrier-filtered rows; the
    /// plain position-barrier margin at the logged state otherwise.
    pub min_h: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog<T: Real> {
    /// One row per step (including the initial row) per agent.
    pub agents: Vec<Vec<AgentRecord<T>>>,
    /// Digest of every replica's weights after each step, for cheap
    /// bit-exact determinism checks.
    pub weight_hashes: Vec<u64>,
    /// Ground-truth remaining mass (element-wise minimum across replicas)
    /// after each step.
    pub weight_totals: Vec<T>,
    /// Element-wise minimum of all replicas at the end of the run.
    pub final_field: SampleField<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics<T: Real> {
    /// Order-2 transport distance between all visited positions and the
    /// reference density.
    pub wasserstein_coverage: T,
    /// None with fewer than two agents.
    pub min_inter_agent_distance: Option<T>,
    /// Time steps at which any agent position was inside any obstacle.
    pub obstacle_violations: usize,
    /// Logged rows carrying a MinimalViolation status.
    pub minimal_violation_steps: usize,
    pub total_weight_remaining: T,
}

/// Other agents presented as circular obstacles at their snapshot positions.
fn other_disks<T: Real>(
    positions: &[Vector2<T>],
    me: usize,
    radius: T,
) -> Vec<Obstacle<T>> {
    positions
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != me)
        .map(|(j, p)| Obstacle::circle(*p, radius, j).expect("validated positive radius"))
        .collect()
}

/// Worst position-barrier value of `y` against every obstacle; +inf with
/// none. At an exact obstacle center, where the bearing is undefined, the
/// shape's deepest penetration stands in.
fn position_margin<T: Real>(
    statics: &[Obstacle<T>],
    dynamics: &[Obstacle<T>],
    y: &Vector2<T>,
) -> T {
    let mut worst = real::<T>(f64::INFINITY);
    for obs in statics.iter().chain(dynamics.iter()) {
        let h = match position_barrier(obs, y, y) {
            Ok(h) => h,
            Err(_) => match obs.shape {
                ObstacleShape::Circle { radius } => -(radius * radius),
                ObstacleShape::Rect { length, width } => {
                    -(length * length + width * width) / real(4.0)
                }
            },
        };
        worst = worst.min(h);
    }
    worst
}

/// FNV-1a over the bit patterns of every replica's weights, agent-major.
fn hash_replicas<T: Real>(replicas: &[SampleField<T>]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for replica in replicas {
        for w in replica.weights() {
            let bits = w.to_f64().unwrap_or(f64::NAN).to_bits();
            for byte in bits.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x100_0000_01b3);
            }
        }
    }
    h
}

/// Element-wise minimum weight across replicas: the ground-truth residual
/// density, since every visit is recorded in the visitor's own replica.
fn min_weights<T: Real>(replicas: &[SampleField<T>]) -> Vec<T> {
    let mut weights = replicas[0].weights().to_vec();
    for replica in &replicas[1..] {
        for (w, r) in weights.iter_mut().zip(replica.weights()) {
            *w = (*w).min(*r);
        }
    }
    weights
}

fn min_total<T: Real>(replicas: &[SampleField<T>]) -> T {
    min_weights(replicas)
        .into_iter()
        .fold(T::zero(), |acc, w| acc + w)
}

/// Checks every scenario invariant, including the safety window: over the
/// first P-1 steps the position outputs are input-independent, so both
/// barriers must already be nonnegative on the free rollout against all
/// obstacles and against every other agent's co-rolled disk.
pub fn validate<T: Real>(scenario: &Scenario<T>) -> Result<(), SimError> {
    let inv = |reason: String| SimError::ScenarioInvalid { reason };
    let model = &scenario.model;
    let n = model.n();
    if model.p() != 2 || model.m() != 2 {
        return Err(inv("model must have a planar position output and two inputs".into()));
    }
    if scenario.limits.input_max.len() != model.m() || scenario.limits.state_max.len() != n {
        return Err(inv("limit dimensions must match the model".into()));
    }
    if scenario.gains.k.nrows() != model.m() || scenario.gains.k.ncols() != n {
        return Err(inv("gain dimensions must match the model".into()));
    }
    if scenario.agents.is_empty() {
        return Err(inv("scenario needs at least one agent".into()));
    }
    for (i, agent) in scenario.agents.iter().enumerate() {
        if agent.state.x.len() != n {
            return Err(inv(format!("agent {i} state length must match the model")));
        }
        if !(agent.comm_range > T::zero()) {
            return Err(inv(format!("agent {i} communication range must be positive")));
        }
        for ch in 0..n {
            if agent.state.x[ch].abs() > scenario.limits.state_max[ch] {
                return Err(inv(format!("agent {i} state exceeds the limit on channel {ch}")));
            }
        }
    }
    if !(scenario.field.total_weight() > T::zero()) {
        return Err(inv("field must carry positive weight".into()));
    }
    scenario.planner.validate().map_err(|e| inv(format!("planner: {e}")))?;
    scenario.cbf.validate().map_err(|e| inv(format!("barrier parameters: {e}")))?;
    scenario.apf.validate().map_err(|e| inv(format!("potential-field gains: {e}")))?;
    if !(scenario.inter_agent_radius > T::zero()) {
        return Err(inv("inter-agent radius must be positive".into()));
    }
    if !(scenario.collision_threshold >= T::zero()) {
        return Err(inv("collision threshold must be nonnegative".into()));
    }

    let positions: Vec<Vector2<T>> = scenario
        .agents
        .iter()
        .map(|a| planar_position(model, &a.state))
        .collect();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let d = (positions[i] - positions[j]).norm();
            if d <= scenario.collision_threshold {
                return Err(inv(format!(
                    "agents {i} and {j} start {:.3} m apart, within the collision threshold",
                    d.to_f64().unwrap_or(f64::NAN)
                )));
            }
        }
    }

    let p_deg = relative_degree(model)
        .map_err(|e| inv(format!("model has no input-to-position path: {e}")))?;

    // Free rollout: inputs cannot influence these outputs yet.
    let zero_u = DVector::zeros(model.m());
    let mut rolls: Vec<Vec<(Vector2<T>, Vector2<T>)>> = Vec::with_capacity(scenario.agents.len());
    for agent in &scenario.agents {
        let mut s = agent.state.clone();
        let mut path = Vec::with_capacity(p_deg);
        for _ in 0..p_deg {
            path.push((planar_position(model, &s), planar_velocity(model, &s)));
            s = step_free(model, &s, &zero_u);
        }
        rolls.push(path);
    }

    let window_check = |obs: &Obstacle<T>,
                        y: &Vector2<T>,
                        y_prev: &Vector2<T>,
                        v_prev: &Vector2<T>|
     -> bool {
        if obs.contains(y) {
            return false;
        }
        match (
            position_barrier(obs, y, y_prev),
            velocity_barrier(obs, y, y_prev, v_prev, &scenario.cbf),
        ) {
            (Ok(h1), Ok(h2)) => h1 >= T::zero() && h2 >= T::zero(),
            _ => false,
        }
    };

    for (i, path) in rolls.iter().enumerate() {
        for k in 0..p_deg {
            let (y, _) = path[k];
            let (y_prev, v_prev) = path[k.saturating_sub(1)];
            for obs in &scenario.obstacles {
                if !window_check(obs, &y, &y_prev, &v_prev) {
                    return Err(inv(format!(
                        "agent {i} fails the initial safety window at obstacle {} (step {k})",
                        obs.id
                    )));
                }
            }
            for (j, other) in rolls.iter().enumerate() {
                if j == i {
                    continue;
                }
                let disk = Obstacle::circle(
                    other[k.saturating_sub(1)].0,
                    scenario.inter_agent_radius,
                    j,
                )
                .expect("positive radius");
                if !window_check(&disk, &y, &y_prev, &v_prev) {
                    return Err(inv(format!(
                        "agents {i} and {j} fail the initial safety window for \
                         inter-agent separation (step {k})"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// One agent's decision for a step, taken from the pre-step snapshot.
struct Decision<T: Real> {
    nominal: Vector2<T>,
    filtered: Vector2<T>,
    status: StepStatus,
    /// None defers to the position margin at the post-step state.
    min_h: Option<T>,
}

/// Runs one episode. Deterministic: identical scenarios produce
/// bit-identical logs; the core loop draws no randomness (the seed argument
/// is reserved for parity with scenario-generation helpers).
pub fn run<T: Real>(
    scenario: &Scenario<T>,
    seed: u64,
) -> Result<(TrajectoryLog<T>, Metrics<T>), SimError> {
    let _ = seed;
    validate(scenario)?;
    let model = &scenario.model;
    let p_deg = relative_degree(model).expect("validated");
    let n_agents = scenario.agents.len();

    let mut states: Vec<AgentState<T>> =
        scenario.agents.iter().map(|a| a.state.clone()).collect();
    let mut replicas: Vec<SampleField<T>> = vec![scenario.field.clone(); n_agents];
    let mut goals: Vec<Option<PlannedGoal<T>>> = vec![None; n_agents];

    let mut log = TrajectoryLog {
        agents: vec![Vec::with_capacity(scenario.steps + 1); n_agents],
        weight_hashes: Vec::with_capacity(scenario.steps + 1),
        weight_totals: Vec::with_capacity(scenario.steps + 1),
        final_field: scenario.field.clone(),
    };

    let positions: Vec<Vector2<T>> = states.iter().map(|s| planar_position(model, s)).collect();
    for i in 0..n_agents {
        let disks = other_disks(&positions, i, scenario.inter_agent_radius);
        log.agents[i].push(AgentRecord {
            state: states[i].clone(),
            position: positions[i],
            velocity: planar_velocity(model, &states[i]),
            nominal_input: Vector2::zeros(),
            filtered_input: Vector2::zeros(),
            status: StepStatus::Init,
            min_h: position_margin(&scenario.obstacles, &disks, &positions[i]),
        });
    }
    log.weight_hashes.push(hash_replicas(&replicas));
    log.weight_totals.push(min_total(&replicas));

    for _ in 0..scenario.steps {
        let positions: Vec<Vector2<T>> =
            states.iter().map(|s| planar_position(model, s)).collect();
        let velocities: Vec<Vector2<T>> =
            states.iter().map(|s| planar_velocity(model, s)).collect();

        // Decide and step each agent against the shared snapshot.
        let mut decisions: Vec<Decision<T>> = Vec::with_capacity(n_agents);
        let mut new_states: Vec<AgentState<T>> = Vec::with_capacity(n_agents);
        for i in 0..n_agents {
            let pos = positions[i];
            let replan = match &goals[i] {
                None => true,
                Some(g) => {
                    (pos - g.position).norm() <= scenario.planner.goal_tol
                        || replicas[i].weights()[g.index] == T::zero()
                }
            };
            if replan {
                match plan_goal(&replicas[i], &pos, &scenario.planner) {
                    Ok(g) => goals[i] = Some(g),
                    // Nothing left to cover: park at the last goal (or in
                    // place when there never was one).
                    Err(CoverageError::FieldExhausted) => {}
                    Err(e) => {
                        return Err(SimError::ScenarioInvalid {
                            reason: format!("planning failed: {e}"),
                        })
                    }
                };
            }
            let target = goals[i].as_ref().map_or(pos, |g| g.position);
            let u_full = nominal_control(model, &scenario.limits, &scenario.gains, &states[i].x, &target);
            let nominal = Vector2::new(u_full[0], u_full[1]);
            let disks = other_disks(&positions, i, scenario.inter_agent_radius);

            let decision = match scenario.filter_mode {
                FilterMode::Cbf => {
                    match build_problem(
                        model,
                        &scenario.limits,
                        &states[i],
                        p_deg,
                        &scenario.obstacles,
                        &disks,
                    ) {
                        Ok(problem) => {
                            let res = filter_input(&problem, &nominal, &scenario.cbf);
                            Decision {
                                nominal,
                                filtered: res.input,
                                status: res.status.into(),
                                min_h: Some(res.worst_h),
                            }
                        }
                        // The input-independent prediction is already in
                        // contact; no constraint exists. Apply the nominal
                        // input and flag the step.
                        Err(_) => Decision {
                            nominal,
                            filtered: nominal,
                            status: StepStatus::MinimalViolation,
                            min_h: None,
                        },
                    }
                }
                FilterMode::Apf => {
                    let filtered = apf_filter(
                        &scenario.obstacles,
                        &disks,
                        &pos,
                        &velocities[i],
                        &nominal,
                        &scenario.apf,
                        &scenario.limits,
                    );
                    let status = if filtered == nominal {
                        StepStatus::Unmodified
                    } else {
                        StepStatus::Modified
                    };
                    Decision { nominal, filtered, status, min_h: None }
                }
                FilterMode::None => Decision {
                    nominal,
                    filtered: nominal,
                    status: StepStatus::Unmodified,
                    min_h: None,
                },
            };
            let u = DVector::from_vec(vec![decision.filtered.x, decision.filtered.y]);
            new_states.push(step(model, &scenario.limits, &states[i], &u).state);
            decisions.push(decision);
        }
        states = new_states;

        // Log the realized states and drain each agent's own replica.
        let new_positions: Vec<Vector2<T>> =
            states.iter().map(|s| planar_position(model, s)).collect();
        for (i, decision) in decisions.into_iter().enumerate() {
            let min_h = decision.min_h.unwrap_or_else(|| {
                let disks = other_disks(&new_positions, i, scenario.inter_agent_radius);
                position_margin(&scenario.obstacles, &disks, &new_positions[i])
            });
            log.agents[i].push(AgentRecord {
                state: states[i].clone(),
                position: new_positions[i],
                velocity: planar_velocity(model, &states[i]),
                nominal_input: decision.nominal,
                filtered_input: decision.filtered,
                status: decision.status,
                min_h,
            });
            replicas[i] = update_weights(&replicas[i], &new_positions[i], &scenario.planner, model.dt)
                .expect("validated planner parameters");
        }

        // Synchronous sharing round: agents within both comm ranges land in
        // one component and leave with identical replicas.
        merge_round(&mut replicas, &new_positions, &scenario.agents);
        log.weight_hashes.push(hash_replicas(&replicas));
        log.weight_totals.push(min_total(&replicas));
    }

    log.final_field = SampleField::new(scenario.field.points().to_vec(), min_weights(&replicas))
        .expect("weights stay finite and nonnegative");
    let metrics = audit(&log, scenario);
    Ok((log, metrics))
}

/// Merges replicas within each connected communication component. An edge
/// requires the distance to be within both agents' ranges.
fn merge_round<T: Real>(
    replicas: &mut [SampleField<T>],
    positions: &[Vector2<T>],
    agents: &[AgentInit<T>],
) {
    let n = replicas.len();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], mut i: usize) -> usize {
        while root[i] != i {
            root[i] = root[root[i]];
            i = root[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let reach = agents[i].comm_range.min(agents[j].comm_range);
            if (positions[i] - positions[j]).norm() <= reach {
                let (ri, rj) = (find(&mut root, i), find(&mut root, j));
                root[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    for r in 0..n {
        if find(&mut root, r) != r {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&i| find(&mut root, i) == r).collect();
        if members.len() < 2 {
            continue;
        }
        let mut merged = replicas[members[0]].clone();
        for &i in &members[1..] {
            merged = merge_weights(&merged, &replicas[i]).expect("replicas share the point set");
        }
        for &i in &members {
            replicas[i] = merged.clone();
        }
    }
}

/// Order-2 transport distance between the uniform distribution over every
/// logged position (all agents, all steps) and the reference field.
pub fn coverage_metric<T: Real>(
    log: &TrajectoryLog<T>,
    reference: &SampleField<T>,
) -> Result<T, SimError> {
    let mut visited = Vec::new();
    for rows in &log.agents {
        for record in rows {
            visited.push(record.position);
        }
    }
    let visited = WeightedPoints::uniform(visited)?;
    let target = WeightedPoints::new(reference.points().to_vec(), reference.weights().to_vec())?;
    Ok(wasserstein(&visited, &target, Order::Two)?)
}

/// Computes episode metrics from the log alone, using the true geometric
/// containment predicate for violations so the audit is independent of the
/// filter's own reporting.
pub fn audit<T: Real>(log: &TrajectoryLog<T>, scenario: &Scenario<T>) -> Metrics<T> {
    let rows = log.agents.first().map_or(0, Vec::len);
    let mut min_d: Option<T> = None;
    let mut violations = 0usize;
    for t in 0..rows {
        for i in 0..log.agents.len() {
            for j in (i + 1)..log.agents.len() {
                let d = (log.agents[i][t].position - log.agents[j][t].position).norm();
                min_d = Some(min_d.map_or(d, |m| m.min(d)));
            }
        }
        let hit = log.agents.iter().any(|rows| {
            scenario.obstacles.iter().any(|obs| obs.contains(&rows[t].position))
        });
        if hit {
            violations += 1;
        }
    }
    let minimal_violation_steps = log
        .agents
        .iter()
        .flatten()
        .filter(|r| r.status == StepStatus::MinimalViolation)
        .count();
    let wasserstein_coverage = coverage_metric(log, &scenario.field)
        .expect("a run log is nonempty and the field carries weight");
    Metrics {
        wasserstein_coverage,
        min_inter_agent_distance: min_d,
        obstacle_violations: violations,
        minimal_violation_steps,
        total_weight_remaining: log.final_field.total_weight(),
    }
}

fn quadrotor_at(px: f64, py: f64, vx: f64, vy: f64) -> AgentState<f64> {
    let mut x = DVector::zeros(8);
    x[quadrotor_state::PX] = px;
    x[quadrotor_state::VX] = vx;
    x[quadrotor_state::PY] = py;
    x[quadrotor_state::VY] = vy;
    AgentState::new(x)
}

fn stock_model() -> LinearModel<f64> {
    build_quadrotor(0.1, 9.81, 1.0).expect("stock quadrotor parameters")
}

fn stock_limits() -> ModelLimits<f64> {
    ModelLimits::quadrotor(10.0, 1.75, 1.5f64.to_radians(), 15.0f64.to_radians())
}

// Cruise speed scales with kp/kd; the angle limit caps realized braking at
// about 0.26 m/s^2, so approaches much above 0.8 m/s outrun the filter.
fn stock_gains(model: &LinearModel<f64>) -> ControllerGains<f64> {
    ControllerGains::quadrotor(model, 0.06, 2.2, 12.0, 5.7).expect("stock gains are stable")
}

fn stock_planner() -> PlannerParams<f64> {
    PlannerParams {
        n_lsp: 4,
        horizon: 2,
        discount: 0.8,
        cov_radius: 1.0,
        cov_rate: 2.0,
        goal_tol: 0.5,
    }
}

fn stock_apf() -> ApfGains<f64> {
    ApfGains { k_rep: 2.0, d_0: 2.5, torque_per_force: 2.0 }
}

/// Bundled three-agent demo: one lane of sample points per agent, each lane
/// blocked by its own obstacle. Lane centers sit 8 meters apart and every
/// obstacle is offset so the cheapest dodge moves away from the neighboring
/// lane, which keeps the radius-5 mutual exclusion disks inactive. Used for
/// the filter-versus-baseline comparison; switch `filter_mode` for the
/// baseline run.
pub fn three_agent_demo() -> Scenario<f64> {
    let model = stock_model();
    let gains = stock_gains(&model);
    let agents = vec![
        AgentInit { state: quadrotor_at(0.0, 8.0, 0.0, 0.0), comm_range: 100.0 },
        AgentInit { state: quadrotor_at(0.0, 0.0, 0.0, 0.0), comm_range: 100.0 },
        AgentInit { state: quadrotor_at(0.0, -8.0, 0.0, 0.0), comm_range: 100.0 },
    ];
    let obstacles = vec![
        Obstacle::circle(Vector2::new(7.0, 7.4), 2.0, 0).expect("valid circle"),
        Obstacle::circle(Vector2::new(7.0, -1.6), 1.2, 1).expect("valid circle"),
        Obstacle::rect(Vector2::new(7.0, -7.4), 4.0, 2.0, 2).expect("valid rect"),
    ];
    let (points, weights): (Vec<Vector2<f64>>, Vec<f64>) = [
        (11.0, 8.8, 0.6),
        (13.0, 8.5, 1.0),
        (16.5, 9.0, 0.8),
        (19.0, 8.0, 0.5),
        (13.0, 0.0, 1.0),
        (15.5, 0.7, 0.7),
        (18.0, -0.7, 0.5),
        (21.0, 0.3, 0.8),
        (11.0, -8.8, 0.6),
        (13.0, -8.5, 1.0),
        (16.5, -9.0, 0.8),
        (19.0, -8.0, 0.5),
    ]
    .iter()
    .map(|&(x, y, w)| (Vector2::new(x, y), w))
    .unzip();
    Scenario {
        limits: stock_limits(),
        agents,
        obstacles,
        field: SampleField::new(points, weights).expect("valid field"),
        planner: stock_planner(),
        gains,
        cbf: CbfParams::default(),
        apf: stock_apf(),
        filter_mode: FilterMode::Cbf,
        steps: 1800,
        inter_agent_radius: 5.0,
        collision_threshold: 5.0,
        model,
    }
}

/// Single agent sent head-on at a wall with the goal behind it; jitter
/// moves the wall and goals a little per seed. Pass `k_v = 0` for the
/// position-only barrier.
pub fn wall_episode(seed: u64, k_v: f64) -> Scenario<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = stock_model();
    let gains = stock_gains(&model);
    let start_x = rng.gen_range(-0.5..0.5);
    let start_y = rng.gen_range(-0.5..0.5);
    let wall_x = 14.0 + rng.gen_range(-1.0..1.0);
    let wall_y = rng.gen_range(-1.0..1.0);
    // Goals deep behind the wall keep the approach near half a meter per
    // second: enough to outrun a position-only barrier, still within the
    // braking envelope when approach speed is charged.
    let goal_x = 30.0 + rng.gen_range(0.0..2.0);
    let goal_dy = 1.5 + rng.gen_range(0.0..0.5);
    let wall = Obstacle::rect(Vector2::new(wall_x, wall_y), 2.0, 10.0, 0).expect("valid rect");
    let points = vec![
        Vector2::new(goal_x, wall_y + goal_dy),
        Vector2::new(goal_x, wall_y - goal_dy),
    ];
    Scenario {
        limits: stock_limits(),
        agents: vec![AgentInit {
            state: quadrotor_at(start_x, start_y, 0.0, 0.0),
            comm_range: 100.0,
        }],
        obstacles: vec![wall],
        field: SampleField::new(points, vec![1.0, 1.0]).expect("valid field"),
        planner: stock_planner(),
        gains,
        cbf: CbfParams { k_v, ..CbfParams::default() },
        apf: stock_apf(),
        filter_mode: FilterMode::Cbf,
        steps: 420,
        inter_agent_radius: 5.0,
        collision_threshold: 5.0,
        model,
    }
}

/// Single agent, a goal cluster 12 to 18 meters out, and one or two
/// obstacles dropped on the way there. Placements keep the start clear by
/// two meters and the sample points clear by one and a half, so generated
/// scenarios always validate.
pub fn random_obstacle_episode(seed: u64) -> Scenario<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = stock_model();
    let gains = stock_gains(&model);
    let start = Vector2::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let v0 = Vector2::new(rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15));
    let heading = rng.gen_range(0.0..std::f64::consts::TAU);
    let range = rng.gen_range(12.0..18.0);
    let goal = start + Vector2::new(heading.cos(), heading.sin()) * range;

    let mut points = Vec::new();
    let mut weights = Vec::new();
    let n_points = rng.gen_range(2..=3);
    for _ in 0..n_points {
        points.push(goal + Vector2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)));
        weights.push(rng.gen_range(0.6..1.2));
    }

    let clear_of = |center: Vector2<f64>, extent: f64, points: &[Vector2<f64>], start: &Vector2<f64>| {
        (center - start).norm() >= extent + 2.0
            && points.iter().all(|p| (center - p).norm() >= extent + 1.5)
    };
    let mut obstacles = Vec::new();
    let n_obs = rng.gen_range(1..=2);
    for id in 0..n_obs {
        // Bounded resampling keeps generation deterministic per seed.
        for _ in 0..100 {
            let along = rng.gen_range(0.35..0.75);
            let lateral = rng.gen_range(-2.0..2.0);
            let dir = (goal - start) / range;
            let center = start + dir * (along * range) + Vector2::new(-dir.y, dir.x) * lateral;
            let (obstacle, extent) = if rng.gen_bool(0.5) {
                let r = rng.gen_range(0.8..2.0);
                (Obstacle::circle(center, r, id).expect("valid circle"), r)
            } else {
                let l: f64 = rng.gen_range(1.5..3.5);
                let w: f64 = rng.gen_range(1.5..3.5);
                let extent = 0.5 * (l * l + w * w).sqrt();
                (Obstacle::rect(center, l, w, id).expect("valid rect"), extent)
            };
            let apart = obstacles
                .iter()
                .all(|o: &Obstacle<f64>| (o.center - center).norm() >= 6.0);
            if clear_of(center, extent, &points, &start) && apart {
                obstacles.push(obstacle);
                break;
            }
        }
    }

    Scenario {
        limits: stock_limits(),
        agents: vec![AgentInit {
            state: quadrotor_at(start.x, start.y, v0.x, v0.y),
            comm_range: 100.0,
        }],
        obstacles,
        field: SampleField::new(points, weights).expect("valid field"),
        planner: stock_planner(),
        gains,
        cbf: CbfParams::default(),
        apf: stock_apf(),
        filter_mode: FilterMode::Cbf,
        steps: 150,
        inter_agent_radius: 5.0,
        collision_threshold: 5.0,
        model,
    }
}
