//! Barrier-based input filtering against circular and rectangular obstacles.
//!
//! Safety is expressed on the predicted position one relative degree ahead,
//! where the current input first acts. Obstacle geometry (boundary radius,
//! outward normal, clearance budget) is frozen at the predicted position one
//! step earlier, which no current input can change, so each obstacle
//! contributes two constraints that are quadratic and convex in the input: a
//! position barrier (squared clearance) and a velocity-augmented barrier
//! that additionally charges approach speed against remaining clearance.
//!
//! The filter returns the feasible input closest to the nominal one, or the
//! least-violating input when the constraint set and input box do not
//! intersect. A potential-field filter with no certificates is included as a
//! baseline.

use nalgebra::{DVector, Matrix2, Vector2};
use thiserror::Error;

use crate::dynamics::{output_predictor, AgentState, DynamicsError, LinearModel, ModelLimits};
use crate::geometry::{GeometryError, Obstacle};
use crate::real::{real, Real};

/// Constraints closer to zero than this at the current iterate join the
/// working set of the deviation-minimizing solve.
pub const NEAR_ACTIVE_TOL: f64 = 1e-3;
/// An input is accepted as safe when every exact constraint clears this
/// (tiny, negative) floor.
pub const ACCEPT_TOL: f64 = 1e-9;
/// Feasibility slack for candidate points inside the linearized subproblem.
pub const QP_FEAS_TOL: f64 = 1e-9;
/// Iteration cap for the linearize-and-project loop.
pub const SQP_MAX_ITERS: usize = 10;
/// Side length of the exact fallback grid.
pub const GRID_POINTS: usize = 41;
/// Refinement rounds of the fallback grid, each zooming to one cell width.
pub const GRID_REFINEMENTS: usize = 3;
/// Distances below this are clamped before entering potential-field terms.
pub const APF_DISTANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SafetyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("filter needs a planar model with two inputs")]
    IncompatibleModel,
    #[error("safety parameter {0} is out of range")]
    InvalidParameter(&'static str),
    /// The input-independent predicted position already touches an obstacle;
    /// no constraint on the current input can be formed.
    #[error("frozen position is inside or on obstacle {index}")]
    UnsafeState { index: usize },
    /// At the obstacle boundary the clearance-per-speed budget vanishes; an
    /// inward velocity cannot be certified at all.
    #[error("boundary denominator vanished with inward velocity")]
    BoundaryDenominator,
}

/// Barrier parameters: `k_v` weighs approach speed against clearance
/// (zero disables the velocity term), `eps_den` floors the clearance
/// denominator. The barrier comparison is against plain h (identity
/// class-K), so constraints read h ≥ 0 at the prediction horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct CbfParams<T: Real> {
    pub k_v: T,
    pub eps_den: T,
}

impl<T: Real> Default for CbfParams<T> {
    fn default() -> Self {
        Self { k_v: real(5.0), eps_den: real(1e-6) }
    }
}

impl<T: Real> CbfParams<T> {
    pub fn validate(&self) -> Result<(), SafetyError> {
        if !(self.k_v >= T::zero()) {
            return Err(SafetyError::InvalidParameter("k_v"));
        }
        if !(self.eps_den > T::zero()) {
            return Err(SafetyError::InvalidParameter("eps_den"));
        }
        Ok(())
    }
}

/// Squared clearance of `y` outside the obstacle, with the boundary radius
/// frozen at `y_prev`: positive outside, zero on, negative inside.
pub fn position_barrier<T: Real>(
    obs: &Obstacle<T>,
    y: &Vector2<T>,
    y_prev: &Vector2<T>,
) -> Result<T, SafetyError> {
    let radius = obs.boundary_radius(y_prev)?;
    Ok((y - obs.center).norm_squared() - radius * radius)
}

/// Clearance budget at `y_prev`: the radial gap fraction times the normal
/// component of the offset. Strictly positive outside the obstacle, zero on
/// the boundary, negative inside.
fn clearance_budget<T: Real>(obs: &Obstacle<T>, y_prev: &Vector2<T>) -> Result<T, SafetyError> {
    let geo = obs.boundary_geometry(y_prev)?;
    let dvec = y_prev - obs.center;
    let dist = dvec.norm();
    Ok(((dist - geo.radius) / dist) * geo.normal.dot(&dvec))
}

/// Position barrier plus a speed charge: approach velocity (negative normal
/// component) is divided by the clearance budget, so the same speed costs
/// more the closer the agent is. Errors when the budget has vanished and the
/// velocity still points inward, because no finite charge is honest there.
pub fn velocity_barrier<T: Real>(
    obs: &Obstacle<T>,
    y: &Vector2<T>,
    y_prev: &Vector2<T>,
    v_prev: &Vector2<T>,
    params: &CbfParams<T>,
) -> Result<T, SafetyError> {
    let h1 = position_barrier(obs, y, y_prev)?;
    if params.k_v == T::zero() {
        return Ok(h1);
    }
    let geo = obs.boundary_geometry(y_prev)?;
    let budget = clearance_budget(obs, y_prev)?;
    let vel_term = params.k_v * geo.normal.dot(v_prev);
    if budget < params.eps_den && vel_term < T::zero() {
        return Err(SafetyError::BoundaryDenominator);
    }
    Ok(h1 + vel_term / budget.max(params.eps_den))
}

/// Geometry of one obstacle frozen at the input-independent predicted
/// position: enough to evaluate both barriers as functions of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenObstacle<T: Real> {
    pub center: Vector2<T>,
    /// Boundary radius toward the frozen position.
    pub radius: T,
    /// Outward unit normal at the frozen position's bearing.
    pub normal: Vector2<T>,
    /// Clearance budget at the frozen position (positive outside).
    pub budget: T,
}

/// The filter's view of one agent for one step: affine prediction maps and
/// frozen obstacle geometry, all expressed on the current input. Constraint
/// `2 i` is the position barrier of obstacle `i`, constraint `2 i + 1` its
/// velocity barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyProblem<T: Real> {
    /// Predicted position at the horizon: y(u) = y_offset + y_gain u.
    pub y_offset: Vector2<T>,
    pub y_gain: Matrix2<T>,
    /// Predicted velocity one step before the horizon: v(u) = v_offset + v_gain u.
    pub v_offset: Vector2<T>,
    pub v_gain: Matrix2<T>,
    /// Predicted position one step before the horizon (input independent).
    pub y_frozen: Vector2<T>,
    pub obstacles: Vec<FrozenObstacle<T>>,
    /// Symmetric per-channel input bounds.
    pub input_max: Vector2<T>,
}

impl<T: Real> SafetyProblem<T> {
    pub fn predicted_position(&self, u: &Vector2<T>) -> Vector2<T> {
        self.y_offset + self.y_gain * u
    }

    pub fn predicted_velocity(&self, u: &Vector2<T>) -> Vector2<T> {
        self.v_offset + self.v_gain * u
    }

    /// Two constraints per obstacle.
    pub fn constraint_count(&self) -> usize {
        2 * self.obstacles.len()
    }

    /// Velocity weight of constraint `index`: zero for position barriers,
    /// k_v/budget times the frozen normal for velocity barriers.
    fn vel_coef(&self, index: usize, params: &CbfParams<T>) -> Vector2<T> {
        if index % 2 == 0 || params.k_v == T::zero() {
            return Vector2::zeros();
        }
        let obs = &self.obstacles[index / 2];
        obs.normal * (params.k_v / obs.budget.max(params.eps_den))
    }

    pub fn constraint_value(&self, index: usize, u: &Vector2<T>, params: &CbfParams<T>) -> T {
        let obs = &self.obstacles[index / 2];
        let dy = self.predicted_position(u) - obs.center;
        let h1 = dy.norm_squared() - obs.radius * obs.radius;
        h1 + self.vel_coef(index, params).dot(&self.predicted_velocity(u))
    }

    pub fn constraint_gradient(&self, index: usize, u: &Vector2<T>, params: &CbfParams<T>) -> Vector2<T> {
        let obs = &self.obstacles[index / 2];
        let dy = self.predicted_position(u) - obs.center;
        self.y_gain.transpose() * dy * real::<T>(2.0)
            + self.v_gain.transpose() * self.vel_coef(index, params)
    }

    /// Smallest constraint value at `u`; +inf when there are no constraints.
    pub fn min_h(&self, u: &Vector2<T>, params: &CbfParams<T>) -> T {
        let mut m = real::<T>(f64::INFINITY);
        for i in 0..self.constraint_count() {
            m = m.min(self.constraint_value(i, u, params));
        }
        m
    }

    pub fn clamp(&self, u: &Vector2<T>) -> Vector2<T> {
        Vector2::new(
            nalgebra::clamp(u.x, -self.input_max.x, self.input_max.x),
            nalgebra::clamp(u.y, -self.input_max.y, self.input_max.y),
        )
    }
}

/// Builds the filter problem for one agent: exact prediction maps at the
/// model's relative degree `p_deg`, plus frozen geometry per obstacle
/// (statics first, then dynamics; indices follow that order). Errors with
/// [`SafetyError::UnsafeState`] when the frozen position already touches an
/// obstacle, because no constraint on the current input exists there.
pub fn build_problem<T: Real>(
    model: &LinearModel<T>,
    limits: &ModelLimits<T>,
    state: &AgentState<T>,
    p_deg: usize,
    static_obs: &[Obstacle<T>],
    dynamic_obs: &[Obstacle<T>],
) -> Result<SafetyProblem<T>, SafetyError> {
    if model.p() != 2 || model.m() != 2 || limits.input_max.len() != 2 {
        return Err(SafetyError::IncompatibleModel);
    }
    let pred = output_predictor(model, state, p_deg)?;
    let to_vec2 = |v: &DVector<T>| Vector2::new(v[0], v[1]);
    let to_mat2 =
        |m: &nalgebra::DMatrix<T>| Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let y_frozen = to_vec2(&pred.y_frozen);

    let mut obstacles = Vec::with_capacity(static_obs.len() + dynamic_obs.len());
    for (index, obs) in static_obs.iter().chain(dynamic_obs.iter()).enumerate() {
        if obs.contains(&y_frozen) {
            return Err(SafetyError::UnsafeState { index });
        }
        let geo = obs.boundary_geometry(&y_frozen)?;
        obstacles.push(FrozenObstacle {
            center: obs.center,
            radius: geo.radius,
            normal: geo.normal,
            budget: clearance_budget(obs, &y_frozen)?,
        });
    }

    Ok(SafetyProblem {
        y_offset: to_vec2(&pred.y_offset),
        y_gain: to_mat2(&pred.y_gain),
        v_offset: to_vec2(&pred.v_offset),
        v_gain: to_mat2(&pred.v_gain),
        y_frozen,
        obstacles,
        input_max: Vector2::new(limits.input_max[0], limits.input_max[1]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterStatus {
    /// The nominal input already satisfied every constraint.
    Unmodified,
    /// A feasible input was found; the returned one minimizes deviation.
    Modified,
    /// No input in the box satisfies all constraints; the returned input
    /// maximizes the worst constraint instead.
    MinimalViolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult<T: Real> {
    pub input: Vector2<T>,
    pub status: FilterStatus,
    /// Exact worst constraint value at the returned input; +inf with no
    /// constraints, negative only for minimal-violation results.
    pub worst_h: T,
}

/// A half-plane a . u >= b.
struct HalfPlane<T: Real> {
    a: Vector2<T>,
    b: T,
}

/// Exact minimizer of |u - target|^2 over an intersection of half-planes,
/// by enumerating candidate active sets (interior point, single-constraint
/// projections, pairwise intersections). Returns None when the intersection
/// is empty. Deterministic: ties keep the earliest candidate.
fn solve_qp<T: Real>(rows: &[HalfPlane<T>], target: &Vector2<T>) -> Option<Vector2<T>> {
    let feasible = |u: &Vector2<T>| {
        rows.iter().all(|r| {
            let tol = real::<T>(QP_FEAS_TOL) * T::one().max(r.b.abs());
            r.a.dot(u) >= r.b - tol
        })
    };
    let mut best: Option<(T, Vector2<T>)> = None;
    let mut consider = |u: Vector2<T>| {
        if feasible(&u) {
            let dev = (u - target).norm_squared();
            if best.as_ref().map_or(true, |(bd, _)| dev < *bd) {
                best = Some((dev, u));
            }
        }
    };
    consider(*target);
    for r in rows {
        let n2 = r.a.norm_squared();
        if n2 > real::<T>(1e-24) {
            consider(target + r.a * ((r.b - r.a.dot(target)) / n2));
        }
    }
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let (a1, a2) = (rows[i].a, rows[j].a);
            let det = a1.x * a2.y - a1.y * a2.x;
            if det.abs() > real::<T>(1e-14) * a1.norm() * a2.norm() {
                consider(Vector2::new(
                    (rows[i].b * a2.y - rows[j].b * a1.y) / det,
                    (a1.x * rows[j].b - a2.x * rows[i].b) / det,
                ));
            }
        }
    }
    best.map(|(_, u)| u)
}

/// Exhaustive fallback: scans the input box on a grid with refinement
/// rounds, keeping the exactly feasible point of least deviation, or the
/// least-violating point when none is feasible.
fn grid_search<T: Real>(
    problem: &SafetyProblem<T>,
    u_ref: &Vector2<T>,
    params: &CbfParams<T>,
) -> FilterResult<T> {
    let n = GRID_POINTS;
    let mut lo = -problem.input_max;
    let mut hi = problem.input_max;
    let mut best_feasible: Option<(T, Vector2<T>, T)> = None;
    let mut best_any: Option<(T, Vector2<T>)> = None;
    for _ in 0..=GRID_REFINEMENTS {
        let steps = real::<T>((n - 1) as f64);
        let cell = Vector2::new((hi.x - lo.x) / steps, (hi.y - lo.y) / steps);
        for ix in 0..n {
            for iy in 0..n {
                let u = Vector2::new(
                    lo.x + cell.x * real::<T>(ix as f64),
                    lo.y + cell.y * real::<T>(iy as f64),
                );
                let mh = problem.min_h(&u, params);
                if mh >= T::zero() {
                    let dev = (u - u_ref).norm_squared();
                    if best_feasible.as_ref().map_or(true, |(bd, _, _)| dev < *bd) {
                        best_feasible = Some((dev, u, mh));
                    }
                }
                if best_any.as_ref().map_or(true, |(bh, _)| mh > *bh) {
                    best_any = Some((mh, u));
                }
            }
        }
        let center = match &best_feasible {
            Some((_, u, _)) => *u,
            None => best_any.as_ref().expect("grid is nonempty").1,
        };
        lo = Vector2::new(
            (center.x - cell.x).max(-problem.input_max.x),
            (center.y - cell.y).max(-problem.input_max.y),
        );
        hi = Vector2::new(
            (center.x + cell.x).min(problem.input_max.x),
            (center.y + cell.y).min(problem.input_max.y),
        );
    }
    match best_feasible {
        Some((_, input, worst_h)) => {
            FilterResult { input, status: FilterStatus::Modified, worst_h }
        }
        None => {
            let (worst_h, input) = best_any.expect("grid is nonempty");
            FilterResult { input, status: FilterStatus::MinimalViolation, worst_h }
        }
    }
}

/// Minimal-deviation safety filter.
///
/// The nominal input (clamped into the box) passes through untouched when
/// it already satisfies every exact constraint. Otherwise a short
/// linearize-and-project loop searches for the closest feasible input; the
/// linearizations are global under-estimators of the convex constraints, so
/// every subproblem-feasible point is exactly feasible for the constraints
/// in the working set. If the loop produces no exactly feasible input, an
/// exhaustive grid fallback decides between a feasible correction and a
/// certified minimal violation. Fully deterministic.
pub fn filter_input<T: Real>(
    problem: &SafetyProblem<T>,
    u_nom: &Vector2<T>,
    params: &CbfParams<T>,
) -> FilterResult<T> {
    let u_ref = problem.clamp(u_nom);
    let mh0 = problem.min_h(&u_ref, params);
    if mh0 >= T::zero() {
        return FilterResult { input: u_ref, status: FilterStatus::Unmodified, worst_h: mh0 };
    }

    let near = real::<T>(NEAR_ACTIVE_TOL);
    let accept = real::<T>(ACCEPT_TOL);
    let mut working: Vec<usize> = Vec::new();
    let mut u_t = u_ref;
    let mut best: Option<(T, Vector2<T>, T)> = None;
    for _ in 0..SQP_MAX_ITERS {
        let mut added = false;
        for i in 0..problem.constraint_count() {
            if problem.constraint_value(i, &u_t, params) < near && !working.contains(&i) {
                working.push(i);
                added = true;
            }
        }
        working.sort_unstable();

        let mut rows: Vec<HalfPlane<T>> = working
            .iter()
            .map(|&i| {
                let g = problem.constraint_gradient(i, &u_t, params);
                HalfPlane { a: g, b: g.dot(&u_t) - problem.constraint_value(i, &u_t, params) }
            })
            .collect();
        rows.push(HalfPlane { a: Vector2::new(T::one(), T::zero()), b: -problem.input_max.x });
        rows.push(HalfPlane { a: Vector2::new(-T::one(), T::zero()), b: -problem.input_max.x });
        rows.push(HalfPlane { a: Vector2::new(T::zero(), T::one()), b: -problem.input_max.y });
        rows.push(HalfPlane { a: Vector2::new(T::zero(), -T::one()), b: -problem.input_max.y });

        let Some(u_next) = solve_qp(&rows, &u_ref) else {
            break;
        };
        let step = (u_next - u_t).norm();
        u_t = u_next;
        let mh = problem.min_h(&u_t, params);
        if mh >= -accept {
            let dev = (u_t - u_ref).norm_squared();
            if best.as_ref().map_or(true, |(bd, _, _)| dev < *bd) {
                best = Some((dev, u_t, mh));
            }
        }
        if !added && step <= real::<T>(1e-12) {
            break;
        }
    }
    if let Some((_, input, worst_h)) = best {
        return FilterResult { input, status: FilterStatus::Modified, worst_h };
    }
    grid_search(problem, &u_ref, params)
}

/// Repulsive potential-field gains: force magnitude
/// k_rep (1/d - 1/d_0) / d^2 inside influence distance d_0, zero beyond,
/// converted to torque by `torque_per_force`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApfGains<T: Real> {
    pub k_rep: T,
    pub d_0: T,
    pub torque_per_force: T,
}

impl<T: Real> ApfGains<T> {
    pub fn validate(&self) -> Result<(), SafetyError> {
        if !(self.k_rep > T::zero()) {
            return Err(SafetyError::InvalidParameter("k_rep"));
        }
        if !(self.d_0 > T::zero()) {
            return Err(SafetyError::InvalidParameter("d_0"));
        }
        if !(self.torque_per_force > T::zero()) {
            return Err(SafetyError::InvalidParameter("torque_per_force"));
        }
        Ok(())
    }
}

/// Potential-field baseline: adds a repulsive torque away from every nearby
/// obstacle boundary and clamps. Purely positional (the velocity argument is
/// accepted for interface parity and ignored by this law); no feasibility
/// reasoning and no certificates. Degenerate geometry contributions are
/// skipped.
pub fn apf_filter<T: Real>(
    static_obs: &[Obstacle<T>],
    dynamic_obs: &[Obstacle<T>],
    y: &Vector2<T>,
    _v: &Vector2<T>,
    u_nom: &Vector2<T>,
    gains: &ApfGains<T>,
    limits: &ModelLimits<T>,
) -> Vector2<T> {
    let mut force = Vector2::zeros();
    for obs in static_obs.iter().chain(dynamic_obs.iter()) {
        let Ok(geo) = obs.boundary_geometry(y) else {
            continue;
        };
        let d = (y - geo.point).norm().max(real::<T>(APF_DISTANCE_FLOOR));
        if d < gains.d_0 {
            let inv = T::one() / d;
            let inv0 = T::one() / gains.d_0;
            force += geo.normal * (gains.k_rep * (inv - inv0) * inv * inv);
        }
    }
    let u = u_nom + force * gains.torque_per_force;
    Vector2::new(
        nalgebra::clamp(u.x, -limits.input_max[0], limits.input_max[0]),
        nalgebra::clamp(u.y, -limits.input_max[1], limits.input_max[1]),
    )
}
