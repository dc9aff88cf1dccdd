//! Discrete-time linear agent models with box limits on states and inputs.
//!
//! The stock model is a planar quadrotor linearized about hover and
//! discretized by forward Euler. Each axis is a chain
//! position -> velocity -> tilt angle -> tilt rate, driven by one torque
//! input, so the position output has relative degree 4. Prediction over that
//! horizon is exact for the unsaturated model; the plant step saturates
//! states and reports that it did.

use nalgebra::{DMatrix, DVector, Vector2};
use thiserror::Error;

use crate::real::{real, Real};

/// Matrix entries at or below this magnitude count as zero when probing the
/// input-to-output delay.
pub const RELATIVE_DEGREE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("model parameter {0} must be strictly positive")]
    InvalidParameter(&'static str),
    #[error("matrix dimensions are inconsistent: {0}")]
    DimensionMismatch(&'static str),
    /// No input channel ever reaches the output; the prediction horizon is
    /// undefined.
    #[error("input never reaches the output within the state dimension")]
    NoRelativeDegree,
    #[error("prediction horizon must be at least 1")]
    InvalidHorizon,
}

/// Discrete-time linear model x+ = A x + B u with position output y = H_y x
/// and velocity output v = H_v x.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub h_y: DMatrix<T>,
    pub h_v: DMatrix<T>,
    /// Step length in seconds.
    pub dt: T,
}

impl<T: Real> LinearModel<T> {
    pub fn new(
        a: DMatrix<T>,
        b: DMatrix<T>,
        h_y: DMatrix<T>,
        h_v: DMatrix<T>,
        dt: T,
    ) -> Result<Self, DynamicsError> {
        if dt <= T::zero() {
            return Err(DynamicsError::InvalidParameter("dt"));
        }
        let n = a.nrows();
        if a.ncols() != n {
            return Err(DynamicsError::DimensionMismatch("A must be square"));
        }
        if b.nrows() != n {
            return Err(DynamicsError::DimensionMismatch("B rows must match A"));
        }
        if h_y.ncols() != n || h_v.ncols() != n {
            return Err(DynamicsError::DimensionMismatch("output maps must match A"));
        }
        if h_y.nrows() != h_v.nrows() {
            return Err(DynamicsError::DimensionMismatch(
                "position and velocity outputs must have equal dimension",
            ));
        }
        Ok(Self { a, b, h_y, h_v, dt })
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension.
    pub fn p(&self) -> usize {
        self.h_y.nrows()
    }

    /// Position output of a state.
    pub fn output_position(&self, x: &DVector<T>) -> DVector<T> {
        &self.h_y * x
    }

    /// Velocity output of a state.
    pub fn output_velocity(&self, x: &DVector<T>) -> DVector<T> {
        &self.h_v * x
    }
}

/// State layout of the planar quadrotor model: indices of the named channels
/// in the 8-dimensional state [px, vx, pitch, pitch rate, py, vy, roll,
/// roll rate].
pub mod quadrotor_state {
    pub const PX: usize = 0;
    pub const VX: usize = 1;
    pub const PITCH: usize = 2;
    pub const PITCH_RATE: usize = 3;
    pub const PY: usize = 4;
    pub const VY: usize = 5;
    pub const ROLL: usize = 6;
    pub const ROLL_RATE: usize = 7;
}

/// Planar quadrotor linearized about hover, forward-Euler discretized.
///
/// Per axis: p+ = p + dt v; v+ = v + dt g a; a+ = a + dt w; w+ = w + dt tau/J
/// where `a` is the tilt angle toward that axis and `w` its rate. Inputs are
/// the two tilt torques.
pub fn build_quadrotor<T: Real>(dt: T, gravity: T, inertia: T) -> Result<LinearModel<T>, DynamicsError> {
    if dt <= T::zero() {
        return Err(DynamicsError::InvalidParameter("dt"));
    }
    if gravity <= T::zero() {
        return Err(DynamicsError::InvalidParameter("gravity"));
    }
    if inertia <= T::zero() {
        return Err(DynamicsError::InvalidParameter("inertia"));
    }
    let mut a = DMatrix::<T>::identity(8, 8);
    for off in [0usize, 4] {
        a[(off, off + 1)] = dt;
        a[(off + 1, off + 2)] = dt * gravity;
        a[(off + 2, off + 3)] = dt;
    }
    let mut b = DMatrix::<T>::zeros(8, 2);
    b[(3, 0)] = dt / inertia;
    b[(7, 1)] = dt / inertia;
    let mut h_y = DMatrix::<T>::zeros(2, 8);
    h_y[(0, quadrotor_state::PX)] = T::one();
    h_y[(1, quadrotor_state::PY)] = T::one();
    let mut h_v = DMatrix::<T>::zeros(2, 8);
    h_v[(0, quadrotor_state::VX)] = T::one();
    h_v[(1, quadrotor_state::VY)] = T::one();
    LinearModel::new(a, b, h_y, h_v, dt)
}

/// Symmetric box limits: |u_i| <= input_max_i and |x_i| <= state_max_i,
/// with +inf marking unbounded channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelLimits<T: Real> {
    pub input_max: DVector<T>,
    pub state_max: DVector<T>,
}

impl<T: Real> ModelLimits<T> {
    /// No limits at all, for an n-state, m-input model.
    pub fn unbounded(n: usize, m: usize) -> Self {
        let inf = real::<T>(f64::INFINITY);
        Self {
            input_max: DVector::from_element(m, inf),
            state_max: DVector::from_element(n, inf),
        }
    }

    /// Quadrotor limits; angles in radians. Positions are unbounded.
    pub fn quadrotor(max_torque: T, max_speed: T, max_angle: T, max_angle_rate: T) -> Self {
        let inf = real::<T>(f64::INFINITY);
        Self {
            input_max: DVector::from_element(2, max_torque),
            state_max: DVector::from_vec(vec![
                inf,
                max_speed,
                max_angle,
                max_angle_rate,
                inf,
                max_speed,
                max_angle,
                max_angle_rate,
            ]),
        }
    }

    /// Clamps each input channel into its box.
    pub fn clamp_input(&self, u: &DVector<T>) -> DVector<T> {
        DVector::from_fn(u.len(), |i, _| {
            let m = self.input_max[i];
            nalgebra::clamp(u[i], -m, m)
        })
    }

    /// Clamps each state channel into its box.
    pub fn clamp_state(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_fn(x.len(), |i, _| {
            let m = self.state_max[i];
            nalgebra::clamp(x[i], -m, m)
        })
    }
}

/// Full state of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState<T: Real> {
    pub x: DVector<T>,
}

impl<T: Real> AgentState<T> {
    pub fn new(x: DVector<T>) -> Self {
        Self { x }
    }
}

/// Outcome of one plant step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<T: Real> {
    pub state: AgentState<T>,
    /// True when any state channel was clipped by its limit.
    pub saturated: bool,
}

/// Advances the plant one step and saturates the resulting state.
/// The input is applied as given; callers clamp it first.
pub fn step<T: Real>(
    model: &LinearModel<T>,
    limits: &ModelLimits<T>,
    state: &AgentState<T>,
    u: &DVector<T>,
) -> StepResult<T> {
    let raw = &model.a * &state.x + &model.b * u;
    let clamped = limits.clamp_state(&raw);
    let saturated = clamped != raw;
    StepResult { state: AgentState::new(clamped), saturated }
}

/// Advances the ideal linear model one step with no saturation.
pub fn step_free<T: Real>(model: &LinearModel<T>, state: &AgentState<T>, u: &DVector<T>) -> AgentState<T> {
    AgentState::new(&model.a * &state.x + &model.b * u)
}

/// Number of steps before an input first reaches the position output: the
/// smallest P >= 1 with H_y A^(P-1) B nonzero. Probes up to the state
/// dimension.
pub fn relative_degree<T: Real>(model: &LinearModel<T>) -> Result<usize, DynamicsError> {
    let n = model.n();
    let tol = real::<T>(RELATIVE_DEGREE_EPS);
    let mut power = DMatrix::<T>::identity(n, n);
    for p in 1..=n {
        let gain = &model.h_y * &power * &model.b;
        if gain.norm() > tol {
            return Ok(p);
        }
        power *= &model.a;
    }
    Err(DynamicsError::NoRelativeDegree)
}

/// Affine maps from the current input to the predicted outputs at the
/// horizon, with all later inputs zero. Exact for the unsaturated model.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPredictor<T: Real> {
    /// Position output P steps ahead: y = y_offset + y_gain u.
    pub y_offset: DVector<T>,
    pub y_gain: DMatrix<T>,
    /// Position output P-1 steps ahead; independent of the input by the
    /// definition of the relative degree.
    pub y_frozen: DVector<T>,
    /// Velocity output P-1 steps ahead: v = v_offset + v_gain u.
    pub v_offset: DVector<T>,
    pub v_gain: DMatrix<T>,
}

impl<T: Real> OutputPredictor<T> {
    pub fn predicted_position(&self, u: &DVector<T>) -> DVector<T> {
        &self.y_offset + &self.y_gain * u
    }

    pub fn frozen_velocity(&self, u: &DVector<T>) -> DVector<T> {
        &self.v_offset + &self.v_gain * u
    }
}

/// Builds the prediction maps for horizon `p_deg` from state `x`.
pub fn output_predictor<T: Real>(
    model: &LinearModel<T>,
    state: &AgentState<T>,
    p_deg: usize,
) -> Result<OutputPredictor<T>, DynamicsError> {
    if p_deg < 1 {
        return Err(DynamicsError::InvalidHorizon);
    }
    let n = model.n();
    if state.x.len() != n {
        return Err(DynamicsError::DimensionMismatch("state length must match A"));
    }
    // a_pm1 = A^(P-1); the input enters the frozen velocity through A^(P-2).
    let mut a_pm2 = DMatrix::<T>::identity(n, n);
    for _ in 0..p_deg.saturating_sub(2) {
        a_pm2 *= &model.a;
    }
    let a_pm1 = if p_deg >= 2 { &a_pm2 * &model.a } else { DMatrix::identity(n, n) };
    let a_p = &a_pm1 * &model.a;
    let v_gain = if p_deg >= 2 {
        &model.h_v * &a_pm2 * &model.b
    } else {
        DMatrix::zeros(model.h_v.nrows(), model.m())
    };
    Ok(OutputPredictor {
        y_offset: &model.h_y * &a_p * &state.x,
        y_gain: &model.h_y * &a_pm1 * &model.b,
        y_frozen: &model.h_y * &a_pm1 * &state.x,
        v_offset: &model.h_v * &a_pm1 * &state.x,
        v_gain,
    })
}

/// Predicted outputs for one concrete input.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPrediction<T: Real> {
    /// Position output P steps ahead.
    pub y_pred: DVector<T>,
    /// Position output P-1 steps ahead (input independent).
    pub y_frozen: DVector<T>,
    /// Velocity output P-1 steps ahead.
    pub v_frozen: DVector<T>,
}

/// Predicts outputs at the horizon for input `u` now and zero afterwards.
/// No saturation is applied.
pub fn predict_outputs<T: Real>(
    model: &LinearModel<T>,
    state: &AgentState<T>,
    p_deg: usize,
    u: &DVector<T>,
) -> Result<OutputPrediction<T>, DynamicsError> {
    let pred = output_predictor(model, state, p_deg)?;
    Ok(OutputPrediction {
        y_pred: pred.predicted_position(u),
        y_frozen: pred.y_frozen.clone(),
        v_frozen: pred.frozen_velocity(u),
    })
}

/// Convenience: the planar position of a quadrotor state.
pub fn planar_position<T: Real>(model: &LinearModel<T>, state: &AgentState<T>) -> Vector2<T> {
    let y = model.output_position(&state.x);
    Vector2::new(y[0], y[1])
}

/// Convenience: the planar velocity of a quadrotor state.
pub fn planar_velocity<T: Real>(model: &LinearModel<T>, state: &AgentState<T>) -> Vector2<T> {
    let v = model.output_velocity(&state.x);
    Vector2::new(v[0], v[1])
}
