//! Density-driven coverage: weighted sample fields, goal planning, weight
//! decay, and the nominal tracking controller.
//!
//! Agents score sample points by distance divided by weight, so heavy points
//! attract from farther away. The planner picks a shortlist of candidates,
//! enumerates ordered visit sequences over a short horizon with geometric
//! discounting, and commits only to the first stop. Covered weight decays
//! linearly inside the coverage radius; replicas held by different agents
//! reconcile by element-wise minimum, which keeps the merge idempotent,
//! commutative, and monotone.

use nalgebra::{DMatrix, DVector, Vector2};
use thiserror::Error;

use crate::dynamics::{LinearModel, ModelLimits};
use crate::real::{is_finite, Real};

#[derive(Debug, Error, PartialEq)]
pub enum CoverageError {
    #[error("field points and weights lengths differ: {points} vs {weights}")]
    LengthMismatch { points: usize, weights: usize },
    #[error("field entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("field weight {index} is negative")]
    NegativeWeight { index: usize },
    #[error("planner parameter {0} is out of range")]
    InvalidParameter(&'static str),
    #[error("weight must be positive for a distance-per-weight score")]
    ZeroWeight,
    #[error("no sample point has positive weight")]
    FieldExhausted,
    #[error("fields cover different sample points")]
    FieldMismatch,
    #[error("gain matrix does not fit the model: {0}")]
    IncompatibleModel(&'static str),
    #[error("closed loop is unstable: spectral radius {spectral_radius}")]
    UnstableGains { spectral_radius: f64 },
}

/// Weighted sample points to be covered. Weights are nonnegative and finite;
/// the version counter increments on every functional update so replicas can
/// be told apart in logs.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleField<T: Real> {
    points: Vec<Vector2<T>>,
    weights: Vec<T>,
    version: u64,
}

impl<T: Real> SampleField<T> {
    pub fn new(points: Vec<Vector2<T>>, weights: Vec<T>) -> Result<Self, CoverageError> {
        if points.len() != weights.len() {
            return Err(CoverageError::LengthMismatch {
                points: points.len(),
                weights: weights.len(),
            });
        }
        for (index, (p, w)) in points.iter().zip(&weights).enumerate() {
            if !is_finite(p.x) || !is_finite(p.y) || !is_finite(*w) {
                return Err(CoverageError::NonFinite { index });
            }
            if *w < T::zero() {
                return Err(CoverageError::NegativeWeight { index });
            }
        }
        Ok(Self { points, weights, version: 0 })
    }

    pub fn points(&self) -> &[Vector2<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> T {
        let mut t = T::zero();
        for w in &self.weights {
            t += *w;
        }
        t
    }
}

/// Planner and coverage parameters.
///
/// `n_lsp` candidates are shortlisted, visit sequences of length `horizon`
/// are scored with discount factor `discount`, and weight drains at
/// `cov_rate` per second inside `cov_radius`. A goal counts as reached
/// within `goal_tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams<T: Real> {
    pub n_lsp: usize,
    pub horizon: usize,
    pub discount: T,
    pub cov_radius: T,
    pub cov_rate: T,
    pub goal_tol: T,
}

impl<T: Real> PlannerParams<T> {
    pub fn validate(&self) -> Result<(), CoverageError> {
        if self.n_lsp < 1 {
            return Err(CoverageError::InvalidParameter("n_lsp"));
        }
        if self.horizon < 1 {
            return Err(CoverageError::InvalidParameter("horizon"));
        }
        if !(self.discount > T::zero() && self.discount <= T::one()) {
            return Err(CoverageError::InvalidParameter("discount"));
        }
        if !(self.cov_radius > T::zero()) {
            return Err(CoverageError::InvalidParameter("cov_radius"));
        }
        if !(self.cov_rate > T::zero()) {
            return Err(CoverageError::InvalidParameter("cov_rate"));
        }
        if !(self.goal_tol >= T::zero()) {
            return Err(CoverageError::InvalidParameter("goal_tol"));
        }
        Ok(())
    }
}

/// Distance from `from` to `point` divided by the point's weight. Heavier
/// points score as closer.
pub fn weight_normalized_distance<T: Real>(
    from: &Vector2<T>,
    point: &Vector2<T>,
    weight: T,
) -> Result<T, CoverageError> {
    if weight <= T::zero() {
        return Err(CoverageError::ZeroWeight);
    }
    Ok((from - point).norm() / weight)
}

/// Indices of up to `n` positive-weight points with the smallest
/// weight-normalized distance from `from`; ties keep the lower index.
/// Errors with [`CoverageError::FieldExhausted`] when no weight remains.
pub fn select_lsps<T: Real>(
    field: &SampleField<T>,
    from: &Vector2<T>,
    n: usize,
) -> Result<Vec<usize>, CoverageError> {
    let mut scored: Vec<(T, usize)> = Vec::new();
    for (index, (p, w)) in field.points.iter().zip(&field.weights).enumerate() {
        if *w > T::zero() {
            scored.push((weight_normalized_distance(from, p, *w)?, index));
        }
    }
    if scored.is_empty() {
        return Err(CoverageError::FieldExhausted);
    }
    // Sort is total: scores are finite and the index breaks ties.
    scored.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    scored.truncate(n);
    Ok(scored.into_iter().map(|(_, index)| index).collect())
}

/// First stop of the best discounted visit sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedGoal<T: Real> {
    /// Field index of the chosen sample point.
    pub index: usize,
    pub position: Vector2<T>,
}

/// Plans the next goal from `from`: shortlists `n_lsp` candidates, scores
/// every ordered sequence of up to `horizon` distinct candidates by the
/// discounted sum of weight-normalized hop distances, and returns the first
/// stop of the cheapest sequence. Cost ties resolve to the sequence whose
/// field-index tuple is lexicographically smallest.
pub fn plan_goal<T: Real>(
    field: &SampleField<T>,
    from: &Vector2<T>,
    params: &PlannerParams<T>,
) -> Result<PlannedGoal<T>, CoverageError> {
    params.validate()?;
    let mut candidates = select_lsps(field, from, params.n_lsp)?;
    candidates.sort_unstable();
    let depth = params.horizon.min(candidates.len());

    struct Search<'a, T: Real> {
        field: &'a SampleField<T>,
        candidates: &'a [usize],
        used: Vec<bool>,
        discount: T,
        depth: usize,
        best_cost: Option<T>,
        best_first: usize,
    }

    impl<T: Real> Search<'_, T> {
        // Depth-first over ordered candidate tuples in lexicographic
        // field-index order; strict improvement keeps the earliest tuple on
        // ties.
        fn recurse(&mut self, level: usize, at: Vector2<T>, cost: T, gamma: T, first: usize) {
            if level == self.depth {
                if self.best_cost.map_or(true, |b| cost < b) {
                    self.best_cost = Some(cost);
                    self.best_first = first;
                }
                return;
            }
            for (slot, &index) in self.candidates.iter().enumerate() {
                if self.used[slot] {
                    continue;
                }
                let p = self.field.points[index];
                let w = self.field.weights[index];
                let hop = (at - p).norm() / w;
                self.used[slot] = true;
                self.recurse(
                    level + 1,
                    p,
                    cost + gamma * hop,
                    gamma * self.discount,
                    if level == 0 { index } else { first },
                );
                self.used[slot] = false;
            }
        }
    }

    let mut search = Search {
        field,
        candidates: &candidates,
        used: vec![false; candidates.len()],
        discount: params.discount,
        depth,
        best_cost: None,
        best_first: usize::MAX,
    };
    search.recurse(0, *from, T::zero(), T::one(), usize::MAX);
    let index = search.best_first;
    debug_assert!(index != usize::MAX);
    Ok(PlannedGoal { index, position: field.points[index] })
}

/// Drains weight near `pos`: every point within `cov_radius` loses
/// `cov_rate * dt`, floored at zero. Returns a new field with a bumped
/// version; the input is untouched.
pub fn update_weights<T: Real>(
    field: &SampleField<T>,
    pos: &Vector2<T>,
    params: &PlannerParams<T>,
    dt: T,
) -> Result<SampleField<T>, CoverageError> {
    params.validate()?;
    let radius_sq = params.cov_radius * params.cov_radius;
    let drain = params.cov_rate * dt;
    let weights = field
        .points
        .iter()
        .zip(&field.weights)
        .map(|(p, w)| {
            if (p - pos).norm_squared() <= radius_sq {
                (*w - drain).max(T::zero())
            } else {
                *w
            }
        })
        .collect();
    Ok(SampleField {
        points: field.points.clone(),
        weights,
        version: field.version + 1,
    })
}

/// Reconciles two replicas of the same field by element-wise minimum.
/// Covered weight never comes back, so the merge is monotone and
/// order-independent. Errors when the point sets differ.
pub fn merge_weights<T: Real>(
    a: &SampleField<T>,
    b: &SampleField<T>,
) -> Result<SampleField<T>, CoverageError> {
    if a.points != b.points {
        return Err(CoverageError::FieldMismatch);
    }
    let weights = a
        .weights
        .iter()
        .zip(&b.weights)
        .map(|(x, y)| (*x).min(*y))
        .collect();
    Ok(SampleField {
        points: a.points.clone(),
        weights,
        version: a.version.max(b.version) + 1,
    })
}

/// Static state-feedback gains with a certified stable closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains<T: Real> {
    pub k: DMatrix<T>,
}

impl<T: Real> ControllerGains<T> {
    /// Wraps a gain matrix after checking that A - B K is Schur stable
    /// (spectral radius strictly below one).
    pub fn new(model: &LinearModel<T>, k: DMatrix<T>) -> Result<Self, CoverageError> {
        if k.nrows() != model.m() || k.ncols() != model.n() {
            return Err(CoverageError::IncompatibleModel(
                "gain matrix must be inputs-by-states",
            ));
        }
        let closed = &model.a - &model.b * &k;
        let mut radius = T::zero();
        for ev in closed.complex_eigenvalues().iter() {
            let mag = (ev.re * ev.re + ev.im * ev.im).sqrt();
            radius = radius.max(mag);
        }
        if radius >= T::one() {
            return Err(CoverageError::UnstableGains {
                spectral_radius: radius.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { k })
    }

    /// Per-axis chain gains for the planar quadrotor: position, velocity,
    /// tilt, and tilt-rate feedback, identical for both axes.
    pub fn quadrotor(
        model: &LinearModel<T>,
        kp: T,
        kd: T,
        ka: T,
        kr: T,
    ) -> Result<Self, CoverageError> {
        if model.n() != 8 || model.m() != 2 || model.p() != 2 {
            return Err(CoverageError::IncompatibleModel(
                "quadrotor gains need the 8-state planar model",
            ));
        }
        let mut k = DMatrix::<T>::zeros(2, 8);
        for (row, off) in [(0usize, 0usize), (1, 4)] {
            k[(row, off)] = kp;
            k[(row, off + 1)] = kd;
            k[(row, off + 2)] = ka;
            k[(row, off + 3)] = kr;
        }
        Self::new(model, k)
    }
}

/// Tracking input toward a planar goal: u = -K (x - x_goal) clamped into the
/// input box, where x_goal places the goal in the position channels and
/// zeros everywhere else.
pub fn nominal_control<T: Real>(
    model: &LinearModel<T>,
    limits: &ModelLimits<T>,
    gains: &ControllerGains<T>,
    x: &DVector<T>,
    goal: &Vector2<T>,
) -> DVector<T> {
    let goal_vec = DVector::from_vec(vec![goal.x, goal.y]);
    let reference = model.h_y.transpose() * goal_vec;
    let u = -(&gains.k * (x - reference));
    limits.clamp_input(&u)
}
