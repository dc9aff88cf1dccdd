//! Deterministic multi-agent coverage simulation with barrier-based
//! collision filtering.
//!
//! A team of planar agents visits weighted sample points, draining their
//! weights while a per-agent safety filter keeps predicted positions outside
//! circular and rectangular obstacles. The crate provides the linearized
//! quadrotor model, obstacle geometry, the coverage planner, an exact
//! optimal-transport metric, the barrier filter, and a lockstep simulator
//! with full trajectory logging.
//!
//! Core modules are generic over the scalar type through [`Real`]; the
//! aliases at the crate root fix `f64`, which the simulator and CLI use.

pub mod coverage;
pub mod dynamics;
pub mod geometry;
pub mod real;
pub mod safety;
pub mod sim;
pub mod transport;

pub use real::{real, Real};

pub type Obstacle = geometry::Obstacle<f64>;
pub type BoundaryGeometry = geometry::BoundaryGeometry<f64>;
pub type LinearModel = dynamics::LinearModel<f64>;
pub type ModelLimits = dynamics::ModelLimits<f64>;
pub type AgentState = dynamics::AgentState<f64>;
pub type SampleField = coverage::SampleField<f64>;
pub type PlannerParams = coverage::PlannerParams<f64>;
pub type ControllerGains = coverage::ControllerGains<f64>;
pub type WeightedPoints = transport::WeightedPoints<f64>;
pub type CbfParams = safety::CbfParams<f64>;
pub type ApfGains = safety::ApfGains<f64>;
pub type SafetyProblem = safety::SafetyProblem<f64>;
pub type FilterResult = safety::FilterResult<f64>;
pub type Scenario = sim::Scenario<f64>;
pub type TrajectoryLog = sim::TrajectoryLog<f64>;
pub type Metrics = sim::Metrics<f64>;
