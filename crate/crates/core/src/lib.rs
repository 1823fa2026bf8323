//! Desk-scale social navigation for cluttered work sites: a 2D simulator
//! with scripted worker behaviors, a hierarchical planner (dynamic-window
//! safety filter scored by an attention value network), a training pipeline
//! with policy-shift penalized fine-tuning, and an evaluation harness.
//!
//! The numeric core (geometry, grids, avoidance, network kernel) is generic
//! over the scalar type via [`scalar::Real`]; the pipeline itself runs on the
//! concrete aliases below so every artifact is bit-reproducible.

pub mod agents;
pub mod geometry;
pub mod nn;
pub mod scalar;
pub mod seeding;
pub mod sim;
pub mod world;

/// Scalar used by the simulation/training pipeline and all file formats.
pub type Scalar = f64;

/// 2D vector at pipeline precision.
pub type Vec2 = geometry::Vector2<Scalar>;

/// World rectangle at pipeline precision.
pub type Rect = geometry::Rect<Scalar>;

/// Occupancy grid at pipeline precision.
pub type GridMap = world::GridMap<Scalar>;

/// Robot state at pipeline precision.
pub type RobotState = world::RobotState<Scalar>;

/// Worker state at pipeline precision.
pub type WorkerState = world::WorkerState<Scalar>;

/// Joint robot + observed-workers state at pipeline precision.
pub type JointState = world::JointState<Scalar>;
