//! Kinematic state of the robot and the observed workers: the joint state a
//! policy sees and the simulator advances.

use crate::geometry::Vector2;
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Full robot state. `heading` matters only under differential kinematics;
/// under holonomic control it tracks the direction of the last nonzero
/// velocity (used as the field-of-view reference).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState<F> {
    pub position: Vector2<F>,
    pub velocity: Vector2<F>,
    pub heading: F,
    pub radius: F,
    pub v_pref: F,
    pub goal: Vector2<F>,
}

impl<F: Real> RobotState<F> {
    pub fn distance_to_goal(&self) -> F {
        self.position.distance(self.goal)
    }

    /// Reference direction for the field-of-view cone.
    pub fn facing(&self) -> Vector2<F> {
        Vector2::new(self.heading.cos(), self.heading.sin())
    }
}

/// Observable worker state. The radius is time-varying under the
/// volatile-radius behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerState<F> {
    pub id: u32,
    pub position: Vector2<F>,
    pub velocity: Vector2<F>,
    pub radius: F,
}

/// Robot full state plus the currently observed workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState<F> {
    pub robot: RobotState<F>,
    pub workers: Vec<WorkerState<F>>,
    /// Seconds since episode start; a multiple of the step size.
    pub time: F,
}

impl<F: Real> JointState<F> {
    /// Edge-to-edge distance to the nearest worker (can be negative in
    /// contact); `infinity` with no workers.
    pub fn min_edge_distance(&self) -> F {
        self.workers
            .iter()
            .map(|w| {
                self.robot.position.distance(w.position) - self.robot.radius - w.radius
            })
            .fold(F::infinity(), F::min)
    }
}
