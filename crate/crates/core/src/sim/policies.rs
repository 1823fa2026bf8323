//! Simple baseline controllers: straight-to-goal (tests, sanity) and a
//! reciprocal-avoidance robot used to collect imitation demonstrations.

use super::{Action, Env, Policy};
use crate::agents::{orca_step, OrcaNeighbor};
use crate::world::WorkerState;
use crate::{JointState, Scalar};

/// Drives straight at the goal at `v_pref`, ignoring everything else.
pub struct GreedyGoalPolicy;

impl Policy for GreedyGoalPolicy {
    fn tag(&self) -> String {
        "greedy".into()
    }

    fn act(&mut self, obs: &JointState, _env: &Env) -> Action {
        let to_goal = obs.robot.goal - obs.robot.position;
        let v = to_goal.normalize_or_zero() * obs.robot.v_pref;
        Action::Holonomic { vx: v.x, vy: v.y }
    }
}

/// The robot as one more reciprocal-avoidance agent: the demonstration
/// driver for imitation pretraining.
pub struct OrcaRobotPolicy {
    pub time_horizon: Scalar,
}

impl Default for OrcaRobotPolicy {
    fn default() -> Self {
        Self { time_horizon: 2.0 }
    }
}

impl Policy for OrcaRobotPolicy {
    fn tag(&self) -> String {
        "orca-robot".into()
    }

    fn act(&mut self, obs: &JointState, env: &Env) -> Action {
        let me = WorkerState {
            id: u32::MAX,
            position: obs.robot.position,
            velocity: obs.robot.velocity,
            radius: obs.robot.radius,
        };
        let neighbors: Vec<OrcaNeighbor<Scalar>> =
            obs.workers.iter().map(OrcaNeighbor::from).collect();
        let v = orca_step(
            &me,
            &neighbors,
            obs.robot.goal,
            obs.robot.v_pref,
            env.sim.dt,
            self.time_horizon,
            env.sim.eps_goal,
        );
        Action::Holonomic { vx: v.x, vy: v.y }
    }
}
