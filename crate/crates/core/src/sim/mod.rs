//! Episode engine: state transition, observation model (limited FoV plus
//! Gaussian noise), collision and event detection, and the base reward.

mod rollout;

pub use rollout::{rollout, Env, Policy, StepRecord, TrajectoryRecord};
pub mod policies;
pub mod record;

use crate::agents::{behavior_step, BehaviorContext, BehaviorSpec, CrowdConfig, WorkerPolicyState};
use crate::geometry::closest_approach;
use crate::seeding::{self, Rng};
use crate::{GridMap, JointState, Scalar, Vec2};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("scenario: {0}")]
    Scenario(String),
}

/// Robot command. Holonomic control sets the velocity directly; the
/// differential variant is the (v, omega) pair the rover base speaks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Holonomic { vx: Scalar, vy: Scalar },
    Differential { v: Scalar, omega: Scalar },
}

impl Action {
    pub fn zero(kind: Kinematics) -> Self {
        match kind {
            Kinematics::Holonomic => Action::Holonomic { vx: 0.0, vy: 0.0 },
            Kinematics::Differential => Action::Differential { v: 0.0, omega: 0.0 },
        }
    }

    /// Commanded speed magnitude (tie-break key in the planner).
    pub fn speed(&self) -> Scalar {
        match self {
            Action::Holonomic { vx, vy } => Vec2::new(*vx, *vy).norm(),
            Action::Differential { v, .. } => v.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kinematics {
    Holonomic,
    Differential,
}

/// Simulator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Control period, seconds.
    pub dt: Scalar,
    /// Discount base; the effective per-step factor is
    /// `gamma^(v_pref * dt)`.
    pub gamma: Scalar,
    /// Episode horizon in steps.
    pub horizon: usize,
    /// Field-of-view cone, radians; `TAU` = omnidirectional.
    pub fov: Scalar,
    /// Std dev of Gaussian noise on observed worker positions (m).
    pub obs_pos_sigma: Scalar,
    /// Std dev of Gaussian noise on observed worker velocities (m/s).
    pub obs_vel_sigma: Scalar,
    /// Penalty magnitude on collision steps.
    pub collision_penalty: Scalar,
    /// Discomfort band: edge distances below this draw a penalty.
    pub d_comf: Scalar,
    /// Goal tolerance, meters.
    pub eps_goal: Scalar,
    /// Speed cap (norm for holonomic, forward speed for differential).
    pub max_speed: Scalar,
    /// Lower forward-speed bound under differential kinematics.
    pub min_speed: Scalar,
    /// Turn-rate cap, rad/s (differential only).
    pub max_turn_rate: Scalar,
    pub kinematics: Kinematics,
    /// Collisions end the episode (training); evaluation only flags them so
    /// comfort metrics stay computable over the full run.
    pub terminal_collision: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.25,
            gamma: 0.9,
            horizon: 400,
            fov: std::f64::consts::TAU,
            obs_pos_sigma: 0.0,
            obs_vel_sigma: 0.0,
            collision_penalty: 0.25,
            d_comf: 0.2,
            eps_goal: 0.3,
            max_speed: 1.0,
            min_speed: 0.0,
            max_turn_rate: 1.0,
            kinematics: Kinematics::Holonomic,
            terminal_collision: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.dt <= 0.0 {
            return Err(SimError::Config("dt must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(SimError::Config("gamma must lie in (0, 1)".into()));
        }
        if !(self.fov > 0.0 && self.fov <= std::f64::consts::TAU) {
            return Err(SimError::Config("fov must lie in (0, tau]".into()));
        }
        if self.max_speed <= 0.0 {
            return Err(SimError::Config("max_speed must be positive".into()));
        }
        Ok(())
    }

    /// Effective one-step discount `gamma^(v_pref * dt)`.
    pub fn step_discount(&self, v_pref: Scalar) -> Scalar {
        self.gamma.powf(v_pref * self.dt)
    }
}

/// What happened during one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEvents {
    pub collision_worker: bool,
    pub collision_obstacle: bool,
    pub reached_goal: bool,
    /// Minimum separation-minus-radii over the step across workers; `None`
    /// with no workers present.
    pub dmin: Option<Scalar>,
}

impl StepEvents {
    pub fn collision(&self) -> bool {
        self.collision_worker || self.collision_obstacle
    }
}

/// Clamp an action into the configured bounds.
pub fn clamp_action(action: Action, config: &SimConfig) -> Action {
    match action {
        Action::Holonomic { vx, vy } => {
            let v = Vec2::new(vx, vy).clamp_norm(config.max_speed);
            Action::Holonomic { vx: v.x, vy: v.y }
        }
        Action::Differential { v, omega } => Action::Differential {
            v: v.clamp(config.min_speed, config.max_speed),
            omega: omega.clamp(-config.max_turn_rate, config.max_turn_rate),
        },
    }
}

/// Integrate the robot by one step; returns (position, velocity, heading).
pub fn integrate_robot(
    position: Vec2,
    heading: Scalar,
    action: Action,
    dt: Scalar,
) -> (Vec2, Vec2, Scalar) {
    match action {
        Action::Holonomic { vx, vy } => {
            let v = Vec2::new(vx, vy);
            let heading = if v.norm() > 1e-9 { v.angle() } else { heading };
            (position + v * dt, v, heading)
        }
        Action::Differential { v, omega } => {
            if omega.abs() < 1e-9 {
                let dir = Vec2::new(heading.cos(), heading.sin());
                (position + dir * (v * dt), dir * v, heading)
            } else {
                let h2 = heading + omega * dt;
                let r = v / omega;
                let pos = position + Vec2::new(r * (h2.sin() - heading.sin()), r * (heading.cos() - h2.cos()));
                (pos, Vec2::new(h2.cos(), h2.sin()) * v, crate::geometry::wrap_angle(h2))
            }
        }
    }
}

/// The scripted crowd: behavior specs, per-worker policy state, and one
/// private RNG stream per worker so draw counts never interleave.
#[derive(Debug, Clone)]
pub struct WorkerCrew {
    pub specs: Vec<BehaviorSpec<Scalar>>,
    pub states: Vec<WorkerPolicyState<Scalar>>,
    rngs: Vec<Rng>,
}

impl WorkerCrew {
    pub fn new(specs: Vec<BehaviorSpec<Scalar>>, episode_seed: u64) -> Self {
        let states = specs.iter().map(WorkerPolicyState::initial).collect();
        let rngs = specs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                seeding::rng_from(seeding::derive_tagged(
                    episode_seed,
                    "worker",
                    &[i as u64, s.seed_stream],
                ))
            })
            .collect();
        Self { specs, states, rngs }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Current steering target per worker; `None` while dwelling.
    pub fn targets(&self) -> Vec<Option<Vec2>> {
        self.states
            .iter()
            .map(|s| match s.phase {
                crate::agents::Phase::Travel { .. } => Some(s.current_target),
                crate::agents::Phase::Dwell { .. } => None,
            })
            .collect()
    }
}

/// Advance the world by one step under `action`. Workers move per their
/// behaviors; events use continuous (swept) checks over the step rather
/// than endpoint-only tests.
pub fn step(
    map: &GridMap,
    joint: &JointState,
    action: Action,
    crew: &mut WorkerCrew,
    sim: &SimConfig,
    crowd: &CrowdConfig<Scalar>,
) -> (JointState, StepEvents) {
    let dt = sim.dt;
    let action = clamp_action(action, sim);

    // Synchronous worker update from the pre-step joint state.
    let mut new_workers = joint.workers.clone();
    for i in 0..crew.len() {
        let ctx = BehaviorContext {
            joint,
            map,
            self_index: i,
            crowd,
        };
        let (v, r, st) = behavior_step(&crew.specs[i], &crew.states[i], &ctx, dt, &mut crew.rngs[i]);
        crew.states[i] = st;
        new_workers[i].position = joint.workers[i].position + v * dt;
        new_workers[i].velocity = v;
        new_workers[i].radius = r;
    }

    let robot = &joint.robot;
    let (new_pos, new_vel, new_heading) = integrate_robot(robot.position, robot.heading, action, dt);

    // Swept worker check: both paths are linear over the step, so the
    // closest approach of the relative motion is closed-form.
    let robot_step_vel = (new_pos - robot.position) / dt;
    let mut dmin: Option<Scalar> = None;
    for (w_old, w_new) in joint.workers.iter().zip(&new_workers) {
        let rel_p = w_old.position - robot.position;
        let rel_v = w_new.velocity - robot_step_vel;
        let (_, d) = closest_approach(rel_p, rel_v, dt);
        let sep = d - robot.radius - w_new.radius;
        dmin = Some(dmin.map_or(sep, |m: Scalar| m.min(sep)));
    }
    let collision_worker = dmin.is_some_and(|d| d <= 0.0);

    // Swept obstacle check along the step segment (exact, not sampled).
    let collision_obstacle = map.swept_disc_blocked(robot.position, new_pos, robot.radius);

    let reached_goal = new_pos.distance(robot.goal) < sim.eps_goal;

    let mut new_joint = joint.clone();
    new_joint.robot.position = new_pos;
    new_joint.robot.velocity = new_vel;
    new_joint.robot.heading = new_heading;
    new_joint.workers = new_workers;
    new_joint.time = joint.time + dt;

    (
        new_joint,
        StepEvents {
            collision_worker,
            collision_obstacle,
            reached_goal,
            dmin,
        },
    )
}

/// Observation model: workers outside the robot-centric FoV cone vanish;
/// Gaussian noise perturbs the remaining workers' positions and velocities.
/// The robot's own state passes through unchanged.
pub fn observe(joint: &JointState, sim: &SimConfig, rng: &mut Rng) -> JointState {
    let mut obs = joint.clone();
    let full_fov = sim.fov >= std::f64::consts::TAU - 1e-12;
    if !full_fov {
        let facing = joint.robot.facing();
        let half = sim.fov / 2.0;
        obs.workers.retain(|w| {
            let to_w = w.position - joint.robot.position;
            if to_w.norm() < 1e-12 {
                return true;
            }
            let cos_angle = facing.dot(to_w) / to_w.norm();
            cos_angle.clamp(-1.0, 1.0).acos() <= half
        });
    }
    if sim.obs_pos_sigma > 0.0 || sim.obs_vel_sigma > 0.0 {
        let pos_noise = Normal::new(0.0, sim.obs_pos_sigma.max(1e-300)).expect("pos sigma");
        let vel_noise = Normal::new(0.0, sim.obs_vel_sigma.max(1e-300)).expect("vel sigma");
        for w in obs.workers.iter_mut() {
            if sim.obs_pos_sigma > 0.0 {
                w.position.x += pos_noise.sample(rng);
                w.position.y += pos_noise.sample(rng);
            }
            if sim.obs_vel_sigma > 0.0 {
                w.velocity.x += vel_noise.sample(rng);
                w.velocity.y += vel_noise.sample(rng);
            }
        }
    }
    obs
}

/// Base reward: +1 on reaching the goal, a configured penalty on collision,
/// a linear discomfort penalty inside the comfort band, else zero.
pub fn reward(_prev: &JointState, _action: Action, events: &StepEvents, sim: &SimConfig) -> Scalar {
    if events.reached_goal {
        1.0
    } else if events.collision() {
        -sim.collision_penalty
    } else if let Some(dmin) = events.dmin {
        if dmin > 0.0 && dmin < sim.d_comf {
            -0.1 * (sim.d_comf - dmin) / sim.d_comf
        } else {
            0.0
        }
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::BehaviorKind;
    use crate::{RobotState, WorkerState};
    use approx::assert_relative_eq;

    fn open_map() -> GridMap {
        GridMap::empty(
            crate::Rect::new(Vec2::new(-20.0, -20.0), Vec2::new(20.0, 20.0)),
            0.1,
        )
        .unwrap()
    }

    fn robot_at(p: Vec2, goal: Vec2) -> RobotState {
        RobotState {
            position: p,
            velocity: Vec2::zero(),
            heading: 0.0,
            radius: 0.3,
            v_pref: 1.0,
            goal,
        }
    }

    fn static_worker(id: u32, p: Vec2) -> (WorkerState, BehaviorSpec<Scalar>) {
        (
            WorkerState {
                id,
                position: p,
                velocity: Vec2::zero(),
                radius: 0.3,
            },
            BehaviorSpec {
                kind: BehaviorKind::OrcaGoal { goal: p },
                v_pref: 1.0,
                radius: 0.3,
                seed_stream: 0,
            },
        )
    }

    #[test]
    fn zero_action_static_world_is_inert() {
        let map = open_map();
        let (w, spec) = static_worker(0, Vec2::new(3.0, 0.0));
        let joint = JointState {
            robot: robot_at(Vec2::zero(), Vec2::new(10.0, 0.0)),
            workers: vec![w],
            time: 0.0,
        };
        let mut crew = WorkerCrew::new(vec![spec], 1);
        let sim = SimConfig::default();
        let (next, events) = step(
            &map,
            &joint,
            Action::zero(Kinematics::Holonomic),
            &mut crew,
            &sim,
            &CrowdConfig::default(),
        );
        assert_eq!(next.robot.position, joint.robot.position);
        assert_eq!(next.workers[0].position, joint.workers[0].position);
        assert!(!events.collision() && !events.reached_goal);
        assert_relative_eq!(next.time, 0.25);
    }

    #[test]
    fn goal_reached_within_eps() {
        let map = open_map();
        let joint = JointState {
            robot: robot_at(Vec2::zero(), Vec2::new(0.5, 0.0)),
            workers: vec![],
            time: 0.0,
        };
        let mut crew = WorkerCrew::new(vec![], 1);
        let sim = SimConfig::default();
        let (_, events) = step(
            &map,
            &joint,
            Action::Holonomic { vx: 1.0, vy: 0.0 },
            &mut crew,
            &sim,
            &CrowdConfig::default(),
        );
        // 0.5 - 0.25 = 0.25 < eps_goal (0.3).
        assert!(events.reached_goal);
        assert_eq!(events.dmin, None);
    }

    #[test]
    fn swept_check_catches_pass_through() {
        // Head-on closing at 2 m/s across a 0.4 m gap (radii 0.3 + 0.3).
        // With dt = 1 s the endpoints end up 1.0 m apart (> 0.6) but the
        // paths crossed: closed-form closest approach must flag it.
        let map = open_map();
        let worker = WorkerState {
            id: 0,
            position: Vec2::new(1.0, 0.0),
            velocity: Vec2::zero(),
            radius: 0.3,
        };
        let spec = BehaviorSpec {
            kind: BehaviorKind::OrcaGoal {
                goal: Vec2::new(-10.0, 0.0),
            },
            v_pref: 1.0,
            radius: 0.3,
            seed_stream: 0,
        };
        let joint = JointState {
            robot: robot_at(Vec2::zero(), Vec2::new(10.0, 0.0)),
            workers: vec![worker],
            time: 0.0,
        };
        let mut crew = WorkerCrew::new(vec![spec], 1);
        let mut sim = SimConfig::default();
        sim.dt = 1.0;
        // Worker must ignore the robot to keep its straight-line course.
        let crowd = CrowdConfig {
            reaction_distance: -1.0,
            ..CrowdConfig::default()
        };
        let (next, events) = step(
            &map,
            &joint,
            Action::Holonomic { vx: 1.0, vy: 0.0 },
            &mut crew,
            &sim,
            &crowd,
        );
        let endpoint_gap = next.robot.position.distance(next.workers[0].position);
        assert!(endpoint_gap > 0.6, "endpoint gap {endpoint_gap}");
        assert!(events.collision_worker);
        assert!(events.dmin.unwrap() <= 0.0);
    }

    #[test]
    fn obstacle_collision_detected_on_the_path() {
        let mut map = open_map();
        map.stamp_rect(
            crate::Rect::new(Vec2::new(0.8, -0.5), Vec2::new(1.2, 0.5)),
            crate::world::Cell::Occupied,
        );
        let joint = JointState {
            robot: robot_at(Vec2::zero(), Vec2::new(10.0, 0.0)),
            workers: vec![],
            time: 0.0,
        };
        let mut crew = WorkerCrew::new(vec![], 1);
        let mut sim = SimConfig::default();
        sim.dt = 1.0;
        let (_, events) = step(
            &map,
            &joint,
            Action::Holonomic { vx: 1.0, vy: 0.0 },
            &mut crew,
            &sim,
            &CrowdConfig::default(),
        );
        assert!(events.collision_obstacle);
    }

    #[test]
    fn observe_identity_without_noise_or_fov() {
        let (w, _) = static_worker(0, Vec2::new(-3.0, 1.0));
        let joint = JointState {
            robot: robot_at(Vec2::zero(), Vec2::new(10.0, 0.0)),
            workers: vec![w],
            time: 0.0,
        };
        let sim = SimConfig::default();
        let mut rng = crate::seeding::rng_from(5);
        assert_eq!(observe(&joint, &sim, &mut rng), joint);
    }

    #[test]
    fn observe_drops_worker_behind_robot() {
        let (w, _) = static_worker(0, Vec2::new(-3.0, 0.0));
        let mut robot = robot_at(Vec2::zero(), Vec2::new(10.0, 0.0));
        robot.heading = 0.0;
        let joint = JointState {
            robot,
            workers: vec![w],
            time: 0.0,
        };
        let sim = SimConfig {
            fov: std::f64::consts::PI,
            ..SimConfig::default()
        };
        let mut rng = crate::seeding::rng_from(5);
        let obs = observe(&joint, &sim, &mut rng);
        assert!(obs.workers.is_empty());
        // A worker exactly on the cone boundary stays visible.
        let (side, _) = static_worker(1, Vec2::new(0.0, 2.0));
        let joint2 = JointState {
            workers: vec![side],
            ..joint
        };
        assert_eq!(observe(&joint2, &sim, &mut rng).workers.len(), 1);
    }

    #[test]
    fn observe_noise_replays_with_the_same_stream() {
        let (w, _) = static_worker(0, Vec2::new(2.0, 1.0));
        let joint = JointState {
            robot: robot_at(Vec2::zero(), Vec2::new(10.0, 0.0)),
            workers: vec![w],
            time: 0.0,
        };
        let sim = SimConfig {
            obs_pos_sigma: 0.05,
            obs_vel_sigma: 0.05,
            ..SimConfig::default()
        };
        let mut rng1 = crate::seeding::rng_from(77);
        let mut rng2 = crate::seeding::rng_from(77);
        let a = observe(&joint, &sim, &mut rng1);
        let b = observe(&joint, &sim, &mut rng2);
        assert_eq!(a, b);
        assert_ne!(a.workers[0].position, joint.workers[0].position);
    }

    #[test]
    fn reward_matches_configured_formula() {
        let sim = SimConfig::default();
        let joint = JointState {
            robot: robot_at(Vec2::zero(), Vec2::new(1.0, 0.0)),
            workers: vec![],
            time: 0.0,
        };
        let a = Action::zero(Kinematics::Holonomic);
        let base = StepEvents {
            collision_worker: false,
            collision_obstacle: false,
            reached_goal: false,
            dmin: None,
        };
        assert_eq!(
            reward(&joint, a, &StepEvents { reached_goal: true, ..base }, &sim),
            1.0
        );
        assert_eq!(
            reward(&joint, a, &StepEvents { collision_worker: true, dmin: Some(-0.1), ..base }, &sim),
            -0.25
        );
        let discomfort = reward(&joint, a, &StepEvents { dmin: Some(0.1), ..base }, &sim);
        assert_relative_eq!(discomfort, -0.05);
        assert_eq!(reward(&joint, a, &StepEvents { dmin: Some(0.25), ..base }, &sim), 0.0);
    }

    #[test]
    fn differential_integration_traces_arcs() {
        // Quarter turn at v = pi/2, omega = pi/2 for 1 s: unit-radius arc
        // from (0,0) heading +x ends at (1,1) heading +y.
        let (p, v, h) = integrate_robot(
            Vec2::zero(),
            0.0,
            Action::Differential {
                v: std::f64::consts::FRAC_PI_2,
                omega: std::f64::consts::FRAC_PI_2,
            },
            1.0,
        );
        assert_relative_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 1.0, epsilon = 1e-12);
        assert_relative_eq!(h, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        assert_relative_eq!(v.norm(), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }
}
