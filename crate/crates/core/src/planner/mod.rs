//! Hierarchical motion planning. The dynamic-window layer samples
//! acceleration-reachable velocities and rejects any the robot could not
//! brake out of before hitting an obstacle or a (constant-velocity
//! propagated) worker; the surviving set is scored either by the learned
//! value network with a one-step lookahead or by the classical
//! efficiency-driven objective, giving the baseline ablation tier.

mod astar;

pub use astar::global_waypoints;

use crate::geometry::{
    closest_approach, segment_rect_distance, segment_segment_distance, wrap_angle,
};
use crate::nn::{featurize, ValueNetwork};
use crate::sim::{
    clamp_action, integrate_robot, reward, Action, Env, Kinematics, Policy, SimConfig, StepEvents,
};
use crate::world::inflate;
use crate::{GridMap, JointState, RobotState, Scalar, Vec2, WorkerState};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("non-finite score for candidate {index} ({action:?})")]
    NonFiniteScore { index: usize, action: Action },
}

/// Classical objective weights for the non-learned tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DwaWeights {
    pub heading: Scalar,
    pub clearance: Scalar,
    pub velocity: Scalar,
    /// Clearances above this cap score identically.
    pub clearance_cap: Scalar,
}

impl Default for DwaWeights {
    fn default() -> Self {
        Self {
            heading: 0.8,
            clearance: 0.1,
            velocity: 0.1,
            clearance_cap: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    /// Linear acceleration bound, m/s^2.
    pub accel: Scalar,
    /// Angular acceleration bound, rad/s^2 (differential).
    pub accel_angular: Scalar,
    /// Braking deceleration used by the admissibility check, m/s^2.
    pub brake_decel: Scalar,
    /// Samples per velocity axis (holonomic grid).
    pub samples_per_axis: usize,
    /// Samples for (v, omega) under differential kinematics.
    pub samples_v: usize,
    pub samples_omega: usize,
    /// Obstacle inflation margin applied to the admissibility map.
    pub clearance_margin: Scalar,
    /// Waypoint spacing after path decimation, meters.
    pub subgoal_spacing: Scalar,
    /// The local layer steers at the first waypoint beyond this radius.
    pub waypoint_lookahead: Scalar,
    pub dwa: DwaWeights,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            accel: 1.0,
            accel_angular: 2.0,
            brake_decel: 1.0,
            samples_per_axis: 7,
            samples_v: 11,
            samples_omega: 11,
            clearance_margin: 0.05,
            subgoal_spacing: 2.0,
            waypoint_lookahead: 1.5,
            dwa: DwaWeights::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.accel <= 0.0 || self.brake_decel <= 0.0 {
            return Err("accel and brake_decel must be positive".into());
        }
        if self.samples_per_axis < 2 || self.samples_v < 2 || self.samples_omega < 2 {
            return Err("need at least 2 samples per dimension".into());
        }
        Ok(())
    }
}

/// Per-dimension velocity bounds reachable within one control period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Window {
    Holonomic {
        vx: (Scalar, Scalar),
        vy: (Scalar, Scalar),
    },
    Differential {
        v: (Scalar, Scalar),
        omega: (Scalar, Scalar),
    },
}

/// The refined action set `A_f` plus the bounds and sparsity it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    pub candidates: Vec<Action>,
    pub window: Window,
    pub sparsity: (usize, usize),
}

impl ActionSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Acceleration-reachable velocity interval per dimension, clipped to the
/// absolute bounds.
pub fn dynamic_window(
    robot: &RobotState,
    last_omega: Scalar,
    sim: &SimConfig,
    cfg: &PlannerConfig,
) -> Window {
    let dv = cfg.accel * sim.dt;
    match sim.kinematics {
        Kinematics::Holonomic => {
            let v = robot.velocity;
            let clip = |lo: Scalar, hi: Scalar| {
                (lo.max(-sim.max_speed), hi.min(sim.max_speed))
            };
            Window::Holonomic {
                vx: clip(v.x - dv, v.x + dv),
                vy: clip(v.y - dv, v.y + dv),
            }
        }
        Kinematics::Differential => {
            let fwd = robot.velocity.dot(robot.facing());
            let dw = cfg.accel_angular * sim.dt;
            Window::Differential {
                v: (
                    (fwd - dv).max(sim.min_speed),
                    (fwd + dv).min(sim.max_speed),
                ),
                omega: (
                    (last_omega - dw).max(-sim.max_turn_rate),
                    (last_omega + dw).min(sim.max_turn_rate),
                ),
            }
        }
    }
}

/// Maneuver polyline for `action`: apply it for `dt`, then brake at
/// `brake_decel` to a stop. Returns timed samples `(t, position)` including
/// both endpoints. Holonomic maneuvers are piecewise linear and get exactly
/// the two phase endpoints; differential arcs are densified.
fn maneuver_samples(
    robot: &RobotState,
    action: Action,
    sim: &SimConfig,
    cfg: &PlannerConfig,
) -> Vec<(Scalar, Vec2)> {
    match action {
        Action::Holonomic { vx, vy } => {
            let v = Vec2::new(vx, vy);
            let p1 = robot.position + v * sim.dt;
            let speed = v.norm();
            if speed < 1e-12 {
                return vec![(0.0, robot.position), (sim.dt, p1)];
            }
            let brake_time = speed / cfg.brake_decel;
            let brake_dist = speed * speed / (2.0 * cfg.brake_decel);
            let p2 = p1 + v.normalize_or_zero() * brake_dist;
            vec![(0.0, robot.position), (sim.dt, p1), (sim.dt + brake_time, p2)]
        }
        Action::Differential { v, omega } => {
            let brake_time = v.abs() / cfg.brake_decel;
            let total = sim.dt + brake_time;
            // Densify: spatial spacing bounded by a fraction of the map
            // resolution is enforced by the caller via `max_spacing`.
            let mut pts = Vec::new();
            let n = ((total / sim.dt).ceil() as usize * 8).max(8);
            let mut pos = robot.position;
            let mut heading = robot.heading;
            pts.push((0.0, pos));
            let step = total / n as Scalar;
            for k in 1..=n {
                let t = step * k as Scalar;
                // Speed profile: constant v during dt, then linear to zero.
                let cur_v = if t <= sim.dt {
                    v
                } else {
                    (v.abs() - cfg.brake_decel * (t - sim.dt)).max(0.0) * v.signum()
                };
                let (p, _, h) = integrate_robot(
                    pos,
                    heading,
                    Action::Differential { v: cur_v, omega },
                    step,
                );
                pos = p;
                heading = h;
                pts.push((t, pos));
            }
            pts
        }
    }
}

/// True when simulating `action` for one step and then braking keeps the
/// swept robot disc clear of blocked cells and of workers extrapolated at
/// constant velocity. The stopping-distance criterion of the safety layer.
pub fn admissible(
    action: Action,
    robot: &RobotState,
    map: &GridMap,
    workers: &[WorkerState],
    sim: &SimConfig,
    cfg: &PlannerConfig,
) -> bool {
    let samples = maneuver_samples(robot, action, sim, cfg);

    // Obstacles: exact segment-vs-cell distance per polyline piece.
    for pair in samples.windows(2) {
        let (a, b) = (pair[0].1, pair[1].1);
        if map.swept_disc_blocked(a, b, robot.radius) {
            return false;
        }
    }

    // Workers extrapolate at constant velocity over the whole maneuver.
    let t_end = samples.last().expect("samples").0;
    for w in workers {
        match action {
            Action::Holonomic { vx, vy } => {
                // Move phase: both paths linear, closed-form closest approach.
                let rel_v = w.velocity - Vec2::new(vx, vy);
                let (_, d) = closest_approach(w.position - robot.position, rel_v, sim.dt);
                if d <= robot.radius + w.radius {
                    return false;
                }
                // Brake phase: path vs path, time-decoupled. Conservative:
                // it can only over-reject.
                if t_end > sim.dt {
                    let w1 = w.position + w.velocity * sim.dt;
                    let w2 = w.position + w.velocity * t_end;
                    let (a, b) = (samples[1].1, samples[2].1);
                    if segment_segment_distance(a, b, w1, w2) <= robot.radius + w.radius {
                        return false;
                    }
                }
            }
            Action::Differential { .. } => {
                // Arc pieces vs the worker's full swept segment,
                // time-decoupled and therefore conservative.
                let w1 = w.position;
                let w2 = w.position + w.velocity * t_end;
                for pair in samples.windows(2) {
                    if segment_segment_distance(pair[0].1, pair[1].1, w1, w2)
                        <= robot.radius + w.radius
                    {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn lin_grid(lo: Scalar, hi: Scalar, n: usize) -> Vec<Scalar> {
    if hi <= lo {
        return vec![lo.min(hi)];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as Scalar / (n - 1) as Scalar)
        .collect()
}

/// `A_f`: the uniform sample grid over the dynamic window, restricted to the
/// plain action bounds and filtered by admissibility. The zero action is
/// appended when admissible and absent. May be empty: the robot must stop.
pub fn refine_action_space(
    robot: &RobotState,
    last_omega: Scalar,
    map: &GridMap,
    workers: &[WorkerState],
    sim: &SimConfig,
    cfg: &PlannerConfig,
) -> ActionSet {
    let window = dynamic_window(robot, last_omega, sim, cfg);
    let (raw, sparsity) = match window {
        Window::Holonomic { vx, vy } => {
            let gx = lin_grid(vx.0, vx.1, cfg.samples_per_axis);
            let gy = lin_grid(vy.0, vy.1, cfg.samples_per_axis);
            let mut cand = Vec::with_capacity(gx.len() * gy.len());
            for &x in &gx {
                for &y in &gy {
                    cand.push(Action::Holonomic { vx: x, vy: y });
                }
            }
            (cand, (gx.len(), gy.len()))
        }
        Window::Differential { v, omega } => {
            let gv = lin_grid(v.0, v.1, cfg.samples_v);
            let gw = lin_grid(omega.0, omega.1, cfg.samples_omega);
            let mut cand = Vec::with_capacity(gv.len() * gw.len());
            for &x in &gv {
                for &w in &gw {
                    cand.push(Action::Differential { v: x, omega: w });
                }
            }
            (cand, (gv.len(), gw.len()))
        }
    };

    let in_bounds = |a: &Action| match *a {
        Action::Holonomic { vx, vy } => {
            Vec2::new(vx, vy).norm() <= sim.max_speed + 1e-12
        }
        Action::Differential { v, omega } => {
            v >= sim.min_speed - 1e-12
                && v <= sim.max_speed + 1e-12
                && omega.abs() <= sim.max_turn_rate + 1e-12
        }
    };

    let mut candidates: Vec<Action> = raw
        .into_iter()
        .filter(|a| in_bounds(a) && admissible(*a, robot, map, workers, sim, cfg))
        .collect();

    let zero = Action::zero(sim.kinematics);
    if !candidates.contains(&zero) && admissible(zero, robot, map, workers, sim, cfg) {
        candidates.push(zero);
    }

    ActionSet {
        candidates,
        window,
        sparsity,
    }
}

/// One-step lookahead: robot moved by the action, workers extrapolated at
/// constant velocity, radii unchanged.
pub fn propagate(joint: &JointState, action: Action, dt: Scalar) -> JointState {
    let (p, v, h) = integrate_robot(joint.robot.position, joint.robot.heading, action, dt);
    let mut next = joint.clone();
    next.robot.position = p;
    next.robot.velocity = v;
    next.robot.heading = h;
    for w in next.workers.iter_mut() {
        w.position = w.position + w.velocity * dt;
    }
    next.time = joint.time + dt;
    next
}

/// Events of the lookahead transition `joint -> propagate(joint, action)`:
/// the same swept checks the simulator applies, under the constant-velocity
/// worker model.
pub fn lookahead_events(
    map: &GridMap,
    joint: &JointState,
    action: Action,
    sim: &SimConfig,
) -> StepEvents {
    let robot = &joint.robot;
    let (new_pos, _, _) = integrate_robot(robot.position, robot.heading, action, sim.dt);
    let step_vel = (new_pos - robot.position) / sim.dt;
    let mut dmin: Option<Scalar> = None;
    for w in &joint.workers {
        let (_, d) = closest_approach(w.position - robot.position, w.velocity - step_vel, sim.dt);
        let sep = d - robot.radius - w.radius;
        dmin = Some(dmin.map_or(sep, |m: Scalar| m.min(sep)));
    }
    StepEvents {
        collision_worker: dmin.is_some_and(|d| d <= 0.0),
        collision_obstacle: swept_disc_blocked(map, robot.position, new_pos, robot.radius),
        reached_goal: new_pos.distance(robot.goal) < sim.eps_goal,
        dmin,
    }
}

/// Candidate score under the learned tier:
/// one-step reward plus `gamma^(v_pref dt) * V(featurized lookahead state)`.
pub fn value_scores(
    joint: &JointState,
    actions: &ActionSet,
    net: &ValueNetwork<Scalar>,
    map: &GridMap,
    sim: &SimConfig,
) -> Vec<Scalar> {
    actions
        .candidates
        .iter()
        .map(|a| {
            let events = lookahead_events(map, joint, *a, sim);
            let r = reward(joint, *a, &events, sim);
            let next = propagate(joint, *a, sim.dt);
            let rows = featurize(&next);
            let (v, _) = net.evaluate(&rows);
            r + sim.step_discount(joint.robot.v_pref) * v
        })
        .collect()
}

/// Candidate score under the classical tier: weighted heading, clearance,
/// and velocity terms, each normalized to [0, 1].
pub fn dwa_scores(
    joint: &JointState,
    actions: &ActionSet,
    map: &GridMap,
    sim: &SimConfig,
    weights: &DwaWeights,
) -> Vec<Scalar> {
    actions
        .candidates
        .iter()
        .map(|a| {
            let next = propagate(joint, *a, sim.dt);
            let to_goal = joint.robot.goal - next.robot.position;
            let move_dir = match *a {
                Action::Holonomic { vx, vy } => {
                    let v = Vec2::new(vx, vy);
                    if v.norm() > 1e-9 {
                        v
                    } else {
                        joint.robot.facing()
                    }
                }
                Action::Differential { .. } => next.robot.facing(),
            };
            let heading = if to_goal.norm() < 1e-9 {
                1.0
            } else {
                let angle = wrap_angle(to_goal.angle() - move_dir.angle()).abs();
                1.0 - angle / std::f64::consts::PI
            };

            let mut clear = crate::world::clearance(map, next.robot.position)
                .map(|c| c - joint.robot.radius)
                .unwrap_or(0.0);
            for w in &next.workers {
                clear = clear
                    .min(next.robot.position.distance(w.position) - joint.robot.radius - w.radius);
            }
            let clear = clear.clamp(0.0, weights.clearance_cap) / weights.clearance_cap;

            let vel = a.speed() / sim.max_speed;

            weights.heading * heading + weights.clearance * clear + weights.velocity * vel
        })
        .collect()
}

/// Argmax with the deterministic tie rule: highest score, then lower
/// commanded speed, then lower candidate index.
pub fn argmax_with_ties(actions: &ActionSet, scores: &[Scalar]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) => {
                let better = *s > scores[b]
                    || (*s == scores[b]
                        && actions.candidates[i].speed() < actions.candidates[b].speed());
                if better {
                    best = Some(i);
                }
            }
        }
    }
    best
}

/// Pick the best candidate by `scores` produced by either tier.
/// Errors on non-finite scores, naming the candidate.
pub fn select_action(
    actions: &ActionSet,
    scores: &[Scalar],
) -> Result<(Action, usize), PlanError> {
    assert_eq!(actions.candidates.len(), scores.len());
    for (i, s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(PlanError::NonFiniteScore {
                index: i,
                action: actions.candidates[i],
            });
        }
    }
    let idx = argmax_with_ties(actions, scores).expect("caller ensures nonempty");
    Ok((actions.candidates[idx], idx))
}

/// Scoring backend of a planner tier.
#[derive(Clone)]
pub enum Scorer {
    /// Classical efficiency-driven objective (the non-learned ablation).
    DwaObjective,
    /// Learned value network, one-step lookahead.
    Value(Arc<ValueNetwork<Scalar>>),
}

/// The full hierarchical policy: global waypoints, dynamic-window filter,
/// tier-specific scoring. Holds only the waypoint cursor across steps.
pub struct PlannerPolicy {
    pub tag: String,
    pub scorer: Scorer,
    pub config: PlannerConfig,
    plan_map: Option<GridMap>,
    waypoints: Vec<Vec2>,
    last_omega: Scalar,
    /// Steps on which `A_f` came back empty and the stop was forced.
    pub freeze_candidates: usize,
}

impl PlannerPolicy {
    pub fn new(tag: impl Into<String>, scorer: Scorer, config: PlannerConfig) -> Self {
        Self {
            tag: tag.into(),
            scorer,
            config,
            plan_map: None,
            waypoints: Vec::new(),
            last_omega: 0.0,
            freeze_candidates: 0,
        }
    }

    /// The map used for admissibility (inflated by the clearance margin).
    fn ensure_maps(&mut self, env: &Env) {
        if self.plan_map.is_none() {
            self.plan_map = Some(inflate(&env.map, self.config.clearance_margin));
        }
    }

    /// Waypoint the local layer currently steers to.
    fn local_goal(&mut self, robot_pos: Vec2, final_goal: Vec2) -> Vec2 {
        while !self.waypoints.is_empty()
            && robot_pos.distance(self.waypoints[0]) <= self.config.waypoint_lookahead
        {
            self.waypoints.remove(0);
        }
        self.waypoints.first().copied().unwrap_or(final_goal)
    }

    /// Refine and score: returns the action set, per-candidate scores, and
    /// the chosen action. Split out so the training loop can inject
    /// exploration over the same `A_f`.
    pub fn plan(&mut self, obs: &JointState, env: &Env) -> (ActionSet, Vec<Scalar>, Action) {
        self.ensure_maps(env);
        let plan_map = self.plan_map.as_ref().expect("ensured");
        let mut scoring = obs.clone();
        scoring.robot.goal = self.local_goal(obs.robot.position, obs.robot.goal);

        let actions = refine_action_space(
            &scoring.robot,
            self.last_omega,
            plan_map,
            &scoring.workers,
            &env.sim,
            &self.config,
        );
        if actions.is_empty() {
            self.freeze_candidates += 1;
            return (actions, Vec::new(), Action::zero(env.sim.kinematics));
        }
        let scores = match &self.scorer {
            Scorer::DwaObjective => dwa_scores(&scoring, &actions, plan_map, &env.sim, &self.config.dwa),
            Scorer::Value(net) => value_scores(&scoring, &actions, net, &env.map, &env.sim),
        };
        let (action, _) = select_action(&actions, &scores).unwrap_or_else(|e| panic!("{e}"));
        (actions, scores, action)
    }
}

impl Policy for PlannerPolicy {
    fn tag(&self) -> String {
        self.tag.clone()
    }

    fn reset(&mut self, env: &Env) {
        self.plan_map = None;
        self.last_omega = 0.0;
        self.freeze_candidates = 0;
        // Global layer: plan on the map inflated so the robot disc fits.
        let nav_map = inflate(
            &env.map,
            env.joint.robot.radius + self.config.clearance_margin,
        );
        self.waypoints = global_waypoints(
            &nav_map,
            env.joint.robot.position,
            env.joint.robot.goal,
            &self.config,
        )
        .unwrap_or_else(|_| vec![env.joint.robot.goal]);
    }

    fn act(&mut self, obs: &JointState, env: &Env) -> Action {
        let (_, _, action) = self.plan(obs, env);
        let action = clamp_action(action, &env.sim);
        if let Action::Differential { omega, .. } = action {
            self.last_omega = omega;
        }
        action
    }
}
