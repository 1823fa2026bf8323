//! Worker behavior policies: a reciprocal-avoidance goal-reaching baseline
//! plus the scripted site behaviors (stop-and-go installation, pacing in
//! place, tool-retrieval shuttling, volatile safety radius during lifting).
//! Each step yields the worker's velocity, radius, and next policy state.

pub mod orca;

pub use orca::{neighbor_half_plane, orca_step, solve_velocity, HalfPlane, OrcaNeighbor};

use crate::geometry::Vector2;
use crate::scalar::{real, Real};
use crate::seeding::Rng;
use crate::world::{GridMap, JointState};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

/// Parameters shared by all worker policies.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrowdConfig<F> {
    /// Reciprocal-avoidance lookahead.
    pub time_horizon: F,
    /// Workers ignore the robot beyond this distance (edge-to-edge); inside
    /// it the robot joins their avoidance neighbor set.
    pub reaction_distance: F,
    /// Arrival tolerance for waypoint switching.
    pub arrive_eps: F,
    /// Hard clamp on any worker radius.
    pub r_min: F,
    pub r_max: F,
}

impl<F: Real> Default for CrowdConfig<F> {
    fn default() -> Self {
        Self {
            time_horizon: real(2.0),
            reaction_distance: real(0.8),
            arrive_eps: real(0.15),
            r_min: real(0.1),
            r_max: real(1.0),
        }
    }
}

/// What a worker does, with per-kind parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BehaviorKind<F> {
    /// Plain goal reaching under reciprocal avoidance (generic crowds).
    OrcaGoal { goal: Vector2<F> },
    /// Shuttle between installation waypoints, dwelling at each for a
    /// duration drawn uniformly from `dwell`.
    StopAndGo {
        waypoints: Vec<Vector2<F>>,
        dwell: (F, F),
    },
    /// Oscillate between two points a pace apart.
    Pacing { a: Vector2<F>, b: Vector2<F> },
    /// Cycle work point <-> tool point at close range.
    BackAndForth {
        work_point: Vector2<F>,
        tool_point: Vector2<F>,
    },
    /// Move per `inner` while the safety radius swells and shrinks
    /// sinusoidally (panel lifting).
    VolatileRadius {
        inner: Box<BehaviorKind<F>>,
        r_mid: F,
        r_amp: F,
        period: F,
    },
}

impl<F: Real> BehaviorKind<F> {
    /// The waypoint cycle driving the motion (empty for pure goal reaching).
    fn waypoints(&self) -> Vec<Vector2<F>> {
        match self {
            BehaviorKind::OrcaGoal { goal } => vec![*goal],
            BehaviorKind::StopAndGo { waypoints, .. } => waypoints.clone(),
            BehaviorKind::Pacing { a, b } => vec![*a, *b],
            BehaviorKind::BackAndForth {
                work_point,
                tool_point,
            } => vec![*work_point, *tool_point],
            BehaviorKind::VolatileRadius { inner, .. } => inner.waypoints(),
        }
    }

    fn dwell_range(&self) -> Option<(F, F)> {
        match self {
            BehaviorKind::StopAndGo { dwell, .. } => Some(*dwell),
            BehaviorKind::VolatileRadius { inner, .. } => inner.dwell_range(),
            _ => None,
        }
    }

    fn cycles(&self) -> bool {
        match self {
            BehaviorKind::OrcaGoal { .. } => false,
            BehaviorKind::VolatileRadius { inner, .. } => inner.cycles(),
            _ => true,
        }
    }

    /// Every point the worker will steer to (used by scenario validation).
    pub fn all_targets(&self) -> Vec<Vector2<F>> {
        self.waypoints()
    }
}

/// A worker's scripted behavior plus its kinematic parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorSpec<F> {
    pub kind: BehaviorKind<F>,
    /// Preferred walking speed.
    pub v_pref: F,
    /// Base safety radius (modulated by the volatile behavior).
    pub radius: F,
    /// Offset mixed into the per-episode behavior stream.
    pub seed_stream: u64,
}

/// Discrete motion phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase<F> {
    /// Steering toward waypoint `leg`.
    Travel { leg: usize },
    /// Standing still for `duration`, then moving to waypoint `next_leg`.
    Dwell { duration: F, next_leg: usize },
}

/// Mutable per-worker policy state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerPolicyState<F> {
    pub phase: Phase<F>,
    /// Seconds spent in the current phase.
    pub phase_clock: F,
    /// Seconds since episode start (drives the volatile-radius clock).
    pub age: F,
    pub current_target: Vector2<F>,
}

impl<F: Real> WorkerPolicyState<F> {
    pub fn initial(spec: &BehaviorSpec<F>) -> Self {
        let waypoints = spec.kind.waypoints();
        let target = waypoints.first().copied().unwrap_or_else(Vector2::zero);
        Self {
            phase: Phase::Travel { leg: 0 },
            phase_clock: F::zero(),
            age: F::zero(),
            current_target: target,
        }
    }
}

/// Sinusoidal radius at behavior age `t`, clamped to the configured range.
pub fn volatile_radius_at<F: Real>(
    r_mid: F,
    r_amp: F,
    period: F,
    t: F,
    cfg: &CrowdConfig<F>,
) -> F {
    let tau = real::<F>(std::f64::consts::TAU);
    let r = r_mid + r_amp * (tau * t / period).sin();
    r.max(cfg.r_min).min(cfg.r_max)
}

/// Everything a behavior may look at when deciding its step.
pub struct BehaviorContext<'a, F> {
    pub joint: &'a JointState<F>,
    pub map: &'a GridMap<F>,
    /// Index of this worker in `joint.workers`.
    pub self_index: usize,
    pub crowd: &'a CrowdConfig<F>,
}

/// Advance one worker by one step: returns (velocity, radius, next state).
/// Deterministic given `(spec, state, ctx, rng position)`.
pub fn behavior_step<F: Real>(
    spec: &BehaviorSpec<F>,
    state: &WorkerPolicyState<F>,
    ctx: &BehaviorContext<'_, F>,
    dt: F,
    rng: &mut Rng,
) -> (Vector2<F>, F, WorkerPolicyState<F>) {
    let me = &ctx.joint.workers[ctx.self_index];
    let waypoints = spec.kind.waypoints();
    let mut next = *state;
    next.age = state.age + dt;

    // Phase transitions first, so a freshly finished dwell moves this step
    // and an already-arrived traveler retargets before steering.
    let mut guard = 0;
    loop {
        guard += 1;
        match next.phase {
            Phase::Dwell { duration, next_leg } => {
                if next.phase_clock >= duration {
                    next.phase = Phase::Travel { leg: next_leg };
                    next.phase_clock = F::zero();
                    next.current_target = waypoints[next_leg % waypoints.len()];
                } else {
                    break;
                }
            }
            Phase::Travel { leg } => {
                let target = waypoints[leg % waypoints.len()];
                next.current_target = target;
                if me.position.distance(target) >= ctx.crowd.arrive_eps {
                    break;
                }
                if !spec.kind.cycles() {
                    break; // goal reached, stay put
                }
                let next_leg = (leg + 1) % waypoints.len();
                if let Some((lo, hi)) = spec.kind.dwell_range() {
                    let duration: F =
                        real::<F>(rng.gen_range(lo.as_f64()..=hi.as_f64()));
                    next.phase = Phase::Dwell { duration, next_leg };
                    next.phase_clock = F::zero();
                } else {
                    next.phase = Phase::Travel { leg: next_leg };
                    next.phase_clock = F::zero();
                    next.current_target = waypoints[next_leg % waypoints.len()];
                }
            }
        }
        if guard > 2 * waypoints.len() + 2 {
            break; // all waypoints coincide; give up retargeting
        }
    }

    let radius = match &spec.kind {
        BehaviorKind::VolatileRadius {
            r_mid,
            r_amp,
            period,
            ..
        } => volatile_radius_at(*r_mid, *r_amp, *period, next.age, ctx.crowd),
        _ => spec.radius,
    };

    let velocity = match next.phase {
        Phase::Dwell { .. } => {
            next.phase_clock = state.phase_clock + dt;
            Vector2::zero()
        }
        Phase::Travel { .. } => {
            next.phase_clock = next.phase_clock + dt;
            let mut neighbors: Vec<OrcaNeighbor<F>> = Vec::new();
            for (i, w) in ctx.joint.workers.iter().enumerate() {
                if i != ctx.self_index {
                    neighbors.push(OrcaNeighbor::from(w));
                }
            }
            // Workers pay the robot attention only at close range.
            let robot = &ctx.joint.robot;
            let edge = me.position.distance(robot.position) - me.radius - robot.radius;
            if edge <= ctx.crowd.reaction_distance {
                neighbors.push(OrcaNeighbor {
                    position: robot.position,
                    velocity: robot.velocity,
                    radius: robot.radius,
                });
            }
            orca_step(
                me,
                &neighbors,
                next.current_target,
                spec.v_pref,
                dt,
                ctx.crowd.time_horizon,
                ctx.crowd.arrive_eps,
            )
        }
    };

    (velocity, radius, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::world::{RobotState, WorkerState};
    use approx::assert_relative_eq;

    type V = Vector2<f64>;

    fn ctx_fixture(worker_pos: V) -> (JointState<f64>, GridMap<f64>, CrowdConfig<f64>) {
        let joint = JointState {
            robot: RobotState {
                position: V::new(50.0, 50.0),
                velocity: V::zero(),
                heading: 0.0,
                radius: 0.3,
                v_pref: 1.0,
                goal: V::new(60.0, 50.0),
            },
            workers: vec![WorkerState {
                id: 0,
                position: worker_pos,
                velocity: V::zero(),
                radius: 0.3,
            }],
            time: 0.0,
        };
        let map = GridMap::empty(Rect::new(V::new(-10.0, -10.0), V::new(70.0, 70.0)), 0.5).unwrap();
        (joint, map, CrowdConfig::default())
    }

    fn spec(kind: BehaviorKind<f64>) -> BehaviorSpec<f64> {
        BehaviorSpec {
            kind,
            v_pref: 1.0,
            radius: 0.3,
            seed_stream: 0,
        }
    }

    #[test]
    fn pacing_retargets_at_endpoints() {
        let a = V::new(0.0, 0.0);
        let b = V::new(1.5, 0.0);
        let s = spec(BehaviorKind::Pacing { a, b });
        let (joint, map, crowd) = ctx_fixture(a);
        let ctx = BehaviorContext {
            joint: &joint,
            map: &map,
            self_index: 0,
            crowd: &crowd,
        };
        let mut rng = crate::seeding::rng_from(0);
        let st = WorkerPolicyState::initial(&s);
        // Standing at A: target must switch to B immediately.
        let (v, _, st2) = behavior_step(&s, &st, &ctx, 0.25, &mut rng);
        assert_eq!(st2.current_target, b);
        assert!(v.x > 0.9);

        // Standing at B: target must switch back to A.
        let (joint_b, map_b, crowd_b) = ctx_fixture(b);
        let ctx_b = BehaviorContext {
            joint: &joint_b,
            map: &map_b,
            self_index: 0,
            crowd: &crowd_b,
        };
        let (v, _, st3) = behavior_step(&s, &st2, &ctx_b, 0.25, &mut rng);
        assert_eq!(st3.current_target, a);
        assert!(v.x < -0.9);
    }

    #[test]
    fn stop_and_go_dwells_with_zero_velocity() {
        let s = spec(BehaviorKind::StopAndGo {
            waypoints: vec![V::new(0.0, 0.0), V::new(3.0, 0.0)],
            dwell: (2.0, 6.0),
        });
        let (joint, map, crowd) = ctx_fixture(V::new(0.0, 0.0));
        let ctx = BehaviorContext {
            joint: &joint,
            map: &map,
            self_index: 0,
            crowd: &crowd,
        };
        let mut rng = crate::seeding::rng_from(1);
        let st = WorkerPolicyState::initial(&s);
        // At waypoint 0: enters dwell, zero velocity, clock advances.
        let (v, _, st2) = behavior_step(&s, &st, &ctx, 0.25, &mut rng);
        assert_eq!(v, V::zero());
        match st2.phase {
            Phase::Dwell { duration, next_leg } => {
                assert!((2.0..=6.0).contains(&duration));
                assert_eq!(next_leg, 1);
            }
            _ => panic!("expected dwell"),
        }
        assert_relative_eq!(st2.phase_clock, 0.25);

        // Still dwelling while the clock is below the drawn duration.
        let (v, _, st3) = behavior_step(&s, &st2, &ctx, 0.25, &mut rng);
        assert_eq!(v, V::zero());
        assert_relative_eq!(st3.phase_clock, 0.5);
    }

    #[test]
    fn stop_and_go_moves_after_dwell() {
        let s = spec(BehaviorKind::StopAndGo {
            waypoints: vec![V::new(0.0, 0.0), V::new(3.0, 0.0)],
            dwell: (0.5, 0.5),
        });
        let (joint, map, crowd) = ctx_fixture(V::new(0.0, 0.0));
        let ctx = BehaviorContext {
            joint: &joint,
            map: &map,
            self_index: 0,
            crowd: &crowd,
        };
        let mut rng = crate::seeding::rng_from(2);
        let mut st = WorkerPolicyState::initial(&s);
        let mut moved = false;
        for _ in 0..8 {
            let (v, _, s2) = behavior_step(&s, &st, &ctx, 0.25, &mut rng);
            st = s2;
            if v.norm() > 0.5 {
                moved = true;
                assert_eq!(st.current_target, V::new(3.0, 0.0));
                break;
            }
        }
        assert!(moved, "worker never left the dwell");
    }

    #[test]
    fn volatile_radius_follows_the_sinusoid() {
        let cfg = CrowdConfig::default();
        // Quarter period: sin = 1.
        assert_relative_eq!(volatile_radius_at(0.4, 0.2, 8.0, 2.0, &cfg), 0.6);
        // Clamped at the configured max.
        let tight = CrowdConfig {
            r_max: 0.5,
            ..CrowdConfig::default()
        };
        assert_relative_eq!(volatile_radius_at(0.4, 0.2, 8.0, 2.0, &tight), 0.5);
    }

    #[test]
    fn volatile_radius_steps_with_age() {
        let s = spec(BehaviorKind::VolatileRadius {
            inner: Box::new(BehaviorKind::Pacing {
                a: V::new(0.0, 0.0),
                b: V::new(1.5, 0.0),
            }),
            r_mid: 0.4,
            r_amp: 0.2,
            period: 8.0,
        });
        let (joint, map, crowd) = ctx_fixture(V::new(0.7, 0.0));
        let ctx = BehaviorContext {
            joint: &joint,
            map: &map,
            self_index: 0,
            crowd: &crowd,
        };
        let mut rng = crate::seeding::rng_from(3);
        let mut st = WorkerPolicyState::initial(&s);
        let mut radius = 0.0;
        for _ in 0..8 {
            let (_, r, s2) = behavior_step(&s, &st, &ctx, 0.25, &mut rng);
            st = s2;
            radius = r;
        }
        // age = 2.0 after eight 0.25 s steps.
        assert_relative_eq!(st.age, 2.0);
        assert_relative_eq!(radius, 0.6);
        // Never leaves the clamp over a long horizon.
        for _ in 0..200 {
            let (_, r, s2) = behavior_step(&s, &st, &ctx, 0.25, &mut rng);
            st = s2;
            assert!((crowd.r_min..=crowd.r_max).contains(&r));
        }
    }

    #[test]
    fn behavior_step_is_deterministic() {
        let s = spec(BehaviorKind::StopAndGo {
            waypoints: vec![V::new(0.0, 0.0), V::new(2.0, 1.0)],
            dwell: (1.0, 3.0),
        });
        let (joint, map, crowd) = ctx_fixture(V::new(0.0, 0.0));
        let ctx = BehaviorContext {
            joint: &joint,
            map: &map,
            self_index: 0,
            crowd: &crowd,
        };
        let run = || {
            let mut rng = crate::seeding::rng_from(42);
            let mut st = WorkerPolicyState::initial(&s);
            let mut trace = Vec::new();
            for _ in 0..40 {
                let (v, r, s2) = behavior_step(&s, &st, &ctx, 0.25, &mut rng);
                st = s2;
                trace.push((v, r, st));
            }
            trace
        };
        assert_eq!(run(), run());
    }
}
