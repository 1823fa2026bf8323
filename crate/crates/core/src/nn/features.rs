//! Robot-centric, rotation-normalized features: everything is expressed in
//! the frame whose x-axis points from the robot to its goal, which makes the
//! value function invariant to rigid motions of the world.

use crate::scalar::{real, Real};
use crate::world::JointState;

/// Feature vector length per worker row.
pub const FEAT_DIM: usize = 12;
/// Leading entries describing the robot itself (shared across rows).
pub const ROBOT_FEAT_DIM: usize = 5;
/// `d_i` written into the sentinel row when no worker is observed.
pub const SENTINEL_DISTANCE: f64 = 10.0;

/// One row per observed worker:
/// `[dg, v_pref, vx, vy, r_rob, px, py, wvx, wvy, r_w, d_i, r_w + r_rob]`
/// with robot velocity, worker offset, and worker velocity all rotated into
/// the goal-aligned frame.
pub type FeatureRow<F> = [F; FEAT_DIM];

/// Featurize a joint state. With zero observed workers a single sentinel
/// row is emitted: worker fields zero, `d_i` pinned at a large constant, so
/// the network always receives at least one row.
pub fn featurize<F: Real>(joint: &JointState<F>) -> Vec<FeatureRow<F>> {
    let robot = &joint.robot;
    let to_goal = robot.goal - robot.position;
    let dg = to_goal.norm();
    // At the goal the frame degenerates; fall back to the world frame.
    let rot = if dg > real(1e-9) {
        -to_goal.angle()
    } else {
        F::zero()
    };
    let v_rot = robot.velocity.rotated(rot);

    let robot_part = [dg, robot.v_pref, v_rot.x, v_rot.y, robot.radius];
    if joint.workers.is_empty() {
        let mut row = [F::zero(); FEAT_DIM];
        row[..ROBOT_FEAT_DIM].copy_from_slice(&robot_part);
        row[10] = real(SENTINEL_DISTANCE);
        row[11] = robot.radius;
        return vec![row];
    }

    joint
        .workers
        .iter()
        .map(|w| {
            let rel = (w.position - robot.position).rotated(rot);
            let wv = w.velocity.rotated(rot);
            let d_i = w.position.distance(robot.position);
            let mut row = [F::zero(); FEAT_DIM];
            row[..ROBOT_FEAT_DIM].copy_from_slice(&robot_part);
            row[5] = rel.x;
            row[6] = rel.y;
            row[7] = wv.x;
            row[8] = wv.y;
            row[9] = w.radius;
            row[10] = d_i;
            row[11] = w.radius + robot.radius;
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vector2;
    use crate::world::{RobotState, WorkerState};
    use approx::assert_relative_eq;

    type V = Vector2<f64>;

    fn joint(robot_pos: V, goal: V, workers: Vec<WorkerState<f64>>) -> JointState<f64> {
        JointState {
            robot: RobotState {
                position: robot_pos,
                velocity: V::new(0.6, 0.0),
                heading: 0.0,
                radius: 0.3,
                v_pref: 1.0,
                goal,
            },
            workers,
            time: 0.0,
        }
    }

    #[test]
    fn worker_to_the_left_maps_to_positive_y() {
        // Robot heading straight at the goal along +x; a worker 1 m to its
        // left sits at (0, 1) in the canonical frame.
        let j = joint(
            V::new(2.0, 3.0),
            V::new(7.0, 3.0),
            vec![WorkerState {
                id: 0,
                position: V::new(2.0, 4.0),
                velocity: V::zero(),
                radius: 0.3,
            }],
        );
        let rows = featurize(&j);
        assert_eq!(rows.len(), 1);
        assert_relative_eq!(rows[0][5], 0.0, epsilon = 1e-12);
        assert_relative_eq!(rows[0][6], 1.0, epsilon = 1e-12);
        assert_relative_eq!(rows[0][10], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn invariant_under_rigid_motion() {
        let base = joint(
            V::new(1.0, 2.0),
            V::new(4.0, 6.0),
            vec![
                WorkerState {
                    id: 0,
                    position: V::new(2.5, 2.0),
                    velocity: V::new(0.4, -0.2),
                    radius: 0.35,
                },
                WorkerState {
                    id: 1,
                    position: V::new(0.0, 4.0),
                    velocity: V::new(-0.3, 0.3),
                    radius: 0.5,
                },
            ],
        );
        let rows0 = featurize(&base);
        for (angle, shift) in [(0.7, V::new(3.0, -2.0)), (-2.1, V::new(-5.0, 9.0))] {
            let xf = |p: V| p.rotated(angle) + shift;
            let xv = |v: V| v.rotated(angle);
            let mut moved = base.clone();
            moved.robot.position = xf(base.robot.position);
            moved.robot.goal = xf(base.robot.goal);
            moved.robot.velocity = xv(base.robot.velocity);
            for (w, orig) in moved.workers.iter_mut().zip(&base.workers) {
                w.position = xf(orig.position);
                w.velocity = xv(orig.velocity);
            }
            let rows1 = featurize(&moved);
            for (r0, r1) in rows0.iter().zip(&rows1) {
                for (a, b) in r0.iter().zip(r1) {
                    assert_relative_eq!(a, b, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn distances_match_bruteforce() {
        let j = joint(
            V::new(-1.0, 0.5),
            V::new(3.0, -2.0),
            vec![WorkerState {
                id: 0,
                position: V::new(1.0, 1.0),
                velocity: V::zero(),
                radius: 0.4,
            }],
        );
        let rows = featurize(&j);
        let dg = ((3.0f64 - -1.0).powi(2) + (-2.0f64 - 0.5).powi(2)).sqrt();
        let d_i = ((1.0f64 - -1.0).powi(2) + (1.0f64 - 0.5).powi(2)).sqrt();
        assert_relative_eq!(rows[0][0], dg, epsilon = 1e-12);
        assert_relative_eq!(rows[0][10], d_i, epsilon = 1e-12);
    }

    #[test]
    fn sentinel_row_for_empty_observation() {
        let j = joint(V::new(0.0, 0.0), V::new(5.0, 0.0), vec![]);
        let rows = featurize(&j);
        assert_eq!(rows.len(), 1);
        assert_relative_eq!(rows[0][0], 5.0); // dg survives
        assert_relative_eq!(rows[0][10], SENTINEL_DISTANCE);
        assert_eq!(&rows[0][5..10], &[0.0; 5]);
    }

    #[test]
    fn at_goal_uses_world_frame() {
        let j = joint(
            V::new(2.0, 2.0),
            V::new(2.0, 2.0),
            vec![WorkerState {
                id: 0,
                position: V::new(3.0, 2.0),
                velocity: V::zero(),
                radius: 0.3,
            }],
        );
        let rows = featurize(&j);
        assert_relative_eq!(rows[0][5], 1.0);
        assert_relative_eq!(rows[0][6], 0.0);
    }
}
