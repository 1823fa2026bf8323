//! Reciprocal collision avoidance for the scripted workers.
//!
//! Each neighbor induces a half-plane of admissible velocities; the returned
//! velocity is the feasible point closest to the preferred velocity, solved
//! with the standard incremental 2D linear program. When the half-planes are
//! jointly infeasible the solver falls back to the least-penetrating
//! velocity (the classic projective 3D program). Constraints are built in
//! the caller-supplied neighbor order, so runs are reproducible.

use crate::geometry::Vector2;
use crate::scalar::{real, Real};
use crate::world::WorkerState;

/// Half-plane constraint: valid velocities lie on the counter-clockwise side
/// of the line through `point` along unit `direction`.
#[derive(Debug, Clone, Copy)]
pub struct HalfPlane<F> {
    pub point: Vector2<F>,
    pub direction: Vector2<F>,
}

impl<F: Real> HalfPlane<F> {
    /// Signed satisfaction margin; >= 0 when `v` is valid.
    pub fn margin(&self, v: Vector2<F>) -> F {
        self.direction.det(v - self.point)
    }
}

/// A neighbor as seen by the avoidance solver (another worker or the robot).
#[derive(Debug, Clone, Copy)]
pub struct OrcaNeighbor<F> {
    pub position: Vector2<F>,
    pub velocity: Vector2<F>,
    pub radius: F,
}

impl<F: Real> From<&WorkerState<F>> for OrcaNeighbor<F> {
    fn from(w: &WorkerState<F>) -> Self {
        Self {
            position: w.position,
            velocity: w.velocity,
            radius: w.radius,
        }
    }
}

fn lp_epsilon<F: Real>() -> F {
    real(1e-5)
}

/// Reciprocal half-plane induced by `neighbor` on the agent at `position`
/// moving at `velocity`. Coincident positions are treated as a maximal
/// penetration at the current step, never a division by zero.
pub fn neighbor_half_plane<F: Real>(
    position: Vector2<F>,
    velocity: Vector2<F>,
    radius: F,
    neighbor: &OrcaNeighbor<F>,
    time_horizon: F,
    dt: F,
) -> HalfPlane<F> {
    let rel_pos = neighbor.position - position;
    let rel_vel = velocity - neighbor.velocity;
    let dist_sq = rel_pos.norm_sq();
    let r_sum = radius + neighbor.radius;
    let r_sq = r_sum * r_sum;

    let direction;
    let u;
    if dist_sq > r_sq {
        // Not currently colliding: the velocity obstacle is a disc of radius
        // r_sum/horizon around rel_pos/horizon plus its outward shadow.
        let w = rel_vel - rel_pos / time_horizon;
        let w_len_sq = w.norm_sq();
        let dot1 = w.dot(rel_pos);
        if dot1 < F::zero() && dot1 * dot1 > r_sq * w_len_sq {
            // Project onto the cut-off disc.
            let w_len = w_len_sq.sqrt();
            let unit_w = w / w_len;
            direction = Vector2::new(unit_w.y, -unit_w.x);
            u = unit_w * (r_sum / time_horizon - w_len);
        } else {
            // Project onto the nearer shadow leg.
            let leg = (dist_sq - r_sq).sqrt();
            let dir = if rel_pos.det(w) > F::zero() {
                Vector2::new(
                    rel_pos.x * leg - rel_pos.y * r_sum,
                    rel_pos.x * r_sum + rel_pos.y * leg,
                ) / dist_sq
            } else {
                -Vector2::new(
                    rel_pos.x * leg + rel_pos.y * r_sum,
                    -rel_pos.x * r_sum + rel_pos.y * leg,
                ) / dist_sq
            };
            direction = dir;
            u = dir * rel_vel.dot(dir) - rel_vel;
        }
    } else {
        // Already overlapping: push apart over one control step.
        let inv_dt = F::one() / dt;
        let w = rel_vel - rel_pos * inv_dt;
        let w_len = w.norm();
        let unit_w = if w_len > F::zero() {
            w / w_len
        } else {
            // Coincident and co-moving; pick a fixed separation axis.
            Vector2::new(F::one(), F::zero())
        };
        direction = Vector2::new(unit_w.y, -unit_w.x);
        u = unit_w * (r_sum * inv_dt - w_len);
    }
    // Reciprocity: each agent takes half of the correction.
    HalfPlane {
        point: velocity + u * real(0.5),
        direction,
    }
}

enum Objective<F> {
    /// Closest feasible point to this velocity.
    Point(Vector2<F>),
    /// Furthest feasible point along this unit direction.
    Direction(Vector2<F>),
}

/// Solve on the boundary line of `constraints[index]`, restricted to the
/// speed disc and to `constraints[..index]`.
fn solve_on_line<F: Real>(
    constraints: &[HalfPlane<F>],
    index: usize,
    max_speed: F,
    objective: &Objective<F>,
) -> Option<Vector2<F>> {
    let line = &constraints[index];
    let dot = line.point.dot(line.direction);
    let discriminant = dot * dot + max_speed * max_speed - line.point.norm_sq();
    if discriminant < F::zero() {
        return None;
    }
    let sqrt_d = discriminant.sqrt();
    let mut t_left = -dot - sqrt_d;
    let mut t_right = -dot + sqrt_d;

    for other in &constraints[..index] {
        let denominator = line.direction.det(other.direction);
        let numerator = other.direction.det(line.point - other.point);
        if denominator.abs() <= lp_epsilon() {
            if numerator < F::zero() {
                return None;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator >= F::zero() {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }

    let t = match objective {
        Objective::Direction(dir) => {
            if dir.dot(line.direction) > F::zero() {
                t_right
            } else {
                t_left
            }
        }
        Objective::Point(p) => line.direction.dot(*p - line.point).max(t_left).min(t_right),
    };
    Some(line.point + line.direction * t)
}

enum Lp2Outcome<F> {
    Feasible(Vector2<F>),
    Infeasible {
        failed_index: usize,
        partial: Vector2<F>,
    },
}

fn solve_2d<F: Real>(
    constraints: &[HalfPlane<F>],
    max_speed: F,
    objective: &Objective<F>,
) -> Lp2Outcome<F> {
    let mut best = match objective {
        Objective::Direction(dir) => *dir * max_speed,
        Objective::Point(p) => {
            if p.norm_sq() > max_speed * max_speed {
                p.normalize_or_zero() * max_speed
            } else {
                *p
            }
        }
    };
    for (i, c) in constraints.iter().enumerate() {
        if c.margin(best) >= F::zero() {
            continue;
        }
        match solve_on_line(constraints, i, max_speed, objective) {
            Some(v) => best = v,
            None => {
                return Lp2Outcome::Infeasible {
                    failed_index: i,
                    partial: best,
                }
            }
        }
    }
    Lp2Outcome::Feasible(best)
}

/// Least-penetration fallback: move all half-planes back in lockstep until
/// the program turns feasible.
fn solve_least_penetration<F: Real>(
    constraints: &[HalfPlane<F>],
    max_speed: F,
    failed_index: usize,
    mut best: Vector2<F>,
) -> Vector2<F> {
    let mut penetration = F::zero();
    for i in failed_index..constraints.len() {
        let c = &constraints[i];
        if c.direction.det(c.point - best) <= penetration {
            continue;
        }
        let mut projected: Vec<HalfPlane<F>> = Vec::with_capacity(i);
        for other in &constraints[..i] {
            let determinant = c.direction.det(other.direction);
            let point = if determinant.abs() <= lp_epsilon() {
                if c.direction.dot(other.direction) > F::zero() {
                    continue;
                }
                (c.point + other.point) * real(0.5)
            } else {
                let t = other.direction.det(c.point - other.point) / determinant;
                c.point + c.direction * t
            };
            projected.push(HalfPlane {
                point,
                direction: (other.direction - c.direction).normalize_or_zero(),
            });
        }
        let objective = Objective::Direction(c.direction.perp());
        if let Lp2Outcome::Feasible(v) = solve_2d(&projected, max_speed, &objective) {
            best = v;
        }
        penetration = c.direction.det(c.point - best);
    }
    best
}

/// Velocity closest to `preferred` satisfying every half-plane, capped at
/// `max_speed`; least-penetrating velocity when jointly infeasible.
pub fn solve_velocity<F: Real>(
    constraints: &[HalfPlane<F>],
    max_speed: F,
    preferred: Vector2<F>,
) -> Vector2<F> {
    match solve_2d(constraints, max_speed, &Objective::Point(preferred)) {
        Lp2Outcome::Feasible(v) => v,
        Lp2Outcome::Infeasible {
            failed_index,
            partial,
        } => solve_least_penetration(constraints, max_speed, failed_index, partial),
    }
}

/// One avoidance step: steer toward `goal` at `v_pref` while respecting the
/// reciprocal half-planes of `neighbors` (in the given order). Within
/// `arrive_eps` of the goal the agent stops.
pub fn orca_step<F: Real>(
    state: &WorkerState<F>,
    neighbors: &[OrcaNeighbor<F>],
    goal: Vector2<F>,
    v_pref: F,
    dt: F,
    time_horizon: F,
    arrive_eps: F,
) -> Vector2<F> {
    let to_goal = goal - state.position;
    if to_goal.norm() < arrive_eps {
        return Vector2::zero();
    }
    let preferred = to_goal.normalize_or_zero() * v_pref;
    if neighbors.is_empty() {
        return preferred;
    }
    let constraints: Vec<HalfPlane<F>> = neighbors
        .iter()
        .map(|n| {
            neighbor_half_plane(state.position, state.velocity, state.radius, n, time_horizon, dt)
        })
        .collect();
    solve_velocity(&constraints, v_pref, preferred)
}
