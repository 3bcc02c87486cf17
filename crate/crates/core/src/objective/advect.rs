use crate::Vec3;

use super::{ObjectiveError, VelocityField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryEnd {
    Outflow,
    Stuck,
    MaxSteps,
}

/// Integration settings for [`advect`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdvectConfig {
    pub dt: f64,
    pub max_steps: usize,
    /// Speed below which a step counts as stagnant.
    pub stuck_speed: f64,
    /// Consecutive stagnant steps before giving up.
    pub stuck_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(t, position)` after every step, starting at the seed point.
    pub samples: Vec<(f64, Vec3)>,
    pub end: TrajectoryEnd,
}

impl Trajectory {
    pub fn exit(&self) -> Option<&(f64, Vec3)> {
        match self.end {
            TrajectoryEnd::Outflow => self.samples.last(),
            _ => None,
        }
    }
}

fn rk4<F: VelocityField + ?Sized>(field: &F, p: &Vec3, h: f64) -> Vec3 {
    let k1 = field.velocity(p);
    let k2 = field.velocity(&(p + k1 * (h / 2.0)));
    let k3 = field.velocity(&(p + k2 * (h / 2.0)));
    let k4 = field.velocity(&(p + k3 * h));
    p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrates a particle with classical RK4 until it crosses the plane
/// `x = outflow_x`. The last step is shortened by secant iteration so the
/// endpoint lies on the plane and keeps the order of the scheme.
pub fn advect<F: VelocityField + ?Sized>(field: &F, x0: &Vec3, outflow_x: f64, cfg: &AdvectConfig) -> Result<Trajectory, ObjectiveError> {
    if !(cfg.dt > 0.0) || !cfg.dt.is_finite() {
        return Err(ObjectiveError::InvalidParameter(format!("dt must be positive, got {}", cfg.dt)));
    }
    if x0.iter().any(|c| !c.is_finite()) {
        return Err(ObjectiveError::NonFinite);
    }
    let mut samples = vec![(0.0, *x0)];
    let mut p = *x0;
    let mut t = 0.0;
    let mut stagnant = 0;
    for step in 0..cfg.max_steps {
        if field.velocity(&p).norm() < cfg.stuck_speed {
            stagnant += 1;
            if stagnant >= cfg.stuck_steps {
                return Ok(Trajectory {
                    samples,
                    end: TrajectoryEnd::Stuck,
                });
            }
        } else {
            stagnant = 0;
        }
        let next = rk4(field, &p, cfg.dt);
        if next.iter().any(|c| !c.is_finite()) {
            return Err(ObjectiveError::NonFinite);
        }
        if next.x >= outflow_x {
            let (h, q) = final_step(field, &p, next, outflow_x, cfg.dt);
            samples.push((t + h, q));
            return Ok(Trajectory {
                samples,
                end: TrajectoryEnd::Outflow,
            });
        }
        p = next;
        t = (step + 1) as f64 * cfg.dt;
        samples.push((t, p));
    }
    Ok(Trajectory {
        samples,
        end: TrajectoryEnd::MaxSteps,
    })
}

fn final_step<F: VelocityField + ?Sized>(field: &F, p: &Vec3, full: Vec3, plane: f64, dt: f64) -> (f64, Vec3) {
    // Bracketed secant (regula falsi with the Illinois tweak) on the step size.
    let (mut a, mut ga) = (0.0, p.x - plane);
    let (mut b, mut gb) = (dt, full.x - plane);
    let mut best = (dt, full);
    if gb == 0.0 {
        return best;
    }
    let tol = 1e-13 * plane.abs().max(1.0);
    let mut side = 0;
    for _ in 0..60 {
        let h = if gb != ga { b - gb * (b - a) / (gb - ga) } else { 0.5 * (a + b) };
        let h = if h > a && h < b { h } else { 0.5 * (a + b) };
        let q = rk4(field, p, h);
        let g = q.x - plane;
        best = (h, q);
        if g.abs() <= tol {
            break;
        }
        if g > 0.0 {
            b = h;
            gb = g;
            if side == 1 {
                ga /= 2.0;
            }
            side = 1;
        } else {
            a = h;
            ga = g;
            if side == -1 {
                gb /= 2.0;
            }
            side = -1;
        }
    }
    let (h, mut q) = best;
    q.x = plane;
    (h, q)
}
