//! Mixing objective: particles seeded on inflow rectangles are advected
//! through the channel, and the growth of their convex hulls between inflow
//! and outflow measures how well the element stretches the flow.

mod advect;
mod field;
mod hull;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::{MeshError, TriMesh};
use crate::Vec3;

pub use advect::{advect, AdvectConfig, Trajectory, TrajectoryEnd};
pub use field::{place_element, surrogate_field, BarrelShear, SurrogateField, VelocityField};
pub use hull::{convex_hull_2d, Hull2D};

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("convex hull needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("objective unreliable: {skipped} of {total} rectangles lost their particles")]
    Unreliable { skipped: usize, total: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Unwound screw channel section. `x` runs along the channel from the inflow
/// plane `x = 0` to the outflow plane `x = length`, `y` across the width and
/// `z` from the root (`z = 0`) to the barrel (`z = height`). SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    /// Barrel surface speed relative to the screw.
    pub barrel_speed: f64,
    /// Angle between the barrel motion and the channel axis, radians.
    pub barrel_angle: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            length: 0.0315,
            width: 0.02405,
            height: 0.0075,
            barrel_speed: 1.0,
            barrel_angle: 20f64.to_radians(),
        }
    }
}

impl ChannelSpec {
    pub fn center(&self) -> Vec3 {
        Vec3::new(self.length, self.width, self.height) / 2.0
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        for (name, v) in [
            ("length", self.length),
            ("width", self.width),
            ("height", self.height),
            ("barrel_speed", self.barrel_speed),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ObjectiveError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.barrel_angle.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(ObjectiveError::InvalidParameter(format!(
                "barrel_angle must lie strictly between -pi/2 and pi/2, got {}",
                self.barrel_angle
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveConfig {
    /// Inflow rectangles along `y` and `z`.
    pub grid: [usize; 2],
    /// Particles on each rectangle's perimeter; a multiple of 4.
    pub particles_per_rect: usize,
    /// Centered fraction of the inflow cross-section that is subdivided.
    pub inflow_fraction: f64,
    /// Channel units per unit of the element mesh.
    pub element_scale: f64,
    /// Surrogate ramp width relative to the element's bounding radius.
    pub ramp_fraction: f64,
    /// Time step as a fraction of `length / barrel_speed`.
    pub dt_fraction: f64,
    pub max_steps: usize,
    /// Stagnation speed as a fraction of `barrel_speed`.
    pub stuck_speed_fraction: f64,
    pub stuck_steps: usize,
    /// Largest tolerated fraction of skipped rectangles.
    pub max_skipped_fraction: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            grid: [4, 3],
            particles_per_rect: 16,
            inflow_fraction: 0.6,
            element_scale: 0.003,
            ramp_fraction: 0.1,
            dt_fraction: 0.005,
            max_steps: 20_000,
            stuck_speed_fraction: 1e-3,
            stuck_steps: 50,
            max_skipped_fraction: 0.5,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        let bad = |m: String| Err(ObjectiveError::InvalidParameter(m));
        if self.grid[0] == 0 || self.grid[1] == 0 {
            return bad(format!("grid must be positive, got {:?}", self.grid));
        }
        if self.particles_per_rect < 4 || !self.particles_per_rect.is_multiple_of(4) {
            return bad(format!(
                "particles_per_rect must be a positive multiple of 4, got {}",
                self.particles_per_rect
            ));
        }
        if !(self.inflow_fraction > 0.0 && self.inflow_fraction <= 1.0) {
            return bad(format!("inflow_fraction must lie in (0, 1], got {}", self.inflow_fraction));
        }
        if !(self.element_scale > 0.0 && self.ramp_fraction > 0.0 && self.dt_fraction > 0.0) {
            return bad("element_scale, ramp_fraction and dt_fraction must be positive".into());
        }
        if self.max_steps == 0 || self.stuck_steps == 0 {
            return bad("max_steps and stuck_steps must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.max_skipped_fraction) || !(self.stuck_speed_fraction >= 0.0) {
            return bad("max_skipped_fraction must lie in [0, 1] and stuck_speed_fraction be >= 0".into());
        }
        Ok(())
    }

    pub fn advect_config(&self, spec: &ChannelSpec) -> AdvectConfig {
        AdvectConfig {
            dt: self.dt_fraction * spec.length / spec.barrel_speed,
            max_steps: self.max_steps,
            stuck_speed: self.stuck_speed_fraction * spec.barrel_speed,
            stuck_steps: self.stuck_steps,
        }
    }
}

/// Per-rectangle outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RectResult {
    /// Cell indices along `y` and `z`.
    pub cell: [usize; 2],
    /// Particles that reached the outflow.
    pub live: usize,
    /// Hull perimeter of the live particles at the inflow.
    pub p_in: f64,
    /// Hull perimeter at the outflow; `None` if the rectangle was skipped.
    pub p_out: Option<f64>,
}

impl RectResult {
    pub fn relative_increase(&self) -> Option<f64> {
        self.p_out.map(|p| (p - self.p_in) / self.p_in)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingReport {
    /// `-mean (P_out - P_in) / P_in` over the rectangles kept.
    pub j: f64,
    pub rects: Vec<RectResult>,
    /// All particle paths, rectangle-major.
    pub trajectories: Vec<Trajectory>,
}

/// Inflow rectangles as `(cell, [y0, z0], [y1, z1])`, `y` fastest.
pub fn inflow_rectangles(spec: &ChannelSpec, cfg: &ObjectiveConfig) -> Vec<([usize; 2], [f64; 2], [f64; 2])> {
    let margin = (1.0 - cfg.inflow_fraction) / 2.0;
    let (y_lo, z_lo) = (margin * spec.width, margin * spec.height);
    let dy = cfg.inflow_fraction * spec.width / cfg.grid[0] as f64;
    let dz = cfg.inflow_fraction * spec.height / cfg.grid[1] as f64;
    let mut out = Vec::with_capacity(cfg.grid[0] * cfg.grid[1]);
    for iz in 0..cfg.grid[1] {
        for iy in 0..cfg.grid[0] {
            let lo = [y_lo + iy as f64 * dy, z_lo + iz as f64 * dz];
            out.push(([iy, iz], lo, [lo[0] + dy, lo[1] + dz]));
        }
    }
    out
}

/// `n / 4` evenly spaced particles per side, walking the perimeter
/// counter-clockwise from the lower corner. Every corner is included.
pub fn perimeter_particles(lo: [f64; 2], hi: [f64; 2], n: usize) -> Vec<[f64; 2]> {
    let per_side = n / 4;
    let corners = [lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
    let mut out = Vec::with_capacity(n);
    for s in 0..4 {
        let (a, b) = (corners[s], corners[(s + 1) % 4]);
        for k in 0..per_side {
            let t = k as f64 / per_side as f64;
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Runs the particle experiment in an arbitrary velocity field.
pub fn evaluate_mixing<F: VelocityField + ?Sized>(field: &F, spec: &ChannelSpec, cfg: &ObjectiveConfig) -> Result<MixingReport, ObjectiveError> {
    spec.validate()?;
    cfg.validate()?;
    let acfg = cfg.advect_config(spec);
    let rects = inflow_rectangles(spec, cfg);
    let seeds: Vec<Vec3> = rects
        .iter()
        .flat_map(|(_, lo, hi)| perimeter_particles(*lo, *hi, cfg.particles_per_rect))
        .map(|q| Vec3::new(0.0, q[0], q[1]))
        .collect();
    let trajectories = seeds
        .par_iter()
        .map(|x0| advect(field, x0, spec.length, &acfg))
        .collect::<Result<Vec<_>, _>>()?;

    let mut results = Vec::with_capacity(rects.len());
    let mut sum = 0.0;
    let mut kept = 0;
    for (r, (cell, _, _)) in rects.iter().enumerate() {
        let range = r * cfg.particles_per_rect..(r + 1) * cfg.particles_per_rect;
        let mut inflow = Vec::new();
        let mut outflow = Vec::new();
        for (x0, tr) in seeds[range.clone()].iter().zip(&trajectories[range]) {
            if let Some((_, q)) = tr.exit() {
                inflow.push([x0.y, x0.z]);
                outflow.push([q.y, q.z]);
            }
        }
        let live = outflow.len();
        let (p_in, p_out) = if live >= 3 {
            let p_in = convex_hull_2d(&inflow)?.perimeter;
            let p_out = convex_hull_2d(&outflow)?.perimeter;
            if p_in > 0.0 {
                (p_in, Some(p_out))
            } else {
                (p_in, None)
            }
        } else {
            (0.0, None)
        };
        if p_out.is_none() {
            log::warn!(
                "rectangle {cell:?} skipped: only {live} of {} particles reached the outflow",
                cfg.particles_per_rect
            );
        } else if live < cfg.particles_per_rect {
            log::debug!(
                "rectangle {cell:?}: {} of {} particles did not reach the outflow",
                cfg.particles_per_rect - live,
                cfg.particles_per_rect
            );
        }
        let res = RectResult {
            cell: *cell,
            live,
            p_in,
            p_out,
        };
        if let Some(inc) = res.relative_increase() {
            sum += inc;
            kept += 1;
        }
        results.push(res);
    }
    let skipped = rects.len() - kept;
    if kept == 0 || skipped as f64 > cfg.max_skipped_fraction * rects.len() as f64 {
        return Err(ObjectiveError::Unreliable { skipped, total: rects.len() });
    }
    Ok(MixingReport {
        j: -sum / kept as f64,
        rects: results,
        trajectories,
    })
}

/// Places `mesh` in the channel and evaluates the mixing report in the
/// surrogate flow around it.
pub fn mixing_report(mesh: &TriMesh, spec: &ChannelSpec, cfg: &ObjectiveConfig) -> Result<MixingReport, ObjectiveError> {
    cfg.validate()?;
    let element = place_element(mesh, spec, cfg.element_scale)?;
    let field = surrogate_field(&element, spec, cfg.ramp_fraction)?;
    evaluate_mixing(&field, spec, cfg)
}

/// Objective value `J` for an element mesh; lower is better mixing.
pub fn mixing_objective(mesh: &TriMesh, spec: &ChannelSpec, cfg: &ObjectiveConfig) -> Result<f64, ObjectiveError> {
    Ok(mixing_report(mesh, spec, cfg)?.j)
}

/// Writes one `t,x,y,z` CSV per particle as `rect{r}_p{k}.csv`.
pub fn write_trajectories(dir: impl AsRef<Path>, report: &MixingReport, particles_per_rect: usize) -> Result<(), ObjectiveError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for (i, tr) in report.trajectories.iter().enumerate() {
        let mut s = String::from("t,x,y,z\n");
        for (t, p) in &tr.samples {
            let _ = writeln!(s, "{t},{},{},{}", p.x, p.y, p.z);
        }
        let name = format!("rect{}_p{}.csv", i / particles_per_rect, i % particles_per_rect);
        fs::write(dir.join(name), s)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{icosphere, mesh_volume};

    fn shear_oracle(spec: &ChannelSpec, cfg: &ObjectiveConfig, u: f64, gamma: f64) -> f64 {
        // Rectangle [w x h] sheared into a parallelogram with sides w and
        // sqrt(h^2 + (gamma T h)^2), T the transit time.
        let w = cfg.inflow_fraction * spec.width / cfg.grid[0] as f64;
        let h = cfg.inflow_fraction * spec.height / cfg.grid[1] as f64;
        let t = spec.length / u;
        let p_in = 2.0 * (w + h);
        let p_out = 2.0 * w + 2.0 * h.hypot(gamma * t * h);
        -(p_out - p_in) / p_in
    }

    #[test]
    fn uniform_flow_gives_zero() {
        let spec = ChannelSpec::default();
        let cfg = ObjectiveConfig::default();
        let r = evaluate_mixing(&|_: &Vec3| Vec3::new(0.8, 0.0, 0.0), &spec, &cfg).unwrap();
        assert!(r.j.abs() < 1e-9, "{}", r.j);
        assert_eq!(r.rects.len(), 12);
        assert!(r.rects.iter().all(|x| x.live == 16));
    }

    #[test]
    fn oblique_barrel_flow_translates_hulls() {
        let spec = ChannelSpec::default();
        let base = BarrelShear::new(&spec);
        let r = evaluate_mixing(&base, &spec, &ObjectiveConfig::default()).unwrap();
        assert!(r.j.abs() < 1e-9, "{}", r.j);
    }

    #[test]
    fn linear_shear_matches_closed_form() {
        let spec = ChannelSpec::default();
        let cfg = ObjectiveConfig::default();
        let (u, gamma) = (1.0, 30.0);
        let field = move |p: &Vec3| Vec3::new(u, gamma * p.z, 0.0);
        let r = evaluate_mixing(&field, &spec, &cfg).unwrap();
        let want = shear_oracle(&spec, &cfg, u, gamma);
        assert!(r.j < 0.0);
        assert!(((r.j - want) / want).abs() < 1e-9, "{} vs {}", r.j, want);
    }

    #[test]
    fn inflow_layout() {
        let spec = ChannelSpec::default();
        let cfg = ObjectiveConfig::default();
        let rects = inflow_rectangles(&spec, &cfg);
        assert_eq!(rects.len(), 12);
        assert!((rects[0].1[0] - 0.2 * spec.width).abs() < 1e-15);
        assert!((rects[11].2[1] - 0.8 * spec.height).abs() < 1e-15);
        let pts = perimeter_particles(rects[5].1, rects[5].2, 16);
        assert_eq!(pts.len(), 16);
        let hull = convex_hull_2d(&pts).unwrap();
        let (lo, hi) = (rects[5].1, rects[5].2);
        assert!((hull.perimeter - 2.0 * ((hi[0] - lo[0]) + (hi[1] - lo[1]))).abs() < 1e-15);
        for p in &pts {
            assert!(p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1]);
        }
    }

    #[test]
    fn element_changes_hulls_and_is_repeatable() {
        let spec = ChannelSpec::default();
        let cfg = ObjectiveConfig::default();
        let sphere = icosphere(1.0, 3);
        let a = mixing_report(&sphere, &spec, &cfg).unwrap();
        let b = mixing_report(&sphere, &spec, &cfg).unwrap();
        assert_eq!(a.j, b.j);
        assert!(a.rects.iter().any(|r| r.relative_increase().is_some_and(|v| v.abs() > 1e-6)));
        let moved = mixing_objective(&sphere.translated(&Vec3::new(3.0, -1.0, 0.5)), &spec, &cfg).unwrap();
        assert!((moved - a.j).abs() <= 1e-12 + 1e-6 * a.j.abs(), "{moved} vs {}", a.j);
        assert!(mesh_volume(&sphere).unwrap() > 0.0);
    }

    #[test]
    fn halving_dt_is_stable() {
        let spec = ChannelSpec::default();
        let cfg = ObjectiveConfig::default();
        let sphere = icosphere(1.0, 3);
        let j1 = mixing_objective(&sphere, &spec, &cfg).unwrap();
        let half = ObjectiveConfig {
            dt_fraction: cfg.dt_fraction / 2.0,
            ..cfg.clone()
        };
        let j2 = mixing_objective(&sphere, &spec, &half).unwrap();
        assert!(((j1 - j2) / j1).abs() < 0.01, "{j1} vs {j2}");
    }

    #[test]
    fn dead_flow_is_unreliable() {
        let spec = ChannelSpec::default();
        let cfg = ObjectiveConfig::default();
        let r = evaluate_mixing(&|_: &Vec3| Vec3::zeros(), &spec, &cfg);
        assert!(matches!(r, Err(ObjectiveError::Unreliable { skipped: 12, total: 12 })));
        let bad = ObjectiveConfig {
            particles_per_rect: 6,
            ..cfg
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn trajectory_dump() {
        let spec = ChannelSpec::default();
        let cfg = ObjectiveConfig {
            grid: [1, 1],
            particles_per_rect: 4,
            ..ObjectiveConfig::default()
        };
        let r = evaluate_mixing(&|_: &Vec3| Vec3::new(1.0, 0.0, 0.0), &spec, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_trajectories(dir.path(), &r, 4).unwrap();
        let text = fs::read_to_string(dir.path().join("rect0_p3.csv")).unwrap();
        assert!(text.starts_with("t,x,y,z\n0,0,"));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 4);
    }
}
