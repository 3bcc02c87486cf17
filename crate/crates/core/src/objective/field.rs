use crate::mesh::{MeshError, SignedDistance, TriMesh};
use crate::Vec3;

use super::ChannelSpec;

/// Steady velocity field.
pub trait VelocityField: Sync {
    fn velocity(&self, p: &Vec3) -> Vec3;
}

impl<F> VelocityField for F
where
    F: Fn(&Vec3) -> Vec3 + Sync,
{
    fn velocity(&self, p: &Vec3) -> Vec3 {
        self(p)
    }
}

/// Couette flow between the channel floor and a barrel moving obliquely at
/// the top: `u(z) = U (z / H) (cos a, sin a, 0)`, with `z / H` clamped to
/// `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrelShear {
    pub wall_velocity: Vec3,
    pub height: f64,
}

impl BarrelShear {
    pub fn new(spec: &ChannelSpec) -> Self {
        let (s, c) = spec.barrel_angle.sin_cos();
        Self {
            wall_velocity: Vec3::new(c, s, 0.0) * spec.barrel_speed,
            height: spec.height,
        }
    }
}

impl VelocityField for BarrelShear {
    fn velocity(&self, p: &Vec3) -> Vec3 {
        self.wall_velocity * (p.z / self.height).clamp(0.0, 1.0)
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Base flow deflected around an obstacle:
/// `v = s v_base + (1 - s) v_tan` with `s` a smoothstep of the signed
/// distance over the ramp width, `n` the outward direction to the closest
/// surface point and `v_tan` the base flow with its inward normal component
/// removed. Zero inside, equal to the base flow beyond the ramp. Not
/// divergence free.
#[derive(Debug, Clone)]
pub struct SurrogateField<B: VelocityField> {
    base: B,
    sdf: SignedDistance,
    center: Vec3,
    /// Bounding radius plus ramp width.
    reach: f64,
    ramp: f64,
}

impl<B: VelocityField> SurrogateField<B> {
    /// `ramp_fraction` times the element's bounding radius about its vertex
    /// bounding-box center gives the ramp width.
    pub fn new(base: B, element: &TriMesh, ramp_fraction: f64) -> Result<Self, MeshError> {
        let sdf = SignedDistance::new(element)?;
        let (lo, hi) = element.bounds().ok_or(MeshError::Empty)?;
        let center = (lo + hi) / 2.0;
        let radius = element.vertices.iter().map(|v| (v - center).norm()).fold(0.0, f64::max);
        let ramp = ramp_fraction * radius;
        Ok(Self {
            base,
            sdf,
            center,
            reach: radius + ramp,
            ramp,
        })
    }

    pub fn ramp_width(&self) -> f64 {
        self.ramp
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.sdf.distance(p)
    }
}

impl<B: VelocityField> VelocityField for SurrogateField<B> {
    fn velocity(&self, p: &Vec3) -> Vec3 {
        let v = self.base.velocity(p);
        if (p - self.center).norm() >= self.reach {
            return v;
        }
        if self.sdf.is_inside(p) {
            return Vec3::zeros();
        }
        let hit = self.sdf.closest(p);
        if hit.distance >= self.ramp {
            return v;
        }
        if hit.distance == 0.0 {
            return Vec3::zeros();
        }
        let s = smoothstep(hit.distance / self.ramp);
        let n = (p - hit.point) / hit.distance;
        v - n * ((1.0 - s) * v.dot(&n).min(0.0))
    }
}

/// The surrogate flow of `spec` around an already placed element.
pub fn surrogate_field(element: &TriMesh, spec: &ChannelSpec, ramp_fraction: f64) -> Result<SurrogateField<BarrelShear>, MeshError> {
    SurrogateField::new(BarrelShear::new(spec), element, ramp_fraction)
}

/// Moves the bounding-box center of `mesh` to the channel center and scales
/// it by `scale` (channel units per mesh unit).
pub fn place_element(mesh: &TriMesh, spec: &ChannelSpec, scale: f64) -> Result<TriMesh, MeshError> {
    let (lo, hi) = mesh.bounds().ok_or(MeshError::Empty)?;
    let c = (lo + hi) / 2.0;
    let target = spec.center();
    Ok(mesh.map_vertices(|v| target + (v - c) * scale))
}
