use super::{MeshError, TriMesh};
use crate::Vec3;

/// Padding kept between the normalized mesh and the unit sphere.
pub const UNIT_SPHERE_PADDING: f64 = 0.03;

/// Enclosed volume by the divergence theorem. A negative total means the
/// triangles are wound inward.
pub fn mesh_volume(mesh: &TriMesh) -> Result<f64, MeshError> {
    let v = signed_volume(mesh);
    if v < 0.0 {
        return Err(MeshError::InconsistentOrientation(v));
    }
    Ok(v)
}

pub fn signed_volume(mesh: &TriMesh) -> f64 {
    mesh.triangles
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|i| mesh.vertices[i]);
            a.dot(&b.cross(&c))
        })
        .sum::<f64>()
        / 6.0
}

/// Transform returned by [`normalize_to_unit_sphere`]: the normalized mesh is
/// `(v - offset) * scale`, so the original is `v / scale + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub scale: f64,
    pub offset: Vec3,
}

impl Normalization {
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        (v - self.offset) * self.scale
    }

    pub fn invert(&self, v: &Vec3) -> Vec3 {
        v / self.scale + self.offset
    }
}

/// Centers the bounding box at the origin and scales so the farthest vertex
/// sits at radius `1 - UNIT_SPHERE_PADDING`.
pub fn normalize_to_unit_sphere(mesh: &TriMesh) -> Result<(TriMesh, Normalization), MeshError> {
    let (lo, hi) = mesh.bounds().ok_or(MeshError::Empty)?;
    let center = (lo + hi) * 0.5;
    let radius = mesh.vertices.iter().map(|v| (v - center).norm()).fold(0.0, f64::max);
    if radius == 0.0 {
        return Err(MeshError::Empty);
    }
    let t = Normalization {
        scale: (1.0 - UNIT_SPHERE_PADDING) / radius,
        offset: center,
    };
    Ok((mesh.map_vertices(|v| t.apply(v)), t))
}

/// Uniformly rescales about the bounding-box center to the target volume.
pub fn scale_to_volume(mesh: &TriMesh, target: f64) -> Result<TriMesh, MeshError> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(MeshError::NonPositiveVolume(target));
    }
    let current = signed_volume(mesh);
    if !(current > 0.0) {
        return Err(MeshError::NonPositiveVolume(current));
    }
    let (lo, hi) = mesh.bounds().ok_or(MeshError::Empty)?;
    let center = (lo + hi) * 0.5;
    let s = (target / current).cbrt();
    Ok(mesh.scaled_about(&center, s))
}
