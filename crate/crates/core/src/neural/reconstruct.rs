use super::{DecoderModel, NeuralError};
use crate::mesh::{marching_cubes, scale_to_volume, SdfGrid, TriMesh};
use crate::Vec3;

/// Smallest accepted grid resolution.
pub const MIN_RESOLUTION: usize = 8;

/// Value written to boundary nodes so every isosurface closes inside the box.
const BOUNDARY_VALUE: f64 = 1e-3;

/// Decodes `z` on a `resolution^3` grid over `[-1, 1]^3`. Boundary nodes are
/// forced outside so the extracted surface is closed.
pub fn decode_grid(model: &DecoderModel, z: &[f64], resolution: usize) -> Result<SdfGrid, NeuralError> {
    if resolution < MIN_RESOLUTION {
        return Err(NeuralError::InvalidConfig(format!(
            "resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    let n = resolution;
    let spacing = 2.0 / (n - 1) as f64;
    let origin = Vec3::repeat(-1.0);
    let mut points = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                points.push(origin + Vec3::new(i as f64, j as f64, k as f64) * spacing);
            }
        }
    }
    let mut values = model.decode_points(z, &points)?;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                if [i, j, k].iter().any(|&c| c == 0 || c == n - 1) {
                    let v = &mut values[(k * n + j) * n + i];
                    *v = v.max(BOUNDARY_VALUE);
                }
            }
        }
    }
    Ok(SdfGrid::new([n, n, n], origin, spacing, values)?)
}

/// Decode, extract the zero level set, keep the largest connected component
/// and optionally rescale to `target_volume`.
pub fn reconstruct(model: &DecoderModel, z: &[f64], resolution: usize, target_volume: Option<f64>) -> Result<TriMesh, NeuralError> {
    let grid = decode_grid(model, z, resolution)?;
    let mesh = marching_cubes(&grid, 0.0).largest_component();
    if mesh.is_empty() {
        return Err(NeuralError::DegenerateLatent("decoded field has no zero crossing".into()));
    }
    match target_volume {
        Some(v) => Ok(scale_to_volume(&mesh, v)?),
        None => Ok(mesh),
    }
}
