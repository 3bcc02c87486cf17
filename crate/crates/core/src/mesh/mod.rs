//! Triangle meshes and everything that measures or produces them.

mod bvh;
mod io;
mod marching_cubes;
mod mc_table;
mod sdf;
mod trimesh;
mod volume;

use thiserror::Error;

pub use bvh::{closest_point_on_triangle, ray_hits_triangle, Bvh, ClosestHit};
pub use io::{load_obj, load_stl, read_obj, read_stl, save_obj, save_stl, write_obj, write_stl};
pub use marching_cubes::{marching_cubes, marching_cubes_fn};
pub(crate) use sdf::{expect_magic, read_str, read_u64, write_str};
pub use sdf::{sample_sdf, sample_sdf_with, signed_distance, SamplingConfig, SdfGrid, SdfSample, SdfSampleSet, SignedDistance};
pub use trimesh::{box_mesh, icosphere, TriMesh};
pub use volume::{mesh_volume, normalize_to_unit_sphere, scale_to_volume, signed_volume, Normalization, UNIT_SPHERE_PADDING};

use crate::Vec3;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {triangle} references vertex {index} out of range")]
    IndexOutOfRange { triangle: usize, index: usize },
    #[error("triangle {0} is degenerate")]
    DegenerateTriangle(usize),
    #[error("mesh is not watertight ({open_edges} open or non-manifold edges)")]
    NotWatertight { open_edges: usize },
    #[error("mesh is empty")]
    Empty,
    #[error("negative enclosed volume {0}: triangles are wound inward")]
    InconsistentOrientation(f64),
    #[error("volume must be positive, got {0}")]
    NonPositiveVolume(f64),
    #[error("sample count must be positive")]
    InvalidSampleCount,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Symmetric vertex-to-surface Hausdorff distance between two meshes.
pub fn hausdorff_distance(a: &TriMesh, b: &TriMesh) -> f64 {
    fn one_sided(from: &TriMesh, to: &TriMesh) -> f64 {
        let bvh = Bvh::new(to);
        from.vertices.iter().map(|v| bvh.unsigned_distance(v)).fold(0.0, f64::max)
    }
    one_sided(a, b).max(one_sided(b, a))
}

/// Centroid of the vertex set.
pub fn vertex_centroid(mesh: &TriMesh) -> Vec3 {
    let n = mesh.vertices.len().max(1) as f64;
    mesh.vertices.iter().sum::<Vec3>() / n
}
