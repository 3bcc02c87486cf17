//! B-spline bases, trivariate spline volumes and free-form deformation.

mod knots;
mod lattice;
mod recipes;

use thiserror::Error;

pub use knots::{basis_functions, KnotVector};
pub use lattice::{evaluate_volume, ffd_apply, ControlLattice};
pub use recipes::{apply, apply_recipe, Recipe};

/// Default lattice: control points per direction, degree per direction and
/// relative padding around the mesh bounding box.
pub const DEFAULT_DIMS: [usize; 3] = [4, 4, 4];
pub const DEFAULT_DEGREES: [usize; 3] = [2, 2, 2];
pub const DEFAULT_INFLATION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum SplineError {
    #[error("parameter {u} outside knot range [{lo}, {hi}]")]
    OutOfDomain { u: f64, lo: f64, hi: f64 },
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("lattice shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("vertex {index} lies outside the lattice box")]
    VertexOutsideLattice { index: usize },
    #[error("unknown recipe '{0}'")]
    UnknownRecipe(String),
    #[error("{recipe} magnitude {magnitude} outside [{lo}, {hi}]")]
    MagnitudeOutOfBounds {
        recipe: &'static str,
        magnitude: f64,
        lo: f64,
        hi: f64,
    },
    #[error("lattice parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Default bounding lattice of a mesh.
pub fn default_lattice(mesh: &crate::mesh::TriMesh) -> Result<ControlLattice, SplineError> {
    ControlLattice::around_mesh(mesh, DEFAULT_DIMS, DEFAULT_DEGREES, DEFAULT_INFLATION)
}
