//! Basis prisms and the deterministic corpus of deformed variants.

mod corpus;
mod manifest;
mod shapes;

use thiserror::Error;

use crate::mesh::MeshError;
use crate::spline::SplineError;

pub use corpus::{build_shape, default_grids, generate_corpus, plan_corpus, CorpusConfig, PlannedShape, MANIFEST_FILE};
pub use manifest::{CorpusManifest, ShapeRecord};
pub use shapes::{make_basis_shape, make_basis_shape_segmented, BaseKind};

#[derive(Debug, Error)]
pub enum TrainsetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("duplicate shape id '{0}'")]
    DuplicateId(String),
    #[error("manifest line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
