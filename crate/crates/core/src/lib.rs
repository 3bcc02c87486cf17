//! Latent signed-distance shape parameterization for shape optimization.
//!
//! The crate covers the full offline/online pipeline:
//!
//! * [`spline`]: B-spline bases, trivariate control lattices and free-form
//!   deformation of embedded meshes.
//! * [`mesh`]: triangle meshes, signed distance queries, SDF sampling,
//!   volume control and marching cubes.
//! * [`trainset`]: basis shapes and the deformed training corpus.
//! * [`neural`]: the auto-decoder network, ADAM training and reconstruction.
//! * [`latent`]: latent interpolation, arithmetic and t-SNE diagnostics.
//! * [`optim`]: DIRECT and a single-objective genetic algorithm.
//! * [`objective`]: particle advection and the convex-hull mixing measure.

// `!(x > 0.0)` style checks are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod latent;
pub mod mesh;
pub mod neural;
pub mod objective;
pub mod optim;
pub mod spline;
pub mod trainset;

/// Double precision 3-vector used for all geometry.
pub type Vec3 = nalgebra::Vector3<f64>;
