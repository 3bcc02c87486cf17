use std::fmt;
use std::str::FromStr;

use super::{ControlLattice, SplineError};
use crate::Vec3;

/// Named lattice deformations used to build the shape corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Recipe {
    /// Scale x about the lattice centroid by the factor `magnitude`.
    ShrinkX,
    /// Shift layer `k` along x by `magnitude * extent_x * k / (n_w - 1)`.
    TranslateTopX,
    /// As [`Recipe::TranslateTopX`] along y.
    TranslateTopY,
    /// Scale interior layers radially in xy by `1 + magnitude`.
    ExpandMiddle,
    /// Scale the top layer radially in xy by `1 + magnitude`.
    ExpandTop,
    /// Rotate layer `k` about the vertical centroid axis by
    /// `magnitude * (k / (n_w - 1))^2` radians.
    TwistTop,
}

impl Recipe {
    pub const ALL: [Recipe; 6] = [
        Recipe::ShrinkX,
        Recipe::TranslateTopX,
        Recipe::TranslateTopY,
        Recipe::ExpandMiddle,
        Recipe::ExpandTop,
        Recipe::TwistTop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::ShrinkX => "shrink_x",
            Recipe::TranslateTopX => "translate_top_x",
            Recipe::TranslateTopY => "translate_top_y",
            Recipe::ExpandMiddle => "expand_middle",
            Recipe::ExpandTop => "expand_top",
            Recipe::TwistTop => "twist_top",
        }
    }

    /// Inclusive magnitude bounds. Inside them, control layers keep their
    /// ordering and no layer collapses, so the deformed lattice cannot fold.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            // Strictly positive factor; 0.1 keeps the shape from flattening.
            Recipe::ShrinkX => (0.1, 10.0),
            // Half an extent of lateral shift keeps layers overlapping in plan.
            Recipe::TranslateTopX | Recipe::TranslateTopY => (-0.5, 0.5),
            // A factor of 1 + m >= 0.5 keeps the scaled layers non-degenerate.
            Recipe::ExpandMiddle | Recipe::ExpandTop => (-0.5, 1.0),
            // Beyond 60 degrees between neighbouring layers the quadratic
            // twist starts to cross ruled edges.
            Recipe::TwistTop => (-std::f64::consts::FRAC_PI_3, std::f64::consts::FRAC_PI_3),
        }
    }

    /// Magnitude that leaves the lattice unchanged.
    pub fn identity_magnitude(self) -> f64 {
        match self {
            Recipe::ShrinkX => 1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = SplineError;

    fn from_str(s: &str) -> Result<Self, SplineError> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| SplineError::UnknownRecipe(s.to_string()))
    }
}

fn centroid(lat: &ControlLattice, idx: impl Iterator<Item = usize>) -> Vec3 {
    let mut sum = Vec3::zeros();
    let mut n = 0usize;
    for i in idx {
        sum += lat.points()[i];
        n += 1;
    }
    sum / n.max(1) as f64
}

fn scale_layer_xy(lat: &mut ControlLattice, k: usize, factor: f64) {
    let c = centroid(lat, lat.layer_indices(k));
    let idx: Vec<usize> = lat.layer_indices(k).collect();
    for i in idx {
        let p = &mut lat.points_mut()[i];
        p.x += (factor - 1.0) * (p.x - c.x);
        p.y += (factor - 1.0) * (p.y - c.y);
    }
}

/// Returns a deformed copy of `lat`; `lat` itself is untouched.
pub fn apply_recipe(name: &str, magnitude: f64, lat: &ControlLattice) -> Result<ControlLattice, SplineError> {
    let recipe: Recipe = name.parse()?;
    apply(recipe, magnitude, lat)
}

/// Typed form of [`apply_recipe`].
pub fn apply(recipe: Recipe, magnitude: f64, lat: &ControlLattice) -> Result<ControlLattice, SplineError> {
    let (lo, hi) = recipe.bounds();
    if !(lo..=hi).contains(&magnitude) {
        return Err(SplineError::MagnitudeOutOfBounds {
            recipe: recipe.name(),
            magnitude,
            lo,
            hi,
        });
    }
    let mut out = lat.clone();
    let nw = lat.dims()[2];
    let top = nw - 1;
    let height_frac = |k: usize| if top == 0 { 0.0 } else { k as f64 / top as f64 };
    match recipe {
        Recipe::ShrinkX => {
            let cx = centroid(lat, 0..lat.points().len()).x;
            for p in out.points_mut() {
                p.x += (magnitude - 1.0) * (p.x - cx);
            }
        }
        Recipe::TranslateTopX | Recipe::TranslateTopY => {
            let axis = if recipe == Recipe::TranslateTopX { 0 } else { 1 };
            let (bl, bh) = lat.bounding_box();
            let extent = bh[axis] - bl[axis];
            for k in 1..nw {
                let shift = magnitude * extent * height_frac(k);
                let idx: Vec<usize> = out.layer_indices(k).collect();
                for i in idx {
                    out.points_mut()[i][axis] += shift;
                }
            }
        }
        Recipe::ExpandMiddle => {
            for k in 1..top {
                scale_layer_xy(&mut out, k, 1.0 + magnitude);
            }
        }
        Recipe::ExpandTop => scale_layer_xy(&mut out, top, 1.0 + magnitude),
        Recipe::TwistTop => {
            for k in 1..nw {
                let theta = magnitude * height_frac(k).powi(2);
                let (s, c) = theta.sin_cos();
                let ctr = centroid(lat, lat.layer_indices(k));
                let idx: Vec<usize> = out.layer_indices(k).collect();
                for i in idx {
                    let p = &mut out.points_mut()[i];
                    let (dx, dy) = (p.x - ctr.x, p.y - ctr.y);
                    p.x += (c - 1.0) * dx - s * dy;
                    p.y += s * dx + (c - 1.0) * dy;
                }
            }
        }
    }
    Ok(out)
}
