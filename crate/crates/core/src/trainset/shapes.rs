use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::TrainsetError;
use crate::mesh::TriMesh;
use crate::Vec3;

/// Cross-section of a basis prism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseKind {
    Triangle,
    Square,
    Hexagon,
    Cylinder,
}

impl BaseKind {
    pub const ALL: [BaseKind; 4] = [BaseKind::Triangle, BaseKind::Square, BaseKind::Hexagon, BaseKind::Cylinder];

    pub fn name(self) -> &'static str {
        match self {
            BaseKind::Triangle => "triangle",
            BaseKind::Square => "square",
            BaseKind::Hexagon => "hexagon",
            BaseKind::Cylinder => "cylinder",
        }
    }

    /// Polygon side count; the cylinder uses `facets`.
    pub fn sides(self, facets: usize) -> usize {
        match self {
            BaseKind::Triangle => 3,
            BaseKind::Square => 4,
            BaseKind::Hexagon => 6,
            BaseKind::Cylinder => facets,
        }
    }
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseKind {
    type Err = TrainsetError;

    fn from_str(s: &str) -> Result<Self, TrainsetError> {
        BaseKind::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| TrainsetError::InvalidParameter(format!("unknown base shape '{s}'")))
    }
}

/// Closed prism over a regular polygon, centred at the origin with its axis
/// along z. `radius` is the apothem (centre to side midpoint), so a square of
/// radius 1 spans `[-1, 1]` in x and y. Caps are fanned from the first
/// polygon vertex; side walls are one quad per edge.
pub fn make_basis_shape(kind: BaseKind, height: f64, radius: f64, facets: usize) -> Result<TriMesh, TrainsetError> {
    let n = check(kind, height, radius, facets)?;
    let ring = polygon(n, radius);
    let h = 0.5 * height;
    let mut vertices: Vec<Vec3> = ring.iter().map(|&(x, y)| Vec3::new(x, y, -h)).collect();
    vertices.extend(ring.iter().map(|&(x, y)| Vec3::new(x, y, h)));
    let mut triangles = Vec::with_capacity(4 * n - 4);
    for i in 1..n - 1 {
        triangles.push([0, i + 1, i]);
        triangles.push([n, n + i, n + i + 1]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        triangles.push([i, j, n + j]);
        triangles.push([i, n + j, n + i]);
    }
    Ok(TriMesh::new(vertices, triangles)?)
}

/// Like [`make_basis_shape`] but with finer tessellation so free-form
/// deformations bend the walls: `segments` vertical bands, each polygon
/// edge split into `segments` pieces, and caps fanned from a centre vertex.
pub fn make_basis_shape_segmented(kind: BaseKind, height: f64, radius: f64, facets: usize, segments: usize) -> Result<TriMesh, TrainsetError> {
    let n = check(kind, height, radius, facets)?;
    if segments == 0 {
        return Err(TrainsetError::InvalidParameter("segments must be at least 1".into()));
    }
    let corners = polygon(n, radius);
    // Cylinders already have fine edges; only split polygon sides.
    let split = if kind == BaseKind::Cylinder { 1 } else { segments };
    let mut ring = Vec::with_capacity(n * split);
    for i in 0..n {
        let (a, b) = (corners[i], corners[(i + 1) % n]);
        for s in 0..split {
            let t = s as f64 / split as f64;
            ring.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    let m = ring.len();
    let levels = segments + 1;
    let mut vertices = Vec::with_capacity(m * levels + 2);
    for l in 0..levels {
        let z = -0.5 * height + height * l as f64 / segments as f64;
        vertices.extend(ring.iter().map(|&(x, y)| Vec3::new(x, y, z)));
    }
    let bottom = vertices.len();
    vertices.push(Vec3::new(0.0, 0.0, -0.5 * height));
    let top = vertices.len();
    vertices.push(Vec3::new(0.0, 0.0, 0.5 * height));
    let mut triangles = Vec::new();
    for l in 0..segments {
        for i in 0..m {
            let j = (i + 1) % m;
            let (a, b) = (l * m + i, l * m + j);
            let (c, d) = (a + m, b + m);
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    let last = segments * m;
    for i in 0..m {
        let j = (i + 1) % m;
        triangles.push([bottom, j, i]);
        triangles.push([top, last + i, last + j]);
    }
    Ok(TriMesh::new(vertices, triangles)?)
}

fn check(kind: BaseKind, height: f64, radius: f64, facets: usize) -> Result<usize, TrainsetError> {
    if !(height > 0.0 && height.is_finite()) || !(radius > 0.0 && radius.is_finite()) {
        return Err(TrainsetError::InvalidParameter(format!(
            "height and radius must be positive, got {height} and {radius}"
        )));
    }
    if facets < 3 {
        return Err(TrainsetError::InvalidParameter(format!("facets must be at least 3, got {facets}")));
    }
    Ok(kind.sides(facets))
}

/// Counter-clockwise vertices of the regular `n`-gon with the given apothem;
/// the first side is perpendicular to -y so squares are axis aligned.
fn polygon(n: usize, apothem: f64) -> Vec<(f64, f64)> {
    let circum = apothem / (PI / n as f64).cos();
    (0..n)
        .map(|k| {
            let a = -0.5 * PI - PI / n as f64 + 2.0 * PI * k as f64 / n as f64;
            (circum * a.cos(), circum * a.sin())
        })
        .collect()
}
