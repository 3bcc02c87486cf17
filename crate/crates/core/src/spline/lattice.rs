use std::fmt::Write as _;
use std::str::FromStr;

use super::{KnotVector, SplineError};
use crate::mesh::TriMesh;
use crate::Vec3;

/// Trivariate B-spline control grid. Point `(i, j, k)` is stored at
/// `(k * n_v + j) * n_u + i`; direction `w` is the vertical (z) axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLattice {
    dims: [usize; 3],
    points: Vec<Vec3>,
    knots: [KnotVector; 3],
}

impl ControlLattice {
    pub fn new(dims: [usize; 3], points: Vec<Vec3>, knots: [KnotVector; 3]) -> Result<Self, SplineError> {
        for d in 0..3 {
            if knots[d].n_basis() != dims[d] {
                return Err(SplineError::ShapeMismatch(format!(
                    "direction {d}: {} control points but knots define {} basis functions",
                    dims[d],
                    knots[d].n_basis()
                )));
            }
        }
        if points.len() != dims[0] * dims[1] * dims[2] {
            return Err(SplineError::ShapeMismatch(format!("{} points for dims {:?}", points.len(), dims)));
        }
        Ok(Self { dims, points, knots })
    }

    /// Axis-aligned lattice over `[min, max]` with clamped uniform knots and
    /// control points at the Greville abscissae, so that the volume map is the
    /// identity on the box.
    pub fn over_box(min: Vec3, max: Vec3, dims: [usize; 3], degrees: [usize; 3]) -> Result<Self, SplineError> {
        if (0..3).any(|d| !(max[d] > min[d])) {
            return Err(SplineError::ShapeMismatch(format!("empty box {min:?}..{max:?}")));
        }
        let knots = [
            KnotVector::clamped_uniform(degrees[0], dims[0])?,
            KnotVector::clamped_uniform(degrees[1], dims[1])?,
            KnotVector::clamped_uniform(degrees[2], dims[2])?,
        ];
        let g: [Vec<f64>; 3] = std::array::from_fn(|d| (0..dims[d]).map(|i| knots[d].greville(i)).collect());
        let mut points = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let s = Vec3::new(g[0][i], g[1][j], g[2][k]);
                    points.push(min + (max - min).component_mul(&s));
                }
            }
        }
        Self::new(dims, points, knots)
    }

    /// Lattice around a mesh's bounding box, padded by `inflation` of each
    /// extent (at least `inflation` of the largest extent).
    pub fn around_mesh(mesh: &TriMesh, dims: [usize; 3], degrees: [usize; 3], inflation: f64) -> Result<Self, SplineError> {
        let (lo, hi) = mesh.bounds().ok_or_else(|| SplineError::ShapeMismatch("mesh has no vertices".into()))?;
        let extent = hi - lo;
        let floor = extent.max() * inflation;
        let pad = extent.map(|e| (e * inflation).max(floor));
        Self::over_box(lo - pad, hi + pad, dims, degrees)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn knots(&self) -> &[KnotVector; 3] {
        &self.knots
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [Vec3] {
        &mut self.points
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.points[self.index(i, j, k)]
    }

    /// Indices of every control point in vertical layer `k`.
    pub fn layer_indices(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let per_layer = self.dims[0] * self.dims[1];
        k * per_layer..(k + 1) * per_layer
    }

    /// Bounding box of the control points.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        self.points
            .iter()
            .fold((self.points[0], self.points[0]), |(lo, hi), p| (lo.inf(p), hi.sup(p)))
    }

    /// Tensor-product volume map at parametric coordinates `xi`.
    pub fn evaluate(&self, xi: [f64; 3]) -> Result<Vec3, SplineError> {
        let (fu, bu) = self.knots[0].nonzero_basis(xi[0])?;
        let (fv, bv) = self.knots[1].nonzero_basis(xi[1])?;
        let (fw, bw) = self.knots[2].nonzero_basis(xi[2])?;
        let mut out = Vec3::zeros();
        for (c, nw) in bw.iter().enumerate() {
            for (b, nv) in bv.iter().enumerate() {
                let nvw = nv * nw;
                for (a, nu) in bu.iter().enumerate() {
                    out += self.point(fu + a, fv + b, fw + c) * (nu * nvw);
                }
            }
        }
        Ok(out)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dims == other.dims && self.knots == other.knots
    }

    /// Plain-text form: `degrees`, `dims`, one `knots_<dir>` line per
    /// direction, then `points` followed by one `x y z` row per control point.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let deg = self.knots.each_ref().map(|k| k.degree());
        let _ = writeln!(s, "degrees {} {} {}", deg[0], deg[1], deg[2]);
        let _ = writeln!(s, "dims {} {} {}", self.dims[0], self.dims[1], self.dims[2]);
        for (name, kv) in ["knots_u", "knots_v", "knots_w"].iter().zip(&self.knots) {
            let ks: Vec<String> = kv.knots().iter().map(|k| k.to_string()).collect();
            let _ = writeln!(s, "{name} {}", ks.join(" "));
        }
        let _ = writeln!(s, "points");
        for p in &self.points {
            let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
        }
        s
    }
}

impl FromStr for ControlLattice {
    type Err = SplineError;

    fn from_str(text: &str) -> Result<Self, SplineError> {
        let mut degrees: Option<Vec<usize>> = None;
        let mut dims: Option<Vec<usize>> = None;
        let mut knots: [Option<Vec<f64>>; 3] = [None, None, None];
        let mut points = Vec::new();
        let mut in_points = false;
        for (n, line) in text.lines().enumerate() {
            let err = |msg: &str| SplineError::Parse(format!("line {}: {msg}", n + 1));
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let head = fields.next().unwrap_or_default();
            if in_points {
                let c: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| err("bad coordinate")))
                    .collect::<Result<_, _>>()?;
                if c.len() != 3 {
                    return Err(err("point rows need 3 coordinates"));
                }
                points.push(Vec3::new(c[0], c[1], c[2]));
                continue;
            }
            let ints = |f: std::str::SplitWhitespace| -> Result<Vec<usize>, SplineError> {
                f.map(|t| t.parse::<usize>().map_err(|_| err("bad integer"))).collect()
            };
            match head {
                "degrees" => degrees = Some(ints(fields)?),
                "dims" => dims = Some(ints(fields)?),
                "knots_u" | "knots_v" | "knots_w" => {
                    let d = ["knots_u", "knots_v", "knots_w"].iter().position(|k| *k == head).unwrap();
                    knots[d] = Some(fields.map(|t| t.parse::<f64>().map_err(|_| err("bad knot"))).collect::<Result<_, _>>()?);
                }
                "points" => in_points = true,
                other => return Err(err(&format!("unknown key '{other}'"))),
            }
        }
        let missing = |what: &str| SplineError::Parse(format!("missing '{what}'"));
        let degrees = degrees.ok_or_else(|| missing("degrees"))?;
        let dims = dims.ok_or_else(|| missing("dims"))?;
        if degrees.len() != 3 || dims.len() != 3 {
            return Err(SplineError::Parse("degrees and dims need 3 entries".into()));
        }
        let [ku, kv, kw] = knots;
        let kvs = [
            KnotVector::new(degrees[0], ku.ok_or_else(|| missing("knots_u"))?)?,
            KnotVector::new(degrees[1], kv.ok_or_else(|| missing("knots_v"))?)?,
            KnotVector::new(degrees[2], kw.ok_or_else(|| missing("knots_w"))?)?,
        ];
        Self::new([dims[0], dims[1], dims[2]], points, kvs)
    }
}

/// Free-function form of [`ControlLattice::evaluate`].
pub fn evaluate_volume(lattice: &ControlLattice, xi: [f64; 3]) -> Result<Vec3, SplineError> {
    lattice.evaluate(xi)
}

/// Tolerance for vertices that sit on the lattice box faces.
const BOX_SLACK: f64 = 1e-12;

/// Pushes every vertex through the deformed lattice. Parametric coordinates
/// come from the affine box normalization of the undeformed lattice, which
/// must be the axis-aligned lattice built by [`ControlLattice::over_box`].
pub fn ffd_apply(undeformed: &ControlLattice, deformed: &ControlLattice, mesh: &TriMesh) -> Result<TriMesh, SplineError> {
    if !undeformed.same_shape(deformed) {
        return Err(SplineError::ShapeMismatch(
            "undeformed and deformed lattices differ in dims or knots".into(),
        ));
    }
    let (lo, hi) = undeformed.bounding_box();
    let extent = hi - lo;
    let mut vertices = Vec::with_capacity(mesh.vertices.len());
    for (index, v) in mesh.vertices.iter().enumerate() {
        let mut xi = [0.0; 3];
        for d in 0..3 {
            let s = (v[d] - lo[d]) / extent[d];
            if !(-BOX_SLACK..=1.0 + BOX_SLACK).contains(&s) {
                return Err(SplineError::VertexOutsideLattice { index });
            }
            xi[d] = s.clamp(0.0, 1.0);
        }
        vertices.push(deformed.evaluate(xi)?);
    }
    Ok(TriMesh {
        vertices,
        triangles: mesh.triangles.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, icosphere};
    use nalgebra::{Matrix3, Rotation3};
    use proptest::prelude::*;

    fn unit_lattice(degrees: [usize; 3]) -> ControlLattice {
        ControlLattice::over_box(Vec3::zeros(), Vec3::repeat(1.0), [4, 4, 4], degrees).unwrap()
    }

    #[test]
    fn identity_lattice_reproduces_points() {
        let lat = unit_lattice([2, 2, 2]);
        for &x in &[[0.0, 0.0, 0.0], [0.3, 0.71, 0.05], [1.0, 0.5, 1.0]] {
            let p = lat.evaluate(x).unwrap();
            assert!((p - Vec3::from(x)).norm() < 1e-12);
        }
        assert!(matches!(lat.evaluate([1.2, 0.0, 0.0]), Err(SplineError::OutOfDomain { .. })));
    }

    #[test]
    fn translation_of_all_points() {
        let lat = unit_lattice([2, 3, 1]);
        let t = Vec3::new(0.4, -2.0, 7.5);
        let mut moved = lat.clone();
        moved.points_mut().iter_mut().for_each(|p| *p += t);
        let x = [0.25, 0.6, 0.9];
        let d = moved.evaluate(x).unwrap() - lat.evaluate(x).unwrap();
        assert!((d - t).norm() < 1e-12);
    }

    #[test]
    fn biquadratic_corner_interpolation() {
        // 3x3x2 lattice; rotating the upper control row (k = 1) moves the
        // parametric corners of the upper face onto the rotated corner points.
        let mut lat = ControlLattice::over_box(Vec3::zeros(), Vec3::repeat(1.0), [3, 3, 2], [2, 2, 1]).unwrap();
        let rot = Rotation3::from_axis_angle(&Vec3::z_axis(), 0.4);
        let c = Vec3::new(0.5, 0.5, 1.0);
        for idx in lat.layer_indices(1).collect::<Vec<_>>() {
            let p = lat.points()[idx];
            lat.points_mut()[idx] = c + rot * (p - c);
        }
        for &(u, v) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            let corner = lat.point(u as usize * 2, v as usize * 2, 1);
            assert!((lat.evaluate([u, v, 1.0]).unwrap() - corner).norm() < 1e-14);
        }
    }

    #[test]
    fn ffd_identity_and_offset() {
        let mesh = icosphere(0.8, 2);
        let lat = ControlLattice::around_mesh(&mesh, [4, 4, 4], [2, 2, 2], 0.01).unwrap();
        let same = ffd_apply(&lat, &lat, &mesh).unwrap();
        for (a, b) in same.vertices.iter().zip(&mesh.vertices) {
            assert!((a - b).norm() < 1e-9);
        }
        assert_eq!(same.triangles, mesh.triangles);
        let t = Vec3::new(0.1, 0.2, -0.3);
        let mut moved = lat.clone();
        moved.points_mut().iter_mut().for_each(|p| *p += t);
        let shifted = ffd_apply(&lat, &moved, &mesh).unwrap();
        for (a, b) in shifted.vertices.iter().zip(&mesh.vertices) {
            assert!((a - b - t).norm() < 1e-9);
        }
    }

    #[test]
    fn ffd_top_plane_rotation() {
        let lo = Vec3::new(-1.0, -1.0, 0.0);
        let hi = Vec3::new(1.0, 1.0, 2.0);
        let lat = ControlLattice::over_box(lo, hi, [4, 4, 2], [2, 2, 1]).unwrap();
        let theta = 0.6;
        let rot = Rotation3::from_axis_angle(&Vec3::z_axis(), theta);
        let axis = Vec3::new(0.0, 0.0, 2.0);
        let mut deformed = lat.clone();
        for idx in lat.layer_indices(1).collect::<Vec<_>>() {
            deformed.points_mut()[idx] = axis + rot * (lat.points()[idx] - axis);
        }
        let top = TriMesh {
            vertices: vec![
                Vec3::new(0.5, 0.2, 2.0),
                Vec3::new(-0.7, 0.9, 2.0),
                Vec3::new(0.1, -0.8, 2.0),
                Vec3::new(0.3, 0.3, 1.0),
            ],
            triangles: vec![[0, 1, 2]],
        };
        let out = ffd_apply(&lat, &deformed, &top).unwrap();
        for v in 0..3 {
            let expected = axis + rot * (top.vertices[v] - axis);
            assert!((out.vertices[v] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn ffd_errors() {
        let mesh = box_mesh(Vec3::zeros(), Vec3::repeat(1.0));
        let lat = unit_lattice([2, 2, 2]);
        let other = ControlLattice::over_box(Vec3::zeros(), Vec3::repeat(1.0), [3, 4, 4], [2, 2, 2]).unwrap();
        assert!(matches!(ffd_apply(&lat, &other, &mesh), Err(SplineError::ShapeMismatch(_))));
        let outside = mesh.translated(&Vec3::new(0.0, 0.0, 0.5));
        assert!(matches!(
            ffd_apply(&lat, &lat, &outside),
            Err(SplineError::VertexOutsideLattice { index: 4 })
        ));
    }

    #[test]
    fn text_roundtrip() {
        let mut lat = unit_lattice([2, 1, 3]);
        lat.points_mut()[5] += Vec3::new(0.1, 1.0 / 3.0, -0.2);
        let back: ControlLattice = lat.to_text().parse().unwrap();
        assert_eq!(back, lat);
        assert!("dims 4 4 4\n".parse::<ControlLattice>().is_err());
    }

    proptest! {
        #[test]
        fn affine_lattice_reproduces_affine_map(
            m in proptest::collection::vec(-1.5f64..1.5, 9),
            t in proptest::collection::vec(-2.0f64..2.0, 3),
            deg in proptest::collection::vec(1usize..4, 3),
        ) {
            let a = Matrix3::from_row_slice(&m);
            let tv = Vec3::new(t[0], t[1], t[2]);
            let mesh = icosphere(1.0, 1).translated(&Vec3::new(0.2, 0.0, 0.3));
            let lat = ControlLattice::around_mesh(&mesh, [4, 5, 4], [deg[0], deg[1], deg[2]], 0.01).unwrap();
            let mut img = lat.clone();
            img.points_mut().iter_mut().for_each(|p| *p = a * *p + tv);
            let out = ffd_apply(&lat, &img, &mesh).unwrap();
            prop_assert_eq!(&out.triangles, &mesh.triangles);
            for (o, v) in out.vertices.iter().zip(&mesh.vertices) {
                prop_assert!((o - (a * v + tv)).norm() < 1e-9);
            }
        }
    }
}
