use std::collections::HashMap;

use super::MeshError;
use crate::Vec3;

/// Indexed triangle surface mesh.
///
/// Triangles are counter-clockwise when seen from outside, so the right-hand
/// normal points away from the enclosed volume.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Builds a mesh, rejecting out-of-range indices and zero-area triangles.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mesh = Self { vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &i in tri {
                if i >= n {
                    return Err(MeshError::IndexOutOfRange { triangle: t, index: i });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateTriangle(t));
            }
            let [a, b, c] = self.corners(t);
            if (b - a).cross(&(c - a)).norm_squared() == 0.0 {
                return Err(MeshError::DegenerateTriangle(t));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [i, j, k] = self.triangles[t];
        [self.vertices[i], self.vertices[j], self.vertices[k]]
    }

    /// Unnormalized face normal (twice the triangle area in length).
    pub fn face_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.face_normal(t).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Axis-aligned bounds `(min, max)`; `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
    }

    /// Directed-edge multiset check: closed 2-manifold with consistent winding.
    pub fn is_watertight(&self) -> bool {
        self.open_edge_count() == 0
    }

    /// Number of undirected edges not shared by exactly two oppositely
    /// oriented triangles.
    pub fn open_edge_count(&self) -> usize {
        let mut directed: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &self.triangles {
            for e in 0..3 {
                *directed.entry((tri[e], tri[(e + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut bad = 0;
        for (&(a, b), &count) in &directed {
            let reverse = directed.get(&(b, a)).copied().unwrap_or(0);
            if count != 1 || reverse != 1 {
                bad += 1;
            }
        }
        bad
    }

    pub fn ensure_watertight(&self) -> Result<(), MeshError> {
        if self.is_empty() {
            return Err(MeshError::Empty);
        }
        match self.open_edge_count() {
            0 => Ok(()),
            open_edges => Err(MeshError::NotWatertight { open_edges }),
        }
    }

    /// V - E + F over the referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        let mut used = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
                used[a] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn translated(&self, t: &Vec3) -> Self {
        self.map_vertices(|v| v + t)
    }

    /// Uniform scaling about `center`.
    pub fn scaled_about(&self, center: &Vec3, s: f64) -> Self {
        self.map_vertices(|v| center + (v - center) * s)
    }

    pub fn flipped(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            triangles: self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect(),
        }
    }

    /// Splits the mesh into vertex-connected components and keeps the one with
    /// the most triangles (ties go to the component seen first). Unreferenced
    /// vertices are dropped.
    pub fn largest_component(&self) -> Self {
        if self.triangles.is_empty() {
            return Self::empty();
        }
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for tri in &self.triangles {
            let r0 = find(&mut parent, tri[0]);
            for &v in &tri[1..] {
                let r = find(&mut parent, v);
                if r != r0 {
                    parent[r] = r0;
                }
            }
        }
        let mut counts: HashMap<usize, (usize, usize)> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            let root = find(&mut parent, tri[0]);
            let entry = counts.entry(root).or_insert((0, t));
            entry.0 += 1;
        }
        let (&best_root, _) = counts
            .iter()
            .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
            .expect("non-empty");
        let keep: Vec<[usize; 3]> = self
            .triangles
            .iter()
            .filter(|tri| find(&mut parent, tri[0]) == best_root)
            .copied()
            .collect();
        Self {
            vertices: self.vertices.clone(),
            triangles: keep,
        }
        .compacted()
    }

    /// Drops unreferenced vertices, preserving the order of the rest.
    pub fn compacted(&self) -> Self {
        let mut used = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for (old, v) in self.vertices.iter().enumerate() {
            if used[old] {
                remap[old] = vertices.len();
                vertices.push(*v);
            }
        }
        Self {
            vertices,
            triangles: self.triangles.iter().map(|t| t.map(|i| remap[i])).collect(),
        }
    }
}

/// Icosphere of the given radius centered at the origin, with `subdivisions`
/// rounds of 4:1 midpoint refinement projected onto the sphere.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        for [a, b, c] in triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    TriMesh {
        vertices: vertices.into_iter().map(|v| v * radius).collect(),
        triangles,
    }
}

/// Axis-aligned box mesh with outward orientation.
pub fn box_mesh(min: Vec3, max: Vec3) -> TriMesh {
    let c = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let vertices = (0..8).map(c).collect();
    let triangles = vec![
        [0, 2, 1],
        [1, 2, 3],
        [4, 5, 6],
        [5, 7, 6],
        [0, 1, 4],
        [1, 5, 4],
        [2, 6, 3],
        [3, 6, 7],
        [0, 4, 2],
        [2, 4, 6],
        [1, 3, 5],
        [3, 7, 5],
    ];
    TriMesh { vertices, triangles }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_indices() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(matches!(
            TriMesh::new(v.clone(), vec![[0, 1, 3]]),
            Err(MeshError::IndexOutOfRange { index: 3, .. })
        ));
        assert!(matches!(TriMesh::new(v.clone(), vec![[0, 1, 1]]), Err(MeshError::DegenerateTriangle(0))));
        let collinear = vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        assert!(TriMesh::new(collinear, vec![[0, 1, 2]]).is_err());
        assert!(TriMesh::new(v, vec![[0, 1, 2]]).is_ok());
    }

    #[test]
    fn closed_primitives_are_watertight() {
        let b = box_mesh(Vec3::zeros(), Vec3::repeat(1.0));
        assert!(b.is_watertight());
        assert_eq!(b.euler_characteristic(), 2);
        let s = icosphere(1.0, 2);
        assert!(s.is_watertight());
        assert_eq!(s.euler_characteristic(), 2);
        assert_eq!(s.triangles.len(), 20 * 16);
    }

    #[test]
    fn open_mesh_detected() {
        let mut b = box_mesh(Vec3::zeros(), Vec3::repeat(1.0));
        b.triangles.pop();
        assert!(!b.is_watertight());
        assert!(matches!(b.ensure_watertight(), Err(MeshError::NotWatertight { .. })));
    }

    #[test]
    fn largest_component_keeps_bigger_body() {
        let small = box_mesh(Vec3::zeros(), Vec3::repeat(0.1));
        let big = icosphere(1.0, 1);
        let offset = small.vertices.len();
        let mut merged = small.clone();
        merged.vertices.extend(big.vertices.iter().map(|v| v + Vec3::x() * 5.0));
        merged.triangles.extend(big.triangles.iter().map(|t| t.map(|i| i + offset)));
        let kept = merged.largest_component();
        assert_eq!(kept.triangles.len(), big.triangles.len());
        assert_eq!(kept.vertices.len(), big.vertices.len());
        assert!(kept.is_watertight());
    }
}
