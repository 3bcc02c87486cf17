//! Table-driven marching cubes with shared-edge vertex welding.

use std::collections::HashMap;

use super::mc_table::TRI_TABLE;
use super::sdf::SdfGrid;
use super::TriMesh;
use crate::Vec3;

/// Corner offsets in table order.
const CORNERS: [[usize; 3]; 8] = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]];

/// Corner pairs for the twelve cube edges in table order.
const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Interpolation parameter is kept off the edge endpoints so that vertices
/// generated on different edges never coincide.
const T_MARGIN: f64 = 1e-6;

/// Extracts the `iso` level set of `grid`. Corners with `value < iso` are
/// inside; output triangles are wound so normals point from inside to outside.
/// A field of uniform sign yields an empty mesh.
pub fn marching_cubes(grid: &SdfGrid, iso: f64) -> TriMesh {
    let [nx, ny, nz] = grid.dims;
    let mut mesh = TriMesh::empty();
    if nx < 2 || ny < 2 || nz < 2 {
        return mesh;
    }
    let mut welded: HashMap<(usize, u8), usize> = HashMap::new();

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut idx = [0usize; 8];
                let mut val = [0f64; 8];
                let mut case = 0usize;
                for (c, off) in CORNERS.iter().enumerate() {
                    idx[c] = grid.index(i + off[0], j + off[1], k + off[2]);
                    val[c] = grid.values[idx[c]];
                    if val[c] < iso {
                        case |= 1 << c;
                    }
                }
                let row = &TRI_TABLE[case];
                if row[0] < 0 {
                    continue;
                }
                let mut edge_vertex = |e: usize, mesh: &mut TriMesh| -> usize {
                    let (a, b) = EDGES[e];
                    // Orient every edge from its lower to its upper grid node so
                    // the key and the interpolation are cube-independent.
                    let (lo, hi) = if idx[a] < idx[b] { (a, b) } else { (b, a) };
                    let axis = (0..3).find(|&d| CORNERS[lo][d] != CORNERS[hi][d]).expect("cube edge spans one axis") as u8;
                    *welded.entry((idx[lo], axis)).or_insert_with(|| {
                        let t = ((iso - val[lo]) / (val[hi] - val[lo])).clamp(T_MARGIN, 1.0 - T_MARGIN);
                        let p_lo = grid.position(i + CORNERS[lo][0], j + CORNERS[lo][1], k + CORNERS[lo][2]);
                        let mut p = p_lo;
                        p[axis as usize] += t * grid.spacing;
                        mesh.vertices.push(p);
                        mesh.vertices.len() - 1
                    })
                };
                for tri in row.chunks(3).take_while(|t| t[0] >= 0) {
                    let a = edge_vertex(tri[0] as usize, &mut mesh);
                    let b = edge_vertex(tri[1] as usize, &mut mesh);
                    let c = edge_vertex(tri[2] as usize, &mut mesh);
                    // The table winds toward the flagged (inside) corners.
                    mesh.triangles.push([a, c, b]);
                }
            }
        }
    }
    mesh
}

/// Marching cubes over a closure sampled on a cube grid spanning `[lo, hi]^3`.
pub fn marching_cubes_fn(res: usize, lo: f64, hi: f64, f: impl Fn(&Vec3) -> f64) -> TriMesh {
    marching_cubes(&SdfGrid::from_fn(res, lo, hi, f), 0.0)
}
