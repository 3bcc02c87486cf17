//! Wavefront OBJ (`v`/`f` records) and binary STL.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{MeshError, TriMesh};
use crate::Vec3;

pub fn write_obj<W: Write>(mesh: &TriMesh, mut out: W) -> Result<(), MeshError> {
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn save_obj(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_obj(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads `v` and `f` records; other record types are ignored. Polygonal
/// faces are fan-triangulated, `v/vt/vn` index forms and negative indices are
/// accepted.
pub fn read_obj<R: Read>(input: R) -> Result<TriMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let mut fields = line.split_whitespace();
        let parse_err = |msg: String| MeshError::Parse { line: lineno + 1, msg };
        match fields.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = fields.next().ok_or_else(|| parse_err("vertex needs 3 coordinates".into()))?;
                    *slot = tok.parse().map_err(|_| parse_err(format!("bad coordinate '{tok}'")))?;
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in fields {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| parse_err(format!("bad face index '{tok}'")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(parse_err("face index 0".into()));
                    };
                    if resolved < 0 {
                        return Err(parse_err(format!("face index {i} out of range")));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(parse_err("face needs at least 3 vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles)
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    read_obj(fs::File::open(path)?)
}

pub fn write_stl<W: Write>(mesh: &TriMesh, mut out: W) -> Result<(), MeshError> {
    let mut header = [0u8; 80];
    let tag = b"latentform binary stl";
    header[..tag.len()].copy_from_slice(tag);
    out.write_all(&header)?;
    out.write_all(&(mesh.triangles.len() as u32).to_le_bytes())?;
    for t in 0..mesh.triangles.len() {
        let n = mesh.face_normal(t);
        let n = if n.norm() > 0.0 { n.normalize() } else { n };
        for c in n.iter() {
            out.write_all(&(*c as f32).to_le_bytes())?;
        }
        for v in mesh.corners(t) {
            for c in v.iter() {
                out.write_all(&(*c as f32).to_le_bytes())?;
            }
        }
        out.write_all(&0u16.to_le_bytes())?;
    }
    Ok(())
}

pub fn save_stl(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_stl(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads binary STL, welding vertices with bit-identical coordinates.
pub fn read_stl<R: Read>(mut input: R) -> Result<TriMesh, MeshError> {
    let mut header = [0u8; 84];
    input.read_exact(&mut header)?;
    let count = u32::from_le_bytes(header[80..84].try_into().unwrap()) as usize;
    let mut record = [0u8; 50];
    let mut weld: HashMap<[u32; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::with_capacity(count);
    for _ in 0..count {
        input.read_exact(&mut record)?;
        let f = |k: usize| f32::from_le_bytes(record[k..k + 4].try_into().unwrap());
        let mut tri = [0usize; 3];
        for (c, slot) in tri.iter_mut().enumerate() {
            let base = 12 + 12 * c;
            let p = [f(base), f(base + 4), f(base + 8)];
            let key = p.map(f32::to_bits);
            *slot = *weld.entry(key).or_insert_with(|| {
                vertices.push(Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64));
                vertices.len() - 1
            });
        }
        triangles.push(tri);
    }
    TriMesh::new(vertices, triangles)
}

pub fn load_stl(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    read_stl(BufReader::new(fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;

    #[test]
    fn obj_roundtrip_is_exact() {
        let m = icosphere(0.7, 1);
        let mut buf = Vec::new();
        write_obj(&m, &mut buf).unwrap();
        let back = read_obj(&buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn obj_polygons_and_slashes() {
        let src = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 -1//1\n";
        let m = read_obj(src.as_bytes()).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_errors_carry_line() {
        let err = read_obj("v 0 0 0\nv 1 x 0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 2, .. }));
        assert!(read_obj("v 0 0 0\nf 1 2 3\n".as_bytes()).is_err());
    }

    #[test]
    fn stl_roundtrip_welds_vertices() {
        let m = icosphere(1.0, 1);
        let mut buf = Vec::new();
        write_stl(&m, &mut buf).unwrap();
        assert_eq!(buf.len(), 84 + 50 * m.triangles.len());
        let back = read_stl(&buf[..]).unwrap();
        assert_eq!(back.triangles.len(), m.triangles.len());
        assert_eq!(back.vertices.len(), m.vertices.len());
        assert!(back.is_watertight());
        for t in 0..m.triangles.len() {
            for (a, b) in back.corners(t).iter().zip(m.corners(t)) {
                assert!((a - b).norm() < 1e-6);
            }
        }
    }
}
