//! Signed distance queries against watertight meshes and SDF sample sets.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::bvh::{Bvh, ClosestHit};
use super::{MeshError, TriMesh};
use crate::Vec3;

/// Fixed, mutually skewed ray directions for the parity vote.
const RAY_DIRECTIONS: [[f64; 3]; 3] = [[0.826_3, 0.412_7, 0.383_0], [-0.371_1, 0.875_2, -0.310_3], [0.227_4, -0.339_0, 0.912_9]];

/// Signed distance query structure; negative inside.
///
/// Magnitude is the exact distance to the closest triangle. The sign is a
/// majority vote of ray-parity tests along three skewed directions.
#[derive(Debug, Clone)]
pub struct SignedDistance {
    bvh: Bvh,
    dirs: [Vec3; 3],
}

impl SignedDistance {
    /// Fails for empty or non-watertight meshes; queries never fail.
    pub fn new(mesh: &TriMesh) -> Result<Self, MeshError> {
        mesh.ensure_watertight()?;
        Ok(Self {
            bvh: Bvh::new(mesh),
            dirs: RAY_DIRECTIONS.map(|d| Vec3::from(d).normalize()),
        })
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn is_inside(&self, p: &Vec3) -> bool {
        let votes = self.dirs.iter().filter(|d| self.bvh.ray_crossings(p, d) % 2 == 1).count();
        votes >= 2
    }

    pub fn closest(&self, p: &Vec3) -> ClosestHit {
        self.bvh.closest(p).expect("watertight mesh is non-empty")
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        let d = self.closest(p).distance;
        if self.is_inside(p) {
            -d
        } else {
            d
        }
    }
}

/// Convenience wrapper building a query structure for one point.
pub fn signed_distance(mesh: &TriMesh, p: &Vec3) -> Result<f64, MeshError> {
    Ok(SignedDistance::new(mesh)?.distance(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfSample {
    pub point: Vec3,
    pub distance: f64,
}

/// All (point, signed distance) pairs for one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfSampleSet {
    pub shape_id: String,
    pub samples: Vec<SdfSample>,
}

/// Mixture used by [`sample_sdf`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    /// Fraction of surface points perturbed with `sigma_coarse`.
    pub coarse_fraction: f64,
    /// Fraction of surface points perturbed with `sigma_fine`.
    pub fine_fraction: f64,
    pub sigma_coarse: f64,
    pub sigma_fine: f64,
    /// Radius of the ball that receives the uniform remainder.
    pub uniform_radius: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            coarse_fraction: 0.475,
            fine_fraction: 0.475,
            sigma_coarse: 0.0025,
            sigma_fine: 0.00025,
            uniform_radius: 1.1,
        }
    }
}

/// Samples `n` points around a unit-sphere-normalized mesh with the default
/// mixture. Deterministic for a fixed seed.
pub fn sample_sdf(mesh: &TriMesh, n: usize, seed: u64) -> Result<SdfSampleSet, MeshError> {
    sample_sdf_with(mesh, n, seed, &SamplingConfig::default())
}

pub fn sample_sdf_with(mesh: &TriMesh, n: usize, seed: u64, cfg: &SamplingConfig) -> Result<SdfSampleSet, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidSampleCount);
    }
    let query = SignedDistance::new(mesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Cumulative area table for area-weighted surface sampling.
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.triangle_area(t);
        cumulative.push(total);
    }

    let n_coarse = (n as f64 * cfg.coarse_fraction).round() as usize;
    let n_fine = ((n as f64 * cfg.fine_fraction).round() as usize).min(n - n_coarse);
    let coarse = Normal::new(0.0, cfg.sigma_coarse).map_err(|e| MeshError::Format(e.to_string()))?;
    let fine = Normal::new(0.0, cfg.sigma_fine).map_err(|e| MeshError::Format(e.to_string()))?;

    let mut points = Vec::with_capacity(n);
    for i in 0..n_coarse + n_fine {
        let r = rng.random::<f64>() * total;
        let t = cumulative.partition_point(|&c| c < r).min(cumulative.len() - 1);
        let [a, b, c] = mesh.corners(t);
        let (mut u, mut v) = (rng.random::<f64>(), rng.random::<f64>());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        let base = a + (b - a) * u + (c - a) * v;
        let noise = if i < n_coarse { &coarse } else { &fine };
        let offset = Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
        points.push(base + offset);
    }
    let r = cfg.uniform_radius;
    while points.len() < n {
        let p = Vec3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r));
        if p.norm() <= r {
            points.push(p);
        }
    }

    let samples = points
        .into_par_iter()
        .map(|point| SdfSample {
            point,
            distance: query.distance(&point),
        })
        .collect();
    Ok(SdfSampleSet {
        shape_id: String::new(),
        samples,
    })
}

const SAMPLE_MAGIC: &[u8; 4] = b"SDF1";
const GRID_MAGIC: &[u8; 4] = b"SDG1";

impl SdfSampleSet {
    /// Layout: magic `SDF1`, u64 count, u32 id length, id bytes, then
    /// `count` records of four little-endian f64 `(x, y, z, d)`.
    pub fn write<W: Write>(&self, mut out: W) -> Result<(), MeshError> {
        out.write_all(SAMPLE_MAGIC)?;
        out.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        write_str(&mut out, &self.shape_id)?;
        for s in &self.samples {
            for c in [s.point.x, s.point.y, s.point.z, s.distance] {
                out.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self, MeshError> {
        expect_magic(&mut input, SAMPLE_MAGIC)?;
        let count = read_u64(&mut input)? as usize;
        let shape_id = read_str(&mut input)?;
        let mut samples = Vec::with_capacity(count.min(1 << 24));
        for _ in 0..count {
            let r = read_f64x4(&mut input)?;
            samples.push(SdfSample {
                point: Vec3::new(r[0], r[1], r[2]),
                distance: r[3],
            });
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(MeshError::Format("trailing bytes after sample records".into()));
        }
        Ok(Self { shape_id, samples })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        Self::read(BufReader::new(fs::File::open(path)?))
    }
}

pub(crate) fn write_str<W: Write>(out: &mut W, s: &str) -> std::io::Result<()> {
    out.write_all(&(s.len() as u32).to_le_bytes())?;
    out.write_all(s.as_bytes())
}

pub(crate) fn read_str<R: Read>(input: &mut R) -> Result<String, MeshError> {
    let mut len = [0u8; 4];
    input.read_exact(&mut len)?;
    let len = u32::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(MeshError::Format(format!("implausible string length {len}")));
    }
    let mut buf = vec![0u8; len];
    input.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| MeshError::Format("id is not UTF-8".into()))
}

pub(crate) fn expect_magic<R: Read>(input: &mut R, magic: &[u8; 4]) -> Result<(), MeshError> {
    let mut m = [0u8; 4];
    input.read_exact(&mut m)?;
    if &m != magic {
        return Err(MeshError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

pub(crate) fn read_u64<R: Read>(input: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64x4<R: Read>(input: &mut R) -> std::io::Result<[f64; 4]> {
    let mut b = [0u8; 32];
    input.read_exact(&mut b)?;
    Ok(std::array::from_fn(|k| f64::from_le_bytes(b[8 * k..8 * k + 8].try_into().unwrap())))
}

/// Regular scalar grid; index `(k * ny + j) * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    pub dims: [usize; 3],
    pub origin: Vec3,
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl SdfGrid {
    pub fn new(dims: [usize; 3], origin: Vec3, spacing: f64, values: Vec<f64>) -> Result<Self, MeshError> {
        if !(spacing > 0.0) {
            return Err(MeshError::Format(format!("grid spacing must be positive, got {spacing}")));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(MeshError::Format(format!("grid has {} values for dims {:?}", values.len(), dims)));
        }
        Ok(Self {
            dims,
            origin,
            spacing,
            values,
        })
    }

    /// Samples `f` at every node of a cube grid spanning `[lo, hi]^3`.
    pub fn from_fn(res: usize, lo: f64, hi: f64, f: impl Fn(&Vec3) -> f64) -> Self {
        let spacing = (hi - lo) / (res - 1) as f64;
        let origin = Vec3::repeat(lo);
        let mut values = Vec::with_capacity(res * res * res);
        for k in 0..res {
            for j in 0..res {
                for i in 0..res {
                    values.push(f(&(origin + Vec3::new(i as f64, j as f64, k as f64) * spacing)));
                }
            }
        }
        Self {
            dims: [res; 3],
            origin,
            spacing,
            values,
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    /// Layout: magic `SDG1`, three u64 dims, origin (3 f64), spacing (f64),
    /// then one `(x, y, z, d)` f64 record per node in index order.
    pub fn write<W: Write>(&self, mut out: W) -> Result<(), MeshError> {
        out.write_all(GRID_MAGIC)?;
        for d in self.dims {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for c in [self.origin.x, self.origin.y, self.origin.z, self.spacing] {
            out.write_all(&c.to_le_bytes())?;
        }
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    let p = self.position(i, j, k);
                    for c in [p.x, p.y, p.z, self.values[self.index(i, j, k)]] {
                        out.write_all(&c.to_le_bytes())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self, MeshError> {
        expect_magic(&mut input, GRID_MAGIC)?;
        let mut dims = [0usize; 3];
        for d in &mut dims {
            *d = read_u64(&mut input)? as usize;
        }
        let h = read_f64x4(&mut input)?;
        let n = dims[0] * dims[1] * dims[2];
        let mut values = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            values.push(read_f64x4(&mut input)?[3]);
        }
        Self::new(dims, Vec3::new(h[0], h[1], h[2]), h[3], values)
    }
}
