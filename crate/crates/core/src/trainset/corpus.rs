use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{make_basis_shape_segmented, BaseKind, CorpusManifest, ShapeRecord, TrainsetError};
use crate::mesh::{mesh_volume, normalize_to_unit_sphere, sample_sdf, save_obj, TriMesh};
use crate::spline::{apply, default_lattice, ffd_apply, Recipe};

pub const MANIFEST_FILE: &str = "manifest.tsv";

/// Everything that determines a corpus. Equal configs give byte-identical
/// output.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub bases: Vec<BaseKind>,
    /// Magnitudes enumerated for each recipe.
    pub grids: Vec<(Recipe, Vec<f64>)>,
    /// Emit one undeformed record per base.
    pub include_undeformed: bool,
    /// Number of extra records built from randomly drawn recipe chains.
    pub chains: usize,
    /// Longest allowed recipe chain.
    pub max_chain: usize,
    pub samples_per_shape: usize,
    pub seed: u64,
    pub height: f64,
    pub radius: f64,
    pub facets: usize,
    /// Tessellation density of the basis meshes, see
    /// [`make_basis_shape_segmented`].
    pub segments: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            bases: BaseKind::ALL.to_vec(),
            grids: default_grids(),
            include_undeformed: true,
            chains: 0,
            max_chain: 2,
            samples_per_shape: 20_000,
            seed: 42,
            height: 1.0,
            radius: 0.4,
            facets: 32,
            segments: 12,
        }
    }
}

/// Three magnitudes per recipe, each well inside the recipe bounds.
pub fn default_grids() -> Vec<(Recipe, Vec<f64>)> {
    vec![
        (Recipe::ShrinkX, vec![0.8, 0.65, 0.5]),
        (Recipe::TranslateTopX, vec![0.1, 0.2, 0.3]),
        (Recipe::TranslateTopY, vec![0.1, 0.2, 0.3]),
        (Recipe::ExpandMiddle, vec![0.15, 0.3, 0.45]),
        (Recipe::ExpandTop, vec![0.15, 0.3, 0.45]),
        (Recipe::TwistTop, vec![0.3, 0.6, 0.9]),
    ]
}

/// A record before any geometry has been built.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedShape {
    pub id: String,
    pub base: BaseKind,
    pub chain: Vec<(Recipe, f64)>,
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<(), TrainsetError> {
        let bad = |m: String| Err(TrainsetError::InvalidParameter(m));
        if self.bases.is_empty() {
            return bad("no base shapes configured".into());
        }
        if self.samples_per_shape == 0 {
            return bad("samples_per_shape must be positive".into());
        }
        if self.chains > 0 && self.max_chain < 2 {
            return bad("chained records need max_chain >= 2".into());
        }
        if self.chains > 0 && self.grids.iter().filter(|(_, g)| !g.is_empty()).count() < 2 {
            return bad("chained records need at least two recipes with magnitudes".into());
        }
        for (r, grid) in &self.grids {
            let (lo, hi) = r.bounds();
            if let Some(m) = grid.iter().find(|m| !(lo..=hi).contains(*m)) {
                return bad(format!("{r} magnitude {m} outside [{lo}, {hi}]"));
            }
        }
        Ok(())
    }

    /// Number of records [`plan_corpus`] will produce.
    pub fn record_count(&self) -> usize {
        let per_base: usize = self.grids.iter().map(|(_, g)| g.len()).sum::<usize>() + usize::from(self.include_undeformed);
        self.bases.len() * per_base + self.chains
    }
}

/// Enumerates base × recipe × magnitude, then draws the chained records.
/// Ids are `<base>-<nnn>` with a per-base counter.
pub fn plan_corpus(cfg: &CorpusConfig) -> Result<Vec<PlannedShape>, TrainsetError> {
    cfg.validate()?;
    let mut counters: BTreeMap<BaseKind, usize> = BTreeMap::new();
    let mut next_id = |base: BaseKind| {
        let c = counters.entry(base).or_insert(0);
        let id = format!("{base}-{:03}", *c);
        *c += 1;
        id
    };
    let mut plan = Vec::with_capacity(cfg.record_count());
    for &base in &cfg.bases {
        if cfg.include_undeformed {
            plan.push(PlannedShape {
                id: next_id(base),
                base,
                chain: vec![],
            });
        }
        for (recipe, grid) in &cfg.grids {
            for &m in grid {
                plan.push(PlannedShape {
                    id: next_id(base),
                    base,
                    chain: vec![(*recipe, m)],
                });
            }
        }
    }
    let usable: Vec<&(Recipe, Vec<f64>)> = cfg.grids.iter().filter(|(_, g)| !g.is_empty()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    for _ in 0..cfg.chains {
        let base = *cfg.bases.choose(&mut rng).expect("bases checked non-empty");
        let len = rng.random_range(2..=cfg.max_chain.min(usable.len()));
        let picks = rand::seq::index::sample(&mut rng, usable.len(), len);
        let chain = picks
            .iter()
            .map(|i| {
                let (r, grid) = usable[i];
                (*r, *grid.choose(&mut rng).expect("grid non-empty"))
            })
            .collect();
        plan.push(PlannedShape {
            id: next_id(base),
            base,
            chain,
        });
    }
    let mut ids: Vec<&str> = plan.iter().map(|p| p.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(TrainsetError::DuplicateId(w[0].to_string()));
    }
    Ok(plan)
}

/// Builds the deformed, unit-sphere-normalized mesh of one record.
pub fn build_shape(cfg: &CorpusConfig, base: BaseKind, chain: &[(Recipe, f64)]) -> Result<TriMesh, TrainsetError> {
    let mesh = make_basis_shape_segmented(base, cfg.height, cfg.radius, cfg.facets, cfg.segments)?;
    let lattice = default_lattice(&mesh)?;
    let mut deformed = lattice.clone();
    for &(recipe, magnitude) in chain {
        deformed = apply(recipe, magnitude, &deformed)?;
    }
    let mesh = ffd_apply(&lattice, &deformed, &mesh)?;
    let (mesh, _) = normalize_to_unit_sphere(&mesh)?;
    mesh.ensure_watertight()?;
    mesh_volume(&mesh)?;
    Ok(mesh)
}

/// Per-record sampling seed, mixed so neighbouring records are unrelated.
fn record_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Writes `meshes/<id>.obj`, `sdf/<id>.sdf` and the manifest into `out_dir`.
/// The parent of `out_dir` must already exist; nothing is written otherwise.
pub fn generate_corpus(cfg: &CorpusConfig, out_dir: &Path) -> Result<CorpusManifest, TrainsetError> {
    let plan = plan_corpus(cfg)?;
    let parent = match out_dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    if !parent.is_dir() {
        return Err(TrainsetError::InvalidParameter(format!(
            "output parent directory {} does not exist",
            parent.display()
        )));
    }
    fs::create_dir_all(out_dir.join("meshes"))?;
    fs::create_dir_all(out_dir.join("sdf"))?;
    let records = plan
        .par_iter()
        .enumerate()
        .map(|(i, p)| -> Result<ShapeRecord, TrainsetError> {
            let mesh = build_shape(cfg, p.base, &p.chain)?;
            let mut samples = sample_sdf(&mesh, cfg.samples_per_shape, record_seed(cfg.seed, i))?;
            samples.shape_id = p.id.clone();
            let rec = ShapeRecord {
                id: p.id.clone(),
                base: p.base,
                recipe_chain: p.chain.clone(),
                mesh_path: PathBuf::from("meshes").join(format!("{}.obj", p.id)),
                sdf_path: PathBuf::from("sdf").join(format!("{}.sdf", p.id)),
            };
            save_obj(&mesh, rec.mesh_file(out_dir))?;
            samples.save(rec.sdf_file(out_dir))?;
            log::debug!("built {}", p.id);
            Ok(rec)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut records = records;
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let manifest = CorpusManifest {
        records,
        seed: cfg.seed,
        samples_per_shape: cfg.samples_per_shape,
    };
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
