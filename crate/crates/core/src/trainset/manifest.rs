use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{BaseKind, TrainsetError};
use crate::spline::Recipe;

/// One corpus entry. File paths are relative to the manifest directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeRecord {
    pub id: String,
    pub base: BaseKind,
    pub recipe_chain: Vec<(Recipe, f64)>,
    pub mesh_path: PathBuf,
    pub sdf_path: PathBuf,
}

impl ShapeRecord {
    /// Base-shape tag used for grouping and plot colouring.
    pub fn label(&self) -> &str {
        self.base.name()
    }

    pub fn mesh_file(&self, manifest_dir: &Path) -> PathBuf {
        manifest_dir.join(&self.mesh_path)
    }

    pub fn sdf_file(&self, manifest_dir: &Path) -> PathBuf {
        manifest_dir.join(&self.sdf_path)
    }

    fn chain_text(&self) -> String {
        if self.recipe_chain.is_empty() {
            return "none".into();
        }
        let parts: Vec<String> = self.recipe_chain.iter().map(|(r, m)| format!("{r}:{m}")).collect();
        parts.join(",")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub records: Vec<ShapeRecord>,
    pub seed: u64,
    pub samples_per_shape: usize,
}

impl CorpusManifest {
    pub fn record(&self, id: &str) -> Option<&ShapeRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Two `#` header lines (seed, samples per shape), then one
    /// tab-separated line per record.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# seed {}", self.seed);
        let _ = writeln!(s, "# samples_per_shape {}", self.samples_per_shape);
        for r in &self.records {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                r.id,
                r.base,
                r.chain_text(),
                r.mesh_path.display(),
                r.sdf_path.display()
            );
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, TrainsetError> {
        let mut seed = None;
        let mut samples = None;
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let err = |msg: String| TrainsetError::Parse { line: n + 1, msg };
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut f = rest.split_whitespace();
                match (f.next(), f.next()) {
                    (Some("seed"), Some(v)) => seed = Some(v.parse().map_err(|_| err(format!("bad seed '{v}'")))?),
                    (Some("samples_per_shape"), Some(v)) => samples = Some(v.parse().map_err(|_| err(format!("bad sample count '{v}'")))?),
                    _ => {}
                }
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(err(format!("expected 5 tab-separated fields, got {}", cols.len())));
            }
            let base: BaseKind = cols[1].parse().map_err(|e: TrainsetError| err(e.to_string()))?;
            let mut chain = Vec::new();
            if cols[2] != "none" {
                for part in cols[2].split(',') {
                    let (name, mag) = part.split_once(':').ok_or_else(|| err(format!("bad recipe entry '{part}'")))?;
                    let recipe: Recipe = name.parse().map_err(|e: crate::spline::SplineError| err(e.to_string()))?;
                    let mag: f64 = mag.parse().map_err(|_| err(format!("bad magnitude '{mag}'")))?;
                    chain.push((recipe, mag));
                }
            }
            records.push(ShapeRecord {
                id: cols[0].to_string(),
                base,
                recipe_chain: chain,
                mesh_path: PathBuf::from(cols[3]),
                sdf_path: PathBuf::from(cols[4]),
            });
        }
        let manifest = Self {
            records,
            seed: seed.ok_or_else(|| TrainsetError::Parse {
                line: 0,
                msg: "missing '# seed' header".into(),
            })?,
            samples_per_shape: samples.ok_or_else(|| TrainsetError::Parse {
                line: 0,
                msg: "missing '# samples_per_shape' header".into(),
            })?,
        };
        manifest.check_unique()?;
        Ok(manifest)
    }

    pub fn check_unique(&self) -> Result<(), TrainsetError> {
        let mut ids: Vec<&str> = self.records.iter().map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(TrainsetError::DuplicateId(w[0].to_string()));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TrainsetError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrainsetError> {
        Self::parse(&fs::read_to_string(path)?)
    }
}
