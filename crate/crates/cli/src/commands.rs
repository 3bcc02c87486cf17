//! Subcommand implementations. Each returns an error instead of exiting so
//! they can be driven from tests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use latentform::latent::{arithmetic, default_perplexity, interpolate, tsne_embed};
use latentform::mesh::{mesh_volume, save_obj, TriMesh};
use latentform::neural::{reconstruct, train, DecoderModel};
use latentform::objective::mixing_objective;
use latentform::optim::{direct_minimize_with, soga_minimize_with, Bounds, RunReport};
use latentform::trainset::{generate_corpus, CorpusManifest, MANIFEST_FILE};

use crate::config::PipelineConfig;

pub const RESOLVED_CONFIG: &str = "resolved.cfg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Algo {
    Direct,
    Soga,
}

fn load_config(path: &Path) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(path)?;
    cfg.apply_env()?;
    Ok(cfg)
}

/// `<path>.<suffix>` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

pub fn gen_trainset(config: &Path, out: &Path) -> Result<CorpusManifest> {
    let cfg = load_config(config)?;
    let manifest = generate_corpus(&cfg.trainset, out).with_context(|| format!("generating corpus in {}", out.display()))?;
    cfg.save(out.join(RESOLVED_CONFIG))?;
    log::info!("wrote {} shapes to {}", manifest.records.len(), out.display());
    Ok(manifest)
}

/// Writes the model to `out`, the loss history to `<out>.history.csv` and
/// the resolved config to `<out>.cfg`.
pub fn train_model(manifest_path: &Path, config: &Path, out: &Path) -> Result<DecoderModel> {
    let cfg = load_config(config)?;
    let manifest = CorpusManifest::load(manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let (model, history) = train(&manifest, dir, &cfg.decoder.resolve(), &cfg.training)?;
    model.save(out).with_context(|| format!("writing {}", out.display()))?;
    fs::write(sibling(out, "history.csv"), history.to_csv())?;
    cfg.save(sibling(out, "cfg"))?;
    log::info!(
        "trained {} shapes: loss {:.5} -> {:.5} in {:.1} s",
        model.ids.len(),
        history.initial_loss,
        history.final_loss(),
        history.wall_time_s
    );
    Ok(model)
}

fn load_model(path: &Path) -> Result<DecoderModel> {
    DecoderModel::load(path).with_context(|| format!("reading model {}", path.display()))
}

/// Comma-separated values given inline or as the content of a file.
pub fn parse_latent(arg: &str) -> Result<Vec<f64>> {
    let text = if Path::new(arg).is_file() {
        fs::read_to_string(arg)?
    } else {
        arg.to_string()
    };
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad latent value '{s}'")))
        .collect()
}

pub fn reconstruct_shape(model: &Path, id: Option<&str>, latent: Option<&str>, res: usize, volume: Option<f64>, out: &Path) -> Result<TriMesh> {
    let model = load_model(model)?;
    let z = match (id, latent) {
        (Some(id), None) => model.latent(id)?,
        (None, Some(l)) => parse_latent(l)?,
        _ => bail!("give exactly one of --id and --latent"),
    };
    ensure!(
        z.len() == model.latent_dim,
        "latent code has {} values, model expects {}",
        z.len(),
        model.latent_dim
    );
    let mesh = reconstruct(&model, &z, res, volume)?;
    save_obj(&mesh, out)?;
    Ok(mesh)
}

/// Writes `interp_<n>.obj` for every requested step.
pub fn interpolate_shapes(model: &Path, a: &str, b: &str, big_n: usize, steps: &[usize], res: usize, out: &Path) -> Result<Vec<PathBuf>> {
    let model = load_model(model)?;
    let (za, zb) = (model.latent(a)?, model.latent(b)?);
    let zs = steps.iter().map(|&n| interpolate(&za, &zb, big_n, n)).collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(out)?;
    let mut paths = Vec::new();
    for (n, z) in steps.iter().zip(zs) {
        let mesh = reconstruct(&model, &z, res, None).with_context(|| format!("step {n}"))?;
        let p = out.join(format!("interp_{n}.obj"));
        save_obj(&mesh, &p)?;
        paths.push(p);
    }
    Ok(paths)
}

pub fn arithmetic_shape(model: &Path, deformed: &str, base: &str, target: &str, res: usize, out: &Path) -> Result<TriMesh> {
    let model = load_model(model)?;
    let z = arithmetic(&model.latent(deformed)?, &model.latent(base)?, &model.latent(target)?)?;
    let mesh = reconstruct(&model, &z, res, None)?;
    save_obj(&mesh, out)?;
    Ok(mesh)
}

/// Base label of a corpus id `<base>-<nnn>`.
pub fn base_label(id: &str) -> &str {
    id.rsplit_once('-').map_or(id, |(b, _)| b)
}

/// Writes `id,base_label,x,y` to `out` and a gnuplot script beside it.
pub fn tsne_plot(model: &Path, out: &Path, perplexity: Option<f64>, iterations: usize, seed: u64) -> Result<usize> {
    let model = load_model(model)?;
    let latents: Vec<Vec<f64>> = model.latents.rows().into_iter().map(|r| r.to_vec()).collect();
    let perplexity = perplexity.unwrap_or_else(|| default_perplexity(latents.len()));
    let emb = tsne_embed(&latents, perplexity, iterations, seed)?;
    let mut csv = String::from("id,base_label,x,y\n");
    let mut labels: Vec<&str> = Vec::new();
    for (id, p) in model.ids.iter().zip(&emb.points) {
        let label = base_label(id);
        if !labels.contains(&label) {
            labels.push(label);
        }
        let _ = writeln!(csv, "{id},{label},{},{}", p[0], p[1]);
    }
    fs::write(out, csv)?;
    let name = out.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let script = format!(
        "set datafile separator ','\nset key outside\nset title 't-SNE of latent codes'\n\
         labels = \"{}\"\n\
         plot for [b in labels] '{name}' using (strcol(2) eq b ? $3 : 1/0):4 skip 1 with points pt 7 title b\n",
        labels.join(" ")
    );
    fs::write(out.with_extension("gp"), script)?;
    Ok(model.ids.len())
}

/// Per-coordinate range of the trained codes grown by `inflation` of its
/// span, half on each side.
pub fn latent_bounds(model: &DecoderModel, inflation: f64) -> Result<Bounds> {
    let mut lower = Vec::with_capacity(model.latent_dim);
    let mut upper = Vec::with_capacity(model.latent_dim);
    for col in model.latents.columns() {
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.5 * inflation * (hi - lo).max(1e-9);
        lower.push(lo - pad);
        upper.push(hi + pad);
    }
    Ok(Bounds::new(lower, upper)?)
}

/// Outcome of `optimize`, as written to `report.txt`.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub report: RunReport,
    pub center_j: f64,
    pub target_volume: f64,
    pub meshes: Vec<(PathBuf, f64)>,
}

pub fn optimize(model: &Path, algo: Algo, config: &Path, out: &Path) -> Result<OptimizeOutcome> {
    let cfg = load_config(config)?;
    let model = load_model(model)?;
    let o = &cfg.optimizer;
    let bounds = latent_bounds(&model, o.bounds_inflation)?;
    let center: Vec<f64> = bounds.from_unit(&vec![0.5; bounds.dim()]);
    let target_volume = match o.target_volume {
        Some(v) => v,
        None => {
            let m = reconstruct(&model, &center, o.resolution, None)
                .context("center of the latent box does not decode to a shape; set optimizer.target_volume")?;
            mesh_volume(&m)?
        }
    };
    let objective = |z: &[f64]| -> f64 {
        let j = reconstruct(&model, z, o.resolution, Some(target_volume))
            .map_err(anyhow::Error::from)
            .and_then(|m| Ok(mixing_objective(&m, &cfg.channel, &cfg.objective)?));
        match j {
            Ok(j) => j,
            Err(e) => {
                log::warn!("objective failed: {e:#}");
                f64::INFINITY
            }
        }
    };
    let center_j = objective(&center);
    fs::create_dir_all(out)?;
    let report = match algo {
        Algo::Direct => direct_minimize_with(objective, &bounds, &o.direct(), |_| {})?,
        Algo::Soga => soga_minimize_with(objective, &bounds, &o.soga(cfg.seed), |_| {})?,
    };
    let log_path = out.join("evals.csv");
    report.write_log(&log_path)?;

    let mut meshes = Vec::new();
    let mut seen: Vec<&[f64]> = Vec::new();
    for (_, e) in report.ranked() {
        if meshes.len() >= o.top_k || !e.f.is_finite() {
            break;
        }
        if seen.contains(&e.x.as_slice()) {
            continue;
        }
        seen.push(&e.x);
        let mesh = reconstruct(&model, &e.x, o.resolution, Some(target_volume))?;
        let p = out.join(format!("best_{}_J{:.6}.obj", meshes.len() + 1, e.f));
        save_obj(&mesh, &p)?;
        meshes.push((p, e.f));
    }

    let mut text = report.summary(Some(&log_path));
    let _ = writeln!(text, "center_J: {center_j}");
    let _ = writeln!(text, "target_volume: {target_volume}");
    let fmt = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    let _ = writeln!(text, "latent_lower: {}", fmt(bounds.lower()));
    let _ = writeln!(text, "latent_upper: {}", fmt(bounds.upper()));
    for (p, j) in &meshes {
        let _ = writeln!(text, "mesh: {} J={j}", p.display());
    }
    fs::write(out.join("report.txt"), text)?;
    cfg.save(out.join(RESOLVED_CONFIG))?;
    log::info!("{} evaluations, best J {} (center {center_j})", report.evaluations, report.best_f);
    Ok(OptimizeOutcome {
        report,
        center_j,
        target_volume,
        meshes,
    })
}

/// Path of the manifest inside a generated corpus directory.
pub fn manifest_path(corpus_dir: &Path) -> PathBuf {
    corpus_dir.join(MANIFEST_FILE)
}
