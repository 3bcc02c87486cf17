//! Flat `section.key = value` pipeline configuration.
//!
//! Blank lines and `#` comments are ignored. Every key has a default, unknown
//! keys are rejected, and [`PipelineConfig::to_text`] writes the resolved
//! configuration with one comment per key.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use latentform::neural::{DecoderConfig, TrainConfig};
use latentform::objective::{ChannelSpec, ObjectiveConfig};
use latentform::optim::{DirectOptions, SogaOptions};
use latentform::spline::Recipe;
use latentform::trainset::{BaseKind, CorpusConfig};
use thiserror::Error;

pub const SEED_ENV: &str = "LF_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key '{key}' given twice")]
    Duplicate { line: usize, key: String },
    #[error("bad value '{value}' for {key}: {msg}")]
    BadValue { key: String, value: String, msg: String },
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Decoder section; the latent penalty defaults to `1e-4 / latent_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderSection {
    pub latent_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub clamp_delta: f64,
    pub latent_reg_weight: Option<f64>,
    pub latent_init_sigma: f64,
}

impl Default for DecoderSection {
    fn default() -> Self {
        let d = DecoderConfig::default();
        Self {
            latent_dim: d.latent_dim,
            hidden_layers: d.hidden_layers,
            hidden_width: d.hidden_width,
            clamp_delta: d.clamp_delta,
            latent_reg_weight: None,
            latent_init_sigma: d.latent_init_sigma,
        }
    }
}

impl DecoderSection {
    pub fn resolve(&self) -> DecoderConfig {
        let base = DecoderConfig::new(self.latent_dim);
        DecoderConfig {
            latent_dim: self.latent_dim,
            hidden_layers: self.hidden_layers,
            hidden_width: self.hidden_width,
            clamp_delta: self.clamp_delta,
            latent_reg_weight: self.latent_reg_weight.unwrap_or(base.latent_reg_weight),
            latent_init_sigma: self.latent_init_sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSection {
    pub max_evals: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub stall_window: usize,
    pub epsilon: f64,
    pub pop_size: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub tournament_size: usize,
    /// Growth of the latent box relative to the span of the trained codes,
    /// split evenly between both sides.
    pub bounds_inflation: f64,
    /// Marching-cubes resolution per objective evaluation.
    pub resolution: usize,
    /// Common volume of every evaluated shape; `None` uses the shape at the
    /// center of the latent box.
    pub target_volume: Option<f64>,
    pub top_k: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = DirectOptions::default();
        let s = SogaOptions::default();
        Self {
            max_evals: d.max_evals,
            max_iters: d.max_iters,
            tol: d.tol,
            stall_window: d.stall_window,
            epsilon: d.epsilon,
            pop_size: s.pop_size,
            mutation_rate: s.mutation_rate,
            crossover_rate: s.crossover_rate,
            tournament_size: s.tournament_size,
            bounds_inflation: 0.1,
            resolution: 32,
            target_volume: None,
            top_k: 10,
        }
    }
}

impl OptimizerSection {
    pub fn direct(&self) -> DirectOptions {
        DirectOptions {
            max_evals: self.max_evals,
            max_iters: self.max_iters,
            tol: self.tol,
            stall_window: self.stall_window,
            epsilon: self.epsilon,
        }
    }

    pub fn soga(&self, seed: u64) -> SogaOptions {
        SogaOptions {
            pop_size: self.pop_size,
            max_iters: self.max_iters,
            max_evals: self.max_evals,
            mutation_rate: self.mutation_rate,
            crossover_rate: self.crossover_rate,
            tournament_size: self.tournament_size,
            tol: self.tol,
            stall_window: self.stall_window,
            seed,
            ..SogaOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Seeds corpus sampling, network initialization and the GA.
    pub seed: u64,
    pub trainset: CorpusConfig,
    pub decoder: DecoderSection,
    pub training: TrainConfig,
    pub optimizer: OptimizerSection,
    pub channel: ChannelSpec,
    pub objective: ObjectiveConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let seed = 42;
        Self {
            seed,
            trainset: CorpusConfig {
                seed,
                ..CorpusConfig::default()
            },
            decoder: DecoderSection::default(),
            training: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            optimizer: OptimizerSection::default(),
            channel: ChannelSpec::default(),
            objective: ObjectiveConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        msg: e.to_string(),
    })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn parse_auto(key: &str, value: &str) -> Result<Option<f64>, ConfigError> {
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

fn auto(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".into(), |x| x.to_string())
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate {
                    line: i + 1,
                    key: key.into(),
                });
            }
            if !cfg.set(key, value)? {
                return Err(ConfigError::UnknownKey {
                    line: i + 1,
                    key: key.into(),
                });
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Applies `LF_SEED` when set.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.set_seed(parse(SEED_ENV, v.trim())?);
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.trainset.seed = seed;
        self.training.seed = seed;
    }

    /// Sets one key. Returns `false` for unknown keys.
    pub fn set(&mut self, key: &str, v: &str) -> Result<bool, ConfigError> {
        let t = &mut self.trainset;
        let d = &mut self.decoder;
        let tr = &mut self.training;
        let o = &mut self.optimizer;
        let c = &mut self.channel;
        let ob = &mut self.objective;
        match key {
            "seed" => {
                let s = parse(key, v)?;
                self.set_seed(s);
            }
            "trainset.bases" => t.bases = parse_list::<BaseKind>(key, v)?,
            "trainset.include_undeformed" => t.include_undeformed = parse(key, v)?,
            "trainset.chains" => t.chains = parse(key, v)?,
            "trainset.max_chain" => t.max_chain = parse(key, v)?,
            "trainset.samples_per_shape" => t.samples_per_shape = parse(key, v)?,
            "trainset.height" => t.height = parse(key, v)?,
            "trainset.radius" => t.radius = parse(key, v)?,
            "trainset.facets" => t.facets = parse(key, v)?,
            "trainset.segments" => t.segments = parse(key, v)?,
            "decoder.latent_dim" => d.latent_dim = parse(key, v)?,
            "decoder.hidden_layers" => d.hidden_layers = parse(key, v)?,
            "decoder.hidden_width" => d.hidden_width = parse(key, v)?,
            "decoder.clamp_delta" => d.clamp_delta = parse(key, v)?,
            "decoder.latent_reg_weight" => d.latent_reg_weight = parse_auto(key, v)?,
            "decoder.latent_init_sigma" => d.latent_init_sigma = parse(key, v)?,
            "training.epochs" => tr.epochs = parse(key, v)?,
            "training.batch_size" => tr.batch_size = parse(key, v)?,
            "training.samples_per_epoch" => tr.samples_per_epoch = parse(key, v)?,
            "training.lr_theta" => tr.lr_theta = parse(key, v)?,
            "training.lr_z" => tr.lr_z = parse(key, v)?,
            "optimizer.max_evals" => o.max_evals = parse(key, v)?,
            "optimizer.max_iters" => o.max_iters = parse(key, v)?,
            "optimizer.tol" => o.tol = parse(key, v)?,
            "optimizer.stall_window" => o.stall_window = parse(key, v)?,
            "optimizer.epsilon" => o.epsilon = parse(key, v)?,
            "optimizer.pop_size" => o.pop_size = parse(key, v)?,
            "optimizer.mutation_rate" => o.mutation_rate = parse(key, v)?,
            "optimizer.crossover_rate" => o.crossover_rate = parse(key, v)?,
            "optimizer.tournament_size" => o.tournament_size = parse(key, v)?,
            "optimizer.bounds_inflation" => o.bounds_inflation = parse(key, v)?,
            "optimizer.resolution" => o.resolution = parse(key, v)?,
            "optimizer.target_volume" => o.target_volume = parse_auto(key, v)?,
            "optimizer.top_k" => o.top_k = parse(key, v)?,
            "objective.length" => c.length = parse(key, v)?,
            "objective.width" => c.width = parse(key, v)?,
            "objective.height" => c.height = parse(key, v)?,
            "objective.barrel_speed" => c.barrel_speed = parse(key, v)?,
            "objective.barrel_angle_deg" => c.barrel_angle = parse::<f64>(key, v)?.to_radians(),
            "objective.grid_y" => ob.grid[0] = parse(key, v)?,
            "objective.grid_z" => ob.grid[1] = parse(key, v)?,
            "objective.particles_per_rect" => ob.particles_per_rect = parse(key, v)?,
            "objective.inflow_fraction" => ob.inflow_fraction = parse(key, v)?,
            "objective.element_scale" => ob.element_scale = parse(key, v)?,
            "objective.ramp_fraction" => ob.ramp_fraction = parse(key, v)?,
            "objective.dt_fraction" => ob.dt_fraction = parse(key, v)?,
            "objective.max_steps" => ob.max_steps = parse(key, v)?,
            "objective.stuck_speed_fraction" => ob.stuck_speed_fraction = parse(key, v)?,
            "objective.stuck_steps" => ob.stuck_steps = parse(key, v)?,
            "objective.max_skipped_fraction" => ob.max_skipped_fraction = parse(key, v)?,
            _ => {
                let Some(name) = key.strip_prefix("trainset.grid.") else {
                    return Ok(false);
                };
                let Ok(recipe) = name.parse::<Recipe>() else {
                    return Ok(false);
                };
                let grid = parse_list(key, v)?;
                match t.grids.iter_mut().find(|(r, _)| *r == recipe) {
                    Some(e) => e.1 = grid,
                    None => t.grids.push((recipe, grid)),
                }
            }
        }
        Ok(true)
    }

    /// `(key, value, description)` for every key, in file order.
    pub fn entries(&self) -> Vec<(String, String, &'static str)> {
        let t = &self.trainset;
        let d = &self.decoder;
        let tr = &self.training;
        let o = &self.optimizer;
        let c = &self.channel;
        let ob = &self.objective;
        let mut e: Vec<(String, String, &'static str)> = Vec::new();
        let mut add = |k: &str, v: String, doc: &'static str| e.push((k.to_string(), v, doc));
        add("seed", self.seed.to_string(), "global seed (overridden by LF_SEED)");
        let bases: Vec<&str> = t.bases.iter().map(|b| b.name()).collect();
        add("trainset.bases", bases.join(", "), "basis shapes");
        add(
            "trainset.include_undeformed",
            t.include_undeformed.to_string(),
            "one undeformed record per base",
        );
        add("trainset.chains", t.chains.to_string(), "extra records with random recipe chains");
        add("trainset.max_chain", t.max_chain.to_string(), "longest recipe chain");
        add("trainset.samples_per_shape", t.samples_per_shape.to_string(), "SDF samples per shape");
        add("trainset.height", t.height.to_string(), "basis prism height");
        add("trainset.radius", t.radius.to_string(), "basis apothem");
        add("trainset.facets", t.facets.to_string(), "cylinder facets");
        add("trainset.segments", t.segments.to_string(), "edge subdivisions of the basis meshes");
        for r in Recipe::ALL {
            let grid = t.grids.iter().find(|(g, _)| *g == r).map(|(_, m)| join(m)).unwrap_or_default();
            add(&format!("trainset.grid.{}", r.name()), grid, "recipe magnitudes");
        }
        add("decoder.latent_dim", d.latent_dim.to_string(), "latent code length l");
        add("decoder.hidden_layers", d.hidden_layers.to_string(), "hidden layers");
        add("decoder.hidden_width", d.hidden_width.to_string(), "units per hidden layer");
        add("decoder.clamp_delta", d.clamp_delta.to_string(), "L1 clamp distance");
        add("decoder.latent_reg_weight", auto(d.latent_reg_weight), "latent penalty (auto = 1e-4 / l)");
        add("decoder.latent_init_sigma", d.latent_init_sigma.to_string(), "initial latent std");
        add("training.epochs", tr.epochs.to_string(), "training epochs");
        add("training.batch_size", tr.batch_size.to_string(), "samples per mini-batch");
        add(
            "training.samples_per_epoch",
            tr.samples_per_epoch.to_string(),
            "samples per shape per epoch",
        );
        add("training.lr_theta", tr.lr_theta.to_string(), "initial network learning rate");
        add("training.lr_z", tr.lr_z.to_string(), "initial latent learning rate");
        add("optimizer.max_evals", o.max_evals.to_string(), "objective evaluation budget");
        add("optimizer.max_iters", o.max_iters.to_string(), "iteration (generation) limit");
        add("optimizer.tol", o.tol.to_string(), "stall tolerance, 0 disables");
        add("optimizer.stall_window", o.stall_window.to_string(), "stall window in iterations");
        add("optimizer.epsilon", o.epsilon.to_string(), "DIRECT improvement threshold");
        add("optimizer.pop_size", o.pop_size.to_string(), "GA population");
        add("optimizer.mutation_rate", o.mutation_rate.to_string(), "GA per-gene mutation probability");
        add("optimizer.crossover_rate", o.crossover_rate.to_string(), "GA crossover probability");
        add("optimizer.tournament_size", o.tournament_size.to_string(), "GA tournament size");
        add(
            "optimizer.bounds_inflation",
            o.bounds_inflation.to_string(),
            "latent box growth over the trained codes",
        );
        add("optimizer.resolution", o.resolution.to_string(), "marching-cubes resolution");
        add("optimizer.target_volume", auto(o.target_volume), "shape volume (auto = center shape)");
        add("optimizer.top_k", o.top_k.to_string(), "best shapes written");
        add("objective.length", c.length.to_string(), "channel length [m]");
        add("objective.width", c.width.to_string(), "channel width [m]");
        add("objective.height", c.height.to_string(), "channel height [m]");
        add("objective.barrel_speed", c.barrel_speed.to_string(), "barrel speed [m/s]");
        add(
            "objective.barrel_angle_deg",
            c.barrel_angle.to_degrees().to_string(),
            "barrel direction vs channel axis [deg]",
        );
        add("objective.grid_y", ob.grid[0].to_string(), "inflow rectangles across the width");
        add("objective.grid_z", ob.grid[1].to_string(), "inflow rectangles across the height");
        add(
            "objective.particles_per_rect",
            ob.particles_per_rect.to_string(),
            "particles per rectangle",
        );
        add("objective.inflow_fraction", ob.inflow_fraction.to_string(), "subdivided inflow fraction");
        add("objective.element_scale", ob.element_scale.to_string(), "meters per shape unit");
        add(
            "objective.ramp_fraction",
            ob.ramp_fraction.to_string(),
            "surrogate ramp / bounding radius",
        );
        add("objective.dt_fraction", ob.dt_fraction.to_string(), "time step / (length / barrel_speed)");
        add("objective.max_steps", ob.max_steps.to_string(), "RK4 step limit per particle");
        add(
            "objective.stuck_speed_fraction",
            ob.stuck_speed_fraction.to_string(),
            "stagnation speed / barrel_speed",
        );
        add(
            "objective.stuck_steps",
            ob.stuck_steps.to_string(),
            "stagnant steps before a particle is dropped",
        );
        add(
            "objective.max_skipped_fraction",
            ob.max_skipped_fraction.to_string(),
            "tolerated skipped rectangles",
        );
        e
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v, doc) in self.entries() {
            let _ = writeln!(s, "# {doc}\n{k} = {v}");
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        fs::write(path, self.to_text())
    }
}
