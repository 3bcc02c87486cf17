use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::{adam_step, loss, loss_grad, lr_schedule, AdamState};
use super::network::{Dense, CHUNK};
use super::{DecoderConfig, DecoderModel, NeuralError};
use crate::mesh::SdfSampleSet;
use crate::trainset::CorpusManifest;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Point samples per mini-batch.
    pub batch_size: usize,
    /// Samples drawn from each shape per epoch (without replacement).
    pub samples_per_epoch: usize,
    pub lr_theta: f64,
    pub lr_z: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 4096,
            samples_per_epoch: 256,
            lr_theta: 5e-4,
            lr_z: 1e-3,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.epochs == 0 {
            return Err(NeuralError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 || self.samples_per_epoch == 0 {
            return Err(NeuralError::InvalidConfig("batch_size and samples_per_epoch must be positive".into()));
        }
        if !(self.lr_theta > 0.0 && self.lr_z > 0.0) {
            return Err(NeuralError::InvalidConfig("learning rates must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr_theta: f64,
    pub lr_z: f64,
    /// Mean clamped L1 over the epoch's samples, before regularization.
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Mean clamped L1 of the initial model on the first epoch's samples.
    pub initial_loss: f64,
    pub epochs: Vec<EpochRecord>,
    pub wall_time_s: f64,
}

impl TrainHistory {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(self.initial_loss, |r| r.mean_loss)
    }

    /// CSV with header `epoch,lr_theta,lr_z,mean_loss`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,lr_theta,lr_z,mean_loss\n");
        for r in &self.epochs {
            s.push_str(&format!("{},{},{},{}\n", r.epoch, r.lr_theta, r.lr_z, r.mean_loss));
        }
        s
    }
}

/// Loads every record's sample file; errors name the offending file.
pub fn load_samples(manifest: &CorpusManifest, dir: &Path) -> Result<Vec<SdfSampleSet>, NeuralError> {
    manifest
        .records
        .iter()
        .map(|r| {
            let path = r.sdf_file(dir);
            SdfSampleSet::load(&path).map_err(|source| NeuralError::SampleFile {
                path: path.display().to_string(),
                source,
            })
        })
        .collect()
}

/// Trains on the corpus listed in a manifest located in `dir`.
pub fn train(manifest: &CorpusManifest, dir: &Path, cfg: &DecoderConfig, tcfg: &TrainConfig) -> Result<(DecoderModel, TrainHistory), NeuralError> {
    if manifest.records.is_empty() {
        return Err(NeuralError::EmptyCorpus);
    }
    tcfg.validate()?;
    let sets = load_samples(manifest, dir)?;
    train_on_sets(&sets, cfg, tcfg)
}

struct Optimizers {
    weights: Vec<AdamState>,
    biases: Vec<AdamState>,
    latents: AdamState,
}

/// Summed gradients of one chunk of a batch.
struct Partial {
    layers: Vec<Dense>,
    latents: Array2<f64>,
    loss: f64,
}

/// Joint optimization of network weights and per-shape latent codes.
pub fn train_on_sets(sets: &[SdfSampleSet], cfg: &DecoderConfig, tcfg: &TrainConfig) -> Result<(DecoderModel, TrainHistory), NeuralError> {
    tcfg.validate()?;
    if sets.is_empty() || sets.iter().all(|s| s.samples.is_empty()) {
        return Err(NeuralError::EmptyCorpus);
    }
    let start = Instant::now();
    let ids: Vec<String> = sets.iter().map(|s| s.shape_id.clone()).collect();
    let mut model = DecoderModel::new(cfg, ids, tcfg.seed)?;
    let mut opt = Optimizers {
        weights: (0..model.net.layers.len())
            .map(|i| AdamState::new(format!("layer{i}.weight"), model.net.layers[i].weight.len()))
            .collect(),
        biases: (0..model.net.layers.len())
            .map(|i| AdamState::new(format!("layer{i}.bias"), model.net.layers[i].bias.len()))
            .collect(),
        latents: AdamState::new("latent_codes", model.latents.len()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    rng.set_stream(2);
    let mut records = Vec::with_capacity(tcfg.epochs);
    let mut initial_loss = f64::NAN;
    for epoch in 0..tcfg.epochs {
        let pool = epoch_pool(sets, tcfg.samples_per_epoch, &mut rng);
        if epoch == 0 {
            initial_loss = evaluate_loss(&model, sets, &pool, cfg.clamp_delta);
        }
        let lr_theta = lr_schedule(tcfg.lr_theta, epoch);
        let lr_z = lr_schedule(tcfg.lr_z, epoch);
        let mut loss_sum = 0.0;
        for batch in pool.chunks(tcfg.batch_size) {
            let (partial, batch_loss) = batch_gradients(&model, sets, batch, cfg);
            if !batch_loss.is_finite() {
                return Err(NeuralError::NonFiniteLoss { epoch });
            }
            loss_sum += batch_loss;
            apply_update(&mut model, &mut opt, partial, lr_theta, lr_z)?;
        }
        let mean_loss = loss_sum / pool.len() as f64;
        if !mean_loss.is_finite() {
            return Err(NeuralError::NonFiniteLoss { epoch });
        }
        log::debug!("epoch {epoch}: loss {mean_loss:.6}");
        records.push(EpochRecord {
            epoch,
            lr_theta,
            lr_z,
            mean_loss,
        });
    }
    let history = TrainHistory {
        initial_loss,
        epochs: records,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((model, history))
}

/// `(shape, sample)` pairs for one epoch, shuffled.
fn epoch_pool(sets: &[SdfSampleSet], per_shape: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut pool = Vec::new();
    for (s, set) in sets.iter().enumerate() {
        let n = set.samples.len();
        if n <= per_shape {
            pool.extend((0..n).map(|i| (s, i)));
        } else {
            pool.extend(rand::seq::index::sample(rng, n, per_shape).into_iter().map(|i| (s, i)));
        }
    }
    pool.shuffle(rng);
    pool
}

fn batch_input(model: &DecoderModel, sets: &[SdfSampleSet], rows: &[(usize, usize)]) -> Array2<f64> {
    let l = model.latent_dim;
    let mut x = Array2::zeros((rows.len(), l + 3));
    for (r, &(s, i)) in rows.iter().enumerate() {
        for j in 0..l {
            x[[r, j]] = model.latents[[s, j]];
        }
        let p = sets[s].samples[i].point;
        for j in 0..3 {
            x[[r, l + j]] = p[j];
        }
    }
    x
}

fn evaluate_loss(model: &DecoderModel, sets: &[SdfSampleSet], pool: &[(usize, usize)], delta: f64) -> f64 {
    let sums: Vec<f64> = pool
        .par_chunks(CHUNK)
        .map(|rows| {
            let pred = model.net.predict(batch_input(model, sets, rows).view());
            rows.iter()
                .zip(pred.iter())
                .map(|(&(s, i), &p)| loss(p, sets[s].samples[i].distance, delta))
                .sum()
        })
        .collect();
    sums.iter().sum::<f64>() / pool.len() as f64
}

/// Gradients of the batch objective (mean clamped L1 plus the latent
/// penalty) and the summed clamped L1 of the batch. Chunks run in parallel
/// and are reduced in a fixed order.
fn batch_gradients(model: &DecoderModel, sets: &[SdfSampleSet], batch: &[(usize, usize)], cfg: &DecoderConfig) -> (Partial, f64) {
    let l = model.latent_dim;
    let n = batch.len() as f64;
    let delta = cfg.clamp_delta;
    let parts: Vec<Partial> = batch
        .par_chunks(CHUNK)
        .map(|rows| {
            let x = batch_input(model, sets, rows);
            let cache = model.net.forward(&x);
            let mut d_out = Array1::zeros(rows.len());
            let mut loss_sum = 0.0;
            for (r, &(s, i)) in rows.iter().enumerate() {
                let truth = sets[s].samples[i].distance;
                let p = cache.output[r];
                loss_sum += loss(p, truth, delta);
                d_out[r] = loss_grad(p, truth, delta) / n;
            }
            let (layers, dx) = model.net.backward(&cache, &d_out);
            let mut latents = Array2::zeros(model.latents.dim());
            for (r, &(s, _)) in rows.iter().enumerate() {
                for j in 0..l {
                    latents[[s, j]] += dx[[r, j]];
                }
            }
            Partial {
                layers,
                latents,
                loss: loss_sum,
            }
        })
        .collect();
    let mut iter = parts.into_iter();
    let mut total = iter.next().expect("non-empty batch");
    for p in iter {
        for (a, b) in total.layers.iter_mut().zip(&p.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
        total.latents += &p.latents;
        total.loss += p.loss;
    }
    // Latent penalty: lambda times the sample-weighted mean of |z_s|^2.
    let mut counts = vec![0usize; model.latents.nrows()];
    for &(s, _) in batch {
        counts[s] += 1;
    }
    for (s, &c) in counts.iter().enumerate() {
        if c > 0 {
            let w = 2.0 * cfg.latent_reg_weight * c as f64 / n;
            for j in 0..l {
                total.latents[[s, j]] += w * model.latents[[s, j]];
            }
        }
    }
    let loss = total.loss;
    (total, loss)
}

fn apply_update(model: &mut DecoderModel, opt: &mut Optimizers, grads: Partial, lr_theta: f64, lr_z: f64) -> Result<(), NeuralError> {
    for (i, g) in grads.layers.iter().enumerate() {
        let layer = &mut model.net.layers[i];
        adam_step(
            layer.weight.as_slice_mut().expect("standard layout"),
            g.weight.as_slice().expect("standard layout"),
            &mut opt.weights[i],
            lr_theta,
        )?;
        adam_step(
            layer.bias.as_slice_mut().expect("standard layout"),
            g.bias.as_slice().expect("standard layout"),
            &mut opt.biases[i],
            lr_theta,
        )?;
    }
    adam_step(
        model.latents.as_slice_mut().expect("standard layout"),
        grads.latents.as_slice().expect("standard layout"),
        &mut opt.latents,
        lr_z,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::SdfSample;
    use crate::Vec3;
    use rand::Rng;

    fn sphere_set(id: &str, r: f64, n: usize, seed: u64) -> SdfSampleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let p = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                SdfSample {
                    point: p,
                    distance: p.norm() - r,
                }
            })
            .collect();
        SdfSampleSet {
            shape_id: id.into(),
            samples,
        }
    }

    fn tiny() -> (DecoderConfig, TrainConfig) {
        (
            DecoderConfig {
                hidden_width: 32,
                hidden_layers: 3,
                ..DecoderConfig::new(2)
            },
            TrainConfig {
                epochs: 30,
                batch_size: 128,
                samples_per_epoch: 256,
                seed: 4,
                ..TrainConfig::default()
            },
        )
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let sets = vec![sphere_set("a", 0.5, 600, 1), sphere_set("b", 0.3, 600, 2)];
        let (cfg, tcfg) = tiny();
        let (m1, h1) = train_on_sets(&sets, &cfg, &tcfg).unwrap();
        let (m2, h2) = train_on_sets(&sets, &cfg, &tcfg).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(h1.epochs, h2.epochs);
        assert_eq!(h1.initial_loss, h2.initial_loss);
        assert_eq!(h1.epochs.len(), 30);
        assert!(h1.final_loss() < 0.5 * h1.initial_loss, "{} -> {}", h1.initial_loss, h1.final_loss());
        let csv = h1.to_csv();
        assert_eq!(csv.lines().count(), 31);
        assert!(csv.starts_with("epoch,lr_theta,lr_z,mean_loss\n0,0.0005,0.001,"));
    }

    #[test]
    fn rejects_bad_config() {
        let sets = vec![sphere_set("a", 0.5, 10, 1)];
        let (cfg, tcfg) = tiny();
        let zero = TrainConfig { epochs: 0, ..tcfg.clone() };
        assert!(matches!(train_on_sets(&sets, &cfg, &zero), Err(NeuralError::InvalidConfig(_))));
        assert!(matches!(train_on_sets(&[], &cfg, &tcfg), Err(NeuralError::EmptyCorpus)));
    }

    #[test]
    fn batch_gradient_matches_objective_differences() {
        // Data term is piecewise linear in the prediction, so probe the
        // latent penalty and a smooth region with a large clamp.
        let sets = vec![sphere_set("a", 0.5, 40, 7), sphere_set("b", 0.2, 40, 8)];
        let cfg = DecoderConfig {
            hidden_width: 16,
            hidden_layers: 2,
            clamp_delta: 10.0,
            latent_reg_weight: 0.3,
            ..DecoderConfig::new(3)
        };
        let mut model = DecoderModel::new(&cfg, vec!["a".into(), "b".into()], 3).unwrap();
        model.latents.mapv_inplace(|v| v * 50.0);
        let batch: Vec<(usize, usize)> = (0..40).flat_map(|i| [(0, i), (1, i)]).collect();
        let objective = |m: &DecoderModel| {
            let (_, l) = batch_gradients(m, &sets, &batch, &cfg);
            let reg: f64 =
                batch.iter().map(|&(s, _)| m.latents.row(s).dot(&m.latents.row(s))).sum::<f64>() * cfg.latent_reg_weight / batch.len() as f64;
            l / batch.len() as f64 + reg
        };
        let (g, _) = batch_gradients(&model, &sets, &batch, &cfg);
        let h = 1e-6;
        for s in 0..2 {
            for j in 0..3 {
                let mut p = model.clone();
                p.latents[[s, j]] += h;
                let mut m = model.clone();
                m.latents[[s, j]] -= h;
                let fd = (objective(&p) - objective(&m)) / (2.0 * h);
                assert!((fd - g.latents[[s, j]]).abs() < 1e-6, "{fd} vs {}", g.latents[[s, j]]);
            }
        }
    }
}
