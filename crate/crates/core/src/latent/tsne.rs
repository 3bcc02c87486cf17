use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::LatentError;

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    /// Step size, or its ceiling when `scale_learning_rate` is set.
    pub learning_rate: f64,
    /// Use `min(learning_rate, max(10, n / (4 * exaggeration)))`. Small
    /// point sets oscillate at the full rate.
    pub scale_learning_rate: bool,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            scale_learning_rate: true,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            seed: 0,
        }
    }
}

/// Perplexity 30, capped at a quarter of the point count.
pub fn default_perplexity(count: usize) -> f64 {
    30.0f64.min(count as f64 / 4.0).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding2D {
    pub points: Vec<[f64; 2]>,
    /// Base-shape tags, one per point when known.
    pub labels: Vec<String>,
    /// KL(P || Q) after every iteration, measured against the
    /// unexaggerated P.
    pub kl_history: Vec<f64>,
}

/// Conditional affinities with the per-row precision `beta = 1 / (2 sigma^2)`
/// and the achieved row entropy (natural log).
#[derive(Debug, Clone)]
pub struct Affinities {
    /// Row-major `n x n`, rows sum to 1, zero diagonal.
    pub conditional: Vec<f64>,
    pub betas: Vec<f64>,
    pub entropies: Vec<f64>,
}

fn squared_distances(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Row `i` of the conditional Gaussian affinities for precision `beta`,
/// with its entropy.
fn row_affinities(d: &[f64], i: usize, beta: f64) -> (Vec<f64>, f64) {
    let n = d.len();
    // Shift by the nearest neighbour distance for numerical range.
    let dmin = (0..n).filter(|&j| j != i).map(|j| d[j]).fold(f64::INFINITY, f64::min);
    let mut p: Vec<f64> = (0..n).map(|j| if j == i { 0.0 } else { (-(d[j] - dmin) * beta).exp() }).collect();
    let sum: f64 = p.iter().sum();
    let mut weighted = 0.0;
    for j in 0..n {
        p[j] /= sum;
        weighted += p[j] * (d[j] - dmin);
    }
    // H = log(sum) + beta * E[d - dmin].
    let h = sum.ln() + beta * weighted;
    (p, h)
}

/// Binary search of each row's precision so its entropy equals
/// `ln(perplexity)`.
pub fn affinities(x: &[Vec<f64>], perplexity: f64) -> Result<Affinities, LatentError> {
    let n = x.len();
    if !(perplexity > 0.0) || perplexity >= n as f64 {
        return Err(LatentError::BadPerplexity { perplexity, count: n });
    }
    let d = squared_distances(x);
    let target = perplexity.ln();
    let rows: Vec<(Vec<f64>, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = &d[i * n..(i + 1) * n];
            let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
            let mut beta = 1.0;
            let mut best = row_affinities(row, i, beta);
            for _ in 0..200 {
                let diff = best.1 - target;
                if diff.abs() < 1e-10 {
                    break;
                }
                // Entropy decreases with beta.
                if diff > 0.0 {
                    lo = beta;
                    beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
                } else {
                    hi = beta;
                    beta = 0.5 * (beta + lo);
                }
                best = row_affinities(row, i, beta);
            }
            (best.0, beta, best.1)
        })
        .collect();
    let mut conditional = Vec::with_capacity(n * n);
    let mut betas = Vec::with_capacity(n);
    let mut entropies = Vec::with_capacity(n);
    for (p, b, h) in rows {
        conditional.extend(p);
        betas.push(b);
        entropies.push(h);
    }
    Ok(Affinities {
        conditional,
        betas,
        entropies,
    })
}

/// Symmetrized joint probabilities `(p_j|i + p_i|j) / 2n`.
pub fn joint_probabilities(a: &Affinities) -> Vec<f64> {
    let n = a.betas.len();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (a.conditional[i * n + j] + a.conditional[j * n + i]) / (2.0 * n as f64);
        }
    }
    p
}

/// Student-t similarities `(1 + |y_i - y_j|^2)^-1`, zero on the diagonal,
/// and their sum.
fn student_t(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = v;
            num[j * n + i] = v;
            sum += 2.0 * v;
        }
    }
    (num, sum)
}

/// KL(P || Q) of an embedding.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let (num, sum) = student_t(y);
    p.iter()
        .zip(&num)
        .filter(|(pij, _)| **pij > 0.0)
        .map(|(pij, q)| pij * (pij / (q / sum).max(1e-300)).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Exact t-SNE with default settings apart from perplexity, iterations and
/// seed.
pub fn tsne_embed(latents: &[Vec<f64>], perplexity: f64, iterations: usize, seed: u64) -> Result<Embedding2D, LatentError> {
    tsne_embed_with(
        latents,
        &TsneConfig {
            perplexity,
            iterations,
            seed,
            ..TsneConfig::default()
        },
    )
}

pub fn tsne_embed_with(latents: &[Vec<f64>], cfg: &TsneConfig) -> Result<Embedding2D, LatentError> {
    let n = latents.len();
    if latents.iter().flatten().any(|v| !v.is_finite()) {
        return Err(LatentError::NonFinite);
    }
    let mut x = latents.to_vec();
    let distinct = {
        let mut u: Vec<&Vec<f64>> = x.iter().collect();
        u.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        u.dedup();
        u.len()
    };
    if distinct < 3 {
        return Err(LatentError::TooFewPoints(distinct));
    }
    if !(cfg.perplexity > 0.0) || cfg.perplexity >= n as f64 {
        return Err(LatentError::BadPerplexity {
            perplexity: cfg.perplexity,
            count: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if distinct < n {
        let scale = x.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let jitter = Normal::new(0.0, 1e-8 * scale).expect("positive sigma");
        log::warn!("{} duplicate latent codes; adding jitter", n - distinct);
        for row in &mut x {
            for v in row.iter_mut() {
                *v += jitter.sample(&mut rng);
            }
        }
    }
    let p = joint_probabilities(&affinities(&x, cfg.perplexity)?);
    let init = Normal::new(0.0, 1e-2).expect("positive sigma");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [init.sample(&mut rng), init.sample(&mut rng)]).collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let eta = if cfg.scale_learning_rate {
        cfg.learning_rate.min((n as f64 / (4.0 * cfg.exaggeration)).max(10.0))
    } else {
        cfg.learning_rate
    };
    let mut kl_history = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let exaggerate = if it < cfg.exaggeration_iters { cfg.exaggeration } else { 1.0 };
        let momentum = if it < cfg.exaggeration_iters {
            cfg.momentum_initial
        } else {
            cfg.momentum_final
        };
        let (num, sum) = student_t(&y);
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    let w = (exaggerate * p[i * n + j] - num[i * n + j] / sum) * num[i * n + j];
                    g[0] += 4.0 * w * (y[i][0] - y[j][0]);
                    g[1] += 4.0 * w * (y[i][1] - y[j][1]);
                }
                g
            })
            .collect();
        for i in 0..n {
            for d in 0..2 {
                let same_sign = (grad[i][d] > 0.0) == (update[i][d] > 0.0);
                gains[i][d] = if same_sign { gains[i][d] * 0.8 } else { gains[i][d] + 0.2 };
                gains[i][d] = gains[i][d].max(0.01);
                update[i][d] = momentum * update[i][d] - eta * gains[i][d] * grad[i][d];
                y[i][d] += update[i][d];
            }
        }
        let mean = y.iter().fold([0.0; 2], |m, p| [m[0] + p[0], m[1] + p[1]]);
        for p in &mut y {
            p[0] -= mean[0] / n as f64;
            p[1] -= mean[1] / n as f64;
        }
        kl_history.push(kl_divergence(&p, &y));
    }
    Ok(Embedding2D {
        points: y,
        labels: Vec::new(),
        kl_history,
    })
}
