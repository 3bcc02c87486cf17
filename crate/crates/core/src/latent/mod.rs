//! Latent-space operations: interpolation, shape arithmetic and t-SNE.

mod tsne;

use thiserror::Error;

pub use tsne::{
    affinities, default_perplexity, joint_probabilities, kl_divergence, tsne_embed, tsne_embed_with, Affinities, Embedding2D, TsneConfig,
};

#[derive(Debug, Error)]
pub enum LatentError {
    #[error("latent dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("interpolation index {n} outside 0..={max}")]
    IndexOutOfRange { n: usize, max: usize },
    #[error("t-SNE needs at least 3 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("perplexity {perplexity} must be positive and below the point count {count}")]
    BadPerplexity { perplexity: f64, count: usize },
    #[error("non-finite input coordinate")]
    NonFinite,
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<(), LatentError> {
    if a.len() != b.len() {
        return Err(LatentError::DimensionMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// `z_a + (z_b - z_a) / (N + 1) * n` for `0 <= n <= N + 1`. The endpoints
/// are returned exactly.
pub fn interpolate(z_a: &[f64], z_b: &[f64], big_n: usize, n: usize) -> Result<Vec<f64>, LatentError> {
    check_dims(z_a, z_b)?;
    if n > big_n + 1 {
        return Err(LatentError::IndexOutOfRange { n, max: big_n + 1 });
    }
    if n == 0 {
        return Ok(z_a.to_vec());
    }
    if n == big_n + 1 {
        return Ok(z_b.to_vec());
    }
    let steps = (big_n + 1) as f64;
    Ok(z_a.iter().zip(z_b).map(|(a, b)| a + (b - a) / steps * n as f64).collect())
}

/// Feature transfer `z_deformed - z_base + z_target`.
pub fn arithmetic(z_deformed: &[f64], z_base: &[f64], z_target: &[f64]) -> Result<Vec<f64>, LatentError> {
    check_dims(z_deformed, z_base)?;
    check_dims(z_deformed, z_target)?;
    Ok(z_deformed
        .iter()
        .zip(z_base)
        .zip(z_target)
        .map(|((d, b), t)| {
            // (d - b) + b can round away from d.
            if b == t {
                *d
            } else {
                d - b + t
            }
        })
        .collect())
}
