//! Auto-decoder: an MLP from (latent code, point) to a signed distance,
//! trained jointly with one latent code per shape.

mod adam;
mod io;
mod network;
mod reconstruct;
mod train;

use thiserror::Error;

use crate::mesh::MeshError;

pub use adam::{adam_step, loss, loss_grad, lr_schedule, AdamState, LR_DECAY_INTERVAL};
pub use network::{Decoder, DecoderModel, Dense, ForwardCache};
pub use reconstruct::{decode_grid, reconstruct, MIN_RESOLUTION};
pub use train::{load_samples, train, train_on_sets, EpochRecord, TrainConfig, TrainHistory};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("latent dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient in {layer}")]
    NonFiniteGradient { layer: String },
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("cannot read sample file {path}: {source}")]
    SampleFile {
        path: String,
        #[source]
        source: MeshError,
    },
    #[error("unknown shape id '{0}'")]
    UnknownShape(String),
    #[error("degenerate latent code: {0}")]
    DegenerateLatent(String),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Network shape and loss settings.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub latent_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    /// Clamp distance of the L1 loss.
    pub clamp_delta: f64,
    pub latent_reg_weight: f64,
    /// Standard deviation of the initial latent codes.
    pub latent_init_sigma: f64,
}

impl DecoderConfig {
    /// Eight hidden layers of 256 units, clamp 0.1, latent penalty `1e-4 / l`.
    pub fn new(latent_dim: usize) -> Self {
        Self {
            latent_dim,
            hidden_layers: 8,
            hidden_width: 256,
            clamp_delta: 0.1,
            latent_reg_weight: 1e-4 / latent_dim.max(1) as f64,
            latent_init_sigma: 0.01,
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.latent_dim == 0 || self.hidden_layers == 0 || self.hidden_width == 0 {
            return Err(NeuralError::InvalidConfig(
                "latent_dim, hidden_layers and hidden_width must be positive".into(),
            ));
        }
        if !(self.clamp_delta > 0.0) {
            return Err(NeuralError::InvalidConfig(format!(
                "clamp delta must be positive, got {}",
                self.clamp_delta
            )));
        }
        if !(self.latent_reg_weight >= 0.0) || !(self.latent_init_sigma > 0.0) {
            return Err(NeuralError::InvalidConfig(
                "latent_reg_weight must be >= 0 and latent_init_sigma > 0".into(),
            ));
        }
        Ok(())
    }

    /// `(l + 3) -> width x hidden_layers -> 1`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.latent_dim + 3];
        s.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        s.push(1);
        s
    }
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self::new(8)
    }
}
