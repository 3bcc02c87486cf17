use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{DecoderConfig, NeuralError};
use crate::Vec3;

/// One fully connected layer, `y = W x + b` with `W` stored `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weight.t());
        z += &self.bias;
        z
    }
}

/// Plain feed-forward stack: ReLU after every hidden layer, tanh on the
/// single output.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoder {
    pub layers: Vec<Dense>,
}

/// Activations kept for the backward pass. `inputs[i]` feeds layer `i`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pub output: Array1<f64>,
}

impl Decoder {
    /// Zero-initialized network with the given layer widths.
    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    /// He-normal hidden weights, variance `OUTPUT_INIT_SCALE^2 / fan_in` on
    /// the output layer, zero biases. The small output layer starts every
    /// prediction inside the loss clamp band, where the clamped L1 has a
    /// gradient.
    pub fn random(sizes: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut net = Self::zeros(sizes);
        let last = net.layers.len() - 1;
        for (i, layer) in net.layers.iter_mut().enumerate() {
            let fan_in = layer.inputs() as f64;
            let var = if i == last {
                OUTPUT_INIT_SCALE * OUTPUT_INIT_SCALE / fan_in
            } else {
                2.0 / fan_in
            };
            let dist = Normal::new(0.0, var.sqrt()).expect("positive variance");
            layer.weight.iter_mut().for_each(|w| *w = dist.sample(rng));
        }
        net
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs()];
        s.extend(self.layers.iter().map(Dense::outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Forward pass over a `(batch, inputs)` matrix, keeping activations.
    pub fn forward(&self, x: &Array2<f64>) -> ForwardCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        inputs.push(x.clone());
        let last = self.layers.len() - 1;
        for layer in &self.layers[..last] {
            let mut z = layer.apply(inputs.last().unwrap().view());
            z.mapv_inplace(|v| v.max(0.0));
            inputs.push(z);
        }
        let z = self.layers[last].apply(inputs.last().unwrap().view());
        let output = z.column(0).mapv(f64::tanh);
        ForwardCache { inputs, output }
    }

    /// Outputs only, for inference.
    pub fn predict(&self, x: ArrayView2<f64>) -> Array1<f64> {
        let mut h = self.layers[0].apply(x);
        for layer in &self.layers[1..] {
            h.mapv_inplace(|v| v.max(0.0));
            h = layer.apply(h.view());
        }
        h.column(0).mapv(f64::tanh)
    }

    /// Back-propagates `d_out = dL/d(output)` and returns parameter gradients
    /// together with `dL/d(input)`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &Array1<f64>) -> (Vec<Dense>, Array2<f64>) {
        let last = self.layers.len() - 1;
        let dz_out = d_out * &cache.output.mapv(|y| 1.0 - y * y);
        let mut dz = dz_out.insert_axis(Axis(1));
        let mut grads = vec![Dense::zeros(0, 0); self.layers.len()];
        for i in (0..=last).rev() {
            let a = &cache.inputs[i];
            grads[i] = Dense {
                weight: dz.t().dot(a),
                bias: dz.sum_axis(Axis(0)),
            };
            let mut da = dz.dot(&self.layers[i].weight);
            if i > 0 {
                ndarray::Zip::from(&mut da).and(a).for_each(|d, &act| {
                    if act <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            dz = da;
        }
        (grads, dz)
    }
}

/// Network weights plus one latent code per training shape.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderModel {
    pub latent_dim: usize,
    pub net: Decoder,
    pub ids: Vec<String>,
    /// `(shapes, latent_dim)`, row order matching `ids`.
    pub latents: Array2<f64>,
}

/// Standard deviation scale of the output layer at initialization.
pub const OUTPUT_INIT_SCALE: f64 = 0.01;

/// Rows per parallel work item in batched inference and training.
pub(crate) const CHUNK: usize = 512;

impl DecoderModel {
    /// Randomly initialized model; latent codes drawn from `N(0, 0.01^2)`.
    pub fn new(cfg: &DecoderConfig, ids: Vec<String>, seed: u64) -> Result<Self, NeuralError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Decoder::random(&cfg.layer_sizes(), &mut rng);
        let dist = Normal::new(0.0, cfg.latent_init_sigma).expect("positive sigma");
        let latents = Array2::from_shape_simple_fn((ids.len(), cfg.latent_dim), || dist.sample(&mut rng));
        Ok(Self {
            latent_dim: cfg.latent_dim,
            net,
            ids,
            latents,
        })
    }

    pub fn from_parts(net: Decoder, ids: Vec<String>, latents: Array2<f64>) -> Result<Self, NeuralError> {
        let latent_dim = latents.ncols();
        if net.input_dim() != latent_dim + 3 || net.layers.last().map(Dense::outputs) != Some(1) {
            return Err(NeuralError::ShapeMismatch(format!(
                "network sizes {:?} do not fit latent dimension {latent_dim}",
                net.sizes()
            )));
        }
        if ids.len() != latents.nrows() {
            return Err(NeuralError::ShapeMismatch(format!(
                "{} ids for {} latent codes",
                ids.len(),
                latents.nrows()
            )));
        }
        Ok(Self {
            latent_dim,
            net,
            ids,
            latents,
        })
    }

    pub fn shape_index(&self, id: &str) -> Result<usize, NeuralError> {
        self.ids
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| NeuralError::UnknownShape(id.to_string()))
    }

    pub fn latent(&self, id: &str) -> Result<Vec<f64>, NeuralError> {
        Ok(self.latents.row(self.shape_index(id)?).to_vec())
    }

    fn check_dim(&self, z: &[f64]) -> Result<(), NeuralError> {
        if z.len() != self.latent_dim {
            return Err(NeuralError::DimensionMismatch {
                expected: self.latent_dim,
                got: z.len(),
            });
        }
        Ok(())
    }

    /// SDF value predicted for point `x` under latent code `z`.
    pub fn decode(&self, z: &[f64], x: &Vec3) -> Result<f64, NeuralError> {
        self.check_dim(z)?;
        let mut row = Array2::zeros((1, self.latent_dim + 3));
        for (j, v) in z.iter().chain(x.iter()).enumerate() {
            row[[0, j]] = *v;
        }
        Ok(self.net.predict(row.view())[0])
    }

    /// Batched [`DecoderModel::decode`] for one latent code. The latent part
    /// of the first layer is folded into its bias once.
    pub fn decode_points(&self, z: &[f64], points: &[Vec3]) -> Result<Vec<f64>, NeuralError> {
        self.check_dim(z)?;
        let l = self.latent_dim;
        let first = &self.net.layers[0];
        let folded = Dense {
            weight: first.weight.slice(s![.., l..]).to_owned(),
            bias: &first.bias + &first.weight.slice(s![.., ..l]).dot(&Array1::from(z.to_vec())),
        };
        let mut reduced = self.net.clone();
        reduced.layers[0] = folded;
        let parts: Vec<Vec<f64>> = points
            .par_chunks(CHUNK)
            .map(|chunk| {
                let x = Array2::from_shape_fn((chunk.len(), 3), |(i, j)| chunk[i][j]);
                reduced.predict(x.view()).to_vec()
            })
            .collect();
        Ok(parts.concat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn small_cfg() -> DecoderConfig {
        DecoderConfig {
            hidden_width: 32,
            hidden_layers: 3,
            ..DecoderConfig::new(4)
        }
    }

    #[test]
    fn zero_network_decodes_zero() {
        let net = Decoder::zeros(&DecoderConfig::new(8).layer_sizes());
        let model = DecoderModel::from_parts(net, vec!["a".into()], Array2::zeros((1, 8))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let z: Vec<f64> = (0..8).map(|_| rng.random_range(-5.0..5.0)).collect();
            let x = Vec3::new(rng.random(), rng.random(), rng.random());
            assert_eq!(model.decode(&z, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn full_size_layer_chain() {
        let m = DecoderModel::new(&DecoderConfig::new(16), vec!["a".into(), "b".into()], 0).unwrap();
        let mut expected = vec![19];
        expected.extend([256; 8]);
        expected.push(1);
        assert_eq!(m.net.sizes(), expected);
        assert_eq!(m.net.layers.len(), 9);
        assert_eq!(m.latents.dim(), (2, 16));
    }

    #[test]
    fn decode_is_bounded_and_repeatable() {
        let m = DecoderModel::new(&small_cfg(), vec!["a".into()], 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let z: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let v = m.decode(&z, &x).unwrap();
            assert!(v.abs() < 1.0);
            assert_eq!(v.to_bits(), m.decode(&z, &x).unwrap().to_bits());
        }
        assert!(matches!(
            m.decode(&[0.0; 3], &Vec3::zeros()),
            Err(NeuralError::DimensionMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn batched_decode_matches_single() {
        let m = DecoderModel::new(&small_cfg(), vec!["a".into()], 5).unwrap();
        let z = vec![0.3, -0.2, 0.1, 0.05];
        let pts: Vec<Vec3> = (0..1200).map(|i| Vec3::new(i as f64 * 1e-3, -0.5, 0.25)).collect();
        let batch = m.decode_points(&z, &pts).unwrap();
        for (p, b) in pts.iter().zip(&batch) {
            assert!((m.decode(&z, p).unwrap() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Decoder::random(&cfg.layer_sizes(), &mut rng);
        let x = Array2::from_shape_simple_fn((6, 7), || rng.random_range(-0.8..0.8));
        let w = Array1::from_shape_simple_fn(6, || rng.random_range(-1.0..1.0));
        let objective = |n: &Decoder, x: &Array2<f64>| n.forward(x).output.dot(&w);
        let (grads, dx) = net.backward(&net.forward(&x), &w);
        let h = 1e-6;
        for (li, layer) in net.layers.iter().enumerate() {
            for _ in 0..5 {
                let (r, c) = (rng.random_range(0..layer.outputs()), rng.random_range(0..layer.inputs()));
                let mut p = net.clone();
                p.layers[li].weight[[r, c]] += h;
                let mut m = net.clone();
                m.layers[li].weight[[r, c]] -= h;
                let fd = (objective(&p, &x) - objective(&m, &x)) / (2.0 * h);
                let an = grads[li].weight[[r, c]];
                assert!((fd - an).abs() <= 1e-6 * fd.abs().max(an.abs()).max(1e-3), "layer {li}: {fd} vs {an}");
            }
        }
        for r in 0..6 {
            for c in 0..7 {
                let mut xp = x.clone();
                xp[[r, c]] += h;
                let mut xm = x.clone();
                xm[[r, c]] -= h;
                let fd = (objective(&net, &xp) - objective(&net, &xm)) / (2.0 * h);
                assert!((fd - dx[[r, c]]).abs() < 1e-7);
            }
        }
    }
}
