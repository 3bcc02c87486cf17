use super::NeuralError;

/// Epochs between learning-rate halvings.
pub const LR_DECAY_INTERVAL: usize = 500;

/// Step decay `eps0 * 0.5^(e / 500)` with integer division.
pub fn lr_schedule(eps0: f64, epoch: usize) -> f64 {
    let halvings = (epoch / LR_DECAY_INTERVAL) as i32;
    eps0 * 0.5f64.powi(halvings)
}

/// Moment accumulators for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    /// Name used in error messages, e.g. `layer3.weight`.
    pub label: String,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_div: f64,
    pub t: u64,
}

impl AdamState {
    pub fn new(label: impl Into<String>, len: usize) -> Self {
        Self {
            label: label.into(),
            m: vec![0.0; len],
            v: vec![0.0; len],
            beta1: 0.9,
            beta2: 0.999,
            eps_div: 1e-8,
            t: 0,
        }
    }
}

/// One bias-corrected ADAM update of `params` in place. Nothing is modified
/// when the gradient contains a non-finite value.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<(), NeuralError> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(NeuralError::ShapeMismatch(format!(
            "{}: {} parameters, {} gradients, {} accumulator slots",
            state.label,
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(NeuralError::NonFiniteGradient { layer: state.label.clone() });
    }
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.eps_div);
    }
    Ok(())
}

/// Clamped L1 distance `|clamp(pred, ±delta) - clamp(truth, ±delta)|`.
pub fn loss(pred: f64, truth: f64, delta: f64) -> f64 {
    (pred.clamp(-delta, delta) - truth.clamp(-delta, delta)).abs()
}

/// Derivative of [`loss`] with respect to `pred`; zero where the prediction
/// is clamped or the two clamped values agree.
pub fn loss_grad(pred: f64, truth: f64, delta: f64) -> f64 {
    if pred.abs() >= delta {
        return 0.0;
    }
    let d = pred - truth.clamp(-delta, delta);
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}
