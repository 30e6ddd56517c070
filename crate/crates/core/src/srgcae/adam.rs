use ndarray::{Array2, Zip};

use crate::error::{Error, Result};

/// Adam moments and hyperparameters.
///
/// Weight decay is decoupled: after the bias-corrected adaptive update,
/// every parameter is shrunk by `lr · weight_decay · θ`, with `θ` the value
/// before the step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<Array2<f64>>,
    second_moment: Vec<Array2<f64>>,
}

impl Default for AdamState {
    fn default() -> Self {
        Self::new(1e-4, 1e-6)
    }
}

impl AdamState {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            step: 0,
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn first_moment(&self) -> &[Array2<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Array2<f64>] {
        &self.second_moment
    }
}

pub fn adam_step(state: &mut AdamState, params: &mut [&mut Array2<f64>], grads: &[&Array2<f64>]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameters vs {} gradients",
            params.len(),
            grads.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.dim() != g.dim() {
            return Err(Error::ShapeMismatch(format!(
                "parameter {i}: {:?} vs gradient {:?}",
                p.dim(),
                g.dim()
            )));
        }
    }
    if state.first_moment.is_empty() {
        state.first_moment = params.iter().map(|p| Array2::zeros(p.dim())).collect();
        state.second_moment = state.first_moment.clone();
    } else if state.first_moment.len() != params.len()
        || state.first_moment.iter().zip(params.iter()).any(|(m, p)| m.dim() != p.dim())
    {
        return Err(Error::ShapeMismatch("moment shapes do not mirror parameters".into()));
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let lr = state.learning_rate;
    let decay = lr * state.weight_decay;
    let bias1 = 1.0 - b1.powi(t);
    let bias2 = 1.0 - b2.powi(t);

    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(state.second_moment.iter_mut()))
    {
        Zip::from(&mut **p)
            .and(*g)
            .and(m)
            .and(v)
            .for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                let theta = *p;
                *p = theta - lr * m_hat / (v_hat.sqrt() + eps) - decay * theta;
            });
    }
    Ok(())
}
