//! AdamW with decoupled weight decay.

use crate::error::{Error, Result};

use super::ModelState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub eps: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            weight_decay: 1e-4,
            eps: 1e-8,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("betas must lie in [0, 1)"));
        }
        if !(self.lr >= 0.0 && self.weight_decay >= 0.0 && self.eps > 0.0) {
            return Err(Error::config("lr and weight decay must be >= 0, eps > 0"));
        }
        Ok(())
    }
}

/// One update, applied to every tensor including biases and norm gains:
///
/// ```text
/// m ← β1·m + (1−β1)·g
/// v ← β2·v + (1−β2)·g²
/// w ← w − lr·m̂ / (√v̂ + ε) − lr·λ·w
/// ```
///
/// where `m̂`, `v̂` are bias-corrected with the incremented step count.
pub fn adamw_step(state: &mut ModelState, grads: &[Vec<f64>], opt: &OptimConfig) -> Result<()> {
    if grads.len() != state.params.len()
        || grads.iter().zip(&state.params).any(|(g, p)| g.len() != p.data.len())
    {
        return Err(Error::ShapeMismatch("gradients do not match parameters".into()));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - opt.beta1.powi(t);
    let bc2 = 1.0 - opt.beta2.powi(t);
    for ((p, g), (m, v)) in state
        .params
        .iter_mut()
        .zip(grads)
        .zip(state.adam_m.iter_mut().zip(state.adam_v.iter_mut()))
    {
        for i in 0..g.len() {
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            let w = p.data[i];
            p.data[i] = w - opt.lr * m_hat / (v_hat.sqrt() + opt.eps) - opt.lr * opt.weight_decay * w;
        }
    }
    Ok(())
}
