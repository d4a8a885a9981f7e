use serde::{Deserialize, Serialize};

use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        let ok = self.lr.is_finite()
            && self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(NetError::InvalidConfig(format!(
                "bad Adam settings {self:?}"
            )))
        }
    }
}

/// One bias-corrected Adam update at step `t` (1-based), in place.
///
/// ```text
/// m = b1*m + (1-b1)*g
/// v = b2*v + (1-b2)*g*g
/// p = p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// ```
pub fn adam_step(
    cfg: &AdamConfig,
    t: u64,
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
) {
    assert!(t >= 1, "Adam step counter starts at 1");
    assert!(params.len() == grads.len() && m.len() == grads.len() && v.len() == grads.len());
    let bc1 = 1.0 - cfg.beta1.powf(t as f64);
    let bc2 = 1.0 - cfg.beta2.powf(t as f64);
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// First and second moment buffers plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// Steps taken so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    pub fn step(&mut self, cfg: &AdamConfig, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        adam_step(cfg, self.t, params, grads, &mut self.m, &mut self.v);
    }
}
