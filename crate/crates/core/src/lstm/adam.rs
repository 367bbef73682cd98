use serde::{Deserialize, Serialize};

use super::network::LstmNetwork;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(sizes: impl IntoIterator<Item = usize>) -> Self {
        let (m, v) = sizes
            .into_iter()
            .map(|n| (vec![T::zero(); n], vec![T::zero(); n]))
            .unzip();
        AdamState { m, v, step: 0 }
    }

    pub fn for_network(net: &LstmNetwork<T>) -> Self {
        Self::new(net.slices().iter().map(|s| s.len()))
    }

    /// One bias-corrected Adam update over matching parameter/gradient tensors.
    pub fn update(&mut self, params: Vec<&mut [T]>, grads: Vec<&[T]>, cfg: &AdamConfig) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::shape("optimizer tensors", self.m.len(), format!("{}/{}", params.len(), grads.len())));
        }
        for (i, (p, g)) in params.iter().zip(&grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(Error::shape(format!("optimizer tensor {i}"), self.m[i].len(), g.len()));
            }
            if let Some(k) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gradient tensor {i}, element {k}")));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let b1 = T::of(cfg.beta1);
        let b2 = T::of(cfg.beta2);
        let c1 = T::one() - b1;
        let c2 = T::one() - b2;
        let bias1 = T::of(1.0 - cfg.beta1.powi(t));
        let bias2 = T::of(1.0 - cfg.beta2.powi(t));
        let lr = T::of(cfg.learning_rate);
        let eps = T::of(cfg.epsilon);
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            for k in 0..p.len() {
                let gk = g[k];
                m[k] = b1 * m[k] + c1 * gk;
                v[k] = b2 * v[k] + c2 * gk * gk;
                let m_hat = m[k] / bias1;
                let v_hat = v[k] / bias2;
                p[k] = p[k] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Applies one Adam step to every network parameter.
pub fn adam_step<T: Real>(
    params: &mut LstmNetwork<T>,
    grads: &LstmNetwork<T>,
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) -> Result<()> {
    state.update(params.slices_mut(), grads.slices(), cfg)
}
