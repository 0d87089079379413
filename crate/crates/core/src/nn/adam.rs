use serde::{Deserialize, Serialize};

use super::{Gradients, LayerGrad, Network};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for one network. Moments of frozen layers stay zero.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<LayerGrad>,
    second_moment: Vec<LayerGrad>,
    step_count: u64,
}

impl AdamState {
    pub fn new(net: &Network, config: AdamConfig) -> Self {
        let zeros: Vec<_> = net.layers().iter().map(LayerGrad::zeros_like).collect();
        Self {
            config,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[LayerGrad] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[LayerGrad] {
        &self.second_moment
    }
}

/// One bias-corrected Adam update. Frozen layers are skipped entirely.
pub fn adam_step(net: &mut Network, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if grads.layers.len() != net.len() || state.first_moment.len() != net.len() {
        return Err(Error::Internal(format!(
            "gradient set has {} layers, optimizer {} layers, network {} layers",
            grads.layers.len(),
            state.first_moment.len(),
            net.len()
        )));
    }
    for (layer, g) in net.layers().iter().zip(&grads.layers) {
        if layer.weights().dim() != g.weights.dim() || layer.bias().len() != g.bias.len() {
            return Err(Error::Internal("gradient shape does not match parameters".into()));
        }
    }

    state.step_count += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step_count as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);

    let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    };

    for (k, layer) in net.layers_mut().iter_mut().enumerate() {
        if layer.is_frozen() {
            continue;
        }
        let g = &grads.layers[k];
        let m = &mut state.first_moment[k];
        let v = &mut state.second_moment[k];
        for (((p, &gw), mw), vw) in layer
            .weights_mut()
            .iter_mut()
            .zip(g.weights.iter())
            .zip(m.weights.iter_mut())
            .zip(v.weights.iter_mut())
        {
            update(p, gw, mw, vw);
        }
        for (((p, &gb), mb), vb) in layer
            .bias_mut()
            .iter_mut()
            .zip(g.bias.iter())
            .zip(m.bias.iter_mut())
            .zip(v.bias.iter_mut())
        {
            update(p, gb, mb, vb);
        }
    }
    Ok(())
}
