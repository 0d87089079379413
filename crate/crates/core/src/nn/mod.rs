//! Dense feed-forward networks with exact reverse-mode gradients.
//!
//! Weights are stored as `fan_in × fan_out` so a batch `X` (rows = samples)
//! maps to `act(X · W + b)`. Everything operates on `f64` batches; the
//! single-vector [`Network::forward`] is a thin wrapper.

mod adam;
pub(crate) mod codec;
mod surgery;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use codec::{decode_network, encode_network, read_layers, write_layers, NETWORK_MAGIC};
pub use surgery::{extract_hidden, rebuild};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::rng::Stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's own output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
            Activation::Identity => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Sigmoid),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// One dense layer: `act(x · W + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Array2<f64>,
    bias: Array1<f64>,
    activation: Activation,
    frozen: bool,
}

impl Layer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Result<Self> {
        if weights.ncols() != bias.len() {
            return Err(Error::Config(format!(
                "layer weights have {} outputs but bias has {}",
                weights.ncols(),
                bias.len()
            )));
        }
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
            frozen: false,
        })
    }

    /// Xavier-scaled uniform weights (standard deviation `1/sqrt(fan_in)`), zero bias.
    pub fn xavier(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut Stream) -> Self {
        let limit = (3.0 / fan_in as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite positive limit");
        let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng));
        Self {
            weights,
            bias: Array1::zeros(fan_out),
            activation,
            frozen: false,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    /// Direct parameter access. Bypasses the freezing contract, which only
    /// governs optimizer updates.
    pub fn weights_mut(&mut self) -> &mut Array2<f64> {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut Array1<f64> {
        &mut self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights);
        z += &self.bias;
        let act = self.activation;
        z.mapv_inplace(|v| act.apply(v));
        z
    }
}

/// Gradient of a scalar loss with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &Layer) -> Self {
        Self {
            weights: Array2::zeros(layer.weights.raw_dim()),
            bias: Array1::zeros(layer.bias.len()),
        }
    }
}

/// Per-layer parameter gradients plus the gradient with respect to the
/// network input (needed to push the generator loss through the discriminator).
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    pub input: Array2<f64>,
}

/// Activations recorded by [`Network::forward_cached`]: the input batch
/// followed by every layer's post-activation output.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
    shapes: Vec<(usize, usize)>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache holds at least the input")
    }

    pub fn input(&self) -> &Array2<f64> {
        &self.activations[0]
    }
}

/// An ordered chain of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::Config(format!(
                    "layer {k} outputs {} values but layer {} expects {}",
                    pair[0].fan_out(),
                    k + 1,
                    pair[1].fan_in()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Builds a network with `widths.len() - 1` layers; `activations[k]` is
    /// applied after layer `k`.
    pub fn init(widths: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        let mut rng = crate::rng::stream(seed, crate::rng::StreamKind::Init);
        Self::init_with_rng(widths, activations, &mut rng)
    }

    pub fn init_with_rng(widths: &[usize], activations: &[Activation], rng: &mut Stream) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Config("need at least an input and an output width".into()));
        }
        if activations.len() + 1 != widths.len() {
            return Err(Error::Config(format!(
                "{} widths require {} activations, got {}",
                widths.len(),
                widths.len() - 1,
                activations.len()
            )));
        }
        if widths.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Layer::xavier(w[0], w[1], act, rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.fan_in(), l.fan_out())).collect()
    }

    /// Evaluates a single input vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::Input(e.to_string()))?;
        Ok(self.forward_batch(batch)?.into_raw_vec_and_offset().0)
    }

    /// Evaluates a batch (one sample per row), validating shape and finiteness.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut out = self.layers[0].forward_batch(x);
        for layer in &self.layers[1..] {
            out = layer.forward_batch(out.view());
        }
        Ok(out)
    }

    /// Forward pass that records every activation for [`Network::backward`].
    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for layer in &self.layers {
            let next = layer.forward_batch(activations.last().unwrap().view());
            activations.push(next);
        }
        Ok(ForwardCache {
            activations,
            shapes: self.shapes(),
        })
    }

    /// Reverse-mode gradients of a scalar loss given `dL/d(output)`.
    ///
    /// Frozen layers still receive gradients; the optimizer ignores them.
    pub fn backward(&self, cache: &ForwardCache, output_grad: ArrayView2<'_, f64>) -> Result<Gradients> {
        if cache.shapes != self.shapes() {
            return Err(Error::Internal("forward cache does not match network".into()));
        }
        if output_grad.dim() != cache.output().dim() {
            return Err(Error::Internal(format!(
                "output gradient shape {:?} does not match output {:?}",
                output_grad.dim(),
                cache.output().dim()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = output_grad.to_owned();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let out = &cache.activations[k + 1];
            let act = layer.activation;
            delta.zip_mut_with(out, |d, &a| *d *= act.derivative_from_output(a));
            let input = &cache.activations[k];
            let weights = input.t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            delta = delta.dot(&layer.weights.t());
            grads.push(LayerGrad { weights, bias });
        }
        grads.reverse();
        Ok(Gradients {
            layers: grads,
            input: delta,
        })
    }

    fn check_input(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Input(format!(
                "expected {} input features, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("network input contains non-finite values".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};

    const RELU_SIG: [Activation; 2] = [Activation::Relu, Activation::Sigmoid];

    #[test]
    fn init_is_deterministic() {
        let a = Network::init(&[2, 3, 1], &RELU_SIG, 7).unwrap();
        let b = Network::init(&[2, 3, 1], &RELU_SIG, 7).unwrap();
        assert_eq!(a, b);
        let c = Network::init(&[2, 3, 1], &RELU_SIG, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_biases_zero_and_nothing_frozen() {
        let net = Network::init(&[2, 3, 1], &RELU_SIG, 7).unwrap();
        for layer in net.layers() {
            assert!(layer.bias().iter().all(|&b| b == 0.0));
            assert!(!layer.is_frozen());
        }
    }

    #[test]
    fn init_weight_scale() {
        let fan_in = 400;
        let net = Network::init(&[fan_in, 50], &[Activation::Identity], 3).unwrap();
        let w = net.layers()[0].weights();
        let mean = w.mean().unwrap();
        let var = w.mapv(|v| (v - mean).powi(2)).mean().unwrap();
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!(
            (var * fan_in as f64 - 1.0).abs() < 0.05,
            "scaled var {}",
            var * fan_in as f64
        );
    }

    #[test]
    fn init_layer_chain() {
        // 88 -> 10 -> 10 -> 10 -> 10 -> 44: one layer per adjacent width pair.
        let widths = [88, 10, 10, 10, 10, 44];
        let acts = [Activation::Relu; 5];
        let net = Network::init(&widths, &acts, 1).unwrap();
        assert_eq!(net.len(), 5);
        let fan_ins: Vec<_> = net.layers().iter().map(Layer::fan_in).collect();
        assert_eq!(fan_ins, vec![88, 10, 10, 10, 10]);
        assert_eq!(net.output_dim(), 44);
    }

    #[test]
    fn init_rejects_mismatched_lists() {
        let err = Network::init(&[2, 3, 1], &[Activation::Relu], 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(matches!(
            Network::init(&[2, 0, 1], &RELU_SIG, 0).unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn zero_params_sigmoid_gives_half() {
        let layer = Layer::new(Array2::zeros((3, 2)), Array1::zeros(2), Activation::Sigmoid).unwrap();
        let net = Network::from_layers(vec![layer]).unwrap();
        let out = net.forward(&[0.3, -2.0, 9.0]).unwrap();
        assert_eq!(out, vec![0.5, 0.5]);
    }

    #[test]
    fn relu_hand_cases() {
        let layer = Layer::new(array![[2.0]], array![1.0], Activation::Relu).unwrap();
        let net = Network::from_layers(vec![layer]).unwrap();
        assert_eq!(net.forward(&[-3.0]).unwrap(), vec![0.0]);
        assert_eq!(net.forward(&[3.0]).unwrap(), vec![7.0]);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = Network::init(&[2, 3, 1], &RELU_SIG, 7).unwrap();
        assert!(matches!(net.forward(&[1.0]).unwrap_err(), Error::Input(_)));
        assert!(matches!(net.forward(&[1.0, f64::NAN]).unwrap_err(), Error::Input(_)));
    }

    #[test]
    fn sigmoid_output_in_unit_interval() {
        let net = Network::init(&[4, 8, 3], &RELU_SIG, 11).unwrap();
        let mut rng = Stream::seed_from_u64(5);
        let x = Array2::from_shape_simple_fn((64, 4), || rng.random_range(-50.0..50.0));
        let out = net.forward_batch(x.view()).unwrap();
        assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let net = Network::init(&[3, 4, 2], &RELU_SIG, 2).unwrap();
        let x = array![[0.1, 0.2, 0.3]];
        let cache = net.forward_cached(x.view()).unwrap();
        let g = net.backward(&cache, Array2::zeros((1, 2)).view()).unwrap();
        for lg in &g.layers {
            assert!(lg.weights.iter().all(|&v| v == 0.0));
            assert!(lg.bias.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linear_squared_error_hand_gradient() {
        // L = (w x + b)^2 with x = 1, w = 1, b = 0, target 0 -> dL/dw = 2.
        let layer = Layer::new(array![[1.0]], array![0.0], Activation::Identity).unwrap();
        let net = Network::from_layers(vec![layer]).unwrap();
        let cache = net.forward_cached(array![[1.0]].view()).unwrap();
        let y = cache.output()[[0, 0]];
        let g = net.backward(&cache, array![[2.0 * y]].view()).unwrap();
        assert_abs_diff_eq!(g.layers[0].weights[[0, 0]], 2.0);
        assert_abs_diff_eq!(g.layers[0].bias[0], 2.0);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let a = Network::init(&[3, 4, 2], &RELU_SIG, 2).unwrap();
        let b = Network::init(&[3, 5, 2], &RELU_SIG, 2).unwrap();
        let cache = a.forward_cached(array![[0.1, 0.2, 0.3]].view()).unwrap();
        let err = b.backward(&cache, Array2::zeros((1, 2)).view()).unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
    }
}
