//! Layer surgery used by fine-tuning: lift the hidden stack out of a trained
//! network and rebuild around it with fresh input/output layers.

use super::{Activation, Layer, Network};
use crate::rng::Stream;
use crate::{Error, Result};

/// All layers except the first (input) and last (output), in order.
pub fn extract_hidden(net: &Network) -> Result<Vec<Layer>> {
    if net.len() < 3 {
        return Err(Error::Config(format!(
            "need input, hidden and output layers to extract hiddens; network has {} layers",
            net.len()
        )));
    }
    Ok(net.layers()[1..net.len() - 1].to_vec())
}

/// Assembles `input -> hidden... -> append... -> output`.
///
/// The input layer (`relu`) and output layer (`sigmoid`) are freshly
/// initialized. Carried hidden layers take their frozen flag from
/// `freeze_mask`; appended layers are always trainable.
pub fn rebuild(
    hidden: Vec<Layer>,
    new_input_dim: usize,
    new_output_dim: usize,
    freeze_mask: &[bool],
    append: Vec<Layer>,
    rng: &mut Stream,
) -> Result<Network> {
    if hidden.is_empty() {
        return Err(Error::Config("rebuild needs at least one hidden layer".into()));
    }
    if freeze_mask.len() != hidden.len() {
        return Err(Error::Config(format!(
            "freeze mask has {} entries for {} hidden layers",
            freeze_mask.len(),
            hidden.len()
        )));
    }
    if new_input_dim == 0 || new_output_dim == 0 {
        return Err(Error::Config("input and output dimensions must be positive".into()));
    }

    let first_width = hidden[0].fan_in();
    let input = Layer::xavier(new_input_dim, first_width, Activation::Relu, rng);

    let mut layers = Vec::with_capacity(hidden.len() + append.len() + 2);
    layers.push(input);
    for (mut layer, &frozen) in hidden.into_iter().zip(freeze_mask) {
        layer.set_frozen(frozen);
        layers.push(layer);
    }
    for mut layer in append {
        layer.set_frozen(false);
        layers.push(layer);
    }
    let last_width = layers.last().unwrap().fan_out();
    layers.push(Layer::xavier(last_width, new_output_dim, Activation::Sigmoid, rng));

    // Validates the whole chain, including the appended block.
    Network::from_layers(layers)
}
